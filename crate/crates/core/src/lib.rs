//! Channel polarization over finite Abelian groups.
//!
//! Channels with a group-indexed input are polarized with the Arıkan
//! transforms built from the group operation, and analysed through their
//! Blackwell measures (the law of the input posterior). The crate provides
//! exact group and subgroup arithmetic, channel and measure transforms,
//! δ-determinedness classification against the coset channels `D_H`, exact
//! transport distances to the set of coset-channel measures, and
//! exhaustive or sampled runs of the polarization process.

pub mod blackwell;
pub mod channel;
pub mod dist;
pub mod error;
pub mod group;
pub mod metrics;
pub mod polar;
pub mod process;
pub mod verify;

pub use blackwell::{
    blackwell_measure, canonicalize, capacity_of_measure, conditional_capacity_of_measure, pc_probability, pc_probability_measure, Atom,
    BlackwellMeasure, JointSource, MERGE_TAU,
};
pub use channel::{
    compose, conditional_channel, delta_determining_subgroup, deterministic_hom, is_degraded, presets,
    symmetric_capacity, Channel, DeterminednessResult, Witness,
};
pub use dist::{convolve_dist, entropy, translate_dist, Distribution};
pub use error::{PolarError, Result};
pub use group::{difference_span, enumerate_subgroups, make_group, quotient, Group, QuotientMap, Subgroup};
pub use metrics::{distance_to_pol, pc_gap_lower_bound, wasserstein, PolDistance, TransportPlan};
pub use polar::{
    capacity_gap, minus_on_measure, minus_transform, plus_on_measure, plus_transform, synthetic, synthetic_measure,
    CapacityGap, PolarPath, Sign, TransformOptions,
};
pub use process::{
    convergence_trace, enumerate_paths, martingale_residual, sample_paths, Mode, PolarizationReport, RunConfig,
};

//! Built-in verification suites. Each check reports a measured residual
//! against a tolerance.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::blackwell::{blackwell_measure, capacity_of_measure, conditional_capacity_of_measure, BlackwellMeasure};
use crate::channel::presets::{bec, random, z4_multilevel};
use crate::channel::{deterministic_hom, Channel};
use crate::error::{PolarError, Result};
use crate::group::{enumerate_subgroups, make_group, Group, Subgroup};
use crate::metrics::{distance_to_pol, wasserstein};
use crate::polar::{capacity_gap_integral, minus_on_measure, plus_on_measure, transform_measure, PolarPath, Sign, TransformOptions};
use crate::process::{enumerate_paths, martingale_residual, RunConfig, DEFAULT_DELTA};

/// Group orders cycled through by [`corpus`].
pub const CORPUS_GROUPS: [&[usize]; 5] = [&[2], &[3], &[4], &[2, 2], &[6]];
pub const CORPUS_SIZE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Martingale,
    LemmaGap,
    PolSet,
    BecOracle,
    Multilevel,
}

impl FromStr for Suite {
    type Err = PolarError;

    fn from_str(s: &str) -> Result<Suite> {
        Ok(match s {
            "all" => Suite::All,
            "martingale" => Suite::Martingale,
            "lemma-gap" => Suite::LemmaGap,
            "pol-set" => Suite::PolSet,
            "bec-oracle" => Suite::BecOracle,
            "multilevel" => Suite::Multilevel,
            other => return Err(PolarError::InvalidArgument(format!("unknown suite '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, residual: f64, tolerance: f64) -> Check {
        Check { suite, name: name.into(), residual, tolerance, passed: residual <= tolerance }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{} residual={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.residual,
            self.tolerance
        )
    }
}

/// The seeded random corpus: `CORPUS_SIZE` channels over the corpus
/// groups with 2 to 6 outputs.
pub fn corpus() -> Result<Vec<Channel>> {
    (0..CORPUS_SIZE)
        .map(|i| {
            let g = make_group(CORPUS_GROUPS[i % CORPUS_GROUPS.len()])?;
            random(&g, 2 + i % 5, i as u64)
        })
        .collect()
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::All => {
            let mut all = Vec::new();
            for s in [Suite::Martingale, Suite::LemmaGap, Suite::PolSet, Suite::BecOracle, Suite::Multilevel] {
                all.extend(run_suite(s)?);
            }
            all
        }
        Suite::Martingale => martingale()?,
        Suite::LemmaGap => lemma_gap()?,
        Suite::PolSet => pol_set()?,
        Suite::BecOracle => bec_oracle()?,
        Suite::Multilevel => multilevel()?,
    })
}

fn martingale() -> Result<Vec<Check>> {
    let (mut sum, mut asym) = (0.0f64, 0.0f64);
    for w in corpus()? {
        let r = martingale_residual(&w)?;
        sum = sum.max(r.residual);
        asym = asym.max(r.asymmetry.abs());
    }
    Ok(vec![
        Check::new("martingale", "sum-conservation", sum, 1e-8),
        Check::new("martingale", "equal-steps", asym, 1e-8),
    ])
}

fn lemma_gap() -> Result<Vec<Check>> {
    let mut worst = 0.0f64;
    for w in corpus()? {
        let m = blackwell_measure(&w)?;
        let via_transform = capacity_of_measure(&m)? - capacity_of_measure(&minus_on_measure(&m)?)?;
        worst = worst.max((via_transform - capacity_gap_integral(&m)?).abs());
    }
    Ok(vec![Check::new("lemma-gap", "route-agreement", worst, 1e-8)])
}

fn pol_set() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for orders in [&[2][..], &[4], &[2, 2], &[6]] {
        let g = make_group(orders)?;
        let (mut gap, mut dist, mut fixed, mut wrong) = (0.0f64, 0.0f64, 0.0f64, 0usize);
        for h in enumerate_subgroups(&g) {
            let m = blackwell_measure(&deterministic_hom(&g, &h)?)?;
            gap = gap.max(capacity_gap_integral(&m)?.abs());
            let d = distance_to_pol(&m, &g)?;
            dist = dist.max(d.distance);
            wrong += usize::from(d.subgroup != h);
            for t in [minus_on_measure(&m)?, plus_on_measure(&m)?] {
                fixed = fixed.max(wasserstein(&m, &t)?);
            }
        }
        checks.push(Check::new("pol-set", format!("{g}/capacity-gap"), gap, 1e-10));
        checks.push(Check::new("pol-set", format!("{g}/distance"), dist, 0.0));
        checks.push(Check::new("pol-set", format!("{g}/argmin-mismatches"), wrong as f64, 0.0));
        checks.push(Check::new("pol-set", format!("{g}/fixed-point"), fixed, 1e-10));
    }
    Ok(checks)
}

/// Erasure probability of a BEC after following `path`.
pub fn bec_erasure(eps: f64, path: &PolarPath) -> f64 {
    path.signs().iter().fold(eps, |z, s| match s {
        Sign::Minus => 2.0 * z - z * z,
        Sign::Plus => z * z,
    })
}

fn bec_oracle() -> Result<Vec<Check>> {
    let report = enumerate_paths(&bec(0.5)?, &RunConfig::exhaustive(8, DEFAULT_DELTA, 1e-9))?;
    let (mut err, mut atoms) = (0.0f64, 0usize);
    for r in &report.records {
        let expected = 1.0 - bec_erasure(0.5, &r.path);
        err = err.max(r.capacity.map_or(f64::INFINITY, |c| (c - expected).abs()));
        atoms = atoms.max(r.atoms.unwrap_or(usize::MAX));
    }
    Ok(vec![
        Check::new("bec-oracle", "records", (report.records.len() as f64 - 256.0).abs(), 0.0),
        Check::new("bec-oracle", "capacity", err, 1e-6),
        Check::new("bec-oracle", "max-atoms", atoms as f64, 3.0),
    ])
}

/// Subgroup the erasure oracle expects to δ-determine a multilevel
/// synthetic channel with erasure probability `z` on the refinement bit.
pub fn multilevel_expected(g: &Group, z: f64, delta: f64) -> Result<Option<Subgroup>> {
    if z < delta {
        Ok(Some(Subgroup::trivial(g)))
    } else if 1.0 - z < delta {
        Ok(Some(Subgroup::from_members(g, &[0, 2])?))
    } else {
        Ok(None)
    }
}

fn min_quotient_capacity(m: &BlackwellMeasure, h: &Subgroup, depth: usize, opts: TransformOptions) -> Result<f64> {
    let here = conditional_capacity_of_measure(m, h)?;
    if depth == 0 {
        return Ok(here);
    }
    let mut best = here;
    for s in [Sign::Minus, Sign::Plus] {
        best = best.min(min_quotient_capacity(&transform_measure(m, s, opts)?, h, depth - 1, opts)?);
    }
    Ok(best)
}

fn multilevel() -> Result<Vec<Check>> {
    const DEPTH: usize = 12;
    let eps = 0.5;
    let w = z4_multilevel(eps)?;
    let g = w.require_group()?.clone();
    let h = Subgroup::from_members(&g, &[0, 2])?;
    let report = enumerate_paths(&w, &RunConfig::exhaustive(DEPTH, DEFAULT_DELTA, 1e-9))?;
    let (mut mismatches, mut trivial, mut coarse) = (0usize, 0usize, 0usize);
    let (mut want_trivial, mut want_coarse) = (0usize, 0usize);
    for r in &report.records {
        let expected = multilevel_expected(&g, bec_erasure(eps, &r.path), DEFAULT_DELTA)?;
        let got = r.determinedness.as_ref().and_then(|d| d.subgroup().cloned());
        mismatches += usize::from(expected != got);
        match expected {
            Some(ref e) if *e == h => want_coarse += 1,
            Some(_) => want_trivial += 1,
            None => {}
        }
        match got {
            Some(ref e) if *e == h => coarse += 1,
            Some(_) => trivial += 1,
            None => {}
        }
    }
    let n = report.records.len() as f64;
    let quotient = min_quotient_capacity(&blackwell_measure(&w)?, &h, DEPTH, TransformOptions::default())?;
    Ok(vec![
        Check::new("multilevel", "classification-mismatches", mismatches as f64, 0.0),
        Check::new("multilevel", "fraction-{0}", ((trivial as f64 - want_trivial as f64) / n).abs(), 0.0),
        Check::new("multilevel", format!("fraction-{h}"), ((coarse as f64 - want_coarse as f64) / n).abs(), 0.0),
        Check::new("multilevel", "quotient-level-deficit", (1.0 - quotient).max(0.0), 1e-6),
    ])
}

//! Arıkan's minus/plus transforms over an Abelian group, on channels and
//! directly on Blackwell measures.
//!
//! With `(x1, x2) = (u1 + u2, u2)`:
//!
//! * `W⁻(y1,y2|u1) = (1/|G|) Σ_{u2} W(y1|u1+u2) W(y2|u2)`
//! * `W⁺(y1,y2,u1|u2) = (1/|G|) W(y1|u1+u2) W(y2|u2)`
//!
//! On measures, a pair of atoms `(w_i, p_i)`, `(w_j, p_j)` yields one minus
//! atom `(w_i w_j, p_i ⊛ p_j)` and, for every `u1` with `(p_i ⊛ p_j)(u1) > 0`,
//! one plus atom of weight `w_i w_j (p_i ⊛ p_j)(u1)` and posterior
//! `x ↦ p_i(u1 + x) p_j(x) / (p_i ⊛ p_j)(u1)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackwell::{canonical_from_raw, capacity_of_measure, BlackwellMeasure, Clusterer, MERGE_TAU};
use crate::channel::Channel;
use crate::dist::{convolve_into, entropy_of};
use crate::error::{PolarError, Result};

/// Default cap on atoms (or merged outputs) after a transform.
pub const DEFAULT_ATOM_BUDGET: usize = 20_000;
/// Default cap on path depth.
pub const DEFAULT_MAX_DEPTH: usize = 16;
/// Largest tolerated disagreement between the two capacity-gap routes.
pub const ROUTE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn as_char(self) -> char {
        match self {
            Sign::Minus => '-',
            Sign::Plus => '+',
        }
    }
}

/// A sequence of transforms, serialized as a string over `{'-','+'}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PolarPath(Vec<Sign>);

impl PolarPath {
    pub fn new(signs: Vec<Sign>) -> PolarPath {
        PolarPath(signs)
    }

    pub fn empty() -> PolarPath {
        PolarPath(Vec::new())
    }

    pub fn parse_with_max(s: &str, max_depth: usize) -> Result<PolarPath> {
        let signs = s
            .chars()
            .map(|c| match c {
                '-' | '−' => Ok(Sign::Minus),
                '+' => Ok(Sign::Plus),
                _ => Err(PolarError::InvalidPath(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        if signs.len() > max_depth {
            return Err(PolarError::PathTooDeep { depth: signs.len(), max: max_depth });
        }
        Ok(PolarPath(signs))
    }

    /// Path number `index` among all paths of `depth`, first sign most
    /// significant, minus = 0.
    pub fn from_index(index: u64, depth: usize) -> PolarPath {
        PolarPath(
            (0..depth)
                .map(|k| if index >> (depth - 1 - k) & 1 == 1 { Sign::Plus } else { Sign::Minus })
                .collect(),
        )
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn push(&mut self, s: Sign) {
        self.0.push(s);
    }

    pub fn child(&self, s: Sign) -> PolarPath {
        let mut p = self.clone();
        p.push(s);
        p
    }

    pub fn prefix(&self, len: usize) -> PolarPath {
        PolarPath(self.0[..len].to_vec())
    }
}

impl fmt::Display for PolarPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.as_char()))
    }
}

impl FromStr for PolarPath {
    type Err = PolarError;

    fn from_str(s: &str) -> Result<PolarPath> {
        PolarPath::parse_with_max(s, DEFAULT_MAX_DEPTH)
    }
}

impl TryFrom<String> for PolarPath {
    type Error = PolarError;

    fn try_from(s: String) -> Result<PolarPath> {
        s.parse()
    }
}

impl From<PolarPath> for String {
    fn from(p: PolarPath) -> String {
        p.to_string()
    }
}

/// Merging and resource limits for transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    pub tau: f64,
    pub atom_budget: usize,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions { tau: MERGE_TAU, atom_budget: DEFAULT_ATOM_BUDGET }
    }
}

/// Raw `W⁻` with output alphabet `Y x Y`, labelled `(y1,y2)`.
pub fn minus_transform(w: &Channel) -> Result<Channel> {
    let g = w.require_group()?;
    let (n, size) = (w.output_size(), g.size());
    let inv = 1.0 / size as f64;
    let outputs = pair_labels(w);
    let rows = (0..size)
        .map(|u1| {
            let mut row = vec![0.0; n * n];
            for u2 in 0..size {
                let r1 = &w.rows()[g.add(u1, u2)];
                let r2 = &w.rows()[u2];
                for (y1, &a) in r1.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (y2, &b) in r2.iter().enumerate() {
                        row[y1 * n + y2] += inv * a * b;
                    }
                }
            }
            row
        })
        .collect();
    Ok(Channel::from_parts(outputs, rows, Some(g.clone())))
}

/// Raw `W⁺` with output alphabet `Y x Y x G`, labelled `(y1,y2,u1)`.
pub fn plus_transform(w: &Channel) -> Result<Channel> {
    let g = w.require_group()?;
    let (n, size) = (w.output_size(), g.size());
    let inv = 1.0 / size as f64;
    let mut outputs = Vec::with_capacity(n * n * size);
    for y1 in 0..n {
        for y2 in 0..n {
            for u1 in 0..size {
                outputs.push(format!("({},{},{})", w.outputs()[y1], w.outputs()[y2], g.format_element(u1)));
            }
        }
    }
    let rows = (0..size)
        .map(|u2| {
            let mut row = vec![0.0; n * n * size];
            for u1 in 0..size {
                let r1 = &w.rows()[g.add(u1, u2)];
                let r2 = &w.rows()[u2];
                for (y1, &a) in r1.iter().enumerate() {
                    for (y2, &b) in r2.iter().enumerate() {
                        row[(y1 * n + y2) * size + u1] = inv * a * b;
                    }
                }
            }
            row
        })
        .collect();
    Ok(Channel::from_parts(outputs, rows, Some(g.clone())))
}

fn pair_labels(w: &Channel) -> Vec<String> {
    let mut out = Vec::with_capacity(w.output_size() * w.output_size());
    for a in w.outputs() {
        for b in w.outputs() {
            out.push(format!("({a},{b})"));
        }
    }
    out
}

pub fn transform_channel(w: &Channel, s: Sign) -> Result<Channel> {
    match s {
        Sign::Minus => minus_transform(w),
        Sign::Plus => plus_transform(w),
    }
}

/// `W^s` with canonical output merging after every step. Merged outputs are
/// relabelled `0..k`.
pub fn synthetic(w: &Channel, path: &PolarPath, opts: TransformOptions) -> Result<Channel> {
    let mut current = w.clone();
    for &s in path.signs() {
        let merged = transform_channel(&current, s)?.merge_equivalent_outputs(opts.tau);
        if merged.output_size() > opts.atom_budget {
            return Err(PolarError::AtomBudget { atoms: merged.output_size(), budget: opts.atom_budget });
        }
        let g = merged.require_group()?.clone();
        current = Channel::bound_unlabelled(&g, merged.rows().to_vec())?;
    }
    Ok(current)
}

fn live_atoms(m: &BlackwellMeasure) -> Vec<(f64, &[f64])> {
    m.atoms().iter().filter(|a| a.w > 0.0).map(|a| (a.w, a.q.probs())).collect()
}

pub fn minus_on_measure(m: &BlackwellMeasure) -> Result<BlackwellMeasure> {
    minus_on_measure_with(m, TransformOptions::default())
}

pub fn minus_on_measure_with(m: &BlackwellMeasure, opts: TransformOptions) -> Result<BlackwellMeasure> {
    m.check_balanced()?;
    let g = m.group();
    let atoms = live_atoms(m);
    let mut clusters = Clusterer::new(g.size(), opts.tau);
    let mut conv = vec![0.0; g.size()];
    for &(wi, pi) in &atoms {
        for &(wj, pj) in &atoms {
            convolve_into(g, pi, pj, &mut conv);
            clusters.insert(wi * wj, &conv);
            if clusters.len() > opts.atom_budget {
                return Err(PolarError::AtomBudget { atoms: clusters.len(), budget: opts.atom_budget });
            }
        }
    }
    finish(g, clusters, opts)
}

pub fn plus_on_measure(m: &BlackwellMeasure) -> Result<BlackwellMeasure> {
    plus_on_measure_with(m, TransformOptions::default())
}

pub fn plus_on_measure_with(m: &BlackwellMeasure, opts: TransformOptions) -> Result<BlackwellMeasure> {
    m.check_balanced()?;
    let g = m.group();
    let size = g.size();
    let atoms = live_atoms(m);
    let mut clusters = Clusterer::new(size, opts.tau);
    let mut conv = vec![0.0; size];
    let mut post = vec![0.0; size];
    for &(wi, pi) in &atoms {
        for &(wj, pj) in &atoms {
            convolve_into(g, pi, pj, &mut conv);
            for (u1, &c) in conv.iter().enumerate() {
                if c <= 0.0 {
                    continue;
                }
                for (x, slot) in post.iter_mut().enumerate() {
                    *slot = pi[g.add(u1, x)] * pj[x] / c;
                }
                clusters.insert(wi * wj * c, &post);
                if clusters.len() > opts.atom_budget {
                    return Err(PolarError::AtomBudget { atoms: clusters.len(), budget: opts.atom_budget });
                }
            }
        }
    }
    finish(g, clusters, opts)
}

fn finish(g: &crate::group::Group, clusters: Clusterer, opts: TransformOptions) -> Result<BlackwellMeasure> {
    let out = canonical_from_raw(g, clusters.finish(), opts.tau);
    if out.len() > opts.atom_budget {
        return Err(PolarError::AtomBudget { atoms: out.len(), budget: opts.atom_budget });
    }
    Ok(out)
}

pub fn transform_measure(m: &BlackwellMeasure, s: Sign, opts: TransformOptions) -> Result<BlackwellMeasure> {
    match s {
        Sign::Minus => minus_on_measure_with(m, opts),
        Sign::Plus => plus_on_measure_with(m, opts),
    }
}

/// Measure of `W^s`, transforming the measure directly.
pub fn synthetic_measure(m: &BlackwellMeasure, path: &PolarPath, opts: TransformOptions) -> Result<BlackwellMeasure> {
    let mut current = m.clone();
    for &s in path.signs() {
        current = transform_measure(&current, s, opts)?;
    }
    Ok(current)
}

/// `I(M) - I(M⁻)` evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityGap {
    /// Difference of capacities of the measure and its minus transform.
    pub via_transform: f64,
    /// `Σ_{i,j} w_i w_j (H(p_i ⊛ p_j) - H(p_i))`.
    pub via_integral: f64,
}

impl CapacityGap {
    pub fn disagreement(&self) -> f64 {
        (self.via_transform - self.via_integral).abs()
    }
}

/// Both routes of the capacity gap; errors if they disagree beyond
/// [`ROUTE_TOL`].
pub fn capacity_gap(m: &BlackwellMeasure) -> Result<CapacityGap> {
    let via_transform = capacity_of_measure(m)? - capacity_of_measure(&minus_on_measure(m)?)?;
    let via_integral = capacity_gap_integral(m)?;
    let gap = CapacityGap { via_transform, via_integral };
    if gap.disagreement() > ROUTE_TOL {
        return Err(PolarError::RouteDisagreement(gap.disagreement()));
    }
    Ok(gap)
}

/// The double-integral route alone.
pub fn capacity_gap_integral(m: &BlackwellMeasure) -> Result<f64> {
    m.check_balanced()?;
    let g = m.group();
    let atoms = live_atoms(m);
    // H(p ⊛ q) = H(q ⊛ p): the two are reflections, so each pair is visited once
    let rows: Vec<f64> = (0..atoms.len())
        .into_par_iter()
        .map(|i| {
            let (wi, pi) = atoms[i];
            let mut conv = vec![0.0; g.size()];
            let mut row = 0.0;
            for (j, &(wj, pj)) in atoms.iter().enumerate().skip(i) {
                convolve_into(g, pi, pj, &mut conv);
                let pair = wj * entropy_of(&conv);
                row += if j == i { pair } else { 2.0 * pair };
            }
            wi * row
        })
        .collect();
    let mixed: f64 = rows.iter().sum();
    let own: f64 = atoms.iter().map(|&(w, p)| w * entropy_of(p)).sum();
    let total = mixed - own;
    Ok(total)
}

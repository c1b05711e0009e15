//! Blackwell measures: the law of the input posterior under a uniform input.
//!
//! A measure is a finite list of atoms `(weight, posterior)`. Measures are
//! kept in canonical form: posteriors closer than the merge tolerance (L∞)
//! are merged with weight-averaged posteriors, zero-weight atoms are
//! dropped, and atoms are sorted lexicographically by posterior. Two
//! channels are equivalent exactly when their canonical measures agree.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::dist::{entropy_of, linf, Distribution};
use crate::error::{PolarError, Result};
use crate::group::{quotient, Group, Subgroup};

/// Default L∞ merge tolerance.
pub const MERGE_TAU: f64 = 1e-9;
/// Tolerance for the balance condition Σ w q = uniform.
pub const BALANCE_TOL: f64 = 1e-9;
/// Weight agreement used when comparing canonical measures.
pub const WEIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub w: f64,
    pub q: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlackwellMeasure {
    group: Group,
    atoms: Vec<Atom>,
}

#[derive(Deserialize)]
struct RawMeasure {
    group: Group,
    atoms: Vec<Atom>,
}

impl<'de> Deserialize<'de> for BlackwellMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMeasure::deserialize(d)?;
        BlackwellMeasure::from_atoms(&raw.group, raw.atoms, MERGE_TAU).map_err(serde::de::Error::custom)
    }
}

impl BlackwellMeasure {
    /// Validates atoms (weights, posteriors on `g`) and canonicalizes them.
    /// Balance is not required here; see [`BlackwellMeasure::check_balanced`].
    pub fn from_atoms(g: &Group, atoms: Vec<Atom>, tau: f64) -> Result<BlackwellMeasure> {
        if atoms.is_empty() {
            return Err(PolarError::InvalidMeasure("no atoms".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if !(a.w >= 0.0 && a.w.is_finite()) {
                return Err(PolarError::InvalidMeasure(format!("atom {i} has weight {}", a.w)));
            }
            if a.q.len() != g.size() {
                return Err(PolarError::GroupMismatch(format!("atom {i} posterior of length {}", a.q.len()), g.to_string()));
            }
            Distribution::new(a.q.probs().to_vec())
                .map_err(|e| PolarError::InvalidMeasure(format!("atom {i}: {e}")))?;
        }
        let total: f64 = atoms.iter().map(|a| a.w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(PolarError::InvalidMeasure(format!("weights sum to {total}")));
        }
        let raw = atoms.into_iter().map(|a| (a.w, a.q.into_vec())).collect();
        Ok(canonical_from_raw(g, raw, tau))
    }

    /// `(1/|G/H|) Σ_A δ_{π_A}`: the measure of the coset channel `D_H`.
    pub fn of_subgroup(g: &Group, h: &Subgroup) -> Result<BlackwellMeasure> {
        let q = quotient(g, h)?;
        let w = 1.0 / q.coset_count() as f64;
        let raw = (0..q.coset_count())
            .map(|c| (w, Distribution::uniform_on(g.size(), &q.coset_members(c)).into_vec()))
            .collect();
        Ok(canonical_from_raw(g, raw, MERGE_TAU))
    }

    /// Single atom at the uniform posterior.
    pub fn useless(g: &Group) -> BlackwellMeasure {
        BlackwellMeasure { group: g.clone(), atoms: vec![Atom { w: 1.0, q: Distribution::uniform(g.size()) }] }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Largest coordinate deviation of Σ w q from the uniform distribution.
    pub fn balance_deviation(&self) -> f64 {
        let n = self.group.size();
        let mut mean = vec![0.0; n];
        for a in &self.atoms {
            for (m, &p) in mean.iter_mut().zip(a.q.probs()) {
                *m += a.w * p;
            }
        }
        mean.iter().map(|m| (m - 1.0 / n as f64).abs()).fold(0.0, f64::max)
    }

    pub fn check_balanced(&self) -> Result<()> {
        let dev = self.balance_deviation();
        if dev > BALANCE_TOL {
            Err(PolarError::Unbalanced(dev))
        } else {
            Ok(())
        }
    }

    /// A channel realizing this measure: one output per atom with
    /// `W(i|x) = |G| w_i q_i(x)`, rows renormalized against rounding.
    pub fn to_channel(&self) -> Result<Channel> {
        self.check_balanced()?;
        let n = self.group.size() as f64;
        let rows = (0..self.group.size())
            .map(|x| {
                let r: Vec<f64> = self.atoms.iter().map(|a| n * a.w * a.q.probs()[x]).collect();
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| (v / s).min(1.0)).collect()
            })
            .collect();
        Channel::bound_unlabelled(&self.group, rows)
    }

    /// Atom-wise equality after canonicalization: same atom count, and a
    /// matching with posterior L∞ ≤ `post_tol` and weight gap ≤ `weight_tol`.
    pub fn approx_eq(&self, other: &BlackwellMeasure, post_tol: f64, weight_tol: f64) -> bool {
        if self.group != other.group || self.atoms.len() != other.atoms.len() {
            return false;
        }
        let close = |a: &Atom, b: &Atom| a.q.linf(&b.q) <= post_tol && (a.w - b.w).abs() <= weight_tol;
        if self.atoms.iter().zip(&other.atoms).all(|(a, b)| close(a, b)) {
            return true;
        }
        // sorting can differ when leading coordinates tie up to rounding
        let mut used = vec![false; other.atoms.len()];
        self.atoms.iter().all(|a| {
            match other.atoms.iter().enumerate().find(|(j, b)| !used[*j] && close(a, b)) {
                Some((j, _)) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
    }

    /// Same equivalence class: canonical forms agree within the default
    /// merge tolerance.
    pub fn same_class(&self, other: &BlackwellMeasure) -> bool {
        self.approx_eq(other, MERGE_TAU, WEIGHT_TOL)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Greedy L∞ clustering against seed points, accelerated by a grid hash on
/// the leading coordinates. A point joins the earliest seed within `tau`;
/// otherwise it becomes a new seed. Seeds are pairwise more than `tau` apart.
pub(crate) struct Clusterer {
    tau: f64,
    key_dims: usize,
    cells: HashMap<[i64; 3], Vec<usize>>,
    seeds: Vec<Vec<f64>>,
    weights: Vec<f64>,
    sums: Vec<Vec<f64>>,
}

impl Clusterer {
    pub(crate) fn new(dim: usize, tau: f64) -> Clusterer {
        Clusterer {
            tau,
            key_dims: dim.min(3),
            cells: HashMap::new(),
            seeds: Vec::new(),
            weights: Vec::new(),
            sums: Vec::new(),
        }
    }

    fn key(&self, q: &[f64]) -> [i64; 3] {
        let mut k = [0i64; 3];
        if self.tau > 0.0 {
            for (slot, &v) in k.iter_mut().zip(q).take(self.key_dims) {
                *slot = (v / self.tau).floor() as i64;
            }
        } else {
            for (slot, &v) in k.iter_mut().zip(q).take(self.key_dims) {
                *slot = v.to_bits() as i64;
            }
        }
        k
    }

    fn find(&self, q: &[f64]) -> Option<usize> {
        let base = self.key(q);
        let span: i64 = if self.tau > 0.0 { 1 } else { 0 };
        let mut best: Option<usize> = None;
        let combos = (2 * span + 1).pow(self.key_dims as u32);
        for c in 0..combos {
            let mut key = base;
            let mut rest = c;
            for slot in key.iter_mut().take(self.key_dims) {
                *slot += rest % (2 * span + 1) - span;
                rest /= 2 * span + 1;
            }
            if let Some(list) = self.cells.get(&key) {
                for &s in list {
                    if best.is_some_and(|b| b <= s) {
                        break;
                    }
                    if linf(&self.seeds[s], q) <= self.tau {
                        best = Some(s);
                        break;
                    }
                }
            }
        }
        best
    }

    /// Adds a weighted point and returns its cluster index.
    pub(crate) fn insert(&mut self, w: f64, q: &[f64]) -> usize {
        if let Some(s) = self.find(q) {
            self.weights[s] += w;
            for (acc, &v) in self.sums[s].iter_mut().zip(q) {
                *acc += w * v;
            }
            return s;
        }
        let s = self.seeds.len();
        let key = self.key(q);
        self.cells.entry(key).or_default().push(s);
        self.seeds.push(q.to_vec());
        self.weights.push(w);
        self.sums.push(q.iter().map(|&v| w * v).collect());
        s
    }

    pub(crate) fn len(&self) -> usize {
        self.seeds.len()
    }

    /// Merged atoms in seed order: summed weights, weight-averaged posteriors.
    pub(crate) fn finish(self) -> Vec<(f64, Vec<f64>)> {
        self.weights
            .into_iter()
            .zip(self.sums.into_iter().zip(self.seeds))
            .map(|(w, (sum, seed))| {
                if w > 0.0 {
                    let q: Vec<f64> = sum.into_iter().map(|v| (v / w).max(0.0) + 0.0).collect();
                    (w, q)
                } else {
                    (w, seed)
                }
            })
            .collect()
    }
}

/// Cluster index per posterior (indices in first-appearance order).
pub(crate) fn cluster_posteriors(posteriors: &[Vec<f64>], weights: &[f64], tau: f64) -> Vec<usize> {
    let dim = posteriors.first().map_or(0, Vec::len);
    let mut order: Vec<usize> = (0..posteriors.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&posteriors[a], &posteriors[b]));
    let mut c = Clusterer::new(dim, tau);
    let mut cluster_of = vec![0; posteriors.len()];
    for &i in &order {
        cluster_of[i] = c.insert(weights[i], &posteriors[i]);
    }
    // renumber by first appearance in the original order
    let mut relabel = vec![usize::MAX; c.len()];
    let mut next = 0;
    for slot in cluster_of.iter_mut() {
        if relabel[*slot] == usize::MAX {
            relabel[*slot] = next;
            next += 1;
        }
        *slot = relabel[*slot];
    }
    cluster_of
}

/// Canonical form of raw `(weight, posterior)` pairs: drops zero weights,
/// merges within `tau` until no two posteriors are within `tau`, sorts.
pub(crate) fn canonical_from_raw(g: &Group, mut raw: Vec<(f64, Vec<f64>)>, tau: f64) -> BlackwellMeasure {
    raw.retain(|(w, _)| *w > 0.0);
    loop {
        raw.sort_by(|a, b| lex_cmp(&a.1, &b.1).then(a.0.total_cmp(&b.0)));
        let before = raw.len();
        let mut c = Clusterer::new(g.size(), tau);
        for (w, q) in &raw {
            c.insert(*w, q);
        }
        if c.len() == before {
            break;
        }
        raw = c.finish();
    }
    let atoms = raw
        .into_iter()
        .map(|(w, q)| Atom { w, q: Distribution::from_vec_unchecked(q) })
        .collect();
    BlackwellMeasure { group: g.clone(), atoms }
}

/// Merges atoms within `tau`; idempotent.
pub fn canonicalize(m: &BlackwellMeasure, tau: f64) -> BlackwellMeasure {
    let raw = m.atoms.iter().map(|a| (a.w, a.q.probs().to_vec())).collect();
    canonical_from_raw(&m.group, raw, tau)
}

/// Posterior law of a group-bound channel under a uniform input.
pub fn blackwell_measure(w: &Channel) -> Result<BlackwellMeasure> {
    blackwell_measure_with_tau(w, MERGE_TAU)
}

pub fn blackwell_measure_with_tau(w: &Channel, tau: f64) -> Result<BlackwellMeasure> {
    let g = w.require_group()?;
    let m = g.size() as f64;
    let raw = (0..w.output_size())
        .filter_map(|y| {
            let col: Vec<f64> = w.rows().iter().map(|r| r[y]).collect();
            let s: f64 = col.iter().sum();
            (s > 0.0).then(|| (s / m, col.into_iter().map(|v| v / s).collect()))
        })
        .collect();
    Ok(canonical_from_raw(g, raw, tau))
}

/// `log2|G| - Σ w_i H(q_i)`.
pub fn capacity_of_measure(m: &BlackwellMeasure) -> Result<f64> {
    m.check_balanced()?;
    Ok(capacity_unchecked(m))
}

pub(crate) fn capacity_unchecked(m: &BlackwellMeasure) -> f64 {
    let n = m.group.size() as f64;
    let avg_entropy: f64 = m.atoms.iter().map(|a| a.w * entropy_of(a.q.probs())).sum();
    (n.log2() - avg_entropy).clamp(0.0, n.log2())
}

/// `I(W[H])` computed from the measure: posteriors pushed to cosets.
pub fn conditional_capacity_of_measure(m: &BlackwellMeasure, h: &Subgroup) -> Result<f64> {
    let q = quotient(&m.group, h)?;
    let k = q.coset_count();
    let mut pushed = vec![0.0; k];
    let mut avg_entropy = 0.0;
    for a in &m.atoms {
        pushed.iter_mut().for_each(|v| *v = 0.0);
        for (x, &p) in a.q.probs().iter().enumerate() {
            pushed[q.coset_of(x)] += p;
        }
        avg_entropy += a.w * entropy_of(&pushed);
    }
    let top = (k as f64).log2();
    Ok((top - avg_entropy).clamp(0.0, top))
}

/// A joint source `p(u, x)` on `[m] x G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSource {
    probs: Vec<Vec<f64>>,
}

impl JointSource {
    /// `probs[u][x]`; entries non-negative, total mass 1.
    pub fn new(probs: Vec<Vec<f64>>) -> Result<JointSource> {
        if probs.is_empty() || probs[0].is_empty() {
            return Err(PolarError::InvalidDistribution("joint source needs m >= 1 and a non-empty alphabet".into()));
        }
        let width = probs[0].len();
        if probs.iter().any(|r| r.len() != width) {
            return Err(PolarError::InvalidDistribution("ragged joint source".into()));
        }
        if probs.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PolarError::InvalidDistribution("negative joint probability".into()));
        }
        let total: f64 = probs.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(PolarError::InvalidDistribution(format!("joint source mass {total}")));
        }
        Ok(JointSource { probs })
    }

    /// `p(u, x) = 1{u = x} / n`: guess the input itself.
    pub fn identity(n: usize) -> JointSource {
        JointSource {
            probs: (0..n)
                .map(|u| (0..n).map(|x| if u == x { 1.0 / n as f64 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs[0].len()
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }
}

/// Optimal probability of guessing `U` from the output of `w`:
/// `Σ_y max_u Σ_x p(u,x) W(y|x)`.
pub fn pc_probability(p: &JointSource, w: &Channel) -> Result<f64> {
    if p.alphabet_size() != w.input_size() {
        return Err(PolarError::DimensionMismatch(format!(
            "source alphabet {} vs channel inputs {}",
            p.alphabet_size(),
            w.input_size()
        )));
    }
    Ok((0..w.output_size())
        .map(|y| {
            p.probs
                .iter()
                .map(|pu| pu.iter().enumerate().map(|(x, &v)| v * w.prob(y, x)).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .sum())
}

/// Measure form: `|G| Σ_i w_i max_u <p(u,·), q_i>`.
pub fn pc_probability_measure(p: &JointSource, m: &BlackwellMeasure) -> Result<f64> {
    if p.alphabet_size() != m.group.size() {
        return Err(PolarError::DimensionMismatch(format!(
            "source alphabet {} vs group size {}",
            p.alphabet_size(),
            m.group.size()
        )));
    }
    let n = m.group.size() as f64;
    Ok(n * m
        .atoms
        .iter()
        .map(|a| {
            a.w * p
                .probs
                .iter()
                .map(|pu| pu.iter().zip(a.q.probs()).map(|(u, q)| u * q).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::presets::*;
    use crate::channel::symmetric_capacity;
    use crate::group::make_group;

    #[test]
    fn bsc_measure() {
        let m = blackwell_measure(&bsc(0.1).unwrap()).unwrap();
        assert_eq!(m.len(), 2);
        // lexicographic order puts (0.1, 0.9) first
        assert!((m.atoms()[0].w - 0.5).abs() < 1e-15);
        assert!((m.atoms()[0].q.probs()[0] - 0.1).abs() < 1e-15);
        assert!((m.atoms()[1].q.probs()[0] - 0.9).abs() < 1e-15);
        assert!(m.balance_deviation() < 1e-15);
    }

    #[test]
    fn identity_and_dh_measures() {
        let z4 = make_group(&[4]).unwrap();
        let m = blackwell_measure(&identity(&z4)).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.atoms().iter().all(|a| (a.w - 0.25).abs() < 1e-15 && a.q.probs().contains(&1.0)));
        let h = Subgroup::from_members(&z4, &[0, 2]).unwrap();
        let dh = blackwell_measure(&crate::channel::deterministic_hom(&z4, &h).unwrap()).unwrap();
        let expected = BlackwellMeasure::of_subgroup(&z4, &h).unwrap();
        assert_eq!(dh, expected);
        assert_eq!(dh.atoms()[0].q.probs(), &[0.0, 0.5, 0.0, 0.5]);
        assert_eq!(dh.atoms()[1].q.probs(), &[0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn canonicalization() {
        let split = bsc(0.1).unwrap().split_output(1, 0.5).unwrap();
        assert_eq!(blackwell_measure(&split).unwrap(), blackwell_measure(&bsc(0.1).unwrap()).unwrap());

        let m = blackwell_measure(&bsc(0.1).unwrap()).unwrap();
        assert_eq!(canonicalize(&m, MERGE_TAU), m);

        let z2 = make_group(&[2]).unwrap();
        let atoms = vec![
            Atom { w: 0.5, q: Distribution::new(vec![0.3, 0.7]).unwrap() },
            Atom { w: 0.5, q: Distribution::new(vec![0.3 + 1e-12, 0.7 - 1e-12]).unwrap() },
        ];
        let merged = BlackwellMeasure::from_atoms(&z2, atoms, 1e-9).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.atoms()[0].w, 1.0);
    }

    #[test]
    fn chained_merges_settle() {
        // the first pass forms two clusters whose weighted averages end up
        // within tau of each other, so a second pass must merge them
        let z2 = make_group(&[2]).unwrap();
        let e = 1e-9;
        let atoms = [(0.01, 0.0), (0.49, 0.95), (0.49, 1.9), (0.01, 2.85)]
            .iter()
            .map(|&(w, d)| Atom { w, q: Distribution::from_vec_unchecked(vec![0.4 + d * e, 0.6 - d * e]) })
            .collect();
        let m = canonical_from_raw(&z2, atoms_to_raw(atoms), e);
        assert_eq!(m.len(), 1);
        assert!((m.atoms()[0].w - 1.0).abs() < 1e-15);
    }

    fn atoms_to_raw(atoms: Vec<Atom>) -> Vec<(f64, Vec<f64>)> {
        atoms.into_iter().map(|a| (a.w, a.q.into_vec())).collect()
    }

    #[test]
    fn measure_capacities() {
        let z4 = make_group(&[4]).unwrap();
        let id = blackwell_measure(&identity(&z4)).unwrap();
        assert!((capacity_of_measure(&id).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(capacity_of_measure(&BlackwellMeasure::useless(&z4)).unwrap(), 0.0);
        let bsc_m = blackwell_measure(&bsc(0.1).unwrap()).unwrap();
        let direct = symmetric_capacity(&bsc(0.1).unwrap());
        assert!((capacity_of_measure(&bsc_m).unwrap() - direct).abs() < 1e-12);

        let z2 = make_group(&[2]).unwrap();
        let skew = BlackwellMeasure::from_atoms(&z2, vec![Atom { w: 1.0, q: Distribution::new(vec![0.9, 0.1]).unwrap() }], 1e-9).unwrap();
        assert!(matches!(capacity_of_measure(&skew), Err(PolarError::Unbalanced(_))));
    }

    #[test]
    fn pc_examples() {
        let z2 = make_group(&[2]).unwrap();
        let p = JointSource::identity(2);
        let w = bsc(0.1).unwrap();
        assert!((pc_probability(&p, &w).unwrap() - 0.9).abs() < 1e-15);
        assert!((pc_probability(&p, &identity(&z2)).unwrap() - 1.0).abs() < 1e-15);
        assert!((pc_probability(&p, &useless(&z2)).unwrap() - 0.5).abs() < 1e-15);
        let m = blackwell_measure(&w).unwrap();
        assert!((pc_probability_measure(&p, &m).unwrap() - 0.9).abs() < 1e-15);
        assert!(pc_probability(&JointSource::identity(3), &w).is_err());
    }

    #[test]
    fn json_shape() {
        let m = blackwell_measure(&bsc(0.25).unwrap()).unwrap();
        let text = m.to_json();
        assert!(text.starts_with(r#"{"group":[2],"atoms":[{"w":0.5,"q":[0.25,0.75]}"#), "{text}");
        let back: BlackwellMeasure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<BlackwellMeasure>(r#"{"group":[2],"atoms":[{"w":0.7,"q":[0.5,0.5]}]}"#).is_err());
    }

    #[test]
    fn measure_to_channel() {
        let z3 = make_group(&[3]).unwrap();
        let w = random(&z3, 4, 11).unwrap();
        let m = blackwell_measure(&w).unwrap();
        let back = blackwell_measure(&m.to_channel().unwrap()).unwrap();
        assert!(back.approx_eq(&m, 1e-12, 1e-12));
    }

    #[test]
    fn conditional_capacity_matches_channel_route() {
        let z4 = make_group(&[4]).unwrap();
        let w = random(&z4, 5, 3).unwrap();
        let m = blackwell_measure(&w).unwrap();
        for h in crate::group::enumerate_subgroups(&z4) {
            let direct = symmetric_capacity(&crate::channel::conditional_channel(&w, &h).unwrap());
            assert!((conditional_capacity_of_measure(&m, &h).unwrap() - direct).abs() < 1e-12);
        }
    }
}

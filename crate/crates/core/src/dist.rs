//! Probability vectors over a finite alphabet and the group operations on
//! them used by the polar transforms.

use serde::{Deserialize, Serialize};

use crate::error::{PolarError, Result};
use crate::group::Group;

/// Simplex membership tolerance on the total mass.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector. Entries are non-negative and sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(PolarError::InvalidDistribution("empty vector".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(PolarError::InvalidDistribution(format!("entry {bad} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(PolarError::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Distribution(probs))
    }

    /// Wraps a vector known to lie on the simplex up to rounding.
    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        Distribution(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Distribution(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Distribution(v)
    }

    /// Uniform on the listed elements.
    pub fn uniform_on(n: usize, support: &[usize]) -> Self {
        let mut v = vec![0.0; n];
        for &x in support {
            v[x] = 1.0 / support.len() as f64;
        }
        Distribution(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn linf(&self, other: &Distribution) -> f64 {
        linf(&self.0, &other.0)
    }

    /// Total-variation distance, half the L1 distance.
    pub fn total_variation(&self, other: &Distribution) -> f64 {
        0.5 * self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

pub(crate) fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Shannon entropy in bits of a raw probability slice, with 0 log 0 = 0.
pub fn entropy_of(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    h.max(0.0)
}

pub fn entropy(p: &Distribution) -> f64 {
    entropy_of(&p.0)
}

/// `(p ⊛ q)(u1) = Σ_{u2} p(u1 + u2) q(u2)`, written into `out`.
pub(crate) fn convolve_into(g: &Group, p: &[f64], q: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (u2, &qv) in q.iter().enumerate() {
        if qv == 0.0 {
            continue;
        }
        for (u1, o) in out.iter_mut().enumerate() {
            *o += p[g.add(u1, u2)] * qv;
        }
    }
}

pub fn convolve_dist(g: &Group, p: &Distribution, q: &Distribution) -> Result<Distribution> {
    if p.len() != g.size() || q.len() != g.size() {
        return Err(PolarError::GroupMismatch(
            format!("{} entries", p.len().max(q.len())),
            format!("{g} of size {}", g.size()),
        ));
    }
    let mut out = vec![0.0; g.size()];
    convolve_into(g, &p.0, &q.0, &mut out);
    Ok(Distribution(out))
}

/// `p_u(x) = p(x + u)`.
pub fn translate_dist(g: &Group, p: &Distribution, u: usize) -> Result<Distribution> {
    if p.len() != g.size() {
        return Err(PolarError::GroupMismatch(format!("{} entries", p.len()), g.to_string()));
    }
    if u >= g.size() {
        return Err(PolarError::ElementOutOfRange { index: u, size: g.size() });
    }
    Ok(Distribution((0..g.size()).map(|x| p.0[g.add(x, u)]).collect()))
}

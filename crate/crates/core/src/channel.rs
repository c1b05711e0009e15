//! Discrete memoryless channels with (optionally) a group-indexed input.

use std::collections::HashSet;

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::blackwell::cluster_posteriors;
use crate::error::{PolarError, Result};
use crate::group::{enumerate_subgroups, quotient, Group, Subgroup};

/// Row-sum tolerance for stochastic kernels.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Default residual tolerance for the degradedness LP.
pub const DEGRADE_TOL: f64 = 1e-7;

/// A row-stochastic kernel `W(y|x)`; `rows[x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    outputs: Vec<String>,
    rows: Vec<Vec<f64>>,
    group: Option<Group>,
}

impl Channel {
    /// An unbound channel on inputs `0..rows.len()`.
    pub fn new(outputs: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Channel> {
        validate(&outputs, &rows)?;
        Ok(Channel { outputs, rows, group: None })
    }

    /// A channel whose input alphabet is `g` in enumeration order.
    pub fn bound(g: &Group, outputs: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Channel> {
        if rows.len() != g.size() {
            return Err(PolarError::InvalidChannel(format!(
                "group {g} has {} elements but {} rows were given",
                g.size(),
                rows.len()
            )));
        }
        validate(&outputs, &rows)?;
        Ok(Channel { outputs, rows, group: Some(g.clone()) })
    }

    /// Bound channel with outputs labelled `0..n`.
    pub fn bound_unlabelled(g: &Group, rows: Vec<Vec<f64>>) -> Result<Channel> {
        let n = rows.first().map_or(0, Vec::len);
        Channel::bound(g, (0..n).map(|y| y.to_string()).collect(), rows)
    }

    /// Construction path for kernels built internally from valid channels.
    pub(crate) fn from_parts(outputs: Vec<String>, rows: Vec<Vec<f64>>, group: Option<Group>) -> Channel {
        debug_assert!(validate(&outputs, &rows).is_ok());
        Channel { outputs, rows, group }
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.outputs.len()
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    #[inline]
    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.rows[x][y]
    }

    pub fn group(&self) -> Option<&Group> {
        self.group.as_ref()
    }

    pub fn require_group(&self) -> Result<&Group> {
        self.group.as_ref().ok_or(PolarError::Unbound)
    }

    pub fn with_group(mut self, g: &Group) -> Result<Channel> {
        if self.rows.len() != g.size() {
            return Err(PolarError::InvalidChannel(format!(
                "group {g} has {} elements but the channel has {} inputs",
                g.size(),
                self.rows.len()
            )));
        }
        self.group = Some(g.clone());
        Ok(self)
    }

    /// Output distribution under a uniform input.
    pub fn output_marginal(&self) -> Vec<f64> {
        let m = self.input_size() as f64;
        (0..self.output_size())
            .map(|y| self.rows.iter().map(|r| r[y]).sum::<f64>() / m)
            .collect()
    }

    /// Reorders outputs: new output `k` is old output `perm[k]`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Channel> {
        let mut seen = vec![false; self.output_size()];
        if perm.len() != self.output_size() || perm.iter().any(|&p| p >= seen.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(PolarError::InvalidArgument("not a permutation of the outputs".into()));
        }
        let outputs = perm.iter().map(|&p| self.outputs[p].clone()).collect();
        let rows = self.rows.iter().map(|r| perm.iter().map(|&p| r[p]).collect()).collect();
        Ok(Channel { outputs, rows, group: self.group.clone() })
    }

    /// Splits output `y` into two outputs carrying `frac` and `1 - frac` of
    /// its mass. The result is equivalent to `self`.
    pub fn split_output(&self, y: usize, frac: f64) -> Result<Channel> {
        if y >= self.output_size() || !(0.0..=1.0).contains(&frac) {
            return Err(PolarError::InvalidArgument(format!("cannot split output {y} by {frac}")));
        }
        let mut outputs = self.outputs.clone();
        outputs.push(format!("{}'", self.outputs[y]));
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                let v = r[y];
                r[y] = v * frac;
                r.push(v - v * frac);
                r
            })
            .collect();
        Ok(Channel { outputs, rows, group: self.group.clone() })
    }

    /// Drops zero-probability outputs and merges outputs whose posteriors
    /// agree within `tau` (L∞). Merged outputs keep the first label.
    pub fn merge_equivalent_outputs(&self, tau: f64) -> Channel {
        let marginal = self.output_marginal();
        let live: Vec<usize> = (0..self.output_size()).filter(|&y| marginal[y] > 0.0).collect();
        let posteriors: Vec<Vec<f64>> = live
            .iter()
            .map(|&y| {
                let col: Vec<f64> = self.rows.iter().map(|r| r[y]).collect();
                let s: f64 = col.iter().sum();
                col.into_iter().map(|v| v / s).collect()
            })
            .collect();
        let weights: Vec<f64> = live.iter().map(|&y| marginal[y]).collect();
        let clusters = cluster_posteriors(&posteriors, &weights, tau);
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); clusters.iter().max().map_or(0, |&c| c + 1)];
        for (k, &c) in clusters.iter().enumerate() {
            groups[c].push(live[k]);
        }
        let outputs = groups.iter().map(|members| self.outputs[members[0]].clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| groups.iter().map(|members| members.iter().map(|&y| r[y]).sum()).collect())
            .collect();
        Channel { outputs, rows, group: self.group.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        let g = self.require_group()?;
        let file = ChannelFile {
            group: g.orders().to_vec(),
            outputs: self.outputs.clone(),
            rows: self.rows.clone(),
        };
        Ok(serde_json::to_string_pretty(&file).expect("channel serializes"))
    }

    pub fn from_json(text: &str) -> Result<Channel> {
        let file: ChannelFile = serde_json::from_str(text)
            .map_err(|e| PolarError::InvalidChannel(format!("malformed channel JSON: {e}")))?;
        let g = crate::group::make_group(&file.group)
            .map_err(|e| PolarError::InvalidChannel(format!("field \"group\": {e}")))?;
        Channel::bound(&g, file.outputs, file.rows)
    }
}

/// On-disk channel format.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    group: Vec<usize>,
    outputs: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn validate(outputs: &[String], rows: &[Vec<f64>]) -> Result<()> {
    if rows.is_empty() {
        return Err(PolarError::InvalidChannel("field \"rows\": no input rows".into()));
    }
    if outputs.is_empty() {
        return Err(PolarError::InvalidChannel("field \"outputs\": no outputs".into()));
    }
    let mut labels = HashSet::new();
    for label in outputs {
        if !labels.insert(label) {
            return Err(PolarError::InvalidChannel(format!("field \"outputs\": duplicate label {label:?}")));
        }
    }
    for (x, row) in rows.iter().enumerate() {
        if row.len() != outputs.len() {
            return Err(PolarError::InvalidChannel(format!(
                "row {x}: has {} entries but there are {} outputs",
                row.len(),
                outputs.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(PolarError::InvalidChannel(format!("row {x}: entry {v} is not in [0,1]")));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOL {
            return Err(PolarError::InvalidChannel(format!("row {x}: not stochastic, sums to {total}")));
        }
    }
    Ok(())
}

/// `(V ∘ W)(z|x) = Σ_y V(z|y) W(y|x)`.
pub fn compose(v: &Channel, w: &Channel) -> Result<Channel> {
    if v.input_size() != w.output_size() {
        return Err(PolarError::DimensionMismatch(format!(
            "outer channel has {} inputs, inner channel has {} outputs",
            v.input_size(),
            w.output_size()
        )));
    }
    let rows = w
        .rows
        .iter()
        .map(|wr| {
            (0..v.output_size())
                .map(|z| wr.iter().zip(&v.rows).map(|(&wy, vr)| wy * vr[z]).sum::<f64>().min(1.0))
                .collect()
        })
        .collect();
    Ok(Channel { outputs: v.outputs.clone(), rows, group: w.group.clone() })
}

/// Mutual information in bits between a uniform input and the output.
pub fn symmetric_capacity(w: &Channel) -> f64 {
    let m = w.input_size() as f64;
    let mut total = 0.0;
    for y in 0..w.output_size() {
        let col_sum: f64 = w.rows.iter().map(|r| r[y]).sum();
        if col_sum <= 0.0 {
            continue;
        }
        let py = col_sum / m;
        let inner: f64 = w
            .rows
            .iter()
            .map(|r| r[y] / col_sum)
            .filter(|&post| post > 0.0)
            .map(|post| post * (post * m).log2())
            .sum();
        total += py * inner;
    }
    total.clamp(0.0, m.log2())
}

/// The channel that outputs the coset of its input.
pub fn deterministic_hom(g: &Group, h: &Subgroup) -> Result<Channel> {
    let q = quotient(g, h)?;
    let outputs = (0..q.coset_count())
        .map(|c| {
            let parts: Vec<String> = q.coset_members(c).iter().map(|&x| g.format_element(x)).collect();
            format!("{{{}}}", parts.join(","))
        })
        .collect();
    let rows = (0..g.size())
        .map(|x| {
            let mut r = vec![0.0; q.coset_count()];
            r[q.coset_of(x)] = 1.0;
            r
        })
        .collect();
    Ok(Channel { outputs, rows, group: Some(g.clone()) })
}

/// `W[H](y|A) = (1/|A|) Σ_{x∈A} W(y|x)`: inputs are the cosets of `h`.
pub fn conditional_channel(w: &Channel, h: &Subgroup) -> Result<Channel> {
    let g = w.require_group()?;
    let q = quotient(g, h)?;
    let size = q.coset_size() as f64;
    let rows = (0..q.coset_count())
        .map(|c| {
            let members = q.coset_members(c);
            (0..w.output_size())
                .map(|y| members.iter().map(|&x| w.rows[x][y]).sum::<f64>() / size)
                .collect()
        })
        .collect();
    Ok(Channel { outputs: w.outputs.clone(), rows, group: None })
}

/// True iff `w = V ∘ w2` for some stochastic `V` with max-abs residual at
/// most `tol`. Solved as an LP minimizing the residual.
pub fn is_degraded(w: &Channel, w2: &Channel, tol: f64) -> Result<bool> {
    Ok(degradation_residual(w, w2)? <= tol)
}

/// Smallest achievable `max |W - V∘W2|` over stochastic `V`.
pub fn degradation_residual(w: &Channel, w2: &Channel) -> Result<f64> {
    if w.input_size() != w2.input_size() {
        return Err(PolarError::DimensionMismatch(format!(
            "input sizes {} and {} differ",
            w.input_size(),
            w2.input_size()
        )));
    }
    let (n, n2) = (w.output_size(), w2.output_size());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    // v[y2][y] = V(y | y2)
    let v: Vec<Vec<_>> = (0..n2).map(|_| (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect()).collect();
    for vrow in &v {
        let mut e = LinearExpr::empty();
        for &var in vrow {
            e.add(var, 1.0);
        }
        lp.add_constraint(e, ComparisonOp::Eq, 1.0);
    }
    for x in 0..w.input_size() {
        for y in 0..n {
            // W(y|x) - Σ V(y|y2) W2(y2|x) <= t  and  >= -t
            let mut upper = LinearExpr::empty();
            let mut lower = LinearExpr::empty();
            for (y2, vrow) in v.iter().enumerate() {
                let c = w2.rows[x][y2];
                if c != 0.0 {
                    upper.add(vrow[y], c);
                    lower.add(vrow[y], c);
                }
            }
            upper.add(t, 1.0);
            lower.add(t, -1.0);
            lp.add_constraint(upper, ComparisonOp::Ge, w.rows[x][y]);
            lp.add_constraint(lower, ComparisonOp::Le, w.rows[x][y]);
        }
    }
    let solution = lp.solve().map_err(|e| PolarError::Lp(e.to_string()))?;
    Ok(solution.objective().max(0.0))
}

/// One subgroup that δ-determines a channel, with both gaps in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub subgroup: Subgroup,
    pub gap_i: f64,
    pub gap_ih: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminednessResult {
    pub determined: bool,
    pub witnesses: Vec<Witness>,
    pub delta: f64,
}

impl DeterminednessResult {
    /// The best witness, if any.
    pub fn subgroup(&self) -> Option<&Subgroup> {
        self.witnesses.first().map(|w| &w.subgroup)
    }
}

/// Classifies from `I(W)` and, per subgroup, `I(W[H])`.
pub(crate) fn classify(
    g: &Group,
    subgroups: &[Subgroup],
    capacity: f64,
    mut conditional_capacity: impl FnMut(&Subgroup) -> f64,
    delta: f64,
) -> DeterminednessResult {
    let mut witnesses: Vec<Witness> = subgroups
        .iter()
        .filter_map(|h| {
            let target = (h.index_in(g) as f64).log2();
            let gap_i = (capacity - target).abs();
            if gap_i >= delta {
                return None;
            }
            let gap_ih = (conditional_capacity(h) - target).abs();
            (gap_ih < delta).then(|| Witness { subgroup: h.clone(), gap_i, gap_ih })
        })
        .collect();
    witnesses.sort_by(|a, b| a.gap_i.max(a.gap_ih).total_cmp(&b.gap_i.max(b.gap_ih)));
    DeterminednessResult { determined: !witnesses.is_empty(), witnesses, delta }
}

/// Every subgroup H with `|I(W) - log|G/H|| < δ` and `|I(W[H]) - log|G/H|| < δ`,
/// best first.
pub fn delta_determining_subgroup(w: &Channel, delta: f64) -> Result<DeterminednessResult> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(PolarError::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let g = w.require_group()?;
    let subgroups = enumerate_subgroups(g);
    let capacity = symmetric_capacity(w);
    let mut failure = None;
    let result = classify(
        g,
        &subgroups,
        capacity,
        |h| match conditional_channel(w, h) {
            Ok(c) => symmetric_capacity(&c),
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        delta,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

/// Built-in channels.
pub mod presets {
    use super::*;
    use crate::group::make_group;

    pub fn identity(g: &Group) -> Channel {
        let n = g.size();
        let rows = (0..n).map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect()).collect();
        let outputs = (0..n).map(|x| g.format_element(x)).collect();
        Channel::from_parts(outputs, rows, Some(g.clone()))
    }

    /// Single-output channel.
    pub fn useless(g: &Group) -> Channel {
        Channel::from_parts(vec!["*".into()], vec![vec![1.0]; g.size()], Some(g.clone()))
    }

    pub fn bsc(p: f64) -> Result<Channel> {
        if !(0.0..=1.0).contains(&p) {
            return Err(PolarError::InvalidArgument(format!("crossover {p} outside [0,1]")));
        }
        let z2 = make_group(&[2])?;
        Channel::bound(&z2, vec!["0".into(), "1".into()], vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn bec(eps: f64) -> Result<Channel> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(PolarError::InvalidArgument(format!("erasure probability {eps} outside [0,1]")));
        }
        let z2 = make_group(&[2])?;
        Channel::bound(
            &z2,
            vec!["0".into(), "1".into(), "e".into()],
            vec![vec![1.0 - eps, 0.0, eps], vec![0.0, 1.0 - eps, eps]],
        )
    }

    /// Z4 channel that always reveals `x mod {0,2}` and passes the
    /// within-coset bit `x / 2` through a BEC(`eps`).
    pub fn z4_multilevel(eps: f64) -> Result<Channel> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(PolarError::InvalidArgument(format!("erasure probability {eps} outside [0,1]")));
        }
        let z4 = make_group(&[4])?;
        // outputs: (coset, bit) for bit in {0,1,e}
        let mut outputs = Vec::new();
        for c in 0..2 {
            for b in ["0", "1", "e"] {
                outputs.push(format!("{c}{b}"));
            }
        }
        let rows = (0..4)
            .map(|x| {
                let (c, b) = (x % 2, x / 2);
                let mut r = vec![0.0; 6];
                r[3 * c + b] = 1.0 - eps;
                r[3 * c + 2] = eps;
                r
            })
            .collect();
        Channel::bound(&z4, outputs, rows)
    }

    /// Seeded random mixture of coset channels: with probability `w_H`
    /// the output reveals the coset `x + H`. Weights are uniform on the
    /// simplex over all subgroups.
    pub fn coset_mixture(g: &Group, seed: u64) -> Result<Channel> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let subgroups = enumerate_subgroups(g);
        let raw: Vec<f64> = subgroups.iter().map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = raw.iter().sum();
        let mut outputs = Vec::new();
        let mut rows = vec![Vec::new(); g.size()];
        for (h, r) in subgroups.iter().zip(&raw) {
            let q = quotient(g, h)?;
            let base = outputs.len();
            for &rep in q.representatives() {
                outputs.push(format!("{h}+{}", g.format_element(rep)));
            }
            for (x, row) in rows.iter_mut().enumerate() {
                row.resize(outputs.len(), 0.0);
                row[base + q.coset_of(x)] = r / total;
            }
        }
        Channel::bound(g, outputs, rows)
    }

    /// Builds a channel from a spec such as `bec:0.5`, `bsc:0.1`,
    /// `dh:Z4:{0,2}`, `z4-multilevel:0.5`, `random:7`, `random:7:Z6:4`,
    /// `coset-mix:3`, `identity:Z4` or `useless:Z2`.
    pub fn from_spec(spec: &str) -> Result<Channel> {
        let bad = |why: &str| PolarError::InvalidArgument(format!("preset '{spec}': {why}"));
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let args: Vec<&str> = if rest.is_empty() { Vec::new() } else { rest.splitn(3, ':').collect() };
        let number = |i: usize, what: &str| -> Result<f64> {
            args.get(i).ok_or_else(|| bad(&format!("missing {what}")))?.parse::<f64>().map_err(|_| bad(&format!("bad {what}")))
        };
        let seed = |i: usize| -> Result<u64> {
            args.get(i).ok_or_else(|| bad("missing seed"))?.parse::<u64>().map_err(|_| bad("bad seed"))
        };
        let group = |i: usize, default: &str| -> Result<Group> { args.get(i).copied().unwrap_or(default).parse() };
        match kind {
            "bec" => bec(number(0, "erasure probability")?),
            "bsc" => bsc(number(0, "crossover probability")?),
            "z4-multilevel" => z4_multilevel(number(0, "erasure probability")?),
            "dh" => {
                let g: Group = args.first().ok_or_else(|| bad("missing group"))?.parse()?;
                let members = args.get(1..).map(|a| a.join(":")).unwrap_or_default();
                deterministic_hom(&g, &Subgroup::parse(&g, &members)?)
            }
            "random" => {
                let outputs = match args.get(2) {
                    Some(o) => o.parse::<usize>().map_err(|_| bad("bad output count"))?,
                    None => 3,
                };
                random(&group(1, "Z4")?, outputs, seed(0)?)
            }
            "coset-mix" => coset_mixture(&group(1, "Z4")?, seed(0)?),
            "identity" => Ok(identity(&group(0, "Z2")?)),
            "useless" => Ok(useless(&group(0, "Z2")?)),
            _ => Err(bad("unknown preset kind")),
        }
    }

    /// Random channel with i.i.d. exponential-normalized rows (uniform on
    /// the simplex), seeded.
    pub fn random(g: &Group, outputs: usize, seed: u64) -> Result<Channel> {
        if outputs == 0 {
            return Err(PolarError::InvalidArgument("a channel needs at least one output".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..g.size())
            .map(|_| {
                let raw: Vec<f64> = (0..outputs).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let s: f64 = raw.iter().sum();
                let mut row: Vec<f64> = raw.iter().map(|v| v / s).collect();
                // absorb rounding so the row sums to 1 as tightly as possible
                let drift = 1.0 - row.iter().sum::<f64>();
                let last = row.len() - 1;
                row[last] = (row[last] + drift).max(0.0);
                row
            })
            .collect();
        Channel::bound_unlabelled(g, rows)
    }
}

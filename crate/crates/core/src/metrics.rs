//! Distances between Blackwell measures.
//!
//! The primary diagnostic is the exact optimal-transport cost between two
//! measures with total variation as the ground metric. It metrizes the
//! weak-* topology on balanced measures. A sampled lower bound on the
//! noisiness metric (sup of `|P_c(p, M1) - P_c(p, M2)|` over joint sources)
//! is provided alongside.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::blackwell::{pc_probability_measure, BlackwellMeasure, JointSource};
use crate::error::{PolarError, Result};
use crate::group::{enumerate_subgroups, quotient, Group, Subgroup};

/// Remaining supply/demand below this is treated as exhausted.
const MASS_EPS: f64 = 1e-14;
/// Reduced costs at or below this count as tight.
const TIGHT_EPS: f64 = 1e-13;

/// Heap key ordering finite distances totally.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// One non-zero entry of a transport plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shipment {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub shipments: Vec<Shipment>,
    pub cost: f64,
}

/// Min-cost transport between `supply` and `demand` with dense non-negative
/// `cost[i][j]`, by successive shortest paths with Dijkstra potentials.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<TransportPlan> {
    let (n1, n2) = (supply.len(), demand.len());
    if n1 == 0 || n2 == 0 || cost.len() != n1 || cost.iter().any(|r| r.len() != n2) {
        return Err(PolarError::DimensionMismatch("transport cost matrix does not match marginals".into()));
    }
    let nodes = n1 + n2;
    let mut left = supply.to_vec();
    let mut need = demand.to_vec();
    let mut flow = vec![vec![0.0; n2]; n1];
    let mut pot = vec![0.0; nodes];
    let max_rounds = 4 * nodes * nodes + 16;

    for _ in 0..max_rounds {
        if left.iter().all(|&s| s <= MASS_EPS) || need.iter().all(|&d| d <= MASS_EPS) {
            let mut shipments = Vec::new();
            let mut total = 0.0;
            for (i, row) in flow.iter().enumerate() {
                for (j, &f) in row.iter().enumerate() {
                    if f > 0.0 {
                        shipments.push(Shipment { source: i, target: j, mass: f });
                        total += f * cost[i][j];
                    }
                }
            }
            return Ok(TransportPlan { shipments, cost: total });
        }

        // Dijkstra over the residual graph from every source with supply.
        let mut dist = vec![f64::INFINITY; nodes];
        let mut parent = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        for i in 0..n1 {
            if left[i] > MASS_EPS {
                dist[i] = 0.0;
            }
        }
        let mut heap: BinaryHeap<Reverse<(Key, usize)>> =
            (0..n1).filter(|&i| left[i] > MASS_EPS).map(|i| Reverse((Key(0.0), i))).collect();
        let mut target = None;
        while let Some(Reverse((Key(d), v))) = heap.pop() {
            if done[v] || d > dist[v] {
                continue;
            }
            done[v] = true;
            if v >= n1 && need[v - n1] > MASS_EPS {
                target = Some(v);
                break;
            }
            let mut relax = |u: usize, rc: f64, heap: &mut BinaryHeap<Reverse<(Key, usize)>>| {
                if !done[u] && d + rc < dist[u] {
                    dist[u] = d + rc;
                    parent[u] = v;
                    heap.push(Reverse((Key(dist[u]), u)));
                }
            };
            if v < n1 {
                for (j, &c) in cost[v].iter().enumerate() {
                    let u = n1 + j;
                    relax(u, (c + pot[v] - pot[u]).max(0.0), &mut heap);
                }
            } else {
                let j = v - n1;
                for i in 0..n1 {
                    if flow[i][j] > 0.0 {
                        relax(i, (-cost[i][j] + pot[v] - pot[i]).max(0.0), &mut heap);
                    }
                }
            }
        }
        let Some(t) = target else {
            return Err(PolarError::Lp("transport residual graph disconnected".into()));
        };
        let dt = dist[t];
        for v in 0..nodes {
            pot[v] += dist[v].min(dt);
        }

        // bottleneck along the path
        let mut amount = need[t - n1];
        let mut v = t;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u >= n1 {
                amount = amount.min(flow[v][u - n1]);
            }
            v = u;
        }
        amount = amount.min(left[v]);
        let start = v;

        let mut v = t;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u < n1 {
                flow[u][v - n1] += amount;
            } else {
                let f = &mut flow[v][u - n1];
                *f -= amount;
                if *f < MASS_EPS * 1e-3 {
                    *f = 0.0;
                }
            }
            v = u;
        }
        left[start] -= amount;
        need[t - n1] -= amount;

        // saturate direct tight edges; the potentials stay feasible
        for i in 0..n1 {
            for j in 0..n2 {
                if left[i] <= MASS_EPS {
                    break;
                }
                if need[j] > MASS_EPS && cost[i][j] + pot[i] - pot[n1 + j] <= TIGHT_EPS {
                    let amount = left[i].min(need[j]);
                    flow[i][j] += amount;
                    left[i] -= amount;
                    need[j] -= amount;
                }
            }
        }
    }
    Err(PolarError::Lp("transport solver did not converge".into()))
}

/// Orders a pair of measures so that distance computations are exactly
/// symmetric in their arguments.
fn canonical_order<'a>(a: &'a BlackwellMeasure, b: &'a BlackwellMeasure) -> (&'a BlackwellMeasure, &'a BlackwellMeasure, bool) {
    let key = |m: &BlackwellMeasure| -> Vec<f64> {
        m.atoms().iter().flat_map(|at| std::iter::once(at.w).chain(at.q.probs().iter().copied())).collect()
    };
    let (ka, kb) = (key(a), key(b));
    let ord = ka.len().cmp(&kb.len()).then_with(|| {
        ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    });
    if ord == Ordering::Greater {
        (b, a, true)
    } else {
        (a, b, false)
    }
}

fn check_groups(a: &BlackwellMeasure, b: &BlackwellMeasure) -> Result<()> {
    if a.group() != b.group() {
        return Err(PolarError::GroupMismatch(a.group().to_string(), b.group().to_string()));
    }
    Ok(())
}

/// Optimal plan moving `m1` onto `m2`; ground cost is the total variation
/// between posteriors.
pub fn wasserstein_plan(m1: &BlackwellMeasure, m2: &BlackwellMeasure) -> Result<TransportPlan> {
    check_groups(m1, m2)?;
    let (a, b, swapped) = canonical_order(m1, m2);
    let cost: Vec<Vec<f64>> = a
        .atoms()
        .iter()
        .map(|x| b.atoms().iter().map(|y| x.q.total_variation(&y.q)).collect())
        .collect();
    let supply: Vec<f64> = a.atoms().iter().map(|x| x.w).collect();
    let demand: Vec<f64> = b.atoms().iter().map(|y| y.w).collect();
    let mut plan = solve_transport(&supply, &demand, &cost)?;
    if swapped {
        for s in &mut plan.shipments {
            std::mem::swap(&mut s.source, &mut s.target);
        }
        plan.shipments.sort_by_key(|s| (s.source, s.target));
    }
    Ok(plan)
}

/// Exact transport distance; 0 when the canonical forms coincide.
pub fn wasserstein(m1: &BlackwellMeasure, m2: &BlackwellMeasure) -> Result<f64> {
    check_groups(m1, m2)?;
    if m1.same_class(m2) {
        return Ok(0.0);
    }
    Ok(wasserstein_plan(m1, m2)?.cost.max(0.0))
}

/// Nearest coset-channel measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolDistance {
    pub distance: f64,
    pub subgroup: Subgroup,
}

/// `min_H W(m, MP_{D_H})` over all subgroups, ties going to the subgroup
/// listed first.
pub fn distance_to_pol(m: &BlackwellMeasure, g: &Group) -> Result<PolDistance> {
    distance_to_pol_among(m, g, &enumerate_subgroups(g))
}

pub fn distance_to_pol_among(m: &BlackwellMeasure, g: &Group, subgroups: &[Subgroup]) -> Result<PolDistance> {
    if m.group() != g {
        return Err(PolarError::GroupMismatch(m.group().to_string(), g.to_string()));
    }
    let mut best: Option<PolDistance> = None;
    for h in subgroups {
        let d = wasserstein(m, &BlackwellMeasure::of_subgroup(g, h)?)?;
        if best.as_ref().is_none_or(|b| d < b.distance) {
            best = Some(PolDistance { distance: d, subgroup: h.clone() });
        }
    }
    best.ok_or_else(|| PolarError::InvalidArgument("no subgroups to compare against".into()))
}

/// Result of the sampled noisiness lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcBound {
    pub value: f64,
    /// Source achieving `value` (absent when the measures are equivalent).
    pub witness: Option<JointSource>,
    /// Running maximum after the structured sources and after each trial.
    pub trace: Vec<f64>,
}

/// Structured joint sources: coset-guessing sources for every subgroup with
/// `|G/H| <= m_max` (the trivial subgroup gives the identity source), and
/// for each of the heaviest atoms of either measure a binary source
/// contrasting that posterior with the uniform one.
fn structured_sources(m1: &BlackwellMeasure, m2: &BlackwellMeasure, m_max: usize) -> Vec<JointSource> {
    let g = m1.group();
    let n = g.size();
    let mut out = Vec::new();
    for h in enumerate_subgroups(g) {
        let q = quotient(g, &h).expect("enumerated subgroups are valid");
        let k = q.coset_count();
        if k > m_max {
            continue;
        }
        let probs = (0..k)
            .map(|c| (0..n).map(|x| if q.coset_of(x) == c { 1.0 / n as f64 } else { 0.0 }).collect())
            .collect();
        out.push(JointSource::new(probs).expect("coset source is a distribution"));
    }
    if m_max >= 2 {
        for m in [m1, m2] {
            let mut heaviest: Vec<usize> = (0..m.len()).collect();
            heaviest.sort_by(|&a, &b| m.atoms()[b].w.total_cmp(&m.atoms()[a].w).then(a.cmp(&b)));
            for &i in heaviest.iter().take(16) {
                let qv = m.atoms()[i].q.probs();
                let probs = vec![qv.iter().map(|v| v / 2.0).collect(), vec![0.5 / n as f64; n]];
                if let Ok(src) = JointSource::new(probs) {
                    out.push(src);
                }
            }
        }
    }
    out
}

fn random_source(rng: &mut ChaCha8Rng, n: usize, m_max: usize) -> JointSource {
    let m = rng.random_range(1..=m_max);
    let raw: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect())
        .collect();
    let total: f64 = raw.iter().flatten().sum();
    let mut probs: Vec<Vec<f64>> = raw.into_iter().map(|r| r.into_iter().map(|v| v / total).collect()).collect();
    let drift = 1.0 - probs.iter().flatten().sum::<f64>();
    probs[0][0] = (probs[0][0] + drift).max(0.0);
    JointSource::new(probs).unwrap_or_else(|_| JointSource::identity(n))
}

/// `max |P_c(p, m1) - P_c(p, m2)|` over structured sources and `trials`
/// seeded Dirichlet(1) sources with `m <= m_max`. Always a lower bound on
/// the noisiness distance; exactly 0 for equivalent measures.
pub fn pc_gap_lower_bound(m1: &BlackwellMeasure, m2: &BlackwellMeasure, trials: usize, seed: u64, m_max: usize) -> Result<PcBound> {
    check_groups(m1, m2)?;
    if trials == 0 || m_max == 0 {
        return Err(PolarError::InvalidArgument("trials and m_max must be at least 1".into()));
    }
    if m1.same_class(m2) {
        return Ok(PcBound { value: 0.0, witness: None, trace: vec![0.0; trials + 1] });
    }
    let mut best = 0.0;
    let mut witness = None;
    let mut consider = |src: JointSource, best: &mut f64| -> Result<()> {
        let gap = (pc_probability_measure(&src, m1)? - pc_probability_measure(&src, m2)?).abs();
        if gap > *best {
            *best = gap;
            witness = Some(src);
        }
        Ok(())
    };
    for src in structured_sources(m1, m2, m_max) {
        consider(src, &mut best)?;
    }
    let mut trace = vec![best];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        consider(random_source(&mut rng, m1.group().size(), m_max), &mut best)?;
        trace.push(best);
    }
    Ok(PcBound { value: best, witness, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackwell::blackwell_measure;
    use crate::channel::presets::*;
    use crate::dist::Distribution;
    use crate::group::make_group;

    #[test]
    fn transport_basics() {
        let plan = solve_transport(&[0.5, 0.5], &[1.0], &[vec![0.5], vec![0.5]]).unwrap();
        assert!((plan.cost - 0.5).abs() < 1e-15);
        // crossing plan must be avoided
        let plan = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(plan.cost.abs() < 1e-15);
        assert!(solve_transport(&[1.0], &[1.0], &[vec![]]).is_err());
    }

    #[test]
    fn transport_needs_rerouting() {
        // greedy cheapest-first is suboptimal here; the optimum is 1.0 + 1.0
        let cost = vec![vec![1.0, 2.0], vec![1.0, 100.0]];
        let plan = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!((plan.cost - 0.5 * 2.0 - 0.5 * 1.0).abs() < 1e-12, "{}", plan.cost);
    }

    #[test]
    fn wasserstein_examples() {
        let z2 = make_group(&[2]).unwrap();
        let m = blackwell_measure(&bsc(0.2).unwrap()).unwrap();
        assert_eq!(wasserstein(&m, &m).unwrap(), 0.0);
        let p = crate::blackwell::Atom { w: 1.0, q: Distribution::new(vec![0.5, 0.5]).unwrap() };
        let id = blackwell_measure(&identity(&z2)).unwrap();
        let useless_m = BlackwellMeasure::from_atoms(&z2, vec![p], 1e-9).unwrap();
        assert!((wasserstein(&id, &useless_m).unwrap() - 0.5).abs() < 1e-15);
        let z3 = make_group(&[3]).unwrap();
        assert!(wasserstein(&id, &BlackwellMeasure::useless(&z3)).is_err());
    }

    #[test]
    fn dirac_distance_is_total_variation() {
        let z3 = make_group(&[3]).unwrap();
        let p = Distribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let q = Distribution::new(vec![0.6, 0.1, 0.3]).unwrap();
        let a = BlackwellMeasure::from_atoms(&z3, vec![crate::blackwell::Atom { w: 1.0, q: p.clone() }], 1e-9).unwrap();
        let b = BlackwellMeasure::from_atoms(&z3, vec![crate::blackwell::Atom { w: 1.0, q: q.clone() }], 1e-9).unwrap();
        assert!((wasserstein(&a, &b).unwrap() - p.total_variation(&q)).abs() < 1e-15);
    }

    #[test]
    fn pol_distances() {
        let z4 = make_group(&[4]).unwrap();
        for h in enumerate_subgroups(&z4) {
            let d = distance_to_pol(&BlackwellMeasure::of_subgroup(&z4, &h).unwrap(), &z4).unwrap();
            assert_eq!(d.distance, 0.0);
            assert_eq!(d.subgroup, h);
        }
        let d = distance_to_pol(&BlackwellMeasure::useless(&z4), &z4).unwrap();
        assert_eq!(d.subgroup, Subgroup::full(&z4));

        // BSC(0.1): each posterior sits at TV 0.1 from a point mass and 0.4
        // from uniform
        let z2 = make_group(&[2]).unwrap();
        let d = distance_to_pol(&blackwell_measure(&bsc(0.1).unwrap()).unwrap(), &z2).unwrap();
        assert!((d.distance - 0.1).abs() < 1e-12);
        assert_eq!(d.subgroup, Subgroup::trivial(&z2));
    }

    #[test]
    fn pc_bound_examples() {
        let z2 = make_group(&[2]).unwrap();
        let id = blackwell_measure(&identity(&z2)).unwrap();
        let u = BlackwellMeasure::useless(&z2);
        let b = pc_gap_lower_bound(&id, &u, 10, 1, 4).unwrap();
        assert!(b.value >= 0.5 - 1e-9);
        assert_eq!(b.witness.unwrap(), JointSource::identity(2));
        assert!(b.trace.windows(2).all(|w| w[0] <= w[1]));

        let m = blackwell_measure(&bsc(0.3).unwrap()).unwrap();
        let split = blackwell_measure(&bsc(0.3).unwrap().split_output(0, 0.5).unwrap()).unwrap();
        assert_eq!(pc_gap_lower_bound(&m, &split, 20, 3, 3).unwrap().value, 0.0);
        assert!(pc_gap_lower_bound(&m, &split, 0, 3, 3).is_err());
    }
}

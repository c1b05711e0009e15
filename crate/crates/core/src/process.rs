//! The polarization process: exhaustive and sampled path evaluation,
//! per-level traces and report assembly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blackwell::{blackwell_measure_with_tau, capacity_unchecked, conditional_capacity_of_measure, BlackwellMeasure};
use crate::channel::{classify, symmetric_capacity, Channel, DeterminednessResult};
use crate::error::{PolarError, Result};
use crate::group::{enumerate_subgroups, Group, Subgroup};
use crate::metrics::distance_to_pol_among;
use crate::polar::{
    capacity_gap_integral, minus_transform, plus_transform, transform_measure, PolarPath, Sign, TransformOptions,
    DEFAULT_ATOM_BUDGET, DEFAULT_MAX_DEPTH,
};

pub const REPORT_SCHEMA: &str = "polarlab-report/1";
pub const DEFAULT_DELTA: f64 = 0.1;
/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "POLARLAB_THREADS";
const CAPACITY_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Sample,
}

/// Parameters of one experiment, echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub depth: usize,
    pub delta: f64,
    pub tau: f64,
    pub atom_budget: usize,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn exhaustive(depth: usize, delta: f64, tau: f64) -> RunConfig {
        RunConfig { depth, delta, tau, atom_budget: DEFAULT_ATOM_BUDGET, mode: Mode::Exhaustive, samples: None, seed: None }
    }

    pub fn sampled(depth: usize, samples: usize, seed: u64, delta: f64, tau: f64) -> RunConfig {
        RunConfig {
            depth,
            delta,
            tau,
            atom_budget: DEFAULT_ATOM_BUDGET,
            mode: Mode::Sample,
            samples: Some(samples),
            seed: Some(seed),
        }
    }

    pub fn with_budget(mut self, atom_budget: usize) -> RunConfig {
        self.atom_budget = atom_budget;
        self
    }

    fn options(&self) -> TransformOptions {
        TransformOptions { tau: self.tau, atom_budget: self.atom_budget }
    }

    fn validate(&self) -> Result<()> {
        if self.depth > DEFAULT_MAX_DEPTH {
            return Err(PolarError::PathTooDeep { depth: self.depth, max: DEFAULT_MAX_DEPTH });
        }
        if self.delta.is_nan() || self.delta <= 0.0 {
            return Err(PolarError::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.tau > 0.0 && self.tau <= 1e-3) {
            return Err(PolarError::InvalidArgument(format!("merge tolerance {} outside (0, 1e-3]", self.tau)));
        }
        if self.mode == Mode::Sample && self.samples.unwrap_or(0) == 0 {
            return Err(PolarError::InvalidArgument("sample mode needs a sample count of at least 1".into()));
        }
        Ok(())
    }
}

/// Everything measured on one synthetic channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path: PolarPath,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub determinedness: Option<DeterminednessResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_to_pol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nearest_subgroup: Option<Subgroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PathRecord {
    fn failed(path: PolarPath, sample: Option<usize>, err: &PolarError) -> PathRecord {
        PathRecord {
            path,
            sample,
            atoms: None,
            capacity: None,
            capacity_gap: None,
            determinedness: None,
            distance_to_pol: None,
            nearest_subgroup: None,
            error: Some(err.to_string()),
        }
    }

    pub fn is_determined(&self) -> bool {
        self.determinedness.as_ref().is_some_and(|d| d.determined)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupMass {
    pub subgroup: Subgroup,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityBin {
    pub lo: f64,
    pub hi: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub records: usize,
    pub evaluated: usize,
    pub failed: usize,
    /// Determined records over evaluated records.
    pub fraction_determined: f64,
    pub mean_capacity: f64,
    /// Best-witness subgroup of each determined record; sums to
    /// `fraction_determined`.
    pub subgroup_histogram: Vec<SubgroupMass>,
    pub capacity_histogram: Vec<CapacityBin>,
    /// Median capacity gap over the channels at each level `0..=depth`.
    pub median_gap_by_level: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    pub schema: String,
    pub group: Group,
    pub config: RunConfig,
    pub aggregates: Aggregates,
    pub records: Vec<PathRecord>,
}

impl PolarizationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<PolarizationReport> {
        let r: PolarizationReport =
            serde_json::from_str(text).map_err(|e| PolarError::InvalidArgument(format!("malformed report: {e}")))?;
        if r.schema != REPORT_SCHEMA {
            return Err(PolarError::InvalidArgument(format!("unsupported report schema {:?}", r.schema)));
        }
        Ok(r)
    }

    /// Aggregate table as `kind,key,value` rows.
    pub fn to_csv(&self) -> String {
        let a = &self.aggregates;
        let mut out = String::from("kind,key,value\n");
        let mut row = |kind: &str, key: &str, value: String| {
            out.push_str(&format!("{kind},\"{key}\",{value}\n"));
        };
        row("summary", "schema", self.schema.clone());
        row("summary", "depth", self.config.depth.to_string());
        row("summary", "delta", self.config.delta.to_string());
        row("summary", "records", a.records.to_string());
        row("summary", "evaluated", a.evaluated.to_string());
        row("summary", "failed", a.failed.to_string());
        row("summary", "fraction_determined", a.fraction_determined.to_string());
        row("summary", "mean_capacity", a.mean_capacity.to_string());
        for s in &a.subgroup_histogram {
            row("subgroup", &s.subgroup.to_string(), s.fraction.to_string());
        }
        for b in &a.capacity_histogram {
            row("capacity_bin", &format!("{}-{}", b.lo, b.hi), b.fraction.to_string());
        }
        for (level, m) in a.median_gap_by_level.iter().enumerate() {
            row("median_gap", &level.to_string(), m.to_string());
        }
        out
    }

    pub fn record(&self, path: &PolarPath) -> Option<&PathRecord> {
        self.records.iter().find(|r| &r.path == path)
    }
}

/// Runs `f` on a pool with `threads` workers (default: [`THREADS_ENV`] or
/// the rayon default).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let threads = threads.or_else(threads_from_env);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}

/// Capacity, gap, determinedness and POL distance of one measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub atoms: usize,
    pub capacity: f64,
    pub capacity_gap: f64,
    pub determinedness: DeterminednessResult,
    pub distance_to_pol: f64,
    pub nearest_subgroup: Subgroup,
}

pub fn evaluate_measure(m: &BlackwellMeasure, subgroups: &[Subgroup], delta: f64) -> Result<Evaluation> {
    m.check_balanced()?;
    let g = m.group();
    let capacity = capacity_unchecked(m);
    let capacity_gap = capacity_gap_integral(m)?;
    let mut failure = None;
    let determinedness = classify(
        g,
        subgroups,
        capacity,
        |h| {
            conditional_capacity_of_measure(m, h).unwrap_or_else(|e| {
                failure = Some(e);
                f64::NAN
            })
        },
        delta,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let pol = distance_to_pol_among(m, g, subgroups)?;
    Ok(Evaluation {
        atoms: m.len(),
        capacity,
        capacity_gap,
        determinedness,
        distance_to_pol: pol.distance,
        nearest_subgroup: pol.subgroup,
    })
}

fn record_from(path: PolarPath, sample: Option<usize>, e: Evaluation) -> PathRecord {
    PathRecord {
        path,
        sample,
        atoms: Some(e.atoms),
        capacity: Some(e.capacity),
        capacity_gap: Some(e.capacity_gap),
        determinedness: Some(e.determinedness),
        distance_to_pol: Some(e.distance_to_pol),
        nearest_subgroup: Some(e.nearest_subgroup),
        error: None,
    }
}

struct Ctx<'a> {
    subgroups: &'a [Subgroup],
    delta: f64,
    opts: TransformOptions,
    depth: usize,
}

/// Output of a subtree: leaf records in path order and, per level below
/// the subtree root, the capacity gaps of the nodes there.
struct Subtree {
    leaves: Vec<PathRecord>,
    level_gaps: Vec<Vec<f64>>,
}

fn failed_subtree(path: &PolarPath, remaining: usize, err: &PolarError) -> Subtree {
    let leaves = (0..1u64 << remaining)
        .map(|i| {
            let mut p = path.clone();
            for s in PolarPath::from_index(i, remaining).signs() {
                p.push(*s);
            }
            PathRecord::failed(p, None, err)
        })
        .collect();
    Subtree { leaves, level_gaps: vec![Vec::new(); remaining + 1] }
}

fn explore(m: &BlackwellMeasure, path: PolarPath, ctx: &Ctx<'_>) -> Subtree {
    let remaining = ctx.depth - path.depth();
    if remaining == 0 {
        return match evaluate_measure(m, ctx.subgroups, ctx.delta) {
            Ok(e) => Subtree { level_gaps: vec![vec![e.capacity_gap]], leaves: vec![record_from(path, None, e)] },
            Err(err) => failed_subtree(&path, 0, &err),
        };
    }
    let gap = match capacity_gap_integral(m) {
        Ok(g) => g,
        Err(err) => return failed_subtree(&path, remaining, &err),
    };
    let branch = |s: Sign| -> Subtree {
        let child = path.child(s);
        match transform_measure(m, s, ctx.opts) {
            Ok(cm) => explore(&cm, child, ctx),
            Err(err) => failed_subtree(&child, remaining - 1, &err),
        }
    };
    let (minus, plus) = rayon::join(|| branch(Sign::Minus), || branch(Sign::Plus));
    let mut level_gaps = vec![vec![gap]];
    for (a, b) in minus.level_gaps.into_iter().zip(plus.level_gaps) {
        let mut level = a;
        level.extend(b);
        level_gaps.push(level);
    }
    let mut leaves = minus.leaves;
    leaves.extend(plus.leaves);
    Subtree { leaves, level_gaps }
}

fn initial_measure(w: &Channel, tau: f64) -> Result<BlackwellMeasure> {
    let m = blackwell_measure_with_tau(w, tau)?;
    m.check_balanced()?;
    Ok(m)
}

/// Evaluates every path of length `depth` by depth-first shared-prefix
/// recursion on measures.
pub fn enumerate_paths(w: &Channel, config: &RunConfig) -> Result<PolarizationReport> {
    config.validate()?;
    if config.mode != Mode::Exhaustive {
        return Err(PolarError::InvalidArgument("enumerate_paths needs an exhaustive config".into()));
    }
    let g = w.require_group()?.clone();
    let subgroups = enumerate_subgroups(&g);
    let m = initial_measure(w, config.tau)?;
    let ctx = Ctx { subgroups: &subgroups, delta: config.delta, opts: config.options(), depth: config.depth };
    let tree = explore(&m, PolarPath::empty(), &ctx);
    let medians = tree.level_gaps.iter().map(|v| median(v)).collect();
    Ok(assemble(g, config.clone(), tree.leaves, &subgroups, medians))
}

/// Path for sample `index`: an independent ChaCha stream per index so the
/// result does not depend on evaluation order.
pub fn sampled_path(seed: u64, index: usize, depth: usize) -> PolarPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    PolarPath::new((0..depth).map(|_| if rng.random::<bool>() { Sign::Plus } else { Sign::Minus }).collect())
}

/// Evaluates `samples` i.i.d. uniform paths.
pub fn sample_paths(w: &Channel, config: &RunConfig) -> Result<PolarizationReport> {
    use rayon::prelude::*;

    config.validate()?;
    let (Some(samples), Some(seed)) = (config.samples, config.seed) else {
        return Err(PolarError::InvalidArgument("sample mode needs samples and a seed".into()));
    };
    let g = w.require_group()?.clone();
    let subgroups = enumerate_subgroups(&g);
    let m = initial_measure(w, config.tau)?;
    let opts = config.options();
    let results: Vec<(PathRecord, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let path = sampled_path(seed, k, config.depth);
            let mut gaps = Vec::with_capacity(config.depth + 1);
            let mut current = m.clone();
            for &s in path.signs() {
                match capacity_gap_integral(&current).and_then(|gap| {
                    gaps.push(gap);
                    transform_measure(&current, s, opts)
                }) {
                    Ok(next) => current = next,
                    Err(err) => return (PathRecord::failed(path, Some(k), &err), gaps),
                }
            }
            match evaluate_measure(&current, &subgroups, config.delta) {
                Ok(e) => {
                    gaps.push(e.capacity_gap);
                    (record_from(path, Some(k), e), gaps)
                }
                Err(err) => (PathRecord::failed(path, Some(k), &err), gaps),
            }
        })
        .collect();
    let mut level_gaps = vec![Vec::new(); config.depth + 1];
    for (_, gaps) in &results {
        for (level, &gap) in gaps.iter().enumerate() {
            level_gaps[level].push(gap);
        }
    }
    let mut records: Vec<PathRecord> = results.into_iter().map(|(r, _)| r).collect();
    records.sort_by(|a, b| a.path.cmp(&b.path).then(a.sample.cmp(&b.sample)));
    let medians = level_gaps.iter().map(|v| median(v)).collect();
    Ok(assemble(g, config.clone(), records, &subgroups, medians))
}

/// Dispatches on the configured mode.
pub fn run(w: &Channel, config: &RunConfig) -> Result<PolarizationReport> {
    match config.mode {
        Mode::Exhaustive => enumerate_paths(w, config),
        Mode::Sample => sample_paths(w, config),
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn assemble(g: Group, config: RunConfig, records: Vec<PathRecord>, subgroups: &[Subgroup], medians: Vec<f64>) -> PolarizationReport {
    let evaluated: Vec<&PathRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let n_eval = evaluated.len();
    let denom = n_eval.max(1) as f64;
    let determined = evaluated.iter().filter(|r| r.is_determined()).count();
    let subgroup_histogram = subgroups
        .iter()
        .filter_map(|h| {
            let count = evaluated
                .iter()
                .filter(|r| r.determinedness.as_ref().and_then(|d| d.subgroup()) == Some(h))
                .count();
            (count > 0).then(|| SubgroupMass { subgroup: h.clone(), fraction: count as f64 / denom })
        })
        .collect();
    let top = (g.size() as f64).log2();
    let width = top / CAPACITY_BINS as f64;
    let mut bins = [0usize; CAPACITY_BINS];
    for r in &evaluated {
        let c = r.capacity.unwrap_or(0.0);
        let idx = ((c / width).floor() as usize).min(CAPACITY_BINS - 1);
        bins[idx] += 1;
    }
    let capacity_histogram = bins
        .iter()
        .enumerate()
        .map(|(i, &c)| CapacityBin { lo: top * i as f64 / CAPACITY_BINS as f64, hi: top * (i + 1) as f64 / CAPACITY_BINS as f64, fraction: c as f64 / denom })
        .collect();
    let mean_capacity = evaluated.iter().map(|r| r.capacity.unwrap_or(0.0)).sum::<f64>() / denom;
    let aggregates = Aggregates {
        records: records.len(),
        evaluated: n_eval,
        failed: records.len() - n_eval,
        fraction_determined: determined as f64 / denom,
        mean_capacity,
        subgroup_histogram,
        capacity_histogram,
        median_gap_by_level: medians,
    };
    PolarizationReport { schema: REPORT_SCHEMA.to_string(), group: g, config, aggregates, records }
}

/// Per-level diagnostics along one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLevel {
    pub level: usize,
    pub prefix: PolarPath,
    #[serde(flatten)]
    pub evaluation: Evaluation,
}

pub fn convergence_trace(w: &Channel, path: &PolarPath, delta: f64, opts: TransformOptions) -> Result<Vec<TraceLevel>> {
    let g = w.require_group()?;
    let subgroups = enumerate_subgroups(g);
    let mut current = initial_measure(w, opts.tau)?;
    let mut out = Vec::with_capacity(path.depth() + 1);
    for level in 0..=path.depth() {
        out.push(TraceLevel {
            level,
            prefix: path.prefix(level),
            evaluation: evaluate_measure(&current, &subgroups, delta)?,
        });
        if level < path.depth() {
            current = transform_measure(&current, path.signs()[level], opts)?;
        }
    }
    Ok(out)
}

/// One-step martingale diagnostics of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleResidual {
    pub capacity: f64,
    pub minus_capacity: f64,
    pub plus_capacity: f64,
    /// `|I(W⁻) + I(W⁺) - 2 I(W)|`.
    pub residual: f64,
    /// `|I(W⁻) - I(W)| - |I(W⁺) - I(W)|`.
    pub asymmetry: f64,
}

/// Computed on the raw channel transforms, without merging.
pub fn martingale_residual(w: &Channel) -> Result<MartingaleResidual> {
    let capacity = symmetric_capacity(w);
    let minus_capacity = symmetric_capacity(&minus_transform(w)?);
    let plus_capacity = symmetric_capacity(&plus_transform(w)?);
    Ok(MartingaleResidual {
        capacity,
        minus_capacity,
        plus_capacity,
        residual: (minus_capacity + plus_capacity - 2.0 * capacity).abs(),
        asymmetry: (minus_capacity - capacity).abs() - (plus_capacity - capacity).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::deterministic_hom;
    use crate::channel::presets::*;
    use crate::group::make_group;

    #[test]
    fn depth_zero_has_one_record() {
        let r = enumerate_paths(&bsc(0.1).unwrap(), &RunConfig::exhaustive(0, 0.1, 1e-9)).unwrap();
        assert_eq!(r.records.len(), 1);
        assert_eq!(r.records[0].path.depth(), 0);
        assert!(!r.records[0].is_determined());
    }

    #[test]
    fn dh_is_a_fixed_point() {
        let z4 = make_group(&[4]).unwrap();
        let h = Subgroup::from_members(&z4, &[0, 2]).unwrap();
        let r = enumerate_paths(&deterministic_hom(&z4, &h).unwrap(), &RunConfig::exhaustive(4, 0.01, 1e-9)).unwrap();
        assert_eq!(r.records.len(), 16);
        assert_eq!(r.aggregates.fraction_determined, 1.0);
        assert_eq!(r.aggregates.subgroup_histogram, vec![SubgroupMass { subgroup: h.clone(), fraction: 1.0 }]);
        assert!(r.records.iter().all(|rec| rec.nearest_subgroup.as_ref() == Some(&h) && rec.distance_to_pol == Some(0.0)));
    }

    #[test]
    fn bec_capacities_follow_scalar_recursion() {
        let r = enumerate_paths(&bec(0.5).unwrap(), &RunConfig::exhaustive(5, 0.1, 1e-9)).unwrap();
        for rec in &r.records {
            let mut z: f64 = 0.5;
            for s in rec.path.signs() {
                z = match s {
                    Sign::Minus => 2.0 * z - z * z,
                    Sign::Plus => z * z,
                };
            }
            assert!((rec.capacity.unwrap() - (1.0 - z)).abs() < 1e-12, "{}", rec.path);
        }
        assert!((r.aggregates.mean_capacity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn histogram_sums_to_fraction() {
        let z4 = make_group(&[4]).unwrap();
        let r = enumerate_paths(&z4_multilevel(0.4).unwrap(), &RunConfig::exhaustive(6, 0.1, 1e-9)).unwrap();
        let total: f64 = r.aggregates.subgroup_histogram.iter().map(|s| s.fraction).sum();
        assert!((total - r.aggregates.fraction_determined).abs() < 1e-12);
        let _ = z4;
    }

    #[test]
    fn sampled_reports_are_reproducible() {
        let cfg = RunConfig::sampled(6, 40, 9, 0.1, 1e-9);
        let a = sample_paths(&bec(0.5).unwrap(), &cfg).unwrap().to_json();
        let b = sample_paths(&bec(0.5).unwrap(), &cfg).unwrap().to_json();
        assert_eq!(a, b);
        assert_eq!(sampled_path(9, 3, 6), sampled_path(9, 3, 6));
        assert_ne!((0..8).map(|k| sampled_path(9, k, 6)).collect::<std::collections::HashSet<_>>().len(), 1);
    }

    #[test]
    fn sampled_records_match_exhaustive_ones() {
        let w = z4_multilevel(0.5).unwrap();
        let full = enumerate_paths(&w, &RunConfig::exhaustive(4, 0.1, 1e-9)).unwrap();
        let sampled = sample_paths(&w, &RunConfig::sampled(4, 30, 2, 0.1, 1e-9)).unwrap();
        for rec in &sampled.records {
            let mut expected = full.record(&rec.path).unwrap().clone();
            expected.sample = rec.sample;
            assert_eq!(rec, &expected);
        }
    }

    #[test]
    fn budget_failures_are_recorded() {
        let z4 = make_group(&[4]).unwrap();
        let w = random(&z4, 3, 1).unwrap();
        let cfg = RunConfig::exhaustive(2, 0.1, 1e-9).with_budget(50);
        let r = enumerate_paths(&w, &cfg).unwrap();
        assert_eq!(r.records.len(), 4);
        assert!(r.aggregates.failed > 0);
        assert!(r.aggregates.evaluated > 0);
        assert!(r.records.iter().filter(|x| x.error.is_some()).all(|x| x.error.as_ref().unwrap().contains("budget")));
    }

    #[test]
    fn config_validation() {
        let w = bec(0.5).unwrap();
        assert!(enumerate_paths(&w, &RunConfig::exhaustive(2, 0.0, 1e-9)).is_err());
        assert!(enumerate_paths(&w, &RunConfig::exhaustive(2, 0.1, 0.01)).is_err());
        assert!(enumerate_paths(&w, &RunConfig::exhaustive(17, 0.1, 1e-9)).is_err());
        assert!(sample_paths(&w, &RunConfig::sampled(2, 0, 1, 0.1, 1e-9)).is_err());
    }

    #[test]
    fn traces() {
        let z4 = make_group(&[4]).unwrap();
        let h = Subgroup::from_members(&z4, &[0, 2]).unwrap();
        let t = convergence_trace(&deterministic_hom(&z4, &h).unwrap(), &"-+-+".parse().unwrap(), 0.1, TransformOptions::default()).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.iter().all(|l| l.evaluation.capacity_gap.abs() < 1e-12
            && l.evaluation.distance_to_pol == 0.0
            && l.evaluation.nearest_subgroup == h));
        let t = convergence_trace(&identity(&z4), &"+-".parse().unwrap(), 0.1, TransformOptions::default()).unwrap();
        assert!(t.iter().all(|l| l.evaluation.determinedness.subgroup() == Some(&Subgroup::trivial(&z4))));
    }

    #[test]
    fn martingale_examples() {
        let z4 = make_group(&[4]).unwrap();
        let h = Subgroup::from_members(&z4, &[0, 2]).unwrap();
        let r = martingale_residual(&deterministic_hom(&z4, &h).unwrap()).unwrap();
        assert!(r.residual < 1e-12 && (r.minus_capacity - r.capacity).abs() < 1e-12);
        let r = martingale_residual(&bsc(0.1).unwrap()).unwrap();
        assert!(r.residual < 1e-12 && r.asymmetry.abs() < 1e-12);
        assert!(((r.capacity - r.minus_capacity) - 0.211).abs() < 1e-3);
    }

    #[test]
    fn report_round_trip() {
        let r = enumerate_paths(&bec(0.3).unwrap(), &RunConfig::exhaustive(3, 0.1, 1e-9)).unwrap();
        let text = r.to_json();
        let back = PolarizationReport::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert!(r.to_csv().starts_with("kind,key,value\nsummary,\"schema\",polarlab-report/1\n"));
    }
}

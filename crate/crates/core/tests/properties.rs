mod common;

use polarlab::*;
use proptest::prelude::*;

const GROUPS: [&[usize]; 6] = [&[2], &[3], &[4], &[2, 2], &[5], &[6]];

fn normalize(raw: Vec<f64>) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Random row with some exact zeros.
fn row(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], len)
        .prop_filter("row needs mass", |r| r.iter().sum::<f64>() > 0.0)
        .prop_map(normalize)
}

fn channel_on(orders: &'static [usize], outputs: usize) -> impl Strategy<Value = Channel> {
    let n: usize = orders.iter().product();
    prop::collection::vec(row(outputs), n).prop_map(move |rows| {
        let g = make_group(orders).unwrap();
        Channel::bound_unlabelled(&g, rows).unwrap()
    })
}

fn any_channel() -> impl Strategy<Value = Channel> {
    (0..GROUPS.len(), 1usize..5).prop_flat_map(|(gi, k)| channel_on(GROUPS[gi], k))
}

fn distribution(n: usize) -> impl Strategy<Value = Distribution> {
    row(n).prop_map(|r| Distribution::new(r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subgroups_are_closed_and_complete(gi in 0..GROUPS.len()) {
        let o = GROUPS[gi];
        let g = make_group(o).unwrap();
        let subgroups = enumerate_subgroups(&g);
        for h in &subgroups {
            for &a in h.members() {
                for &b in h.members() {
                    prop_assert!(h.contains(g.add(a, b)));
                }
                prop_assert!(h.contains(g.neg(a)));
            }
        }
        let lib: Vec<Vec<usize>> = subgroups.iter().map(|h| h.members().to_vec()).collect();
        prop_assert_eq!(lib, common::brute_subgroups(o));
    }

    #[test]
    fn capacity_matches_oracle(w in any_channel()) {
        let oracle = common::mutual_information(w.rows());
        prop_assert!((symmetric_capacity(&w) - oracle).abs() < 1e-12);
        let m = blackwell_measure(&w).unwrap();
        prop_assert!((capacity_of_measure(&m).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn data_processing(w in any_channel(), seed in any::<u64>(), k in 1usize..5) {
        let g = w.require_group().unwrap().clone();
        let v = presets::random(&g, k, seed).unwrap();
        // v reads w's outputs: rebuild it with the right input size
        let rows: Vec<Vec<f64>> = (0..w.output_size()).map(|y| v.rows()[y % v.input_size()].clone()).collect();
        let v = Channel::new((0..k).map(|i| i.to_string()).collect(), rows).unwrap();
        let composed = compose(&v, &w).unwrap();
        prop_assert!(common::mutual_information(composed.rows()) <= common::mutual_information(w.rows()) + 1e-12);
    }

    #[test]
    fn quotient_capacity_bounds(w in any_channel()) {
        let g = w.require_group().unwrap().clone();
        let i = symmetric_capacity(&w);
        for h in enumerate_subgroups(&g) {
            let ih = symmetric_capacity(&conditional_channel(&w, &h).unwrap());
            let levels = (h.index_in(&g) as f64).log2();
            prop_assert!(ih <= i + 1e-12 && ih <= levels + 1e-12, "{} {} {} {}", h, ih, i, levels);
        }
    }

    #[test]
    fn convolution_raises_entropy((gi, p, q) in (0..GROUPS.len()).prop_flat_map(|gi| {
        let n: usize = GROUPS[gi].iter().product();
        (Just(gi), distribution(n), distribution(n))
    })) {
        let o = GROUPS[gi];
        let g = make_group(o).unwrap();
        let n = g.size();
        let c = convolve_dist(&g, &p, &q).unwrap();
        let oracle: Vec<f64> = (0..n)
            .map(|u1| (0..n).map(|u2| p.probs()[common::add(o, u1, u2)] * q.probs()[u2]).sum())
            .collect();
        for (a, b) in c.probs().iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-14);
        }
        prop_assert!(entropy(&c) >= entropy(&p) - 1e-12);
        for u in 0..n {
            prop_assert!((entropy(&translate_dist(&g, &c, u).unwrap()) - entropy(&c)).abs() < 1e-12);
        }
    }

    #[test]
    fn transforms_commute_with_measures(w in any_channel()) {
        let m = blackwell_measure(&w).unwrap();
        let minus = blackwell_measure(&minus_transform(&w).unwrap()).unwrap();
        let plus = blackwell_measure(&plus_transform(&w).unwrap()).unwrap();
        prop_assert!(common::atoms_match(&minus, &minus_on_measure(&m).unwrap(), 1e-9, 1e-10));
        prop_assert!(common::atoms_match(&plus, &plus_on_measure(&m).unwrap(), 1e-9, 1e-10));
    }

    #[test]
    fn martingale_and_gap_routes(w in any_channel()) {
        let r = martingale_residual(&w).unwrap();
        prop_assert!(r.residual < 1e-9 && r.asymmetry.abs() < 1e-9);
        let gap = capacity_gap(&blackwell_measure(&w).unwrap()).unwrap();
        prop_assert!(gap.via_integral >= -1e-12);
    }

    #[test]
    fn wasserstein_is_a_metric(gi in 0..GROUPS.len(), k in (1usize..4, 1usize..4, 1usize..4), seed in any::<u64>()) {
        let g = make_group(GROUPS[gi]).unwrap();
        let ms: Vec<BlackwellMeasure> = [k.0, k.1, k.2]
            .iter()
            .enumerate()
            .map(|(j, &outputs)| blackwell_measure(&presets::random(&g, outputs, seed.wrapping_add(j as u64)).unwrap()).unwrap())
            .collect();
        let d = |a: usize, b: usize| wasserstein(&ms[a], &ms[b]).unwrap();
        for a in 0..3 {
            prop_assert_eq!(d(a, a), 0.0);
            for b in 0..3 {
                prop_assert_eq!(d(a, b), d(b, a));
                for c in 0..3 {
                    prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn canonicalize_is_idempotent(w in any_channel()) {
        let m = blackwell_measure(&w).unwrap();
        let again = canonicalize(&m, MERGE_TAU);
        prop_assert_eq!(&again, &m);
        prop_assert!(m.balance_deviation() <= 1e-9);
        prop_assert!((m.atoms().iter().map(|a| a.w).sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn equivalent_copies_share_a_measure(w in any_channel(), frac in 0.05f64..0.95) {
        let k = w.output_size();
        let perm: Vec<usize> = (0..k).rev().collect();
        let copy = w.permute_outputs(&perm).unwrap().split_output(k - 1, frac).unwrap();
        let (a, b) = (blackwell_measure(&w).unwrap(), blackwell_measure(&copy).unwrap());
        prop_assert!(a.same_class(&b));
        prop_assert_eq!(wasserstein(&a, &b).unwrap(), 0.0);
        prop_assert_eq!(pc_gap_lower_bound(&a, &b, 5, 1, 2).unwrap().value, 0.0);
    }

    #[test]
    fn pc_bound_trace_is_monotone(seed in any::<u64>()) {
        let g = make_group(&[3]).unwrap();
        let a = blackwell_measure(&presets::random(&g, 3, seed).unwrap()).unwrap();
        let b = blackwell_measure(&presets::random(&g, 2, seed ^ 1).unwrap()).unwrap();
        let bound = pc_gap_lower_bound(&a, &b, 30, seed, 3).unwrap();
        prop_assert!(bound.trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(bound.trace.last().copied(), Some(bound.value));
        let shorter = pc_gap_lower_bound(&a, &b, 10, seed, 3).unwrap();
        prop_assert!(shorter.value <= bound.value);
    }

    #[test]
    fn path_text_round_trips(index in 0u64..(1 << 16), depth in 0usize..=16) {
        let index = if depth == 0 { 0 } else { index % (1 << depth) };
        let p = PolarPath::from_index(index, depth);
        let back: PolarPath = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }
}

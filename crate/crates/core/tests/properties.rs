mod common;

use common::{ids, small_graph};
use im_lab_core::constructions::gen_random_weighted;
use im_lab_core::realization::{aggregate_utility, compose, reachable_utility, sample_realization, ComposedRealization};
use im_lab_core::spread::{aggregate_spread_set, spread_exact, spread_mc};
use im_lab_core::{load_graph, save_graph, EstimatorConfig, InfluenceGraph, NodeId, Realization};
use proptest::prelude::*;

fn ex() -> EstimatorConfig {
    EstimatorConfig::exact()
}

fn bits_to_set(n: usize, bits: u16) -> Vec<usize> {
    (0..n).filter(|&v| bits >> v & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn utility_is_monotone_and_submodular(
        g in small_graph(6, 12),
        seed in any::<u64>(),
        a in any::<u16>(),
        extra in any::<u16>(),
        u in 0usize..6,
    ) {
        let n = g.node_count();
        let u = u % n;
        let phi = sample_realization(&g, seed);
        let small = bits_to_set(n, a);
        let large = bits_to_set(n, a | extra);
        let f = |s: &[usize]| reachable_utility(&g, &ids(s), &phi);
        prop_assert!(f(&small) <= f(&large) + 1e-12);
        if !large.contains(&u) {
            let with = |s: &[usize]| {
                let mut s = s.to_vec();
                s.push(u);
                f(&s)
            };
            prop_assert!(with(&small) - f(&small) >= with(&large) - f(&large) - 1e-12);
        }
    }

    #[test]
    fn utility_covers_the_seeds(g in small_graph(6, 12), seed in any::<u64>(), a in any::<u16>()) {
        let set = bits_to_set(g.node_count(), a);
        let phi = sample_realization(&g, seed);
        let w: f64 = set.iter().map(|&v| g.weights()[v]).sum();
        prop_assert!(reachable_utility(&g, &ids(&set), &phi) >= w);
    }

    #[test]
    fn single_copy_composition_is_identity(g in small_graph(6, 12), seed in any::<u64>(), a in any::<u16>()) {
        let set = ids(&bits_to_set(g.node_count(), a));
        let phi = sample_realization(&g, seed);
        let sel = ComposedRealization::aggregate(&g, &set, 1);
        prop_assert_eq!(compose(&g, &sel, std::slice::from_ref(&phi)).unwrap(), phi.clone());
        prop_assert_eq!(aggregate_utility(&g, &set, std::slice::from_ref(&phi)), reachable_utility(&g, &set, &phi));
    }

    #[test]
    fn aggregate_utility_grows_with_copies(g in small_graph(6, 12), seed in any::<u64>(), a in any::<u16>()) {
        let set = ids(&bits_to_set(g.node_count(), a));
        let phis: Vec<Realization> = (0..4).map(|i| sample_realization(&g, seed.wrapping_add(i))).collect();
        for t in 1..4 {
            prop_assert!(aggregate_utility(&g, &set, &phis[..t]) <= aggregate_utility(&g, &set, &phis[..t + 1]));
        }
    }

    #[test]
    fn aggregate_spread_is_monotone_and_bounded(g in small_graph(5, 8), a in any::<u16>()) {
        let set = ids(&bits_to_set(g.node_count(), a));
        let s1 = spread_exact(&g, &set, &ex()).unwrap().value;
        let mut prev = s1;
        for t in 2..=3 {
            let st = aggregate_spread_set(&g, &set, t, &ex()).unwrap().value;
            prop_assert!(st >= prev - 1e-9);
            prop_assert!(st <= t as f64 * s1 + 1e-9);
            prev = st;
        }
    }

    #[test]
    fn graph_files_round_trip(g in small_graph(6, 12)) {
        let bytes = save_graph(&g);
        let back = load_graph(&bytes, false).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(save_graph(&back), bytes);
    }

    #[test]
    fn chains_preserve_weight_and_spread(n in 2usize..=5, p_edge in 0.2f64..0.8, seed in any::<u64>(), a in any::<u16>()) {
        let g = gen_random_weighted(n, p_edge, 3, seed).unwrap();
        let (h, heads) = g.expand_chains().unwrap();
        prop_assert_eq!(h.node_count() as f64, g.total_weight());
        prop_assert!(h.has_unit_weights());
        let set = bits_to_set(n, a);
        let mapped: Vec<NodeId> = set.iter().map(|&v| heads[v]).collect();
        let lhs = spread_exact(&g, &ids(&set), &ex()).unwrap().value;
        let rhs = spread_exact(&h, &mapped, &ex()).unwrap().value;
        prop_assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monte_carlo_agrees_with_exact(g in small_graph(5, 8), a in any::<u16>(), seed in any::<u64>()) {
        let set = ids(&bits_to_set(g.node_count(), a));
        let exact = spread_exact(&g, &set, &ex()).unwrap().value;
        let est = spread_mc(&g, &set, &EstimatorConfig::monte_carlo(20_000, seed)).unwrap();
        // Five standard errors keep the false-alarm rate negligible across cases.
        prop_assert!((est.value - exact).abs() <= 5.0 * est.stderr + 1e-9, "{:?} vs {}", est, exact);
    }
}

#[test]
fn monte_carlo_ignores_the_thread_count() {
    let g: InfluenceGraph = common::seeded_graph(6, 0.6, 3);
    let cfg = EstimatorConfig::monte_carlo(5_000, 42);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| aggregate_spread_set(&g, &[NodeId(0), NodeId(2)], 2, &cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(8));
}

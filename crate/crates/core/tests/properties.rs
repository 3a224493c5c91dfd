use proptest::prelude::*;
use scalefree_core::analysis::geometric_grid;
use scalefree_core::heuristics::*;
use scalefree_core::multistart::running_max;
use scalefree_core::rng::stream_rng;
use scalefree_core::tsp::{tour_cost, Tour, TspInstance};

fn instance() -> impl Strategy<Value = TspInstance> {
    prop::collection::vec((0i64..1000, 0i64..1000), 8..40)
        .prop_map(|pts| TspInstance::new("p", pts.into_iter().map(|(x, y)| [x, y]).collect()).unwrap())
}

fn kinds() -> impl Strategy<Value = LocalSearchKind> {
    prop_oneof![
        Just(LocalSearchKind::TwoOpt),
        Just(LocalSearchKind::ThreeOpt),
        Just(LocalSearchKind::LinKernighan(LkParams::default())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_search_returns_a_cheaper_valid_tour(inst in instance(), kind in kinds(), seed in any::<u64>()) {
        let ls = LocalSearch::new(&inst, kind);
        let start = construct_random(&inst, &mut stream_rng(seed, &[]));
        let out = ls.improve(&inst, &start);
        prop_assert!(out.validate(&inst).is_ok());
        prop_assert_eq!(out.cost(), tour_cost(&inst, out.order()).unwrap());
        prop_assert!(out.cost() <= start.cost());
        let again = ls.improve(&inst, &out);
        prop_assert_eq!(again.cost(), out.cost());
    }

    #[test]
    fn double_bridge_keeps_a_permutation(inst in instance(), seed in any::<u64>()) {
        let t = Tour::new(&inst, (0..inst.len()).collect()).unwrap();
        let k = double_bridge_kick(&inst, &t, &mut stream_rng(seed, &[1])).unwrap();
        prop_assert!(k.validate(&inst).is_ok());
        let diff = t.edge_set().iter().filter(|e| !k.edge_set().contains(e)).count();
        prop_assert!(diff <= 4);
    }

    #[test]
    fn running_max_dominates(values in prop::collection::vec(any::<i32>(), 1..200)) {
        let v: Vec<i64> = values.into_iter().map(i64::from).collect();
        let m = running_max(&v);
        prop_assert!(m.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(m.iter().zip(&v).all(|(a, b)| a >= b));
        prop_assert!(m.iter().all(|x| v.contains(x)));
    }

    #[test]
    fn geometric_grid_is_increasing_and_bounded(n_max in 1u64..1u64 << 40) {
        let g = geometric_grid(n_max);
        prop_assert_eq!(g[0], 1);
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(*g.last().unwrap() <= n_max);
        prop_assert!(g.windows(2).all(|w| (w[1] as f64) <= 1.5 * w[0] as f64 + 1.0));
    }
}

use proptest::prelude::*;
use sublinear_vc::baseline::brute_force_min_vc;
use sublinear_vc::reference::{greedy_matching, materialize_ranking, ReferenceOracle};
use sublinear_vc::transform::{explicit, AverageDegreeShadow, DenseAdapter, MaxDegreeShadow};
use sublinear_vc::{parse_graph, MultiGraph, OracleContext, RankEngine, Vertex};

const Q: u64 = 1 << 40;

fn multigraph(max_n: usize, max_m: usize) -> impl Strategy<Value = MultiGraph> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n), 0..=max_m)
            .prop_map(move |edges| MultiGraph::from_edges(n, &edges).unwrap())
    })
}

fn simple_graph(max_n: usize) -> impl Strategy<Value = MultiGraph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut it = bits.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if it.next().unwrap() {
                        edges.push((u, v));
                    }
                }
            }
            MultiGraph::from_edges(n, &edges).unwrap()
        })
    })
}

fn distinct_neighbors(g: &MultiGraph, v: Vertex) -> usize {
    let mut ws: Vec<Vertex> = g.slots(v).map(|s| s.other).collect();
    ws.sort_unstable();
    ws.dedup();
    ws.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn text_round_trip(g in multigraph(12, 30)) {
        let h = parse_graph(&g.to_text()).unwrap();
        prop_assert_eq!(h.n(), g.n());
        prop_assert_eq!(h.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn rank_endpoints_agree(g in multigraph(8, 20), seed in any::<u64>()) {
        let mut e = RankEngine::new(&g, seed, Q).unwrap();
        for v in 0..g.n() {
            e.materialize(v).unwrap();
        }
        for v in 0..g.n() {
            prop_assert_eq!(e.state(v).unwrap().sorted().len(), distinct_neighbors(&g, v));
            for &(w, r) in e.state(v).unwrap().sorted() {
                prop_assert_eq!(e.assigned_rank(w, v), Some(r));
            }
        }
    }

    #[test]
    fn lowest_is_monotone(g in multigraph(8, 20), seed in any::<u64>(), v in 0usize..8) {
        let v = v % g.n();
        let mut e = RankEngine::new(&g, seed, Q).unwrap();
        let mut prev = None;
        let mut k = 1;
        while let Some((_, r)) = e.lowest(v, k).unwrap() {
            if let Some(p) = prev {
                prop_assert!(p < r);
            }
            prev = Some(r);
            k += 1;
        }
        prop_assert_eq!(k - 1, distinct_neighbors(&g, v));
    }

    #[test]
    fn revealed_prefix_is_stable(
        g in multigraph(8, 20),
        seed in any::<u64>(),
        v in 0usize..8,
        k in 1usize..4,
        others in prop::collection::vec(0usize..8, 0..6),
    ) {
        let v = v % g.n();
        let mut e = RankEngine::new(&g, seed, Q).unwrap();
        let before: Vec<_> = (1..=k).map(|i| e.lowest(v, i).unwrap()).collect();
        for w in others {
            e.materialize(w % g.n()).unwrap();
        }
        e.materialize(v).unwrap();
        let after: Vec<_> = (1..=k).map(|i| e.lowest(v, i).unwrap()).collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn lazy_oracle_matches_greedy(g in multigraph(9, 18), seed in any::<u64>()) {
        let mut ctx = OracleContext::new(&g, seed, Q).unwrap();
        let answers: Vec<bool> = (0..g.n()).map(|v| ctx.vo(v).unwrap()).collect();
        let pi = materialize_ranking(ctx.engine_mut()).unwrap();
        let mut reference = ReferenceOracle::new(&g, &pi).unwrap();
        for (v, &a) in answers.iter().enumerate() {
            prop_assert_eq!(a, reference.vo_ref(v));
        }
        let (_, cover) = greedy_matching(&g, &pi);
        prop_assert_eq!(answers.iter().filter(|&&a| a).count(), cover);
    }

    #[test]
    fn cover_is_within_factor_two(g in multigraph(10, 20), seed in any::<u64>()) {
        let mut ctx = OracleContext::new(&g, seed, Q).unwrap();
        let in_cover: Vec<bool> = (0..g.n()).map(|v| ctx.vo(v).unwrap()).collect();
        for (u, v) in g.edges() {
            prop_assert!(in_cover[u] || in_cover[v]);
        }
        let opt = brute_force_min_vc(&g).unwrap();
        let size = in_cover.iter().filter(|&&c| c).count();
        prop_assert!(opt <= size && size <= 2 * opt);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn max_degree_wrapper_matches_explicit(g in multigraph(8, 14), extra in 0usize..6, eps in 0.05f64..0.95) {
        let d = g.max_degree().max(1) + extra;
        prop_assume!(1.0 / eps < d as f64);
        let w = MaxDegreeShadow::new(&g, d, eps).unwrap();
        let x = explicit::max_degree(&g, d, eps).unwrap();
        prop_assert_eq!(explicit::diff(&w, &x), Vec::<String>::new());
    }

    #[test]
    fn average_degree_wrapper_matches_explicit(g in multigraph(8, 14), dbar in 1usize..4, eps in 0.2f64..0.95) {
        let w = AverageDegreeShadow::new(&g, dbar, eps).unwrap();
        let x = explicit::average_degree(&g, dbar, eps).unwrap();
        prop_assert_eq!(explicit::diff(&w, &x), Vec::<String>::new());
    }

    #[test]
    fn dense_wrapper_matches_explicit(g in simple_graph(7), eps in 0.3f64..0.95) {
        let g = g.with_pair_index();
        let w = DenseAdapter::new(&g, eps).unwrap();
        let x = explicit::dense(&g, eps).unwrap();
        prop_assert_eq!(explicit::diff(&w, &x), Vec::<String>::new());
    }
}

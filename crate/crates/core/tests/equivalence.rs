use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sublinear_vc::oracle::OracleContext;
use sublinear_vc::reference::{greedy_matching, materialize_ranking, ReferenceOracle};
use sublinear_vc::MultiGraph;

fn random_multigraph(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> MultiGraph {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(0..=max_m);
    let edges: Vec<_> = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    MultiGraph::from_edges(n, &edges).unwrap()
}

#[test]
fn lazy_cover_equals_reference_on_random_multigraphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..300 {
        let g = random_multigraph(&mut rng, 10, 20);
        for seed in 0..5u64 {
            let mut o = OracleContext::new(&g, seed, 1 << 30).unwrap();
            let lazy: Vec<bool> = (0..g.n()).map(|v| o.vo(v).unwrap()).collect();

            let pi = materialize_ranking(o.engine_mut()).unwrap();
            let mut r = ReferenceOracle::new(&g, &pi).unwrap();
            let reference: Vec<bool> = (0..g.n()).map(|v| r.vo_ref(v)).collect();
            assert_eq!(lazy, reference, "case {case} seed {seed}: {}", g.to_text());
            let covered = lazy.iter().filter(|&&c| c).count();
            assert_eq!(covered, greedy_matching(&g, &pi).1);
        }
    }
}

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sublinear_vc::baseline::brute_force_min_vc;
use sublinear_vc::estimator::{estimate_vc, estimate_with_sweep, EstimateConfig, Mode};
use sublinear_vc::generate::{gen_gnp, gen_lb_family, gen_simple_regular, star};
use sublinear_vc::rank::d_star_for;
use sublinear_vc::transform::MaxDegreeShadow;
use sublinear_vc::verify::{self, EquivalenceScale, Level};
use sublinear_vc::{GraphAccess, MultiGraph, OracleContext};

const Q: u64 = 1 << 40;

fn report(id: u32, name: &str, passed: bool, detail: impl AsRef<str>) {
    let line = format!(
        "acceptance {id:>2} {name}: {} ({})",
        if passed { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    // bypass the test harness capture so every run shows the verdicts
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(passed, "{line}");
}

#[test]
fn criterion_01_oracle_equivalence() {
    let o = verify::suite_equivalence(&EquivalenceScale::for_level(Level::Full), false);
    let detail = match &o.counterexample {
        Some(c) => format!("{}; counterexample {c}", o.detail),
        None => format!("{} graphs, {}", o.checked, o.detail),
    };
    report(1, "oracle equivalence", o.passed, detail);
}

#[test]
fn criterion_02_sandwich_bound() {
    let o = verify::suite_sandwich(500, 16);
    let detail = match &o.counterexample {
        Some(c) => format!("{}; counterexample {c}", o.detail),
        None => o.detail.clone(),
    };
    report(2, "sandwich bound", o.passed, detail);
}

#[test]
fn criterion_03_binomial_total_variation() {
    let o = verify::suite_binomial(32, &[(1, 4), (1, 3), (1, 2), (3, 4)], &[100, 1000]);
    report(3, "binomial sampler TV <= 1/Q", o.passed, format!("{} cases, {}", o.checked, o.detail));
}

#[test]
fn criterion_04_rank_uniformity() {
    // a star center decides every incident rank, so fully advancing it
    // reveals fresh independent ranks
    let leaves = 1000;
    let g = star(leaves + 1).unwrap();
    let d_star = d_star_for(g.max_degree());
    let mut values = Vec::with_capacity(100_000);
    let mut per_level = vec![0u64; d_star as usize + 2];
    for seed in 0..100 {
        let mut ctx = OracleContext::new(&g, seed, Q).unwrap();
        ctx.engine_mut().materialize(0).unwrap();
        for &(_, r) in ctx.engine().state(0).unwrap().sorted() {
            values.push(r.value(d_star));
            per_level[r.level as usize] += 1;
        }
    }
    let total = values.len();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = total as f64;
    let ks = values
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    // Kolmogorov critical value at significance 1e-3
    let ks_ok = ks * n.sqrt() < 1.9495;

    let mut worst_z: f64 = 0.0;
    for level in 1..=d_star + 1 {
        let p = if level == d_star + 1 {
            (-(d_star as f64)).exp2()
        } else {
            (-(level as f64)).exp2()
        };
        let expected = n * p;
        let se = (n * p * (1.0 - p)).sqrt();
        let z = (per_level[level as usize] as f64 - expected).abs() / se;
        worst_z = worst_z.max(z);
    }
    report(
        4,
        "rank uniformity",
        total == 100_000 && ks_ok && worst_z <= 4.0,
        format!(
            "{total} ranks, KS sqrt(n)D = {:.4} (< 1.9495), worst level z = {worst_z:.2} (<= 4)",
            ks * n.sqrt()
        ),
    );
}

fn mean_calls(d: usize) -> f64 {
    let n = 10_000;
    let mut total = 0u64;
    let mut probes = 0u64;
    for graph_seed in 0..10u64 {
        let g = gen_simple_regular(n, d, graph_seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(graph_seed ^ 0xABCD);
        for i in 0..1000u64 {
            // fresh ranking per probe: N(sigma, v) over random (sigma, v)
            let mut ctx = OracleContext::new(&g, graph_seed * 1000 + i, Q).unwrap();
            ctx.vo(rng.random_range(0..n)).unwrap();
            total += ctx.stats().last_probe_pairs;
            probes += 1;
        }
    }
    total as f64 / probes as f64
}

#[test]
fn criterion_05_expected_recursive_calls() {
    let means: Vec<(usize, f64)> = [4, 8, 16].into_iter().map(|d| (d, mean_calls(d))).collect();
    let within = means.iter().all(|&(d, m)| m <= 50.0 * d as f64);
    let growth: Vec<f64> = means.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let growth_ok = growth.iter().all(|&g| g <= 3.0);
    report(
        5,
        "mean N <= 50d, growth <= 3x per doubling",
        within && growth_ok,
        format!("mean N {means:.2?}, growth {growth:.2?}"),
    );
}

#[test]
fn criterion_06_query_scaling() {
    let n = 20_000;
    let mut per_d = Vec::new();
    for d in [8usize, 128] {
        let mut total = 0u64;
        for seed in 0..3u64 {
            let g = gen_simple_regular(n, d, seed).unwrap();
            let r = estimate_vc(&g, &EstimateConfig::new(0.2, Mode::MaxDeg, seed)).unwrap();
            assert_eq!(r.effective_mode, Mode::MaxDeg);
            total += r.queries.neighbor_queries;
        }
        per_d.push(total as f64 / 3.0);
    }
    let ratio = per_d[1] / per_d[0];
    report(
        6,
        "neighbor queries d=128 <= 40x d=8",
        ratio <= 40.0,
        format!("mean neighbor queries {:.0} vs {:.0}, ratio {ratio:.2}", per_d[0], per_d[1]),
    );
}

#[test]
fn criterion_07_transform_fidelity() {
    let o = verify::suite_transforms();
    report(7, "transform fidelity", o.passed, format!("{} wrapper/explicit pairs, {}", o.checked, o.detail));
}

#[test]
fn criterion_08_shadow_race() {
    let n = 10_000;
    let eps = 0.2;
    let mut good = 0;
    let mut fractions = Vec::new();
    for trial in 0..20u64 {
        let g = gen_simple_regular(n, 10, trial).unwrap();
        let t = MaxDegreeShadow::new(&g, 10, eps).unwrap();
        let mut ctx = OracleContext::new(&t, 77 + trial, Q).unwrap();
        let mut won = 0;
        for v in 0..n {
            if ctx.pair_matched(v, t.shadow_of(v)).unwrap() {
                won += 1;
            }
        }
        let f = won as f64 / n as f64;
        fractions.push(f);
        if f <= eps / 4.0 {
            good += 1;
        }
    }
    let max = fractions.iter().cloned().fold(0.0, f64::max);
    report(
        8,
        "shadow race <= eps/4",
        good >= 19,
        format!("{good}/20 trials within eps/4 = {}, max fraction {max:.4}", eps / 4.0),
    );
}

fn random_graph_n_le_16(rng: &mut ChaCha8Rng) -> MultiGraph {
    loop {
        let g = verify::random_small_graph(rng, 16);
        if g.n() >= 2 {
            return g;
        }
    }
}

#[test]
fn criterion_09_estimator_guarantee() {
    let eps = 0.25;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let graphs = 50;
    let seeds = 10;
    let mut ok_total = 0;
    let mut per_graph_ok = true;
    for gi in 0..graphs {
        let g = random_graph_n_le_16(&mut rng);
        let opt = brute_force_min_vc(&g).unwrap() as f64;
        let slack = eps * g.n() as f64;
        let mut ok = 0;
        for s in 0..seeds {
            let cfg = EstimateConfig::new(eps, Mode::Plain, (gi * seeds + s) as u64);
            let est = estimate_vc(&g, &cfg).unwrap().estimate;
            if opt - slack <= est && est <= 2.0 * opt + slack {
                ok += 1;
            }
        }
        ok_total += ok;
        per_graph_ok &= 3 * ok >= 2 * seeds;
    }
    let aggregate = ok_total as f64 / (graphs * seeds) as f64;

    let n = 2000;
    let mut accurate = 0;
    for trial in 0..100u64 {
        let g = gen_simple_regular(n, 10, 500 + trial).unwrap();
        let cfg = EstimateConfig::new(0.1, Mode::Plain, trial);
        let (r, swept) = estimate_with_sweep(&g, &cfg).unwrap();
        if (r.mu * n as f64 - swept as f64).abs() <= 0.1 * n as f64 / 4.0 {
            accurate += 1;
        }
    }
    report(
        9,
        "estimator guarantee",
        per_graph_ok && aggregate >= 0.9 && accurate >= 95,
        format!(
            "{} pairs, aggregate {:.3} (>= 0.9), every graph >= 2/3: {per_graph_ok}; sampling accuracy {accurate}/100 (>= 95)",
            graphs * seeds,
            aggregate
        ),
    );
}

#[test]
fn criterion_10_lower_bound_family() {
    let mut results = Vec::new();
    for n in [8usize, 16] {
        for seed in 0..5 {
            let g = gen_lb_family(n, seed).unwrap();
            results.push((n, brute_force_min_vc(&g).unwrap()));
        }
    }
    let passed = results.iter().all(|&(n, vc)| vc == n / 4 + 1);
    report(10, "lower-bound family VC = n/4 + 1", passed, format!("{results:?}"));
}

#[test]
fn criterion_11_dense_adapter() {
    let n = 500;
    let mut lines = Vec::new();
    let mut passed = true;
    for seed in 0..3 {
        let g = gen_gnp(n, 0.5, seed).unwrap().with_pair_index();
        let r = estimate_vc(&g, &EstimateConfig::new(0.25, Mode::Dense, seed)).unwrap();
        let q = r.queries;
        passed &= r.effective_mode == Mode::Dense
            && !r.fallback
            && q.degree_queries == 0
            && q.neighbor_queries == 0
            && q.pair_queries <= (n * n / 10) as u64;
        lines.push(format!("{}", q.pair_queries));
        assert!(g.supports_pair_queries());
    }
    report(
        11,
        "dense adapter pair-only, <= n^2/10",
        passed,
        format!("pair queries per estimate [{}] (<= {})", lines.join(", "), n * n / 10),
    );
}

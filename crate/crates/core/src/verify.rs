//! Verification suites shared by the `verify` command and the test tree.
//!
//! Each suite returns a [`SuiteOutcome`]; failures carry the first
//! counterexample found, shrunk by vertex deletion where a graph is
//! involved.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baseline::brute_force_min_vc;
use crate::error::{Error, Result};
use crate::generate;
use crate::graph::{GraphAccess, MultiGraph, Vertex};
use crate::oracle::OracleContext;
use crate::rank::binomial::BinomialTable;
use crate::reference::{greedy_matching, materialize_ranking, ReferenceOracle};
use crate::transform::{explicit, AverageDegreeShadow, DenseAdapter, MaxDegreeShadow};

/// Sampler quality used by the verification suites.
pub const VERIFY_QUALITY: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::Input(format!("unknown verification level `{s}`"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Quick => "quick",
            Level::Full => "full",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub graph: String,
    pub seed: u64,
    pub message: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}: {}", self.seed, self.message)?;
        write!(f, "{}", self.graph)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub checked: u64,
    pub detail: String,
    pub counterexample: Option<Counterexample>,
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} ({} checks) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.checked,
            self.detail
        )
    }
}

/// Every multigraph on `n` vertices with exactly `m` edges, up to edge
/// order: multisets of vertex pairs `u <= v`, listed in nondecreasing order.
pub fn multigraphs(n: usize, m: usize) -> Vec<MultiGraph> {
    let pairs: Vec<(Vertex, Vertex)> = (0..n)
        .flat_map(|u| (u..n).map(move |v| (u, v)))
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; m];
    if pairs.is_empty() && m > 0 {
        return out;
    }
    loop {
        let edges: Vec<_> = choice.iter().map(|&i| pairs[i]).collect();
        out.push(MultiGraph::from_edges(n, &edges).expect("valid edges"));
        // next nondecreasing sequence
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if choice[i] + 1 < pairs.len() {
                let c = choice[i] + 1;
                for x in &mut choice[i..] {
                    *x = c;
                }
                break;
            }
        }
    }
}

/// Random multigraph with loops and parallel edges allowed.
pub fn random_multigraph<R: Rng + ?Sized>(rng: &mut R, max_n: usize, max_m: usize) -> MultiGraph {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(0..=max_m);
    let edges: Vec<_> = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    MultiGraph::from_edges(n, &edges).expect("valid edges")
}

/// `g` without vertex `v`; higher ids shift down by one.
pub fn delete_vertex(g: &MultiGraph, v: Vertex) -> MultiGraph {
    let relabel = |x: Vertex| if x > v { x - 1 } else { x };
    let edges: Vec<_> = g
        .edges()
        .filter(|&(a, b)| a != v && b != v)
        .map(|(a, b)| (relabel(a), relabel(b)))
        .collect();
    MultiGraph::from_edges(g.n() - 1, &edges).expect("valid edges")
}

/// Deletes vertices one at a time while `fails` keeps holding.
pub fn shrink(g: &MultiGraph, fails: impl Fn(&MultiGraph) -> bool) -> MultiGraph {
    let mut cur = g.clone();
    'outer: loop {
        for v in 0..cur.n() {
            if cur.n() <= 1 {
                break 'outer;
            }
            let smaller = delete_vertex(&cur, v);
            if fails(&smaller) {
                cur = smaller;
                continue 'outer;
            }
        }
        break;
    }
    cur
}

/// Compares the lazy oracle with the reference path on one graph and seed.
///
/// All vertices are probed first; the ranking is then fully revealed in
/// the same engine, converted to an explicit permutation, and every answer
/// is checked against the reference oracle, the greedy cover, and the
/// matching/maximality properties of the memoized answers.
pub fn check_equivalence(g: &MultiGraph, seed: u64, fault: bool) -> Result<Option<String>> {
    let mut ctx = OracleContext::new(g, seed, VERIFY_QUALITY)?;
    ctx.inject_merge_fault(fault);
    let lazy: Vec<bool> = (0..g.n()).map(|v| ctx.vo(v)).collect::<Result<_>>()?;
    let pi = materialize_ranking(ctx.engine_mut())?;
    let mut reference = ReferenceOracle::new(g, &pi)?;
    for (v, &got) in lazy.iter().enumerate() {
        let want = reference.vo_ref(v);
        if got != want {
            return Ok(Some(format!("vo({v}) = {got}, reference {want}")));
        }
    }
    let covered = lazy.iter().filter(|&&c| c).count();
    let (_, greedy) = greedy_matching(g, &pi);
    if covered != greedy {
        return Ok(Some(format!("cover size {covered}, greedy {greedy}")));
    }
    // matched pairs must form a maximal matching
    let mut matched_at: Vec<Option<Vertex>> = vec![None; g.n()];
    for u in 0..g.n() {
        let mut k = 1;
        while let Some((w, _)) = ctx.engine_mut().lowest(u, k)? {
            k += 1;
            if w < u || !ctx.mo(u, w)? {
                continue;
            }
            let ends: &[Vertex] = if u == w { &[u] } else { &[u, w] };
            for &x in ends {
                if matched_at[x].is_some() {
                    return Ok(Some(format!("vertex {x} is matched twice")));
                }
                matched_at[x] = Some(u + w - x);
            }
        }
    }
    for (u, w) in g.edges() {
        if matched_at[u].is_none() && matched_at[w].is_none() {
            return Ok(Some(format!("edge ({u}, {w}) has both endpoints free")));
        }
    }
    Ok(None)
}

fn equivalence_counterexample(g: &MultiGraph, seed: u64, fault: bool, message: String) -> Counterexample {
    let fails = |h: &MultiGraph| matches!(check_equivalence(h, seed, fault), Ok(Some(_)) | Err(_));
    let small = shrink(g, fails);
    let message = match check_equivalence(&small, seed, fault) {
        Ok(Some(m)) => m,
        Err(e) => e.to_string(),
        Ok(None) => message,
    };
    Counterexample {
        graph: small.to_text(),
        seed,
        message,
    }
}

pub struct EquivalenceScale {
    pub exhaustive_n: usize,
    pub exhaustive_m: usize,
    pub exhaustive_seeds: u64,
    pub random_graphs: usize,
    pub random_n: usize,
    pub random_m: usize,
    pub random_seeds: u64,
}

impl EquivalenceScale {
    pub fn for_level(level: Level) -> Self {
        match level {
            Level::Full => EquivalenceScale {
                exhaustive_n: 5,
                exhaustive_m: 7,
                exhaustive_seeds: 20,
                random_graphs: 1000,
                random_n: 10,
                random_m: 20,
                random_seeds: 20,
            },
            Level::Quick => EquivalenceScale {
                exhaustive_n: 5,
                exhaustive_m: 6,
                exhaustive_seeds: 5,
                random_graphs: 500,
                random_n: 10,
                random_m: 20,
                random_seeds: 10,
            },
        }
    }
}

/// Lazy oracle versus reference path on every small multigraph and on
/// random multigraphs.
pub fn suite_equivalence(scale: &EquivalenceScale, fault: bool) -> SuiteOutcome {
    let name = "oracle equivalence";
    let mut checked = 0;
    let fail = |g: &MultiGraph, seed: u64, msg: String, checked: u64| SuiteOutcome {
        name,
        passed: false,
        checked,
        detail: "lazy oracle disagrees with the reference path".into(),
        counterexample: Some(equivalence_counterexample(g, seed, fault, msg)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xE0);
    for n in 1..=scale.exhaustive_n {
        for m in 0..=scale.exhaustive_m {
            for g in multigraphs(n, m) {
                checked += 1;
                for seed in 0..scale.exhaustive_seeds {
                    match check_equivalence(&g, seed, fault) {
                        Ok(None) => {}
                        Ok(Some(msg)) => return fail(&g, seed, msg, checked),
                        Err(e) => return fail(&g, seed, e.to_string(), checked),
                    }
                }
            }
        }
    }
    for _ in 0..scale.random_graphs {
        let g = &random_multigraph(&mut rng, scale.random_n, scale.random_m);
        checked += 1;
        for seed in 0..scale.random_seeds {
            let seed = seed + 1000;
            match check_equivalence(g, seed, fault) {
                Ok(None) => {}
                Ok(Some(msg)) => return fail(g, seed, msg, checked),
                Err(e) => return fail(g, seed, e.to_string(), checked),
            }
        }
    }
    SuiteOutcome {
        name,
        passed: true,
        checked,
        detail: format!(
            "exhaustive n<={} m<={} x {} seeds, {} random x {} seeds",
            scale.exhaustive_n,
            scale.exhaustive_m,
            scale.exhaustive_seeds,
            scale.random_graphs,
            scale.random_seeds
        ),
        counterexample: None,
    }
}

/// `|{v : vo(v)}|` for one ranking of `g`.
pub fn lazy_cover_size(g: &MultiGraph, seed: u64) -> Result<usize> {
    let mut ctx = OracleContext::new(g, seed, VERIFY_QUALITY)?;
    let mut c = 0;
    for v in 0..g.n() {
        if ctx.vo(v)? {
            c += 1;
        }
    }
    Ok(c)
}

/// Random graph for the sandwich and estimator suites: a mix of `G(n, p)`
/// graphs and multigraphs with loops.
pub fn random_small_graph<R: Rng + ?Sized>(rng: &mut R, max_n: usize) -> MultiGraph {
    if rng.random_bool(0.7) {
        let n = rng.random_range(1..=max_n);
        let p = rng.random_range(0.05..0.9);
        generate::gen_gnp(n, p, rng.random()).expect("valid parameters")
    } else {
        random_multigraph(rng, max_n, 2 * max_n)
    }
}

/// `VC_opt <= |C| <= 2 VC_opt` for the lazy cover on random graphs.
pub fn suite_sandwich(graphs: usize, max_n: usize) -> SuiteOutcome {
    let name = "sandwich bound";
    let mut rng = ChaCha8Rng::seed_from_u64(0x5A);
    for i in 0..graphs {
        let g = random_small_graph(&mut rng, max_n);
        let seed = i as u64;
        let check = |h: &MultiGraph| -> Option<String> {
            let opt = brute_force_min_vc(h).ok()?;
            match lazy_cover_size(h, seed) {
                Ok(c) if opt <= c && c <= 2 * opt => None,
                Ok(c) => Some(format!("|C| = {c}, VC_opt = {opt}")),
                Err(e) => Some(e.to_string()),
            }
        };
        if let Some(msg) = check(&g) {
            let small = shrink(&g, |h| check(h).is_some());
            return SuiteOutcome {
                name,
                passed: false,
                checked: i as u64 + 1,
                detail: "cover outside [VC_opt, 2 VC_opt]".into(),
                counterexample: Some(Counterexample {
                    graph: small.to_text(),
                    seed,
                    message: check(&small).unwrap_or(msg),
                }),
            };
        }
    }
    SuiteOutcome {
        name,
        passed: true,
        checked: graphs as u64,
        detail: format!("{graphs} graphs with n <= {max_n}"),
        counterexample: None,
    }
}

fn binomial_coefficient(k: u64, i: u64) -> BigInt {
    let mut c = BigInt::one();
    for j in 0..i {
        c = c * BigInt::from(k - j) / BigInt::from(j + 1);
    }
    c
}

/// Exact total variation distance between the sampler's output
/// distribution for `(k, a, b, Q)` and `Binomial(k, a/b)`.
pub fn exact_binomial_tv(k: u64, a: u64, b: u64, quality: u64) -> Result<BigRational> {
    let table = BinomialTable::new(k, a, b, quality)?;
    let total = BigInt::from_bytes_le(num_bigint::Sign::Plus, &table.total().to_le_bytes());
    let implemented = |x: u64| -> BigRational {
        if x < table.first() {
            return BigRational::zero();
        }
        match table.weights().get((x - table.first()) as usize) {
            Some(w) => BigRational::new(
                BigInt::from_bytes_le(num_bigint::Sign::Plus, &w.to_le_bytes()),
                total.clone(),
            ),
            None => BigRational::zero(),
        }
    };
    let p = BigRational::new(BigInt::from(a), BigInt::from(b));
    let q = BigRational::one() - &p;
    let mut tv = BigRational::zero();
    for x in 0..=k {
        let exact = BigRational::from_integer(binomial_coefficient(k, x))
            * num_traits::pow(p.clone(), x as usize)
            * num_traits::pow(q.clone(), (k - x) as usize);
        tv += (exact - implemented(x)).abs();
    }
    Ok(tv / BigRational::from_integer(BigInt::from(2)))
}

/// Exact TV bound of the binomial sampler over a parameter grid.
pub fn suite_binomial(max_k: u64, fractions: &[(u64, u64)], qualities: &[u64]) -> SuiteOutcome {
    let name = "binomial sampler total variation";
    let mut checked = 0;
    let mut worst = 0.0f64;
    for &quality in qualities {
        let bound = BigRational::new(BigInt::one(), BigInt::from(quality));
        for &(a, b) in fractions {
            for k in 1..=max_k {
                checked += 1;
                let tv = match exact_binomial_tv(k, a, b, quality) {
                    Ok(tv) => tv,
                    Err(e) => {
                        return SuiteOutcome {
                            name,
                            passed: false,
                            checked,
                            detail: format!("k={k} a/b={a}/{b} Q={quality}: {e}"),
                            counterexample: None,
                        }
                    }
                };
                let ratio = rational_to_f64(&tv) * quality as f64;
                worst = worst.max(ratio);
                if tv > bound {
                    return SuiteOutcome {
                        name,
                        passed: false,
                        checked,
                        detail: format!(
                            "k={k} a/b={a}/{b} Q={quality}: TV = {:.3e} > 1/Q",
                            rational_to_f64(&tv)
                        ),
                        counterexample: None,
                    };
                }
            }
        }
    }
    SuiteOutcome {
        name,
        passed: true,
        checked,
        detail: format!("max TV * Q = {worst:.3e}"),
        counterexample: None,
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::INFINITY)
}

fn hub_graph() -> MultiGraph {
    let mut edges: Vec<_> = (1..10).map(|v| (0, v)).collect();
    edges.extend([(1, 2), (3, 3), (4, 5), (4, 5), (6, 7)]);
    MultiGraph::from_edges(10, &edges).expect("valid edges")
}

/// Graphs and parameters of the transform fidelity matrix.
pub fn transform_matrix() -> Vec<(String, MultiGraph)> {
    let mut out = vec![
        (
            "path+loop+parallel n=6".to_string(),
            MultiGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 3), (4, 5), (4, 5)])
                .expect("valid edges"),
        ),
        ("hub n=10".to_string(), hub_graph()),
        ("empty n=4".to_string(), MultiGraph::from_edges(4, &[]).expect("valid")),
    ];
    for seed in 0..3 {
        out.push((
            format!("gnp n=8 p=0.4 seed={seed}"),
            generate::gen_gnp(8, 0.4, seed).expect("valid"),
        ));
        out.push((
            format!("multigraph seed={seed}"),
            random_multigraph(&mut ChaCha8Rng::seed_from_u64(seed), 8, 14),
        ));
    }
    out
}

/// Wrapper answers versus explicit materializations for all transforms.
pub fn suite_transforms() -> SuiteOutcome {
    let name = "transform fidelity";
    let mut checked = 0;
    let mut failures: Vec<String> = Vec::new();
    for (label, g) in transform_matrix() {
        let d = g.max_degree().max(1);
        for eps in [0.5, 0.3, 0.9] {
            for dd in [d, d + 1, 2 * d + 3] {
                if let Ok(t) = MaxDegreeShadow::new(&g, dd, eps) {
                    checked += 1;
                    let x = explicit::max_degree(&g, dd, eps);
                    record(&mut failures, &label, "max-deg", &t, x);
                }
            }
            for dbar in [1, 2, 3] {
                checked += 1;
                let t = AverageDegreeShadow::new(&g, dbar, eps).expect("valid parameters");
                let x = explicit::average_degree(&g, dbar, eps);
                record(&mut failures, &label, "avg-deg", &t, x);
            }
            let gp = g.clone().with_pair_index();
            checked += 1;
            let t = DenseAdapter::new(&gp, eps).expect("pair index present");
            let x = explicit::dense(&gp, eps);
            record(&mut failures, &label, "dense", &t, x);
        }
    }
    SuiteOutcome {
        name,
        passed: failures.is_empty(),
        checked,
        detail: failures.first().cloned().unwrap_or_else(|| "all slot diffs empty".into()),
        counterexample: None,
    }
}

fn record<W: GraphAccess>(
    failures: &mut Vec<String>,
    label: &str,
    kind: &str,
    wrapper: &W,
    explicit: Result<MultiGraph>,
) {
    match explicit {
        Ok(x) => {
            let diff = explicit::diff(wrapper, &x);
            if let Some(first) = diff.first() {
                failures.push(format!("{kind} on {label}: {first}"));
            }
        }
        Err(e) => failures.push(format!("{kind} on {label}: {e}")),
    }
}

/// The equivalence suite must catch an oracle whose merge ignores the
/// interval level.
pub fn suite_mutation(level: Level) -> SuiteOutcome {
    let name = "mutation detection";
    let scale = EquivalenceScale::for_level(level);
    let outcome = suite_equivalence(&scale, true);
    let small = outcome
        .counterexample
        .as_ref()
        .map(|c| c.graph.lines().next().unwrap_or("").to_string());
    let caught = !outcome.passed;
    let n: Option<usize> = small
        .as_ref()
        .and_then(|h| h.split_whitespace().next())
        .and_then(|x| x.parse().ok());
    SuiteOutcome {
        name,
        passed: caught && n.is_some_and(|n| n <= 10),
        checked: outcome.checked,
        detail: match n {
            Some(n) => format!("injected merge fault caught, counterexample has {n} vertices"),
            None => "injected merge fault went undetected".into(),
        },
        counterexample: None,
    }
}

/// All suites at the given scale, in a fixed order.
pub fn run_all(level: Level) -> Vec<SuiteOutcome> {
    let (sandwich, tv_k) = match level {
        Level::Quick => (100, 16),
        Level::Full => (500, 32),
    };
    vec![
        suite_equivalence(&EquivalenceScale::for_level(level), false),
        suite_sandwich(sandwich, 16),
        suite_binomial(tv_k, &[(1, 4), (1, 3), (1, 2), (3, 4)], &[100, 1000]),
        suite_transforms(),
        suite_mutation(Level::Quick),
    ]
}

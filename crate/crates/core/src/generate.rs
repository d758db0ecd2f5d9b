//! Synthetic graph families.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::graph::{MultiGraph, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Regular,
    Gnp,
    Star,
    Path,
    Cycle,
    Complete,
    CompleteBipartite,
    Matching,
    Empty,
    LbFamily,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::Regular,
        Family::Gnp,
        Family::Star,
        Family::Path,
        Family::Cycle,
        Family::Complete,
        Family::CompleteBipartite,
        Family::Matching,
        Family::Empty,
        Family::LbFamily,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Regular => "regular",
            Family::Gnp => "gnp",
            Family::Star => "star",
            Family::Path => "path",
            Family::Cycle => "cycle",
            Family::Complete => "complete",
            Family::CompleteBipartite => "complete-bipartite",
            Family::Matching => "matching",
            Family::Empty => "empty",
            Family::LbFamily => "lb-family",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown graph family `{s}`")))
    }
}

/// A generator invocation, written as `family:key=value,...`, for example
/// `regular:n=1000,d=10,seed=7`.
///
/// Keys: `n` (vertices), `d` (regular degree), `p` (edge probability),
/// `a`/`b` (bipartite part sizes), `simple` (0/1, loop- and
/// parallel-free regular graphs), `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub n: usize,
    pub d: Option<usize>,
    pub p: Option<f64>,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub simple: bool,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        GenSpec {
            family,
            n,
            d: None,
            p: None,
            a: None,
            b: None,
            simple: false,
            seed,
        }
    }

    pub fn regular(n: usize, d: usize, seed: u64) -> Self {
        GenSpec {
            d: Some(d),
            ..GenSpec::new(Family::Regular, n, seed)
        }
    }

    pub fn simple_regular(n: usize, d: usize, seed: u64) -> Self {
        GenSpec {
            simple: true,
            ..GenSpec::regular(n, d, seed)
        }
    }

    pub fn gnp(n: usize, p: f64, seed: u64) -> Self {
        GenSpec {
            p: Some(p),
            ..GenSpec::new(Family::Gnp, n, seed)
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GenSpec {
            seed,
            ..self.clone()
        }
    }

    fn need<T: Copy>(&self, v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| Error::Input(format!("{} generator needs `{key}=`", self.family)))
    }

    pub fn generate(&self) -> Result<MultiGraph> {
        let n = self.n;
        match self.family {
            Family::Regular => {
                let d = self.need(self.d, "d")?;
                if self.simple {
                    gen_simple_regular(n, d, self.seed)
                } else {
                    gen_regular(n, d, self.seed)
                }
            }
            Family::Gnp => gen_gnp(n, self.need(self.p, "p")?, self.seed),
            Family::Star => star(n),
            Family::Path => path(n),
            Family::Cycle => cycle(n),
            Family::Complete => complete(n),
            Family::CompleteBipartite => {
                let a = self.need(self.a, "a")?;
                let b = self.b.unwrap_or(n.saturating_sub(a));
                complete_bipartite(a, b)
            }
            Family::Matching => matching(n),
            Family::Empty => MultiGraph::from_edges(n, &[]),
            Family::LbFamily => gen_lb_family(n, self.seed),
        }
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:n={}", self.family, self.n)?;
        if let Some(d) = self.d {
            write!(f, ",d={d}")?;
        }
        if let Some(p) = self.p {
            write!(f, ",p={p}")?;
        }
        if let Some(a) = self.a {
            write!(f, ",a={a}")?;
        }
        if let Some(b) = self.b {
            write!(f, ",b={b}")?;
        }
        if self.simple {
            write!(f, ",simple=1")?;
        }
        write!(f, ",seed={}", self.seed)
    }
}

impl FromStr for GenSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let family: Family = family.trim().parse()?;
        let mut spec = GenSpec::new(family, 0, 0);
        let mut have_n = false;
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("expected key=value, got `{kv}`")))?;
            let bad = || Error::Input(format!("bad value for `{k}`: `{v}`"));
            match k.trim() {
                "n" => {
                    spec.n = v.parse().map_err(|_| bad())?;
                    have_n = true;
                }
                "d" => spec.d = Some(v.parse().map_err(|_| bad())?),
                "p" => spec.p = Some(v.parse().map_err(|_| bad())?),
                "a" => spec.a = Some(v.parse().map_err(|_| bad())?),
                "b" => spec.b = Some(v.parse().map_err(|_| bad())?),
                "seed" => spec.seed = v.parse().map_err(|_| bad())?,
                "simple" => {
                    spec.simple = match v {
                        "1" | "true" => true,
                        "0" | "false" => false,
                        _ => return input(format!("bad value for `simple`: `{v}`")),
                    }
                }
                other => return input(format!("unknown generator key `{other}`")),
            }
        }
        if !have_n {
            if let (Family::CompleteBipartite, Some(a), Some(b)) = (family, spec.a, spec.b) {
                spec.n = a + b;
            } else {
                return input(format!("{family} generator needs `n=`"));
            }
        }
        Ok(spec)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Configuration model: `nd` stubs paired uniformly at random. Loops and
/// parallel edges are kept, so a vertex with a loop has stub degree `d` but
/// only `d - 1` slots.
pub fn gen_regular(n: usize, d: usize, seed: u64) -> Result<MultiGraph> {
    if (n * d) % 2 != 0 {
        return input(format!("regular graph needs n*d even (n = {n}, d = {d})"));
    }
    let mut stubs: Vec<Vertex> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    stubs.shuffle(&mut rng(seed));
    let edges: Vec<_> = stubs.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    MultiGraph::from_edges(n, &edges)
}

/// Uniform-ish simple `d`-regular graph by sequential stub pairing that
/// rejects loops and repeated pairs, restarting when stuck.
pub fn gen_simple_regular(n: usize, d: usize, seed: u64) -> Result<MultiGraph> {
    if (n * d) % 2 != 0 {
        return input(format!("regular graph needs n*d even (n = {n}, d = {d})"));
    }
    if d >= n && d > 0 {
        return input(format!("simple {d}-regular graph needs n > d (n = {n})"));
    }
    let mut r = rng(seed);
    'attempt: for _ in 0..1000 {
        let mut stubs: Vec<Vertex> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut present: FxHashSet<(Vertex, Vertex)> = FxHashSet::default();
        let mut edges = Vec::with_capacity(n * d / 2);
        while !stubs.is_empty() {
            let mut misses = 0;
            let (i, j) = loop {
                let i = r.random_range(0..stubs.len());
                let j = r.random_range(0..stubs.len());
                let (u, w) = (stubs[i], stubs[j]);
                if u != w && !present.contains(&(u.min(w), u.max(w))) {
                    break (i, j);
                }
                misses += 1;
                if misses > 64 {
                    let ok: Vec<(usize, usize)> = (0..stubs.len())
                        .flat_map(|i| (i + 1..stubs.len()).map(move |j| (i, j)))
                        .filter(|&(i, j)| {
                            let (u, w) = (stubs[i], stubs[j]);
                            u != w && !present.contains(&(u.min(w), u.max(w)))
                        })
                        .collect();
                    if ok.is_empty() {
                        continue 'attempt;
                    }
                    break ok[r.random_range(0..ok.len())];
                }
            };
            let (u, w) = (stubs[i], stubs[j]);
            present.insert((u.min(w), u.max(w)));
            edges.push((u, w));
            let (hi, lo) = (i.max(j), i.min(j));
            stubs.swap_remove(hi);
            stubs.swap_remove(lo);
        }
        return MultiGraph::from_edges(n, &edges);
    }
    Err(Error::State(format!("no simple {d}-regular graph found on {n} vertices")))
}

/// Erdős–Rényi `G(n, p)` by geometric skipping over the vertex pairs.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<MultiGraph> {
    if !(0.0..=1.0).contains(&p) {
        return input(format!("edge probability must lie in [0, 1], got {p}"));
    }
    if p == 0.0 || n < 2 {
        return MultiGraph::from_edges(n, &[]);
    }
    if p == 1.0 {
        return complete(n);
    }
    let mut r = rng(seed);
    let lp = (1.0 - p).ln();
    let mut edges = Vec::new();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let u: f64 = r.random();
        w += 1 + ((1.0 - u).ln() / lp).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((w as usize, v));
        }
    }
    MultiGraph::from_edges(n, &edges)
}

/// Star with center 0 and `n - 1` leaves.
pub fn star(n: usize) -> Result<MultiGraph> {
    let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
    MultiGraph::from_edges(n.max(1), &edges)
}

pub fn path(n: usize) -> Result<MultiGraph> {
    let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    MultiGraph::from_edges(n, &edges)
}

pub fn cycle(n: usize) -> Result<MultiGraph> {
    if n < 3 {
        return input(format!("cycle needs n >= 3, got {n}"));
    }
    let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
    MultiGraph::from_edges(n, &edges)
}

pub fn complete(n: usize) -> Result<MultiGraph> {
    let edges: Vec<_> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    MultiGraph::from_edges(n, &edges)
}

/// `K_{a,b}` with parts `[0, a)` and `[a, a + b)`.
pub fn complete_bipartite(a: usize, b: usize) -> Result<MultiGraph> {
    let edges: Vec<_> = (0..a)
        .flat_map(|u| (a..a + b).map(move |v| (u, v)))
        .collect();
    MultiGraph::from_edges(a + b, &edges)
}

/// `n / 2` disjoint edges.
pub fn matching(n: usize) -> Result<MultiGraph> {
    if n % 2 != 0 {
        return input(format!("perfect matching needs even n, got {n}"));
    }
    let edges: Vec<_> = (0..n / 2).map(|i| (2 * i, 2 * i + 1)).collect();
    MultiGraph::from_edges(n, &edges)
}

/// Member of the hard family: `K_{n/4, 3n/4}` on `L = [0, n/4)` and
/// `R = [n/4, n)` with edges `(u_L, u_R)` and `(v_L, v_R)` replaced by
/// `(u_L, v_L)` and `(u_R, v_R)`, and every adjacency list shuffled.
pub fn gen_lb_family(n: usize, seed: u64) -> Result<MultiGraph> {
    if n % 4 != 0 || n < 8 {
        return input(format!("lower-bound family needs n divisible by 4 and n >= 8, got {n}"));
    }
    let mut r = rng(seed);
    let q = n / 4;
    let pick_two = |r: &mut ChaCha8Rng, lo: usize, hi: usize| {
        let a = r.random_range(lo..hi);
        let mut b = r.random_range(lo..hi - 1);
        if b >= a {
            b += 1;
        }
        (a, b)
    };
    let (ul, vl) = pick_two(&mut r, 0, q);
    let (ur, vr) = pick_two(&mut r, q, n);
    let mut edges = Vec::with_capacity(3 * q * q);
    for l in 0..q {
        for rr in q..n {
            if (l, rr) != (ul, ur) && (l, rr) != (vl, vr) {
                edges.push((l, rr));
            }
        }
    }
    edges.push((ul, vl));
    edges.push((ur, vr));
    let mut g = MultiGraph::from_edges(n, &edges)?;
    g.shuffle_slots(&mut r);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stub_degrees(g: &MultiGraph) -> Vec<usize> {
        let mut d = vec![0; g.n()];
        for (u, v) in g.edges() {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    #[test]
    fn spec_strings_round_trip() {
        let s: GenSpec = "regular:n=1000,d=10,seed=7".parse().unwrap();
        assert_eq!(s, GenSpec::regular(1000, 10, 7));
        assert_eq!(s.to_string().parse::<GenSpec>().unwrap(), s);
        let s: GenSpec = "complete-bipartite:a=2,b=3".parse().unwrap();
        assert_eq!(s.n, 5);
        assert!("regular:d=3".parse::<GenSpec>().is_err());
        assert!("hypercube:n=8".parse::<GenSpec>().is_err());
        assert!("gnp:n=8,p=x".parse::<GenSpec>().is_err());
        assert!("gnp:n=8,q=1".parse::<GenSpec>().is_err());
    }

    #[test]
    fn regular_stub_degrees() {
        let g = gen_regular(100, 3, 1).unwrap();
        assert!(stub_degrees(&g).iter().all(|&d| d == 3));
        assert!(gen_regular(5, 3, 1).is_err());
        let h = gen_regular(100, 3, 1).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn simple_regular_has_exact_slot_degrees() {
        for (n, d) in [(10, 3), (50, 8), (200, 16)] {
            let g = gen_simple_regular(n, d, 5).unwrap();
            assert_eq!(g.loop_count(), 0);
            let mut seen = FxHashSet::default();
            for (u, v) in g.edges() {
                assert!(seen.insert((u.min(v), u.max(v))));
            }
            assert!((0..n).all(|v| g.deg(v) == d));
        }
        assert!(gen_simple_regular(4, 4, 1).is_err());
    }

    #[test]
    fn gnp_edge_count_window() {
        assert_eq!(gen_gnp(50, 0.0, 1).unwrap().edge_count(), 0);
        assert_eq!(gen_gnp(6, 1.0, 1).unwrap().edge_count(), 15);
        let g = gen_gnp(400, 0.1, 3).unwrap();
        // mean 7980, sd ~ 85
        let m = g.edge_count() as f64;
        assert!((m - 7980.0).abs() < 500.0, "{m}");
        assert_eq!(g.loop_count(), 0);
        let mut seen = FxHashSet::default();
        for (u, v) in g.edges() {
            assert!(u < v && seen.insert((u, v)));
        }
    }

    #[test]
    fn named_families() {
        assert_eq!(complete(5).unwrap().edge_count(), 10);
        assert_eq!(star(6).unwrap().deg(0), 5);
        assert_eq!(path(4).unwrap().edge_count(), 3);
        assert_eq!(cycle(5).unwrap().edge_count(), 5);
        assert_eq!(complete_bipartite(2, 3).unwrap().edge_count(), 6);
        assert_eq!(matching(6).unwrap().edge_count(), 3);
        assert!(matching(5).is_err());
        let g = GenSpec::new(Family::Empty, 3, 0).generate().unwrap();
        assert_eq!((g.n(), g.edge_count()), (3, 0));
    }

    #[test]
    fn lb_family_shape() {
        for n in [8, 16, 32] {
            let g = gen_lb_family(n, 11).unwrap();
            assert_eq!(g.edge_count(), 3 * n * n / 16);
            let q = n / 4;
            assert!((0..q).all(|v| g.deg(v) == 3 * n / 4));
            assert!((q..n).all(|v| g.deg(v) == n / 4));
            assert_eq!(g.loop_count(), 0);
            let intra = g.edges().filter(|&(u, v)| (u < q) == (v < q)).count();
            assert_eq!(intra, 2);
        }
        assert!(gen_lb_family(10, 1).is_err());
        assert!(gen_lb_family(4, 1).is_err());
    }
}

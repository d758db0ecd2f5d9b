//! Multigraph storage and the query-access abstraction.
//!
//! Algorithms never touch adjacency arrays directly. They go through
//! [`GraphAccess`], which exposes exactly the three query kinds of the
//! sublinear query model (degree, i-th neighbor, vertex pair) and charges
//! every call to a caller-owned [`QueryStats`].

use std::fmt::Write as _;
use std::ops::{Add, Sub};

use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

pub type Vertex = usize;

/// One entry of a vertex's adjacency list.
///
/// `reciprocal` is the 1-based index of the same edge in `other`'s list.
/// For a self-loop `other` is the vertex itself and `reciprocal` is the
/// slot's own index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub other: Vertex,
    pub reciprocal: usize,
    pub edge: usize,
}

/// Per-run query counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    pub degree_queries: u64,
    pub neighbor_queries: u64,
    pub pair_queries: u64,
}

impl QueryStats {
    pub fn total(&self) -> u64 {
        self.degree_queries + self.neighbor_queries + self.pair_queries
    }

    pub fn reset(&mut self) {
        *self = QueryStats::default();
    }
}

impl Add for QueryStats {
    type Output = QueryStats;
    fn add(self, rhs: QueryStats) -> QueryStats {
        QueryStats {
            degree_queries: self.degree_queries + rhs.degree_queries,
            neighbor_queries: self.neighbor_queries + rhs.neighbor_queries,
            pair_queries: self.pair_queries + rhs.pair_queries,
        }
    }
}

impl Sub for QueryStats {
    type Output = QueryStats;
    fn sub(self, rhs: QueryStats) -> QueryStats {
        QueryStats {
            degree_queries: self.degree_queries - rhs.degree_queries,
            neighbor_queries: self.neighbor_queries - rhs.neighbor_queries,
            pair_queries: self.pair_queries - rhs.pair_queries,
        }
    }
}

/// Query access to a (possibly virtual) multigraph.
///
/// Slot indices are 1-based. Implementations charge the queries they issue
/// against the *underlying* stored graph to `stats`; wrappers that answer a
/// query from parameters alone charge nothing.
pub trait GraphAccess {
    /// Size of the vertex-id space. Ids in `[0, vertex_count())` are valid.
    fn vertex_count(&self) -> usize;

    /// Upper bound on every vertex degree, used to size the rank intervals.
    fn degree_bound(&self) -> usize;

    fn degree(&self, v: Vertex, stats: &mut QueryStats) -> Result<usize>;

    fn neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Slot>;

    /// Like [`GraphAccess::neighbor`] but reports an index past the end of
    /// the list as `None` instead of an error. Still one neighbor query.
    fn try_neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Option<Slot>>;

    fn pair(&self, u: Vertex, v: Vertex, stats: &mut QueryStats) -> Result<bool>;

    fn supports_pair_queries(&self) -> bool {
        true
    }

    /// Exclusive upper bound on the edge ids this graph reports.
    fn edge_id_bound(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PackedSlot {
    other: u32,
    reciprocal: u32,
    edge: u32,
}

impl PackedSlot {
    fn unpack(self) -> Slot {
        Slot {
            other: self.other as usize,
            reciprocal: self.reciprocal as usize,
            edge: self.edge as usize,
        }
    }
}

/// Immutable adjacency-list multigraph with parallel edges and self-loops.
///
/// A self-loop occupies a single slot at its vertex. Slots are stored in a
/// compressed row layout, in construction order.
#[derive(Debug, Clone)]
pub struct MultiGraph {
    n: usize,
    offsets: Vec<usize>,
    slots: Vec<PackedSlot>,
    endpoints: Vec<(u32, u32)>,
    max_degree: usize,
    pair_index: Option<FxHashSet<(u32, u32)>>,
}

impl PartialEq for MultiGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.offsets == other.offsets
            && self.slots == other.slots
            && self.endpoints == other.endpoints
    }
}

impl Eq for MultiGraph {}

fn check_capacity(n: usize, m: usize) -> Result<()> {
    if n > u32::MAX as usize || m > u32::MAX as usize {
        return input(format!("graph too large: n={n}, m={m}"));
    }
    Ok(())
}

impl MultiGraph {
    /// Builds a graph from an edge list. Slots are appended in list order.
    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        check_capacity(n, edges.len())?;
        let mut degree = vec![0usize; n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return input(format!("edge {e} = ({u}, {v}) has an endpoint >= n = {n}"));
            }
            degree[u] += 1;
            if u != v {
                degree[v] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut slots = vec![
            PackedSlot {
                other: 0,
                reciprocal: 0,
                edge: 0
            };
            total
        ];
        let mut fill = vec![0usize; n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            let iu = fill[u];
            fill[u] += 1;
            if u == v {
                slots[offsets[u] + iu] = PackedSlot {
                    other: u as u32,
                    reciprocal: (iu + 1) as u32,
                    edge: e as u32,
                };
                continue;
            }
            let iv = fill[v];
            fill[v] += 1;
            slots[offsets[u] + iu] = PackedSlot {
                other: v as u32,
                reciprocal: (iv + 1) as u32,
                edge: e as u32,
            };
            slots[offsets[v] + iv] = PackedSlot {
                other: u as u32,
                reciprocal: (iu + 1) as u32,
                edge: e as u32,
            };
        }
        let endpoints = edges.iter().map(|&(u, v)| (u as u32, v as u32)).collect();
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        Ok(MultiGraph {
            n,
            offsets,
            slots,
            endpoints,
            max_degree,
            pair_index: None,
        })
    }

    /// Builds a graph from explicit per-vertex slot lists.
    ///
    /// Each entry is `(other endpoint, tag)`; the two occurrences of a
    /// non-loop edge carry the same tag, a self-loop's tag occurs once.
    /// Edge ids are assigned in order of first appearance.
    pub fn from_slot_lists(lists: &[Vec<(Vertex, u64)>]) -> Result<Self> {
        let n = lists.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for l in lists {
            offsets.push(offsets.last().unwrap() + l.len());
        }
        let total = *offsets.last().unwrap();
        check_capacity(n, total)?;
        let mut first_seen: FxHashMap<u64, (Vertex, usize, usize)> = FxHashMap::default();
        let mut slots = Vec::with_capacity(total);
        let mut endpoints: Vec<(u32, u32)> = Vec::new();
        let mut pending: Vec<Option<(Vertex, usize)>> = Vec::new();
        for (v, list) in lists.iter().enumerate() {
            for (i, &(w, tag)) in list.iter().enumerate() {
                if w >= n {
                    return input(format!("slot {} of vertex {v} points to {w} >= n", i + 1));
                }
                if w == v {
                    if first_seen.contains_key(&tag) {
                        return input(format!("loop tag {tag} reused at vertex {v}"));
                    }
                    let e = endpoints.len();
                    endpoints.push((v as u32, v as u32));
                    pending.push(None);
                    first_seen.insert(tag, (v, i, e));
                    slots.push(PackedSlot {
                        other: v as u32,
                        reciprocal: (i + 1) as u32,
                        edge: e as u32,
                    });
                    continue;
                }
                match first_seen.get(&tag).copied() {
                    None => {
                        let e = endpoints.len();
                        endpoints.push((v as u32, w as u32));
                        pending.push(Some((v, i)));
                        first_seen.insert(tag, (v, i, e));
                        slots.push(PackedSlot {
                            other: w as u32,
                            reciprocal: 0,
                            edge: e as u32,
                        });
                    }
                    Some((u, iu, e)) => {
                        if u != w || pending[e].is_none() || endpoints[e] != (w as u32, v as u32) {
                            return input(format!("tag {tag} at vertex {v} does not close edge {e}"));
                        }
                        pending[e] = None;
                        slots.push(PackedSlot {
                            other: w as u32,
                            reciprocal: (iu + 1) as u32,
                            edge: e as u32,
                        });
                        slots[offsets[u] + iu].reciprocal = (i + 1) as u32;
                    }
                }
            }
        }
        if let Some(e) = pending.iter().position(Option::is_some) {
            return input(format!("edge {e} has only one endpoint slot"));
        }
        let max_degree = lists.iter().map(Vec::len).max().unwrap_or(0);
        Ok(MultiGraph {
            n,
            offsets,
            slots,
            endpoints,
            max_degree,
            pair_index: None,
        })
    }

    /// Adds the adjacency-set index that answers pair queries.
    pub fn with_pair_index(mut self) -> Self {
        let mut set = FxHashSet::default();
        for &(u, v) in &self.endpoints {
            set.insert((u.min(v), u.max(v)));
        }
        self.pair_index = Some(set);
        self
    }

    pub fn has_pair_index(&self) -> bool {
        self.pair_index.is_some()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn loop_count(&self) -> usize {
        self.endpoints.iter().filter(|(u, v)| u == v).count()
    }

    /// Endpoints of edge `e` in construction order.
    pub fn endpoints(&self, e: usize) -> (Vertex, Vertex) {
        let (u, v) = self.endpoints[e];
        (u as usize, v as usize)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.endpoints.iter().map(|&(u, v)| (u as usize, v as usize))
    }

    /// Uncounted degree lookup for baselines and test harnesses.
    pub fn deg(&self, v: Vertex) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Uncounted view of a vertex's slots for baselines and test harnesses.
    pub fn slots(&self, v: Vertex) -> impl ExactSizeIterator<Item = Slot> + '_ {
        self.slots[self.offsets[v]..self.offsets[v + 1]]
            .iter()
            .map(|s| s.unpack())
    }

    /// Whether every vertex lists its slots in ascending edge-id order,
    /// which is the order `parse_graph` produces.
    pub fn in_edge_order(&self) -> bool {
        (0..self.n).all(|v| {
            let s = &self.slots[self.offsets[v]..self.offsets[v + 1]];
            s.windows(2).all(|w| w[0].edge < w[1].edge)
        })
    }

    /// Shuffles every adjacency list independently, keeping reciprocal
    /// indices consistent.
    pub fn shuffle_slots<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut new_pos: Vec<u32> = vec![0; self.slots.len()];
        for v in 0..self.n {
            let (lo, hi) = (self.offsets[v], self.offsets[v + 1]);
            let mut perm: Vec<u32> = (0..(hi - lo) as u32).collect();
            perm.shuffle(rng);
            new_pos[lo..hi].copy_from_slice(&perm);
        }
        let mut out = self.slots.clone();
        for v in 0..self.n {
            let lo = self.offsets[v];
            for i in 0..self.deg(v) {
                let old = self.slots[lo + i];
                let w = old.other as usize;
                let reciprocal = if w == v {
                    new_pos[lo + i] + 1
                } else {
                    new_pos[self.offsets[w] + old.reciprocal as usize - 1] + 1
                };
                out[lo + new_pos[lo + i] as usize] = PackedSlot {
                    other: old.other,
                    reciprocal,
                    edge: old.edge,
                };
            }
        }
        self.slots = out;
    }

    /// Stable text serialization: header `n m`, then one `u v` line per edge
    /// in edge-id order.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(16 + 12 * self.endpoints.len());
        let _ = writeln!(s, "{} {}", self.n, self.endpoints.len());
        for &(u, v) in &self.endpoints {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v >= self.n {
            return input(format!("vertex {v} out of range (n = {})", self.n));
        }
        Ok(())
    }
}

impl GraphAccess for MultiGraph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn degree_bound(&self) -> usize {
        self.max_degree
    }

    fn degree(&self, v: Vertex, stats: &mut QueryStats) -> Result<usize> {
        self.check_vertex(v)?;
        stats.degree_queries += 1;
        Ok(self.deg(v))
    }

    fn neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Slot> {
        match self.try_neighbor(v, i, stats)? {
            Some(s) => Ok(s),
            None => input(format!("slot {i} of vertex {v} out of range (degree {})", self.deg(v))),
        }
    }

    fn try_neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Option<Slot>> {
        self.check_vertex(v)?;
        if i == 0 {
            return input("slot indices are 1-based");
        }
        stats.neighbor_queries += 1;
        if i > self.deg(v) {
            return Ok(None);
        }
        Ok(Some(self.slots[self.offsets[v] + i - 1].unpack()))
    }

    fn pair(&self, u: Vertex, v: Vertex, stats: &mut QueryStats) -> Result<bool> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let index = self
            .pair_index
            .as_ref()
            .ok_or_else(|| Error::State("graph was built without a pair-query index".into()))?;
        stats.pair_queries += 1;
        Ok(index.contains(&(u.min(v) as u32, u.max(v) as u32)))
    }

    fn supports_pair_queries(&self) -> bool {
        self.pair_index.is_some()
    }

    fn edge_id_bound(&self) -> usize {
        self.endpoints.len()
    }
}

/// Parses the plain-text edge-list format: a header line `n m` followed by
/// exactly `m` lines `u v`. Blank lines are ignored.
pub fn parse_graph(text: &str) -> Result<MultiGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header `n m`".into(),
    })?;
    let (n, m) = parse_pair(hline, header)?;
    let mut edges = Vec::with_capacity(m.min(1 << 24));
    for (line, l) in lines {
        if edges.len() == m {
            return Err(Error::Parse {
                line,
                message: format!("more than the declared {m} edges"),
            });
        }
        let (u, v) = parse_pair(line, l)?;
        if u >= n || v >= n {
            return Err(Error::Parse {
                line,
                message: format!("vertex out of range: ({u}, {v}) with n = {n}"),
            });
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!("expected {m} edges, found {}", edges.len()),
        });
    }
    MultiGraph::from_edges(n, &edges)
}

fn parse_pair(line: usize, l: &str) -> Result<(usize, usize)> {
    let mut it = l.split_whitespace();
    let bad = |what: &str| Error::Parse {
        line,
        message: format!("{what}: `{l}`"),
    };
    let a = it.next().ok_or_else(|| bad("expected two integers"))?;
    let b = it.next().ok_or_else(|| bad("expected two integers"))?;
    if it.next().is_some() {
        return Err(bad("trailing tokens"));
    }
    let a = a.parse::<usize>().map_err(|_| bad("not a non-negative integer"))?;
    let b = b.parse::<usize>().map_err(|_| bad("not a non-negative integer"))?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k(n: usize) -> MultiGraph {
        let mut e = vec![];
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        MultiGraph::from_edges(n, &e).unwrap()
    }

    #[test]
    fn degree_examples() {
        let mut st = QueryStats::default();
        let g = MultiGraph::from_edges(3, &[(1, 1)]).unwrap();
        assert_eq!(g.degree(0, &mut st).unwrap(), 0);
        assert_eq!(g.degree(1, &mut st).unwrap(), 1);
        let t = k(3);
        for v in 0..3 {
            assert_eq!(t.degree(v, &mut st).unwrap(), 2);
        }
        assert_eq!(st.degree_queries, 5);
        assert!(matches!(t.degree(3, &mut st), Err(Error::Input(_))));
        assert_eq!(st.degree_queries, 5);
    }

    #[test]
    fn neighbor_examples() {
        let mut st = QueryStats::default();
        let g = MultiGraph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(
            g.neighbor(0, 1, &mut st).unwrap(),
            Slot { other: 1, reciprocal: 1, edge: 0 }
        );
        let l = MultiGraph::from_edges(1, &[(0, 0)]).unwrap();
        assert_eq!(
            l.neighbor(0, 1, &mut st).unwrap(),
            Slot { other: 0, reciprocal: 1, edge: 0 }
        );
        let p = MultiGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(
            p.neighbor(1, 2, &mut st).unwrap(),
            Slot { other: 2, reciprocal: 1, edge: 1 }
        );
        assert!(p.neighbor(1, 3, &mut st).is_err());
        assert!(p.neighbor(1, 0, &mut st).is_err());
        assert_eq!(p.try_neighbor(1, 3, &mut st).unwrap(), None);
        assert_eq!(st.neighbor_queries, 5);
    }

    #[test]
    fn pair_examples() {
        let mut st = QueryStats::default();
        assert!(k(4).with_pair_index().pair(0, 3, &mut st).unwrap());
        let e = MultiGraph::from_edges(2, &[]).unwrap().with_pair_index();
        assert!(!e.pair(0, 1, &mut st).unwrap());
        let l = MultiGraph::from_edges(3, &[(2, 2)]).unwrap().with_pair_index();
        assert!(l.pair(2, 2, &mut st).unwrap());
        assert!(!l.pair(1, 1, &mut st).unwrap());
        assert_eq!(st.pair_queries, 4);
        assert!(matches!(k(3).pair(0, 1, &mut st), Err(Error::State(_))));
        assert!(l.pair(0, 3, &mut st).is_err());
    }

    #[test]
    fn parse_examples() {
        let g = parse_graph("2 1\n0 1").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.deg(0), 1);
        let g = parse_graph("1 2\n0 0\n0 0\n").unwrap();
        assert_eq!(g.deg(0), 2);
        let g = parse_graph("3 0").unwrap();
        assert_eq!((g.n(), g.edge_count()), (3, 0));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("", 1),
            ("2 1\n0 x", 2),
            ("2 1\n0 2", 2),
            ("3 2\n0 1", 2),
            ("3 1\n0 1\n1 2", 3),
            ("3 1\n0 1 2", 2),
            ("3", 1),
        ];
        for (text, line) in cases {
            match parse_graph(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn scripted_query_counts() {
        let g = k(4).with_pair_index();
        let mut st = QueryStats::default();
        for v in 0..4 {
            g.degree(v, &mut st).unwrap();
            for i in 1..=3 {
                g.neighbor(v, i, &mut st).unwrap();
            }
        }
        g.pair(0, 1, &mut st).unwrap();
        g.pair(2, 2, &mut st).unwrap();
        assert_eq!(
            st,
            QueryStats { degree_queries: 4, neighbor_queries: 12, pair_queries: 2 }
        );
        st.reset();
        assert_eq!(st.total(), 0);
    }

    #[test]
    fn slot_lists_round_trip() {
        let g = MultiGraph::from_edges(4, &[(0, 1), (1, 1), (1, 2), (0, 1), (3, 3)]).unwrap();
        let lists: Vec<Vec<(usize, u64)>> = (0..4)
            .map(|v| g.slots(v).map(|s| (s.other, s.edge as u64)).collect())
            .collect();
        let h = MultiGraph::from_slot_lists(&lists).unwrap();
        for v in 0..4 {
            let a: Vec<_> = g.slots(v).map(|s| (s.other, s.reciprocal)).collect();
            let b: Vec<_> = h.slots(v).map(|s| (s.other, s.reciprocal)).collect();
            assert_eq!(a, b);
        }
        assert!(MultiGraph::from_slot_lists(&[vec![(1, 7)], vec![]]).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (1usize..9).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..24)))
    }

    proptest! {
        #[test]
        fn reciprocity_and_degree_sum((n, edges) in arb_graph(), seed in any::<u64>()) {
            let mut g = MultiGraph::from_edges(n, &edges).unwrap();
            if seed % 2 == 1 {
                g.shuffle_slots(&mut ChaCha8Rng::seed_from_u64(seed));
            }
            let mut st = QueryStats::default();
            let mut sum = 0;
            for v in 0..n {
                let d = g.degree(v, &mut st).unwrap();
                sum += d;
                for i in 1..=d {
                    let s = g.neighbor(v, i, &mut st).unwrap();
                    if s.other == v {
                        prop_assert_eq!(s.reciprocal, i);
                    } else {
                        let back = g.neighbor(s.other, s.reciprocal, &mut st).unwrap();
                        prop_assert_eq!(back, Slot { other: v, reciprocal: i, edge: s.edge });
                    }
                }
            }
            let loops = g.loop_count();
            prop_assert_eq!(sum, 2 * (edges.len() - loops) + loops);
        }

        #[test]
        fn text_round_trip((n, edges) in arb_graph()) {
            let g = MultiGraph::from_edges(n, &edges).unwrap();
            prop_assert!(g.in_edge_order());
            let h = parse_graph(&g.to_text()).unwrap();
            prop_assert_eq!(g, h);
        }
    }
}

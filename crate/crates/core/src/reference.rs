//! Exhaustive reference path over an explicit ranking.
//!
//! Used to cross-check the lazy oracles: the ranking produced lazily is
//! turned into an explicit permutation of edge ids, and the matching
//! definition is then evaluated directly on it.

use rustc_hash::FxHashSet;

use crate::error::{input, Error, Result};
use crate::graph::{GraphAccess, MultiGraph, Vertex};
use crate::rank::{RankEngine, RankValue};

/// A bijection from edge ids to ranks `1..=m`. Smaller rank means earlier in
/// the greedy order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    rank: Vec<usize>,
}

impl Ranking {
    pub fn new(rank: Vec<usize>) -> Result<Self> {
        let m = rank.len();
        let mut seen = vec![false; m];
        for (e, &r) in rank.iter().enumerate() {
            if r == 0 || r > m || seen[r - 1] {
                return input(format!("rank {r} of edge {e} breaks the bijection onto 1..={m}"));
            }
            seen[r - 1] = true;
        }
        Ok(Ranking { rank })
    }

    /// Ranks edges in id order.
    pub fn identity(m: usize) -> Self {
        Ranking {
            rank: (1..=m).collect(),
        }
    }

    pub fn rank(&self, e: usize) -> usize {
        self.rank[e]
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// Edge ids in increasing rank order.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.rank.len()];
        for (e, &r) in self.rank.iter().enumerate() {
            order[r - 1] = e;
        }
        order
    }
}

/// Greedy maximal matching in rank order. Returns `(|M|, |C|)` where `C` is
/// the set of matched vertices; a self-loop is matched when its vertex is
/// free and covers that single vertex.
pub fn greedy_matching(g: &MultiGraph, pi: &Ranking) -> (usize, usize) {
    let mut used = vec![false; g.n()];
    let mut matched = 0;
    let mut covered = 0;
    for e in pi.order() {
        let (u, v) = g.endpoints(e);
        if used[u] || used[v] {
            continue;
        }
        matched += 1;
        used[u] = true;
        covered += 1;
        if u != v {
            used[v] = true;
            covered += 1;
        }
    }
    (matched, covered)
}

/// Matched flag of every edge, by direct recursion on the definition.
pub struct ReferenceOracle<'a> {
    g: &'a MultiGraph,
    pi: &'a Ranking,
    memo: Vec<Option<bool>>,
    incident: Vec<Vec<usize>>,
}

impl<'a> ReferenceOracle<'a> {
    pub fn new(g: &'a MultiGraph, pi: &'a Ranking) -> Result<Self> {
        if pi.len() != g.edge_count() {
            return input(format!(
                "ranking covers {} edges, graph has {}",
                pi.len(),
                g.edge_count()
            ));
        }
        let mut incident = vec![Vec::new(); g.n()];
        for (e, (u, v)) in g.edges().enumerate() {
            incident[u].push(e);
            if u != v {
                incident[v].push(e);
            }
        }
        Ok(ReferenceOracle {
            g,
            pi,
            memo: vec![None; g.edge_count()],
            incident,
        })
    }

    /// An edge is matched iff no adjacent edge of smaller rank is matched.
    pub fn mo_ref(&mut self, e: usize) -> bool {
        if let Some(m) = self.memo[e] {
            return m;
        }
        let (u, v) = self.g.endpoints(e);
        let mut adjacent: Vec<usize> = self.incident[u]
            .iter()
            .chain(&self.incident[v])
            .copied()
            .filter(|&f| f != e && self.pi.rank(f) < self.pi.rank(e))
            .collect();
        adjacent.sort_unstable_by_key(|&f| self.pi.rank(f));
        adjacent.dedup();
        let matched = !adjacent.into_iter().any(|f| self.mo_ref(f));
        self.memo[e] = Some(matched);
        matched
    }

    pub fn vo_ref(&mut self, v: Vertex) -> bool {
        let inc = self.incident[v].clone();
        inc.into_iter().any(|e| self.mo_ref(e))
    }

    pub fn cover_size(&mut self) -> usize {
        (0..self.g.n()).filter(|&v| self.vo_ref(v)).count()
    }
}

/// Converts a fully revealed lazy ranking into an explicit [`Ranking`].
///
/// The lazy engine ranks each group of parallel edges (and each vertex's
/// set of self-loops) by the group minimum only. The minimum copy of every
/// group is ranked by its revealed value; the remaining copies, which can
/// never be matched, are ranked after all minima in edge-id order.
pub fn derive_ranking(g: &MultiGraph, engine: &RankEngine<'_, MultiGraph>) -> Result<Ranking> {
    let mut minima: Vec<(RankValue, usize)> = Vec::new();
    let mut is_min: FxHashSet<usize> = FxHashSet::default();
    for v in 0..g.n() {
        if g.deg(v) == 0 {
            continue;
        }
        let st = engine
            .state(v)
            .filter(|_| engine.is_materialized(v))
            .ok_or_else(|| Error::State(format!("vertex {v} is not fully revealed")))?;
        for &(w, r) in st.sorted() {
            if w < v {
                continue;
            }
            if r.key.lo != v || r.key.hi != w {
                return Err(Error::State(format!(
                    "rank key {:?} does not match pair ({v}, {w})",
                    r.key
                )));
            }
            let slot = g
                .slots(v)
                .nth(r.key.slot - 1)
                .ok_or_else(|| Error::State(format!("slot {} missing at {v}", r.key.slot)))?;
            if slot.other != w {
                return Err(Error::State(format!("slot {} of {v} is not an edge to {w}", r.key.slot)));
            }
            minima.push((r, slot.edge));
            is_min.insert(slot.edge);
        }
    }
    minima.sort_unstable();
    let mut rank = vec![0; g.edge_count()];
    let mut next = 1;
    for (_, e) in &minima {
        rank[*e] = next;
        next += 1;
    }
    for (e, r) in rank.iter_mut().enumerate() {
        if !is_min.contains(&e) {
            *r = next;
            next += 1;
        }
    }
    Ranking::new(rank)
}

/// Reveals every vertex of `g` in `engine`, then derives the ranking.
pub fn materialize_ranking(engine: &mut RankEngine<'_, MultiGraph>) -> Result<Ranking> {
    let g = engine.graph();
    for v in 0..g.vertex_count() {
        engine.materialize(v)?;
    }
    derive_ranking(g, engine)
}

//! Local oracles for the random-greedy maximal matching.
//!
//! An edge is matched iff no adjacent edge of smaller rank is matched. The
//! matching oracle decides this for one edge by scanning the adjacent edges
//! of both endpoints in increasing rank order, merged from the two lazily
//! revealed neighbor lists, and recursing on each until a matched one is
//! found or the scan passes the edge's own rank. Recursion runs on an
//! explicit stack so that long descent chains cannot overflow the thread
//! stack.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::graph::{GraphAccess, QueryStats, Vertex};
use crate::rank::{RankEngine, RankValue};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OracleStats {
    pub vertex_probes: u64,
    /// Matching-oracle evaluations that missed the memo.
    pub mo_evaluations: u64,
    /// Matching-oracle invocations including memo hits, summed over probes
    /// with each pair counted once per probe.
    pub probe_pairs_total: u64,
    pub probe_pairs_max: u64,
    pub last_probe_pairs: u64,
}

impl OracleStats {
    pub fn mean_probe_pairs(&self) -> f64 {
        if self.vertex_probes == 0 {
            0.0
        } else {
            self.probe_pairs_total as f64 / self.vertex_probes as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    First,
    Second,
}

type Entry = Option<(Vertex, RankValue)>;

#[derive(Debug)]
struct Frame {
    u: Vertex,
    v: Vertex,
    rank: RankValue,
    k1: usize,
    k2: usize,
    e1: Option<Entry>,
    e2: Option<Entry>,
    waiting: Option<Side>,
}

impl Frame {
    fn new(u: Vertex, v: Vertex, rank: RankValue) -> Frame {
        Frame {
            u,
            v,
            rank,
            k1: 1,
            k2: 1,
            e1: None,
            e2: None,
            waiting: None,
        }
    }

    fn step(&mut self, side: Side) {
        match side {
            Side::First => {
                self.k1 += 1;
                self.e1 = None;
            }
            Side::Second => {
                self.k2 += 1;
                self.e2 = None;
            }
        }
    }
}

fn pair_key(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    (u.min(v), u.max(v))
}

/// Oracle state shared by all probes of one estimation run: the rank engine
/// (one random ranking) and the matching memo.
pub struct OracleContext<'g, G: GraphAccess + ?Sized> {
    engine: RankEngine<'g, G>,
    memo: FxHashMap<(Vertex, Vertex), bool>,
    probe: FxHashSet<(Vertex, Vertex)>,
    stats: OracleStats,
    merge_fault: bool,
}

impl<'g, G: GraphAccess + ?Sized> OracleContext<'g, G> {
    pub fn new(graph: &'g G, seed: u64, quality: u64) -> Result<Self> {
        Ok(Self::with_engine(RankEngine::new(graph, seed, quality)?))
    }

    pub fn with_engine(engine: RankEngine<'g, G>) -> Self {
        OracleContext {
            engine,
            memo: FxHashMap::default(),
            probe: FxHashSet::default(),
            stats: OracleStats::default(),
            merge_fault: false,
        }
    }

    pub fn engine(&self) -> &RankEngine<'g, G> {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut RankEngine<'g, G> {
        &mut self.engine
    }

    pub fn stats(&self) -> OracleStats {
        self.stats
    }

    pub fn queries(&self) -> QueryStats {
        self.engine.stats()
    }

    /// Makes the merge compare rank offsets while ignoring the interval
    /// level. Exists only so that verification can check that it detects a
    /// broken oracle.
    #[doc(hidden)]
    pub fn inject_merge_fault(&mut self, on: bool) {
        self.merge_fault = on;
    }

    fn less(&self, a: &RankValue, b: &RankValue) -> bool {
        if self.merge_fault {
            (a.offset, a.key) < (b.offset, b.key)
        } else {
            a < b
        }
    }

    /// Whether `v` is an endpoint of a matched edge.
    pub fn vo(&mut self, v: Vertex) -> Result<bool> {
        self.probe.clear();
        self.stats.vertex_probes += 1;
        let mut covered = false;
        let mut i = 1;
        while let Some((w, r)) = self.engine.lowest(v, i)? {
            if self.eval(v, w, r)? {
                covered = true;
                break;
            }
            i += 1;
        }
        let n = self.probe.len() as u64;
        self.stats.last_probe_pairs = n;
        self.stats.probe_pairs_total += n;
        self.stats.probe_pairs_max = self.stats.probe_pairs_max.max(n);
        Ok(covered)
    }

    /// Whether the minimum-rank edge between `u` and `v` is matched. The
    /// pair's rank must already be revealed at `u`.
    pub fn mo(&mut self, u: Vertex, v: Vertex) -> Result<bool> {
        let Some(r) = self.engine.assigned_rank(u, v) else {
            return Err(Error::State(format!(
                "rank of pair ({u}, {v}) has not been revealed"
            )));
        };
        self.eval(u, v, r)
    }

    /// Whether some edge between `u` and `v` is matched, revealing `u`'s
    /// neighbor list as far as needed.
    pub fn pair_matched(&mut self, u: Vertex, v: Vertex) -> Result<bool> {
        let mut k = 1;
        loop {
            match self.engine.lowest(u, k)? {
                Some((w, r)) if w == v => return self.eval(u, v, r),
                Some(_) => k += 1,
                None => return input(format!("{u} and {v} are not adjacent")),
            }
        }
    }

    fn eval(&mut self, u: Vertex, v: Vertex, rank: RankValue) -> Result<bool> {
        let key = pair_key(u, v);
        self.probe.insert(key);
        if let Some(&m) = self.memo.get(&key) {
            return Ok(m);
        }
        self.stats.mo_evaluations += 1;
        let mut stack = vec![Frame::new(u, v, rank)];
        let mut active: FxHashSet<(Vertex, Vertex)> = FxHashSet::default();
        if self.merge_fault {
            active.insert(key);
        }
        let mut returned: Option<bool> = None;

        while let Some(top) = stack.last_mut() {
            if let Some(side) = top.waiting.take() {
                let child = returned.take().expect("child result");
                if child {
                    let done = stack.pop().expect("frame");
                    self.finish(&mut active, &done, false);
                    returned = Some(false);
                    continue;
                }
                top.step(side);
            }

            let (fu, fv, frank) = (top.u, top.v, top.rank);
            if top.e1.is_none() {
                top.e1 = Some(self.engine.lowest(fu, top.k1)?);
            }
            let top = stack.last_mut().expect("frame");
            if top.e2.is_none() {
                top.e2 = Some(if fu == fv {
                    None
                } else {
                    self.engine.lowest(fv, top.k2)?
                });
            }
            let top = stack.last_mut().expect("frame");
            let e1 = top.e1.expect("filled");
            let e2 = top.e2.expect("filled");
            let pick = match (e1, e2) {
                (None, None) => None,
                (Some(a), None) => Some((Side::First, a)),
                (None, Some(b)) => Some((Side::Second, b)),
                (Some(a), Some(b)) => {
                    if self.less(&b.1, &a.1) {
                        Some((Side::Second, b))
                    } else {
                        Some((Side::First, a))
                    }
                }
            };
            let next = match pick {
                Some((side, (w, r))) if self.less(&r, &frank) => Some((side, w, r)),
                _ => None,
            };
            let Some((side, w, r)) = next else {
                let done = stack.pop().expect("frame");
                self.finish(&mut active, &done, true);
                returned = Some(true);
                continue;
            };

            let from = if side == Side::First { fu } else { fv };
            let child = pair_key(from, w);
            if self.merge_fault && (child == pair_key(fu, fv) || active.contains(&child)) {
                stack.last_mut().expect("frame").step(side);
                continue;
            }
            debug_assert!(r < frank, "matching oracle recursed to a larger rank");
            self.probe.insert(child);
            if let Some(&m) = self.memo.get(&child) {
                let top = stack.last_mut().expect("frame");
                if m {
                    let done = stack.pop().expect("frame");
                    self.finish(&mut active, &done, false);
                    returned = Some(false);
                } else {
                    top.step(side);
                }
                continue;
            }
            self.stats.mo_evaluations += 1;
            stack.last_mut().expect("frame").waiting = Some(side);
            if self.merge_fault {
                active.insert(child);
            }
            stack.push(Frame::new(from, w, r));
        }
        Ok(returned.expect("root result"))
    }

    fn finish(&mut self, active: &mut FxHashSet<(Vertex, Vertex)>, f: &Frame, result: bool) {
        let key = pair_key(f.u, f.v);
        active.remove(&key);
        let prev = self.memo.insert(key, result);
        debug_assert!(
            prev.is_none() || prev == Some(result) || self.merge_fault,
            "memo entry rewritten"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MultiGraph;

    const Q: u64 = 1 << 30;

    #[test]
    fn single_edge_is_matched() {
        let g = MultiGraph::from_edges(3, &[(0, 1)]).unwrap();
        for seed in 0..20 {
            let mut o = OracleContext::new(&g, seed, Q).unwrap();
            assert!(o.vo(0).unwrap());
            assert!(o.vo(1).unwrap());
            assert!(!o.vo(2).unwrap());
            assert!(o.mo(0, 1).unwrap());
        }
    }

    #[test]
    fn lone_self_loop_covers_its_vertex() {
        let g = MultiGraph::from_edges(2, &[(0, 0)]).unwrap();
        let mut o = OracleContext::new(&g, 1, Q).unwrap();
        assert!(o.vo(0).unwrap());
        assert!(!o.vo(1).unwrap());
    }

    #[test]
    fn path_of_three_edges() {
        // on a path a-b-c-d exactly one of the two outcomes occurs:
        // middle edge matched alone, or both end edges matched
        let g = MultiGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        for seed in 0..100 {
            let mut o = OracleContext::new(&g, seed, Q).unwrap();
            let cover: Vec<bool> = (0..4).map(|v| o.vo(v).unwrap()).collect();
            let count = cover.iter().filter(|&&c| c).count();
            assert!(count == 2 || count == 4, "{cover:?}");
            if count == 2 {
                assert_eq!(cover, vec![false, true, true, false]);
            }
        }
    }

    #[test]
    fn mo_needs_revealed_rank() {
        let g = MultiGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let mut o = OracleContext::new(&g, 1, Q).unwrap();
        assert!(matches!(o.mo(0, 1), Err(Error::State(_))));
        o.engine_mut().materialize(0).unwrap();
        assert!(o.mo(0, 1).is_ok());
        assert!(o.pair_matched(1, 2).is_ok());
        assert!(o.pair_matched(0, 2).is_err());
    }

    #[test]
    fn probe_counts_are_tracked() {
        let g = MultiGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let mut o = OracleContext::new(&g, 5, Q).unwrap();
        for v in 0..4 {
            o.vo(v).unwrap();
        }
        let s = o.stats();
        assert_eq!(s.vertex_probes, 4);
        assert!(s.probe_pairs_max >= 1);
        assert!(s.mo_evaluations <= 4);
        assert!(s.mean_probe_pairs() >= 1.0);
    }
}

//! Lazy, consistent assignment of random ranks to edges.
//!
//! Every edge conceptually receives an independent uniform number in
//! `(0, 1]`. The range is split into dyadic intervals `I_1 = (1/2, 1]`,
//! `I_2 = (1/4, 1/2]`, ..., `I_{d*} = (2^-d*, 2^-d*+1]` and the bottom
//! interval `I_{d*+1} = (0, 2^-d*]`. A per-vertex [`NeighborState`] reveals
//! its incident ranks one interval at a time, from the bottom interval
//! upwards, and only as far as a `lowest(k)` request needs. The two endpoints
//! of an edge coordinate through `lower_bound` and `set_value` so that the
//! first endpoint to simulate an interval decides for both.

pub mod binomial;
pub mod subset;

use std::cmp::Ordering;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::{input, Result};
use crate::graph::{GraphAccess, QueryStats, Slot, Vertex};
use binomial::BinomialTable;

/// Identity of an edge used to break exact `(level, offset)` ties:
/// `(min endpoint, max endpoint, slot index at the min endpoint)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeKey {
    pub lo: Vertex,
    pub hi: Vertex,
    pub slot: usize,
}

impl EdgeKey {
    /// Key of the edge found at slot `t` of `v`.
    pub fn from_slot(v: Vertex, t: usize, slot: &Slot) -> EdgeKey {
        let w = slot.other;
        if v <= w {
            EdgeKey { lo: v, hi: w, slot: t }
        } else {
            EdgeKey { lo: w, hi: v, slot: slot.reciprocal }
        }
    }
}

/// A discretized rank in `(0, 1]`.
///
/// `level` names the interval `I_level`; `offset` is a uniform 64-bit
/// position inside it. Larger levels hold smaller numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RankValue {
    pub level: u32,
    pub offset: u64,
    pub key: EdgeKey,
}

impl Ord for RankValue {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .level
            .cmp(&self.level)
            .then(self.offset.cmp(&other.offset))
            .then(self.key.cmp(&other.key))
    }
}

impl PartialOrd for RankValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl RankValue {
    /// Numeric value `lo(I) + (offset + 1) * |I| / 2^64`, which lies in the
    /// half-open interval `(lo, hi]`.
    pub fn value(&self, d_star: u32) -> f64 {
        let (lo, width) = interval_bounds(self.level, d_star);
        lo + (self.offset as f64 + 1.0) * width / 18_446_744_073_709_551_616.0
    }
}

/// `(lower end, length)` of interval `I_level`.
pub fn interval_bounds(level: u32, d_star: u32) -> (f64, f64) {
    debug_assert!(level >= 1 && level <= d_star + 1);
    if level == d_star + 1 {
        (0.0, (-(d_star as f64)).exp2())
    } else {
        let w = (-(level as f64)).exp2();
        (w, w)
    }
}

/// Draws a rank uniformly from `I_level`.
pub fn sample_rank_in<R: Rng + ?Sized>(level: u32, rng: &mut R, key: EdgeKey) -> RankValue {
    RankValue {
        level,
        offset: rng.random::<u64>(),
        key,
    }
}

/// `d* = ceil(log2 d)`, with `d* = 0` for `d <= 1`.
pub fn d_star_for(max_degree: usize) -> u32 {
    if max_degree <= 1 {
        0
    } else {
        usize::BITS - (max_degree - 1).leading_zeros()
    }
}

/// One of the boundaries `{0} ∪ {2^i : -d* <= i <= 0}`, stored as the
/// number of completed interval advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Boundary {
    steps: u32,
    d_star: u32,
}

impl Boundary {
    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn is_zero(&self) -> bool {
        self.steps == 0
    }

    pub fn is_one(&self) -> bool {
        self.steps == self.d_star + 1
    }

    pub fn value(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            (-((self.d_star + 1 - self.steps) as f64)).exp2()
        }
    }

    /// The boundary one advance later, or `None` at 1.
    pub fn next(&self) -> Option<Boundary> {
        (!self.is_one()).then_some(Boundary {
            steps: self.steps + 1,
            d_star: self.d_star,
        })
    }
}

/// Per-vertex lazy rank store.
#[derive(Debug, Clone, Default)]
pub struct NeighborState {
    steps: u32,
    degree: Option<usize>,
    /// Minimum rank known for any edge to each neighbor.
    assigned: FxHashMap<Vertex, RankValue>,
    /// Keys of `assigned` whose rank lies above the current boundary.
    pending: Vec<Vertex>,
    /// Neighbors with rank at most the boundary, ascending.
    sorted: Vec<(Vertex, RankValue)>,
}

impl NeighborState {
    pub fn sorted(&self) -> &[(Vertex, RankValue)] {
        &self.sorted
    }

    pub fn assigned(&self, w: Vertex) -> Option<RankValue> {
        self.assigned.get(&w).copied()
    }

    pub fn assigned_len(&self) -> usize {
        self.assigned.len()
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EngineCounters {
    pub lowest_calls: u64,
    pub advances: u64,
    pub tentative_labels: u64,
    pub assignments: u64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic child seed; used for per-(vertex, level) substreams and by
/// trial drivers to split a run seed.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ a) ^ b.rotate_left(17))
}

/// Lazily materialized ranking of the edges of one graph.
///
/// All `lowest` and `set_value` calls of one estimation run go through a
/// single engine; it is not shared across threads.
pub struct RankEngine<'g, G: GraphAccess + ?Sized> {
    graph: &'g G,
    d_star: u32,
    seed: u64,
    quality: u64,
    states: FxHashMap<Vertex, NeighborState>,
    stats: QueryStats,
    counters: EngineCounters,
    tables: FxHashMap<(u64, u64, u64), Rc<BinomialTable>>,
}

impl<'g, G: GraphAccess + ?Sized> RankEngine<'g, G> {
    /// `quality` is the sampler parameter `Q`; each tentative-set draw is
    /// within total variation `1/Q` of the exact binomial count.
    pub fn new(graph: &'g G, seed: u64, quality: u64) -> Result<Self> {
        if quality <= 1 {
            return input(format!("sampler quality must exceed 1, got {quality}"));
        }
        let d_star = d_star_for(graph.degree_bound());
        if d_star > 63 {
            return input("degree bound too large for 64-bit interval arithmetic");
        }
        Ok(RankEngine {
            graph,
            d_star,
            seed,
            quality,
            states: FxHashMap::default(),
            stats: QueryStats::default(),
            counters: EngineCounters::default(),
            tables: FxHashMap::default(),
        })
    }

    pub fn graph(&self) -> &'g G {
        self.graph
    }

    pub fn d_star(&self) -> u32 {
        self.d_star
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stats(&self) -> QueryStats {
        self.stats
    }

    pub fn counters(&self) -> EngineCounters {
        self.counters
    }

    pub fn state(&self, v: Vertex) -> Option<&NeighborState> {
        self.states.get(&v)
    }

    /// Vertices whose state has been created, in ascending order.
    pub fn touched_vertices(&self) -> Vec<Vertex> {
        let mut v: Vec<_> = self.states.keys().copied().collect();
        v.sort_unstable();
        v
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v >= self.graph.vertex_count() {
            return input(format!(
                "vertex {v} out of range (n = {})",
                self.graph.vertex_count()
            ));
        }
        Ok(())
    }

    pub fn lower_bound(&self, v: Vertex) -> Boundary {
        Boundary {
            steps: self.states.get(&v).map_or(0, |s| s.steps),
            d_star: self.d_star,
        }
    }

    /// Records `r` as the minimum rank of the edges between `v` and `w`.
    ///
    /// The caller must have checked that `r` lies above `v`'s boundary.
    pub fn set_value(&mut self, v: Vertex, w: Vertex, r: RankValue) {
        let d_star = self.d_star;
        let st = self.states.entry(v).or_default();
        debug_assert!(
            r.level + st.steps <= d_star + 1,
            "rank below the boundary of its endpoint"
        );
        if st.assigned.insert(w, r).is_none() {
            st.pending.push(w);
        }
    }

    /// Minimum rank currently known for the edges between `v` and `w`.
    pub fn assigned_rank(&self, v: Vertex, w: Vertex) -> Option<RankValue> {
        self.states.get(&v).and_then(|s| s.assigned(w))
    }

    /// The `k`-th smallest-ranked distinct neighbor of `v` (1-based), or
    /// `None` when `v` has fewer than `k` distinct neighbors. Parallel edges
    /// and repeated self-loops appear once, with their minimum rank.
    pub fn lowest(&mut self, v: Vertex, k: usize) -> Result<Option<(Vertex, RankValue)>> {
        if k == 0 {
            return input("lowest(k) needs k >= 1");
        }
        self.check_vertex(v)?;
        self.counters.lowest_calls += 1;
        loop {
            let st = self.states.entry(v).or_default();
            if st.sorted.len() >= k {
                return Ok(Some(st.sorted[k - 1]));
            }
            if st.steps > self.d_star {
                return Ok(None);
            }
            self.advance(v)?;
        }
    }

    /// Advances `v` until its boundary reaches 1, revealing every incident
    /// neighbor's minimum rank.
    pub fn materialize(&mut self, v: Vertex) -> Result<()> {
        self.check_vertex(v)?;
        while self.states.get(&v).map_or(0, |s| s.steps) <= self.d_star {
            self.advance(v)?;
        }
        Ok(())
    }

    pub fn is_materialized(&self, v: Vertex) -> bool {
        self.states.get(&v).is_some_and(|s| s.steps > self.d_star)
    }

    fn table(&mut self, k: u64, a: u64, b: u64) -> Result<Rc<BinomialTable>> {
        if let Some(t) = self.tables.get(&(k, a, b)) {
            return Ok(Rc::clone(t));
        }
        let t = Rc::new(BinomialTable::new(k, a, b, self.quality)?);
        self.tables.insert((k, a, b), Rc::clone(&t));
        Ok(t)
    }

    /// Simulates one iteration of the interval process for every edge
    /// incident to `v`, opening `(lb, next_lb]`.
    fn advance(&mut self, v: Vertex) -> Result<()> {
        self.counters.advances += 1;
        let d_star = self.d_star;
        let st = self.states.entry(v).or_default();
        let steps = st.steps;
        debug_assert!(steps <= d_star);
        let level = d_star + 1 - steps;

        // ranks already notified by the other endpoint that fall in this interval
        let NeighborState {
            pending, assigned, ..
        } = st;
        let mut fresh: Vec<(Vertex, RankValue)> = Vec::new();
        pending.retain(|w| {
            let r = assigned[w];
            if r.level == level {
                fresh.push((*w, r));
                false
            } else {
                true
            }
        });
        let mut fresh_index: FxHashMap<Vertex, usize> =
            fresh.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();

        let deg = match st.degree {
            Some(d) => d,
            None => {
                let d = self.graph.degree(v, &mut self.stats)?;
                self.states.get_mut(&v).expect("state exists").degree = Some(d);
                d
            }
        };

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, v as u64, level as u64));
        let (a, b) = subset::inclusion_fraction(steps, d_star);
        let labels = subset::select_tentative(deg, |k| self.table(k, a, b), &mut rng)?;
        self.counters.tentative_labels += labels.len() as u64;

        for t in labels {
            let slot = self.graph.neighbor(v, t, &mut self.stats)?;
            let w = slot.other;
            let r = sample_rank_in(level, &mut rng, EdgeKey::from_slot(v, t, &slot));
            let w_steps = self.states.get(&w).map_or(0, |s| s.steps);
            if w_steps > steps {
                // the other endpoint already simulated this interval for the edge
                continue;
            }
            if let Some(&i) = fresh_index.get(&w) {
                if r < fresh[i].1 {
                    fresh[i].1 = r;
                    self.record(v, w, r);
                }
                continue;
            }
            if self.states[&v].assigned.contains_key(&w) {
                continue;
            }
            self.record(v, w, r);
            fresh_index.insert(w, fresh.len());
            fresh.push((w, r));
        }

        fresh.sort_unstable_by(|x, y| x.1.cmp(&y.1));
        let st = self.states.get_mut(&v).expect("state exists");
        st.sorted.extend(fresh);
        st.steps += 1;
        Ok(())
    }

    fn record(&mut self, v: Vertex, w: Vertex, r: RankValue) {
        self.counters.assignments += 1;
        self.states
            .get_mut(&v)
            .expect("state exists")
            .assigned
            .insert(w, r);
        if w != v {
            self.set_value(w, v, r);
        }
    }

    /// JSON snapshot of a vertex's state for test diffing.
    pub fn dump_state(&self, v: Vertex) -> serde_json::Value {
        let lb = self.lower_bound(v);
        let Some(st) = self.states.get(&v) else {
            return serde_json::json!({ "vertex": v, "lb": 0.0, "next_lb": lb.next().map(|b| b.value()), "assigned": [], "sorted": [] });
        };
        let mut assigned: Vec<_> = st.assigned.iter().map(|(w, r)| (*w, *r)).collect();
        assigned.sort_unstable_by_key(|(w, _)| *w);
        serde_json::json!({
            "vertex": v,
            "lb": lb.value(),
            "next_lb": lb.next().map(|b| b.value()),
            "degree": st.degree,
            "assigned": assigned,
            "sorted": st.sorted,
        })
    }
}

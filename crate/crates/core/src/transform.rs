//! Virtual graphs that present a transformed multigraph through the query
//! interface.
//!
//! Each wrapper answers a query on the transformed graph with at most two
//! queries to the underlying graph. Vertex ids are laid out contiguously:
//! real vertices first, then shadow vertices. Edge ids of added edges start
//! after the underlying graph's id range and are sparse.
//!
//! Degree answers are authoritative. Neighbor answers assume
//! `1 <= i <= degree(v)`; where checking that would cost an extra
//! underlying query the wrappers do not check it.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{input, Error, Result};
use crate::graph::{GraphAccess, MultiGraph, QueryStats, Slot, Vertex};

const TOLERANCE: f64 = 1e-9;

fn floor_tol(x: f64) -> usize {
    (x + TOLERANCE).floor() as usize
}

fn ceil_tol(x: f64) -> usize {
    (x - TOLERANCE).ceil() as usize
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return input(format!("epsilon must lie in (0, 1), got {eps}"));
    }
    Ok(())
}

fn past_end(v: Vertex, i: usize) -> Error {
    Error::Input(format!("slot {i} of virtual vertex {v} out of range"))
}

fn loop_slot(v: Vertex, i: usize, edge: usize) -> Slot {
    Slot {
        other: v,
        reciprocal: i,
        edge,
    }
}

/// Shadow transform for graphs with maximum degree at most `d`.
///
/// Every real vertex `v` gets a shadow `v' = n + v`, joined to `v` by
/// `floor(eps d)` parallel edges; `v'` also carries `8d` self-loops.
/// Real slots list the original edges first, then the parallel edges.
pub struct MaxDegreeShadow<'g, G: GraphAccess + ?Sized> {
    g: &'g G,
    n: usize,
    base: usize,
    parallel: usize,
    loops: usize,
}

impl<'g, G: GraphAccess + ?Sized> MaxDegreeShadow<'g, G> {
    pub fn new(g: &'g G, d: usize, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if d == 0 || 1.0 / eps >= d as f64 - TOLERANCE {
            return input(format!(
                "max-degree shadow needs 1/eps < d (d = {d}, eps = {eps})"
            ));
        }
        Ok(MaxDegreeShadow {
            g,
            n: g.vertex_count(),
            base: g.edge_id_bound(),
            parallel: floor_tol(eps * d as f64),
            loops: 8 * d,
        })
    }

    /// Number of parallel `(v, v')` edges.
    pub fn parallel(&self) -> usize {
        self.parallel
    }

    pub fn loops(&self) -> usize {
        self.loops
    }

    pub fn real_count(&self) -> usize {
        self.n
    }

    pub fn shadow_of(&self, v: Vertex) -> Vertex {
        self.n + v
    }
}

impl<G: GraphAccess + ?Sized> GraphAccess for MaxDegreeShadow<'_, G> {
    fn vertex_count(&self) -> usize {
        2 * self.n
    }

    fn degree_bound(&self) -> usize {
        self.parallel + self.loops
    }

    fn degree(&self, v: Vertex, stats: &mut QueryStats) -> Result<usize> {
        if v < self.n {
            Ok(self.g.degree(v, stats)? + self.parallel)
        } else if v < 2 * self.n {
            Ok(self.parallel + self.loops)
        } else {
            input(format!("virtual vertex {v} out of range"))
        }
    }

    fn neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Slot> {
        self.try_neighbor(v, i, stats)?.ok_or_else(|| past_end(v, i))
    }

    fn try_neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Option<Slot>> {
        if i == 0 {
            return input("slot indices are 1-based");
        }
        let (n, f) = (self.n, self.parallel);
        if v < n {
            if let Some(s) = self.g.try_neighbor(v, i, stats)? {
                return Ok(Some(s));
            }
            let j = i - self.g.degree(v, stats)?;
            if j > f {
                return Ok(None);
            }
            Ok(Some(Slot {
                other: n + v,
                reciprocal: j,
                edge: self.base + v * f + j - 1,
            }))
        } else if v < 2 * n {
            let u = v - n;
            if i <= f {
                Ok(Some(Slot {
                    other: u,
                    reciprocal: self.g.degree(u, stats)? + i,
                    edge: self.base + u * f + i - 1,
                }))
            } else if i <= f + self.loops {
                Ok(Some(loop_slot(
                    v,
                    i,
                    self.base + n * f + u * self.loops + (i - f - 1),
                )))
            } else {
                Ok(None)
            }
        } else {
            input(format!("virtual vertex {v} out of range"))
        }
    }

    fn pair(&self, _u: Vertex, _v: Vertex, _stats: &mut QueryStats) -> Result<bool> {
        Err(Error::State("pair queries are not served by the max-degree shadow".into()))
    }

    fn supports_pair_queries(&self) -> bool {
        false
    }

    fn edge_id_bound(&self) -> usize {
        self.base + self.n * (self.parallel + self.loops)
    }
}

/// Shadow transform for graphs with average degree at most `d̄`.
///
/// Vertices of degree above `tau = 8 d̄ / eps` form the removed set `L`.
/// Every kept vertex `v` gets a shadow `v'` joined by `d̄` parallel edges,
/// and groups `v''_i`, `i <= ceil(deg v / d̄)`, that stand in for `v`'s
/// edges into `L`. Shadows carry `ceil(32 d̄ / eps)` self-loops.
///
/// Slot order at a kept real vertex: the `d̄` edges to `v'` first, then one
/// slot per original slot. Listing the shadow edges first lets a real slot
/// be resolved with one neighbor query plus one degree query.
pub struct AverageDegreeShadow<'g, G: GraphAccess + ?Sized> {
    g: &'g G,
    n: usize,
    base: usize,
    dbar: usize,
    tau: f64,
    loops: usize,
    groups: usize,
}

impl<'g, G: GraphAccess + ?Sized> AverageDegreeShadow<'g, G> {
    pub fn new(g: &'g G, dbar: usize, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if dbar == 0 {
            return input("average-degree shadow needs an average degree bound >= 1");
        }
        let tau = 8.0 * dbar as f64 / eps;
        let loops = ceil_tol(32.0 * dbar as f64 / eps);
        let groups = floor_tol(tau).div_ceil(dbar);
        Ok(AverageDegreeShadow {
            g,
            n: g.vertex_count(),
            base: g.edge_id_bound(),
            dbar,
            tau,
            loops,
            groups,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.tau
    }

    pub fn loops(&self) -> usize {
        self.loops
    }

    pub fn max_groups(&self) -> usize {
        self.groups
    }

    pub fn real_count(&self) -> usize {
        self.n
    }

    pub fn shadow_of(&self, v: Vertex) -> Vertex {
        self.n + v
    }

    pub fn group_vertex(&self, v: Vertex, i: usize) -> Vertex {
        debug_assert!(i >= 1 && i <= self.groups);
        2 * self.n + v * self.groups + (i - 1)
    }

    pub fn in_removed_set(&self, degree: usize) -> bool {
        degree as f64 > self.tau
    }

    /// `Some(true)` when `v` has degree above the threshold, in which case
    /// the vertex-cover oracle answers true without probing; `None` means
    /// the probe must go through the transformed graph. One degree query.
    pub fn high_degree_shortcut(&self, v: Vertex, stats: &mut QueryStats) -> Result<Option<bool>> {
        let d = self.g.degree(v, stats)?;
        Ok(self.in_removed_set(d).then_some(true))
    }

    fn group_loop_id(&self, u: Vertex, i: usize, j: usize) -> usize {
        self.base
            + self.n * self.dbar
            + self.n * self.loops
            + (u * self.groups + i - 1) * (self.dbar + self.loops)
            + (j - 1)
    }

    fn shadow_edge_id(&self, u: Vertex, i: usize) -> usize {
        self.base + u * self.dbar + (i - 1)
    }

    fn split(&self, v: Vertex) -> Result<Place> {
        let n = self.n;
        if v < n {
            Ok(Place::Real(v))
        } else if v < 2 * n {
            Ok(Place::Shadow(v - n))
        } else if v < 2 * n + n * self.groups {
            let x = v - 2 * n;
            Ok(Place::Group(x / self.groups, x % self.groups + 1))
        } else {
            input(format!("virtual vertex {v} out of range"))
        }
    }
}

enum Place {
    Real(Vertex),
    Shadow(Vertex),
    Group(Vertex, usize),
}

impl<G: GraphAccess + ?Sized> GraphAccess for AverageDegreeShadow<'_, G> {
    fn vertex_count(&self) -> usize {
        2 * self.n + self.n * self.groups
    }

    fn degree_bound(&self) -> usize {
        (floor_tol(self.tau) + self.dbar).max(self.dbar + self.loops)
    }

    fn degree(&self, v: Vertex, stats: &mut QueryStats) -> Result<usize> {
        Ok(match self.split(v)? {
            Place::Real(u) => {
                let d = self.g.degree(u, stats)?;
                if self.in_removed_set(d) {
                    0
                } else {
                    self.dbar + d
                }
            }
            Place::Shadow(u) => {
                let d = self.g.degree(u, stats)?;
                if self.in_removed_set(d) {
                    0
                } else {
                    self.dbar + self.loops
                }
            }
            Place::Group(u, i) => {
                let d = self.g.degree(u, stats)?;
                if !self.in_removed_set(d) && i <= d.div_ceil(self.dbar) {
                    self.dbar + self.loops
                } else {
                    0
                }
            }
        })
    }

    fn neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Slot> {
        self.try_neighbor(v, i, stats)?.ok_or_else(|| past_end(v, i))
    }

    fn try_neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Option<Slot>> {
        if i == 0 {
            return input("slot indices are 1-based");
        }
        let dbar = self.dbar;
        match self.split(v)? {
            Place::Real(u) => {
                if i <= dbar {
                    return Ok(Some(Slot {
                        other: self.n + u,
                        reciprocal: i,
                        edge: self.shadow_edge_id(u, i),
                    }));
                }
                let t = i - dbar;
                let Some(s) = self.g.try_neighbor(u, t, stats)? else {
                    return Ok(None);
                };
                let w = s.other;
                if self.in_removed_set(self.g.degree(w, stats)?) {
                    let c = t.div_ceil(dbar);
                    Ok(Some(Slot {
                        other: self.group_vertex(u, c),
                        reciprocal: t - (c - 1) * dbar,
                        edge: s.edge,
                    }))
                } else {
                    Ok(Some(Slot {
                        other: w,
                        reciprocal: dbar + s.reciprocal,
                        edge: s.edge,
                    }))
                }
            }
            Place::Shadow(u) => {
                if i <= dbar {
                    Ok(Some(Slot {
                        other: u,
                        reciprocal: i,
                        edge: self.shadow_edge_id(u, i),
                    }))
                } else if i <= dbar + self.loops {
                    let id = self.base + self.n * dbar + u * self.loops + (i - dbar - 1);
                    Ok(Some(loop_slot(v, i, id)))
                } else {
                    Ok(None)
                }
            }
            Place::Group(u, c) => {
                if i > dbar + self.loops {
                    return Ok(None);
                }
                let looped = Some(loop_slot(v, i, self.group_loop_id(u, c, i)));
                if i > dbar {
                    return Ok(looped);
                }
                let idx = (c - 1) * dbar + i;
                let Some(s) = self.g.try_neighbor(u, idx, stats)? else {
                    return Ok(looped);
                };
                if self.in_removed_set(self.g.degree(s.other, stats)?) {
                    Ok(Some(Slot {
                        other: u,
                        reciprocal: dbar + idx,
                        edge: s.edge,
                    }))
                } else {
                    Ok(looped)
                }
            }
        }
    }

    fn pair(&self, _u: Vertex, _v: Vertex, _stats: &mut QueryStats) -> Result<bool> {
        Err(Error::State("pair queries are not served by the average-degree shadow".into()))
    }

    fn supports_pair_queries(&self) -> bool {
        false
    }

    fn edge_id_bound(&self) -> usize {
        self.group_loop_id(self.n, 1, 1)
    }
}

/// Adapter for dense graphs accessed through pair queries only.
///
/// Real vertex `v` has exactly `n` slots; slot `j` is the edge to vertex
/// `j - 1` if it exists and otherwise a parallel edge to the shadow
/// `v' = n + v`. The shadow mirrors those `n` slots (present edges become
/// self-loops) and adds `ceil(8/eps) n` further self-loops, so its degree
/// does not depend on `deg(v)`.
pub struct DenseAdapter<'g, G: GraphAccess + ?Sized> {
    g: &'g G,
    n: usize,
    extra_loops: usize,
}

impl<'g, G: GraphAccess + ?Sized> DenseAdapter<'g, G> {
    pub fn new(g: &'g G, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if !g.supports_pair_queries() {
            return Err(Error::State("dense adapter needs a pair-query index".into()));
        }
        let n = g.vertex_count();
        Ok(DenseAdapter {
            g,
            n,
            extra_loops: ceil_tol(8.0 / eps) * n,
        })
    }

    pub fn real_count(&self) -> usize {
        self.n
    }

    pub fn shadow_of(&self, v: Vertex) -> Vertex {
        self.n + v
    }

    pub fn shadow_degree(&self) -> usize {
        self.n + self.extra_loops
    }

    fn parallel_id(&self, v: Vertex, j: usize) -> usize {
        self.n * self.n + v * self.n + j - 1
    }

    fn shadow_loop_id(&self, v: Vertex, j: usize) -> usize {
        2 * self.n * self.n + v * self.shadow_degree() + j - 1
    }
}

impl<G: GraphAccess + ?Sized> GraphAccess for DenseAdapter<'_, G> {
    fn vertex_count(&self) -> usize {
        2 * self.n
    }

    fn degree_bound(&self) -> usize {
        self.shadow_degree()
    }

    fn degree(&self, v: Vertex, _stats: &mut QueryStats) -> Result<usize> {
        if v < self.n {
            Ok(self.n)
        } else if v < 2 * self.n {
            Ok(self.shadow_degree())
        } else {
            input(format!("virtual vertex {v} out of range"))
        }
    }

    fn neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Slot> {
        self.try_neighbor(v, i, stats)?.ok_or_else(|| past_end(v, i))
    }

    fn try_neighbor(&self, v: Vertex, i: usize, stats: &mut QueryStats) -> Result<Option<Slot>> {
        if i == 0 {
            return input("slot indices are 1-based");
        }
        let n = self.n;
        if v < n {
            if i > n {
                return Ok(None);
            }
            let x = i - 1;
            if self.g.pair(v, x, stats)? {
                let (a, b) = (v.min(x), v.max(x));
                Ok(Some(Slot {
                    other: x,
                    reciprocal: if x == v { i } else { v + 1 },
                    edge: a * n + b,
                }))
            } else {
                Ok(Some(Slot {
                    other: n + v,
                    reciprocal: i,
                    edge: self.parallel_id(v, i),
                }))
            }
        } else if v < 2 * n {
            let u = v - n;
            if i > self.shadow_degree() {
                return Ok(None);
            }
            if i <= n && !self.g.pair(u, i - 1, stats)? {
                return Ok(Some(Slot {
                    other: u,
                    reciprocal: i,
                    edge: self.parallel_id(u, i),
                }));
            }
            Ok(Some(loop_slot(v, i, self.shadow_loop_id(u, i))))
        } else {
            input(format!("virtual vertex {v} out of range"))
        }
    }

    fn pair(&self, _u: Vertex, _v: Vertex, _stats: &mut QueryStats) -> Result<bool> {
        Err(Error::State("pair queries are not served by the dense adapter".into()))
    }

    fn supports_pair_queries(&self) -> bool {
        false
    }

    fn edge_id_bound(&self) -> usize {
        2 * self.n * self.n + self.n * self.shadow_degree()
    }
}

/// Builds explicit copies of the transformed graphs directly from their
/// definitions, for slot-by-slot comparison with the wrappers.
pub mod explicit {
    use super::*;

    struct Tags(u64);

    impl Tags {
        fn fresh(&mut self) -> u64 {
            self.0 += 1;
            self.0
        }
    }

    fn tags(g: &MultiGraph) -> Tags {
        Tags(g.edge_count() as u64)
    }

    pub fn max_degree(g: &MultiGraph, d: usize, eps: f64) -> Result<MultiGraph> {
        let params = MaxDegreeShadow::new(g, d, eps)?;
        let (n, f, loops) = (g.n(), params.parallel(), params.loops());
        let mut t = tags(g);
        let mut lists = vec![Vec::new(); 2 * n];
        for v in 0..n {
            lists[v].extend(g.slots(v).map(|s| (s.other, s.edge as u64)));
            for _ in 0..f {
                let tag = t.fresh();
                lists[v].push((n + v, tag));
                lists[n + v].push((v, tag));
            }
            for _ in 0..loops {
                let tag = t.fresh();
                lists[n + v].push((n + v, tag));
            }
        }
        MultiGraph::from_slot_lists(&lists)
    }

    pub fn average_degree(g: &MultiGraph, dbar: usize, eps: f64) -> Result<MultiGraph> {
        let params = AverageDegreeShadow::new(g, dbar, eps)?;
        let n = g.n();
        let groups = params.max_groups();
        let loops = params.loops();
        let removed: Vec<bool> = (0..n).map(|v| params.in_removed_set(g.deg(v))).collect();
        let mut t = tags(g);
        let mut lists = vec![Vec::new(); 2 * n + n * groups];
        let group = |v: Vertex, c: usize| 2 * n + v * groups + c - 1;
        for v in 0..n {
            if removed[v] {
                continue;
            }
            let slots: Vec<Slot> = g.slots(v).collect();
            for _ in 0..dbar {
                let tag = t.fresh();
                lists[v].push((n + v, tag));
                lists[n + v].push((v, tag));
            }
            for (k, s) in slots.iter().enumerate() {
                if removed[s.other] {
                    lists[v].push((group(v, k / dbar + 1), s.edge as u64));
                } else {
                    lists[v].push((s.other, s.edge as u64));
                }
            }
            for _ in 0..loops {
                let tag = t.fresh();
                lists[n + v].push((n + v, tag));
            }
            for c in 1..=slots.len().div_ceil(dbar) {
                let x = group(v, c);
                for j in 1..=dbar {
                    let idx = (c - 1) * dbar + j;
                    match slots.get(idx - 1) {
                        Some(s) if removed[s.other] => lists[x].push((v, s.edge as u64)),
                        _ => {
                            let tag = t.fresh();
                            lists[x].push((x, tag));
                        }
                    }
                }
                for _ in 0..loops {
                    let tag = t.fresh();
                    lists[x].push((x, tag));
                }
            }
        }
        MultiGraph::from_slot_lists(&lists)
    }

    pub fn dense(g: &MultiGraph, eps: f64) -> Result<MultiGraph> {
        if !g.has_pair_index() {
            return Err(Error::State("dense adapter needs a pair-query index".into()));
        }
        let n = g.n();
        let extra = ceil_tol(8.0 / eps) * n;
        let adjacent: FxHashSet<(Vertex, Vertex)> =
            g.edges().map(|(u, v)| (u.min(v), u.max(v))).collect();
        let mut t = tags(g);
        let mut lists = vec![Vec::new(); 2 * n];
        for v in 0..n {
            for x in 0..n {
                let (a, b) = (v.min(x), v.max(x));
                if adjacent.contains(&(a, b)) {
                    lists[v].push((x, (a * n + b) as u64 + (1 << 62)));
                    let tag = t.fresh();
                    lists[n + v].push((n + v, tag));
                } else {
                    let tag = t.fresh();
                    lists[v].push((n + v, tag));
                    lists[n + v].push((v, tag));
                }
            }
            for _ in 0..extra {
                let tag = t.fresh();
                lists[n + v].push((n + v, tag));
            }
        }
        MultiGraph::from_slot_lists(&lists)
    }

    /// Compares a wrapper with an explicit graph slot by slot. Returns a
    /// description of every mismatch; an empty result means identical.
    /// Also flags any single wrapper answer that cost more than two
    /// underlying queries.
    pub fn diff<W: GraphAccess + ?Sized>(wrapper: &W, explicit: &MultiGraph) -> Vec<String> {
        let mut out = Vec::new();
        if wrapper.vertex_count() != explicit.n() {
            out.push(format!(
                "vertex count {} vs {}",
                wrapper.vertex_count(),
                explicit.n()
            ));
            return out;
        }
        let mut forward: FxHashMap<usize, usize> = FxHashMap::default();
        let mut backward: FxHashMap<usize, usize> = FxHashMap::default();
        for v in 0..explicit.n() {
            let mut stats = QueryStats::default();
            let deg = match wrapper.degree(v, &mut stats) {
                Ok(d) => d,
                Err(e) => {
                    out.push(format!("degree({v}) failed: {e}"));
                    continue;
                }
            };
            if stats.total() > 2 {
                out.push(format!("degree({v}) cost {} queries", stats.total()));
            }
            if deg != explicit.deg(v) {
                out.push(format!("degree({v}) = {deg}, explicit {}", explicit.deg(v)));
                continue;
            }
            if deg > wrapper.degree_bound() {
                out.push(format!("degree({v}) = {deg} exceeds the degree bound"));
            }
            for (i, want) in explicit.slots(v).enumerate() {
                let i = i + 1;
                let mut stats = QueryStats::default();
                let got = match wrapper.neighbor(v, i, &mut stats) {
                    Ok(s) => s,
                    Err(e) => {
                        out.push(format!("neighbor({v}, {i}) failed: {e}"));
                        continue;
                    }
                };
                if stats.total() > 2 {
                    out.push(format!("neighbor({v}, {i}) cost {} queries", stats.total()));
                }
                if got.other != want.other || got.reciprocal != want.reciprocal {
                    out.push(format!(
                        "neighbor({v}, {i}) = ({}, {}), explicit ({}, {})",
                        got.other, got.reciprocal, want.other, want.reciprocal
                    ));
                }
                let f = *forward.entry(got.edge).or_insert(want.edge);
                let b = *backward.entry(want.edge).or_insert(got.edge);
                if f != want.edge || b != got.edge {
                    out.push(format!("neighbor({v}, {i}) edge id {} is inconsistent", got.edge));
                }
                if got.edge >= wrapper.edge_id_bound() {
                    out.push(format!("neighbor({v}, {i}) edge id {} out of bound", got.edge));
                }
            }
        }
        out
    }
}

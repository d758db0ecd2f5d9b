//! Exact baselines for small graphs.

use crate::error::{input, Result};
use crate::graph::MultiGraph;

pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Minimum vertex cover size by branch and bound. Self-loops force their
/// vertex into the cover; parallel edges count once.
pub fn brute_force_min_vc(g: &MultiGraph) -> Result<usize> {
    let n = g.n();
    if n > BRUTE_FORCE_LIMIT {
        return input(format!(
            "brute force limited to n <= {BRUTE_FORCE_LIMIT}, got {n}"
        ));
    }
    let mut adj = vec![0u32; n];
    let mut forced = 0u32;
    for (u, v) in g.edges() {
        if u == v {
            forced |= 1 << u;
        } else {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
    }
    // forced vertices cover all their edges
    let alive = ((1u64 << n) - 1) as u32 & !forced;
    for a in adj.iter_mut() {
        *a &= alive;
    }
    let mut best = n as u32;
    search(&adj, alive, 0, &mut best);
    Ok(forced.count_ones() as usize + best as usize)
}

/// Greedy maximal matching size on the residual graph: a lower bound on
/// the cover still needed.
fn matching_bound(adj: &[u32], alive: u32) -> u32 {
    let mut free = alive;
    let mut m = 0;
    while free != 0 {
        let v = free.trailing_zeros() as usize;
        free &= !(1 << v);
        let nb = adj[v] & free;
        if nb != 0 {
            let w = nb.trailing_zeros();
            free &= !(1 << w);
            m += 1;
        }
    }
    m
}

fn search(adj: &[u32], alive: u32, taken: u32, best: &mut u32) {
    if taken + matching_bound(adj, alive) >= *best {
        return;
    }
    let mut pick = None;
    let mut top = 0;
    let mut rest = alive;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= !(1 << v);
        let d = (adj[v] & alive).count_ones();
        if d > top {
            top = d;
            pick = Some(v);
        }
    }
    let Some(v) = pick else {
        *best = taken;
        return;
    };
    let nb = adj[v] & alive;
    // take v
    search(adj, alive & !(1 << v), taken + 1, best);
    // leave v out: all its neighbors join the cover
    if top > 1 {
        search(adj, alive & !(1 << v) & !nb, taken + top, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    fn bitmask_min_vc(g: &MultiGraph) -> usize {
        let n = g.n();
        (0u32..1 << n)
            .filter(|&s| g.edges().all(|(u, v)| s >> u & 1 == 1 || s >> v & 1 == 1))
            .map(|s| s.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn small_named_graphs() {
        assert_eq!(brute_force_min_vc(&generate::complete(4).unwrap()).unwrap(), 3);
        assert_eq!(brute_force_min_vc(&generate::star(6).unwrap()).unwrap(), 1);
        assert_eq!(brute_force_min_vc(&generate::cycle(5).unwrap()).unwrap(), 3);
        assert_eq!(brute_force_min_vc(&generate::path(4).unwrap()).unwrap(), 2);
        let g = MultiGraph::from_edges(3, &[(0, 0), (0, 1), (0, 1), (1, 2)]).unwrap();
        assert_eq!(brute_force_min_vc(&g).unwrap(), 2);
        assert!(brute_force_min_vc(&generate::path(25).unwrap()).is_err());
    }

    #[test]
    fn agrees_with_subset_enumeration() {
        for seed in 0..60 {
            let g = generate::gen_gnp(12, 0.3, seed).unwrap();
            assert_eq!(brute_force_min_vc(&g).unwrap(), bitmask_min_vc(&g), "seed {seed}");
        }
        for seed in 0..20 {
            let g = generate::gen_regular(10, 3, seed).unwrap();
            assert_eq!(brute_force_min_vc(&g).unwrap(), bitmask_min_vc(&g), "seed {seed}");
        }
    }

    #[test]
    fn lb_family_cover() {
        for n in [8, 16] {
            for seed in 0..3 {
                let g = generate::gen_lb_family(n, seed).unwrap();
                assert_eq!(brute_force_min_vc(&g).unwrap(), n / 4 + 1);
            }
        }
    }

    #[test]
    fn n24_is_tractable() {
        let g = generate::gen_gnp(24, 0.5, 1).unwrap();
        let vc = brute_force_min_vc(&g).unwrap();
        assert!(vc > 12 && vc < 24);
    }
}

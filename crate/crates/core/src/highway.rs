//! Brute-force highway dimension.
//!
//! For every radius `r > 0` and center `v`, the shortest paths that must be
//! hit inside the ball `B_4r(v) = {u : dist(u,v) < 4r}` form a hitting-set
//! instance; the highway dimension is the largest exact optimum over all
//! `(r, v)`. Two path families are supported: the classic one (shortest
//! paths of length `>= r`) and the refined one (shortest paths of length
//! `> r` with zero, one or both endpoints removed).
//!
//! Ties are not broken: every tied shortest path is its own set.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{all_pairs, dijkstra, DistanceMatrix, Graph, Length, NodeId, DEFAULT_ALL_PAIRS_CAP};

/// Universes are stored as `u128` bitmasks.
pub const MAX_UNIVERSE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Definition {
    Classic,
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HdCaps {
    pub all_pairs: usize,
    /// Path sets per hitting instance, counted after removing duplicates
    /// and supersets.
    pub max_sets: usize,
    /// Total shortest paths enumerated over all pairs.
    pub max_paths: usize,
}

impl Default for HdCaps {
    fn default() -> Self {
        HdCaps {
            all_pairs: DEFAULT_ALL_PAIRS_CAP,
            max_sets: 4096,
            max_paths: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HittingInstance {
    pub universe: Vec<NodeId>,
    pub path_sets: Vec<Vec<NodeId>>,
    /// (center, radius)
    pub origin: (NodeId, Length),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HittingSolution {
    pub size: usize,
    pub set: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub r: Length,
    pub v: NodeId,
    pub set: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HighwayDimResult {
    pub definition: Definition,
    pub h: usize,
    pub witness: Witness,
}

/// Distinct positive finite shortest-path lengths, ascending.
pub fn candidate_radii(g: &Graph, cap: usize) -> Result<Vec<Length>> {
    let apsp = all_pairs(g, cap)?;
    Ok(radii_from(&apsp))
}

fn radii_from(apsp: &DistanceMatrix) -> Vec<Length> {
    let n = apsp.node_count();
    let set: BTreeSet<Length> = (0..n)
        .flat_map(|s| apsp.row(s).iter().flatten().copied())
        .filter(|&d| d > 0)
        .collect();
    set.into_iter().collect()
}

/// Nodes at distance strictly less than `radius` from `v`.
pub fn ball(g: &Graph, v: NodeId, radius: Length) -> Result<Vec<NodeId>> {
    let tree = dijkstra(g, v)?;
    Ok(ball_from_row(&tree.dist, radius))
}

fn ball_from_row(row: &[Option<Length>], radius: Length) -> Vec<NodeId> {
    row.iter()
        .enumerate()
        .filter(|(_, d)| d.is_some_and(|d| d < radius))
        .map(|(u, _)| u)
        .collect()
}

/// Every shortest `s`–`t` path, as vertex sequences in lexicographic order.
pub fn all_shortest_paths(g: &Graph, apsp: &DistanceMatrix, s: NodeId, t: NodeId) -> Vec<Vec<NodeId>> {
    let Some(total) = apsp.get(s, t) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut stack = vec![s];
    let mut on_path = vec![false; g.node_count()];
    on_path[s] = true;
    extend_paths(g, apsp, s, t, total, &mut stack, &mut on_path, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn extend_paths(
    g: &Graph,
    apsp: &DistanceMatrix,
    s: NodeId,
    t: NodeId,
    total: Length,
    stack: &mut Vec<NodeId>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<NodeId>>,
) {
    let cur = *stack.last().expect("path starts at s");
    if cur == t {
        out.push(stack.clone());
        return;
    }
    let here = apsp.get(s, cur).expect("on a shortest path");
    let mut next: Vec<NodeId> = g
        .neighbors(cur)
        .iter()
        .filter(|a| !on_path[a.to])
        .filter(|a| apsp.get(s, a.to) == Some(here + a.len))
        .filter(|a| apsp.get(a.to, t).is_some_and(|rest| here + a.len + rest == total))
        .map(|a| a.to)
        .collect();
    next.sort_unstable();
    next.dedup();
    for x in next {
        stack.push(x);
        on_path[x] = true;
        extend_paths(g, apsp, s, t, total, stack, on_path, out);
        on_path[x] = false;
        stack.pop();
    }
}

/// One enumerated shortest path with its vertex mask and the masks of its
/// endpoint-trimmed variants.
struct CatalogEntry {
    len: Length,
    full: u128,
    trimmed: [u128; 3],
}

struct PathCatalog {
    entries: Vec<CatalogEntry>,
}

impl PathCatalog {
    fn build(g: &Graph, apsp: &DistanceMatrix, max_paths: usize) -> Result<Self> {
        let n = g.node_count();
        if n > MAX_UNIVERSE {
            return Err(Error::CapExceeded {
                what: "highway-dimension node count",
                size: n,
                cap: MAX_UNIVERSE,
            });
        }
        let mut entries = Vec::new();
        for s in 0..n {
            // Undirected: one orientation per pair carries the same sets.
            let lo = if g.is_directed() { 0 } else { s + 1 };
            for t in lo..n {
                if s == t {
                    continue;
                }
                for path in all_shortest_paths(g, apsp, s, t) {
                    let full = path.iter().fold(0u128, |m, &x| m | 1 << x);
                    let (bs, bt) = (1u128 << s, 1u128 << t);
                    entries.push(CatalogEntry {
                        len: apsp.get(s, t).expect("reachable"),
                        full,
                        trimmed: [full & !bs, full & !bt, full & !bs & !bt],
                    });
                    if entries.len() > max_paths {
                        return Err(Error::CapExceeded {
                            what: "enumerated shortest paths",
                            size: entries.len(),
                            cap: max_paths,
                        });
                    }
                }
            }
        }
        Ok(PathCatalog { entries })
    }

    /// Masks that must be hit: paths (or trimmed subpaths when `trim`) whose
    /// parent path has length `>= min_len` and that lie inside `ball`.
    fn sets(&self, min_len: Length, ball: u128, trim: bool) -> Vec<u128> {
        let mut out = Vec::new();
        for e in self.entries.iter().filter(|e| e.len >= min_len) {
            let variants = std::iter::once(e.full).chain(if trim { e.trimmed.to_vec() } else { Vec::new() });
            for m in variants {
                if m != 0 && m & !ball == 0 {
                    out.push(m);
                }
            }
        }
        out
    }
}

fn mask_to_nodes(mask: u128) -> Vec<NodeId> {
    (0..MAX_UNIVERSE).filter(|&i| mask >> i & 1 == 1).collect()
}

fn nodes_to_mask(nodes: &[NodeId]) -> u128 {
    nodes.iter().fold(0u128, |m, &x| m | 1 << x)
}

/// Path sets for center `v` and radius `r` under the given definition.
pub fn local_path_sets(g: &Graph, v: NodeId, r: Length, definition: Definition) -> Result<HittingInstance> {
    g.check_node(v)?;
    let apsp = all_pairs(g, DEFAULT_ALL_PAIRS_CAP)?;
    let catalog = PathCatalog::build(g, &apsp, HdCaps::default().max_paths)?;
    let ball_nodes = ball_from_row(apsp.row(v), r.saturating_mul(4));
    let ball_mask = nodes_to_mask(&ball_nodes);
    let masks = match definition {
        Definition::Classic => catalog.sets(r.max(1), ball_mask, false),
        Definition::Refined => catalog.sets(r + 1, ball_mask, true),
    };
    Ok(HittingInstance {
        universe: ball_nodes,
        path_sets: masks.into_iter().map(mask_to_nodes).collect(),
        origin: (v, r),
    })
}

/// Drop duplicates and strict supersets; any hitting set of the remainder
/// hits everything.
fn minimal_sets(mut sets: Vec<u128>) -> Vec<u128> {
    sets.sort_unstable_by_key(|m| (m.count_ones(), *m));
    sets.dedup();
    let mut kept: Vec<u128> = Vec::new();
    for m in sets {
        if !kept.iter().any(|&k| k & m == k) {
            kept.push(m);
        }
    }
    kept
}

/// Greedy cover: repeatedly take the element hitting most remaining sets.
pub fn greedy_hitting_set(inst: &HittingInstance) -> Vec<NodeId> {
    let sets: Vec<u128> = inst.path_sets.iter().map(|s| nodes_to_mask(s)).collect();
    mask_to_nodes(greedy_mask(&sets))
}

fn greedy_mask(sets: &[u128]) -> u128 {
    let mut chosen = 0u128;
    let mut open: Vec<u128> = sets.to_vec();
    while !open.is_empty() {
        let union = open.iter().fold(0u128, |a, &m| a | m);
        let best = mask_to_nodes(union)
            .into_iter()
            .max_by_key(|&e| (open.iter().filter(|&&m| m >> e & 1 == 1).count(), std::cmp::Reverse(e)))
            .expect("non-empty sets");
        chosen |= 1 << best;
        open.retain(|&m| m >> best & 1 == 0);
    }
    chosen
}

/// Size of a greedily built family of pairwise disjoint sets: a lower bound.
pub fn disjoint_packing_bound(inst: &HittingInstance) -> usize {
    let sets: Vec<u128> = inst.path_sets.iter().map(|s| nodes_to_mask(s)).collect();
    packing_bound(&sets)
}

fn packing_bound(sets: &[u128]) -> usize {
    let mut order: Vec<u128> = sets.to_vec();
    order.sort_unstable_by_key(|m| (m.count_ones(), *m));
    let mut used = 0u128;
    let mut count = 0;
    for m in order {
        if m & used == 0 {
            used |= m;
            count += 1;
        }
    }
    count
}

struct HittingSearch {
    best: u128,
    best_size: u32,
}

impl HittingSearch {
    fn run(&mut self, open: &[u128], chosen: u128, forbidden: u128) {
        if open.is_empty() {
            let size = chosen.count_ones();
            if size < self.best_size {
                self.best = chosen;
                self.best_size = size;
            }
            return;
        }
        if chosen.count_ones() as usize + packing_bound(open) >= self.best_size as usize {
            return;
        }
        // Branch on the smallest open set, most frequent elements first.
        let pivot = *open
            .iter()
            .min_by_key(|m| ((**m & !forbidden).count_ones(), **m))
            .expect("non-empty");
        let mut options = mask_to_nodes(pivot & !forbidden);
        if options.is_empty() {
            return;
        }
        options.sort_by_key(|&e| (std::cmp::Reverse(open.iter().filter(|&&m| m >> e & 1 == 1).count()), e));
        let mut banned = forbidden;
        for e in options {
            let rest: Vec<u128> = open.iter().copied().filter(|&m| m >> e & 1 == 0).collect();
            self.run(&rest, chosen | 1 << e, banned);
            banned |= 1 << e;
        }
    }
}

/// Exact minimum hitting set by branch and bound.
pub fn min_hitting_set(inst: &HittingInstance, max_sets: usize) -> Result<HittingSolution> {
    if let Some(&bad) = inst.universe.iter().find(|&&u| u >= MAX_UNIVERSE) {
        return Err(Error::CapExceeded {
            what: "hitting-set element id",
            size: bad + 1,
            cap: MAX_UNIVERSE,
        });
    }
    let raw: Vec<u128> = inst.path_sets.iter().map(|s| nodes_to_mask(s)).collect();
    if raw.contains(&0) {
        return Err(Error::InvalidParams("empty path set cannot be hit".into()));
    }
    let sets = minimal_sets(raw);
    Ok(mask_to_solution(solve_masks(&sets, max_sets)?))
}

fn mask_to_solution(mask: u128) -> HittingSolution {
    HittingSolution {
        size: mask.count_ones() as usize,
        set: mask_to_nodes(mask),
    }
}

fn solve_masks(sets: &[u128], max_sets: usize) -> Result<u128> {
    if sets.len() > max_sets {
        return Err(Error::CapExceeded {
            what: "hitting-set instance (path sets)",
            size: sets.len(),
            cap: max_sets,
        });
    }
    let greedy = greedy_mask(sets);
    let mut search = HittingSearch {
        best: greedy,
        best_size: greedy.count_ones(),
    };
    search.run(sets, 0, 0);
    Ok(search.best)
}

/// Exact highway dimension by sweeping every breakpoint radius and center.
///
/// The classic family only changes when `r` crosses a shortest-path length,
/// and within such an interval the ball only grows, so the maximum is
/// attained at the breakpoints themselves. For the refined family (strict
/// `> r`) the supremum over `[r_i, r_(i+1))` is approached from below
/// `r_(i+1)`: paths of length `>= r_(i+1)` inside `dist < 4·r_(i+1)`; the
/// witness radius reported is that breakpoint.
pub fn highway_dimension(g: &Graph, definition: Definition, caps: &HdCaps) -> Result<HighwayDimResult> {
    if g.is_directed() {
        return Err(Error::InvalidParams("highway dimension needs an undirected graph".into()));
    }
    let apsp = all_pairs(g, caps.all_pairs)?;
    let catalog = PathCatalog::build(g, &apsp, caps.max_paths)?;
    let radii = radii_from(&apsp);
    let n = g.node_count();
    let jobs: Vec<(Length, NodeId)> = radii
        .iter()
        .flat_map(|&r| (0..n).map(move |v| (r, v)))
        .collect();
    let trim = definition == Definition::Refined;
    let solved: Vec<(Length, NodeId, u128)> = jobs
        .par_iter()
        .map(|&(r, v)| {
            let ball_mask = nodes_to_mask(&ball_from_row(apsp.row(v), r.saturating_mul(4)));
            let sets = minimal_sets(catalog.sets(r, ball_mask, trim));
            solve_masks(&sets, caps.max_sets).map(|m| (r, v, m))
        })
        .collect::<Result<_>>()?;
    // Largest optimum; ties keep the earliest (r, v).
    let best = solved
        .into_iter()
        .fold(None::<(Length, NodeId, u128)>, |acc, cur| match acc {
            Some(a) if a.2.count_ones() >= cur.2.count_ones() => Some(a),
            _ => Some(cur),
        });
    let (r, v, mask) = best.unwrap_or((0, 0, 0));
    Ok(HighwayDimResult {
        definition,
        h: mask.count_ones() as usize,
        witness: Witness {
            r,
            v,
            set: mask_to_nodes(mask),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtkq::build_gtk;

    fn star() -> Graph {
        Graph::new(5, false, (1..5).map(|l| (0, l, 1))).unwrap()
    }

    #[test]
    fn radii() {
        let edge = Graph::new(2, false, [(0, 1, 1)]).unwrap();
        assert_eq!(candidate_radii(&edge, 10).unwrap(), vec![1]);
        let p3 = Graph::new(3, false, [(0, 1, 1), (1, 2, 1)]).unwrap();
        assert_eq!(candidate_radii(&p3, 10).unwrap(), vec![1, 2]);
    }

    #[test]
    fn balls() {
        let (g, _) = build_gtk(2, 2).unwrap();
        assert!(ball(&g, 0, 0).unwrap().is_empty());
        assert_eq!(ball(&g, 0, 17).unwrap().len(), 7);
        assert_eq!(ball(&g, 3, 1000).unwrap().len(), 7);
        // Strict inequality: the root is at distance 16 from every leaf.
        assert_eq!(ball(&g, 3, 16).unwrap(), vec![1, 3, 4]);
    }

    #[test]
    fn single_edge_instance() {
        let edge = Graph::new(2, false, [(0, 1, 1)]).unwrap();
        let inst = local_path_sets(&edge, 0, 1, Definition::Classic).unwrap();
        assert_eq!(inst.path_sets, vec![vec![0, 1]]);
        let hd = highway_dimension(&edge, Definition::Classic, &HdCaps::default()).unwrap();
        assert_eq!(hd.h, 1);
    }

    #[test]
    fn star_instance_hit_by_center() {
        let g = star();
        let inst = local_path_sets(&g, 0, 1, Definition::Classic).unwrap();
        // 4 leaf-center paths and 6 leaf-leaf paths.
        assert_eq!(inst.path_sets.len(), 10);
        assert!(inst.path_sets.iter().all(|p| p.contains(&0)));
        let sol = min_hitting_set(&inst, 64).unwrap();
        assert_eq!(sol.set, vec![0]);
        let hd = highway_dimension(&g, Definition::Classic, &HdCaps::default()).unwrap();
        assert_eq!(hd.h, 1);
    }

    fn inst(sets: &[&[NodeId]]) -> HittingInstance {
        let universe: BTreeSet<NodeId> = sets.iter().flat_map(|s| s.iter().copied()).collect();
        HittingInstance {
            universe: universe.into_iter().collect(),
            path_sets: sets.iter().map(|s| s.to_vec()).collect(),
            origin: (0, 1),
        }
    }

    #[test]
    fn hitting_set_small_cases() {
        assert_eq!(min_hitting_set(&inst(&[&[0], &[1]]), 64).unwrap().size, 2);
        assert_eq!(min_hitting_set(&inst(&[&[0, 1], &[0, 1, 2], &[0]]), 64).unwrap().set, vec![0]);
        assert!(min_hitting_set(&inst(&[&[]]), 64).is_err());
        let many: Vec<Vec<NodeId>> = (0..10).map(|i| vec![i]).collect();
        let refs: Vec<&[NodeId]> = many.iter().map(|v| v.as_slice()).collect();
        assert!(min_hitting_set(&inst(&refs), 5).unwrap_err().is_cap());
    }

    #[test]
    fn hitting_set_beats_greedy_when_it_can() {
        // Two hubs of degree 3 cover everything.
        let i = inst(&[&[0, 1], &[0, 2], &[0, 3], &[1, 4], &[2, 4], &[3, 4]]);
        assert_eq!(min_hitting_set(&i, 64).unwrap().set, vec![0, 4]);
    }

    #[test]
    fn all_paths_enumerates_ties() {
        let g = Graph::new(4, false, [(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, 1)]).unwrap();
        let apsp = all_pairs(&g, 10).unwrap();
        assert_eq!(all_shortest_paths(&g, &apsp, 0, 3), vec![vec![0, 1, 3], vec![0, 2, 3]]);
    }
}

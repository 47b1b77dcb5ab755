//! Hub labelings: storage, merge queries, cover verification, the
//! structural and CH-derived constructions, and an exhaustive minimum-total
//! oracle for tiny graphs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ch::{upward_search, ChIndex};
use crate::error::{Error, Result};
use crate::graph::{all_pairs, dijkstra, DistanceMatrix, Graph, Length, NodeId};
use crate::gtkq::{lca_height, GtkqMeta};

/// Default node cap for [`exact_min_total_labeling`].
pub const DEFAULT_EXACT_HL_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HubEntry {
    pub hub: NodeId,
    pub dist: Length,
}

/// Per-node hub labels. Undirected labelings keep a single label per node;
/// directed ones keep forward labels (distances from the node) and reverse
/// labels (distances to the node).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    forward: Vec<Vec<HubEntry>>,
    reverse: Option<Vec<Vec<HubEntry>>>,
}

fn normalize(mut label: Vec<HubEntry>) -> Vec<HubEntry> {
    label.sort();
    label.dedup_by_key(|e| e.hub);
    label
}

impl Labeling {
    pub fn undirected(labels: Vec<Vec<HubEntry>>) -> Self {
        Labeling {
            forward: labels.into_iter().map(normalize).collect(),
            reverse: None,
        }
    }

    pub fn directed(forward: Vec<Vec<HubEntry>>, reverse: Vec<Vec<HubEntry>>) -> Result<Self> {
        if forward.len() != reverse.len() {
            return Err(Error::InvalidParams("forward and reverse label counts differ".into()));
        }
        Ok(Labeling {
            forward: forward.into_iter().map(normalize).collect(),
            reverse: Some(reverse.into_iter().map(normalize).collect()),
        })
    }

    /// Fills in exact distances for the given hub sets. A hub that cannot be
    /// reached is rejected.
    pub fn from_hub_sets(
        apsp: &DistanceMatrix,
        forward: &[Vec<NodeId>],
        reverse: Option<&[Vec<NodeId>]>,
    ) -> Result<Self> {
        let fill = |sets: &[Vec<NodeId>], outgoing: bool| -> Result<Vec<Vec<HubEntry>>> {
            sets.iter()
                .enumerate()
                .map(|(v, hubs)| {
                    hubs.iter()
                        .map(|&x| {
                            let d = if outgoing { apsp.get(v, x) } else { apsp.get(x, v) };
                            d.map(|dist| HubEntry { hub: x, dist }).ok_or_else(|| {
                                Error::InvalidParams(format!("hub {x} unreachable for node {v}"))
                            })
                        })
                        .collect()
                })
                .collect()
        };
        if forward.len() != apsp.node_count() {
            return Err(Error::InvalidParams("one label per node expected".into()));
        }
        match reverse {
            None => Ok(Labeling::undirected(fill(forward, true)?)),
            Some(rev) => Labeling::directed(fill(forward, true)?, fill(rev, false)?),
        }
    }

    pub fn node_count(&self) -> usize {
        self.forward.len()
    }

    pub fn is_directed(&self) -> bool {
        self.reverse.is_some()
    }

    /// `L(v)`, or `L_f(v)` for directed labelings.
    pub fn forward(&self, v: NodeId) -> &[HubEntry] {
        &self.forward[v]
    }

    /// `L(v)`, or `L_r(v)` for directed labelings.
    pub fn reverse(&self, v: NodeId) -> &[HubEntry] {
        match &self.reverse {
            Some(r) => &r[v],
            None => &self.forward[v],
        }
    }

    pub fn forward_mut(&mut self, v: NodeId) -> &mut Vec<HubEntry> {
        &mut self.forward[v]
    }

    pub fn reverse_mut(&mut self, v: NodeId) -> &mut Vec<HubEntry> {
        match &mut self.reverse {
            Some(r) => &mut r[v],
            None => &mut self.forward[v],
        }
    }

    /// `Σ|L(v)|`, counting both sides for directed labelings.
    pub fn total(&self) -> usize {
        let f: usize = self.forward.iter().map(Vec::len).sum();
        f + self.reverse.as_ref().map_or(0, |r| r.iter().map(Vec::len).sum())
    }

    pub fn max_label(&self) -> usize {
        let f = self.forward.iter().map(Vec::len).max().unwrap_or(0);
        f.max(self.reverse.as_ref().map_or(0, |r| r.iter().map(Vec::len).max().unwrap_or(0)))
    }

    /// One line per node: `v: (hub,dist) ...`; directed labelings write
    /// `v f: ...` and `v r: ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, head: String, label: &[HubEntry]| {
            out.push_str(&head);
            out.push(':');
            for e in label {
                let _ = write!(out, " ({},{})", e.hub, e.dist);
            }
            out.push('\n');
        };
        for v in 0..self.node_count() {
            if self.is_directed() {
                line(&mut out, format!("{v} f"), self.forward(v));
                line(&mut out, format!("{v} r"), self.reverse(v));
            } else {
                line(&mut out, v.to_string(), self.forward(v));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HlQueryResult {
    pub distance: Option<Length>,
    pub hub: Option<NodeId>,
    pub comparisons: usize,
}

/// Merge of `L_f(s)` and `L_r(t)`; ties go to the smaller hub id.
pub fn hl_query(labels: &Labeling, s: NodeId, t: NodeId) -> HlQueryResult {
    let (a, b) = (labels.forward(s), labels.reverse(t));
    let (mut i, mut j) = (0, 0);
    let mut best: Option<(Length, NodeId)> = None;
    let mut comparisons = 0;
    while i < a.len() && j < b.len() {
        comparisons += 1;
        match a[i].hub.cmp(&b[j].hub) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let d = a[i].dist + b[j].dist;
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, a[i].hub));
                }
                i += 1;
                j += 1;
            }
        }
    }
    HlQueryResult {
        distance: best.map(|b| b.0),
        hub: best.map(|b| b.1),
        comparisons,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CoverCheck {
    Ok,
    WrongDistance { node: NodeId, hub: NodeId },
    Violation { s: NodeId, t: NodeId },
}

impl CoverCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, CoverCheck::Ok)
    }
}

/// Checks stored distances, then the cover property for every ordered pair
/// with finite distance. Self-pairs are checked only for undirected
/// labelings.
pub fn verify_cover(apsp: &DistanceMatrix, labels: &Labeling) -> Result<CoverCheck> {
    let n = apsp.node_count();
    if labels.node_count() != n {
        return Err(Error::InvalidParams(format!(
            "labeling has {} nodes, graph has {n}",
            labels.node_count()
        )));
    }
    for v in 0..n {
        for e in labels.forward(v) {
            if e.hub >= n || apsp.get(v, e.hub) != Some(e.dist) {
                return Ok(CoverCheck::WrongDistance { node: v, hub: e.hub });
            }
        }
        for e in labels.reverse(v) {
            if e.hub >= n || apsp.get(e.hub, v) != Some(e.dist) {
                return Ok(CoverCheck::WrongDistance { node: v, hub: e.hub });
            }
        }
    }
    for s in 0..n {
        for t in 0..n {
            if s == t && labels.is_directed() {
                continue;
            }
            if let Some(d) = apsp.get(s, t) {
                if hl_query(labels, s, t).distance != Some(d) {
                    return Ok(CoverCheck::Violation { s, t });
                }
            }
        }
    }
    Ok(CoverCheck::Ok)
}

/// `L(v^(a)) = { w^(b) : w ancestor-or-self of v, every copy b }`.
pub fn structural_labeling(g: &Graph, meta: &GtkqMeta) -> Result<Labeling> {
    if meta.node_count() != g.node_count() {
        return Err(Error::InvalidParams("metadata does not match graph".into()));
    }
    let q = meta.params.q;
    let labels = (0..g.node_count())
        .map(|v| {
            let dist = dijkstra(g, v)?.dist;
            let pos = meta.position(v);
            let mut positions = meta.ancestor_positions(pos);
            positions.push(pos);
            let mut label = Vec::with_capacity(positions.len() * q);
            for &p in &positions {
                for b in 0..q {
                    let hub = meta.id(b, p);
                    let d = dist[hub].ok_or_else(|| Error::Invariant(format!("{hub} unreachable from {v}")))?;
                    label.push(HubEntry { hub, dist: d });
                }
            }
            Ok(label)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Labeling::undirected(labels))
}

/// Labels from upward CH search spaces, keeping only hubs whose upward
/// distance is exact. The highest-ranked node of a shortest path is always
/// reached exactly from both ends, so pruning keeps the cover.
pub fn ch_labeling(idx: &ChIndex) -> Result<Labeling> {
    let g = &idx.base;
    let labels = (0..g.node_count())
        .map(|v| {
            let exact = dijkstra(g, v)?.dist;
            Ok(upward_search(idx, v)
                .into_iter()
                .filter(|&(x, d)| exact[x] == Some(d))
                .map(|(hub, dist)| HubEntry { hub, dist })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Labeling::undirected(labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub total: usize,
    pub max: usize,
    /// Mean of `|L_f(s)| + |L_r(t)|` over all ordered pairs.
    pub avg_query_cost: f64,
}

pub fn label_stats(labels: &Labeling) -> LabelStats {
    let n = labels.node_count().max(1) as f64;
    let total = labels.total();
    let sides = if labels.is_directed() { 1.0 } else { 2.0 };
    LabelStats {
        total,
        max: labels.max_label(),
        avg_query_cost: sides * total as f64 / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathClass {
    /// LCA height of the two leaf positions.
    pub i: usize,
    pub enumerated: usize,
    pub formula: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathClassCensus {
    pub classes: Vec<PathClass>,
}

impl PathClassCensus {
    pub fn all_match(&self) -> bool {
        self.classes.iter().all(|c| c.enumerated == c.formula)
    }
}

/// Counts unordered cross-copy leaf pairs by LCA height and compares with
/// `C(q,2)·t^k·(t^i − t^(i−1))`.
pub fn path_class_census(meta: &GtkqMeta) -> PathClassCensus {
    let p = meta.params;
    if p.q < 2 {
        return PathClassCensus { classes: Vec::new() };
    }
    let mut counts = vec![0usize; p.k + 1];
    let leaves: Vec<NodeId> = meta.leaves().collect();
    for (i, &s) in leaves.iter().enumerate() {
        for &t in &leaves[i + 1..] {
            if meta.copy(s) != meta.copy(t) {
                counts[lca_height(meta, s, t)] += 1;
            }
        }
    }
    let pairs = p.q * (p.q - 1) / 2;
    let classes = (1..=p.k)
        .map(|i| PathClass {
            i,
            enumerated: counts[i],
            formula: pairs * p.t.pow(p.k as u32) * (p.t.pow(i as u32) - p.t.pow(i as u32 - 1)),
        })
        .collect();
    PathClassCensus { classes }
}

/// Lower bound on `Σ|L(v)|` for any labeling of `G(t,k,q)`: `q(q−1)t^k/2`
/// per height `i` with `t^i − t^(i−1) ≥ q − 1`, less `t^k(k+q+1)`.
pub fn cross_copy_label_bound(t: usize, k: usize, q: usize) -> i64 {
    let tk = t.pow(k as u32) as i64;
    let per_class = (q * q.saturating_sub(1) / 2) as i64 * tk;
    let classes = (1..=k)
        .filter(|&i| t.pow(i as u32) - t.pow(i as u32 - 1) + 1 >= q)
        .count() as i64;
    classes * per_class - tk * (k + q + 1) as i64
}

/// Nodes on some shortest `s → t` path, as a bitmask.
fn hub_candidates(apsp: &DistanceMatrix, s: NodeId, t: NodeId) -> u64 {
    let Some(d) = apsp.get(s, t) else { return 0 };
    let mut mask = 0u64;
    for x in 0..apsp.node_count() {
        if let (Some(a), Some(b)) = (apsp.get(s, x), apsp.get(x, t)) {
            if a + b == d {
                mask |= 1 << x;
            }
        }
    }
    mask
}

struct MinTotalSearch {
    pairs: Vec<(NodeId, NodeId, u64)>,
    best_total: usize,
    best: Vec<u64>,
}

impl MinTotalSearch {
    fn cost(labels: &[u64]) -> usize {
        labels.iter().map(|m| m.count_ones() as usize).sum()
    }

    fn unsatisfied<'a>(&'a self, labels: &'a [u64]) -> impl Iterator<Item = &'a (NodeId, NodeId, u64)> + 'a {
        self.pairs
            .iter()
            .filter(move |&&(s, t, c)| labels[s] & labels[t] & c == 0)
    }

    /// Node-disjoint unsatisfied pairs each need a fresh hub entry.
    fn lower_bound(&self, labels: &[u64]) -> usize {
        let mut used = 0u64;
        let mut lb = 0;
        for &(s, t, _) in self.unsatisfied(labels) {
            if used & (1 << s | 1 << t) == 0 {
                used |= 1 << s | 1 << t;
                lb += 1;
            }
        }
        lb
    }

    fn run(&mut self, labels: &mut Vec<u64>) {
        let cost = Self::cost(labels);
        if cost + self.lower_bound(labels) >= self.best_total {
            return;
        }
        let next = self
            .unsatisfied(labels)
            .min_by_key(|&&(_, _, c)| c.count_ones())
            .copied();
        let Some((s, t, cands)) = next else {
            self.best_total = cost;
            self.best = labels.clone();
            return;
        };
        let mut options: Vec<(usize, NodeId)> = (0..64)
            .filter(|x| cands >> x & 1 == 1)
            .map(|x| {
                let add = (labels[s] >> x & 1 == 0) as usize + (labels[t] >> x & 1 == 0) as usize;
                (add, x)
            })
            .collect();
        options.sort();
        for (_, x) in options {
            let saved = (labels[s], labels[t]);
            labels[s] |= 1 << x;
            labels[t] |= 1 << x;
            self.run(labels);
            labels[s] = saved.0;
            labels[t] = saved.1;
        }
    }
}

/// Minimum `Σ|L(v)|` over undirected labelings with self-hubs, by
/// branch-and-bound over per-pair hub choices.
pub fn exact_min_total_labeling(g: &Graph, cap: usize) -> Result<(Labeling, usize)> {
    let n = g.node_count();
    if g.is_directed() {
        return Err(Error::InvalidParams("minimum-total oracle expects an undirected graph".into()));
    }
    if n > cap.min(64) {
        return Err(Error::CapExceeded { what: "node count", size: n, cap: cap.min(64) });
    }
    let apsp = all_pairs(g, n.max(1))?;
    let mut pairs = Vec::new();
    for s in 0..n {
        for t in s + 1..n {
            if apsp.get(s, t).is_some() {
                pairs.push((s, t, hub_candidates(&apsp, s, t)));
            }
        }
    }
    let mut labels: Vec<u64> = (0..n).map(|v| 1u64 << v).collect();
    // Every hub on every pair is a valid, if large, starting bound.
    let mut full = labels.clone();
    for &(s, t, _) in &pairs {
        full[s] |= 1 << t;
        full[t] |= 1 << s;
    }
    let mut search = MinTotalSearch {
        pairs,
        best_total: MinTotalSearch::cost(&full) + 1,
        best: full,
    };
    search.run(&mut labels);
    let sets: Vec<Vec<NodeId>> = search
        .best
        .iter()
        .map(|&m| (0..n).filter(|x| m >> x & 1 == 1).collect())
        .collect();
    let labeling = Labeling::from_hub_sets(&apsp, &sets, None)?;
    Ok((labeling, search.best_total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ch::{build_order, contract_preprocess, ContractionOrder, OrderStrategy};
    use crate::gtkq::{build_gtkq, GtkqParams};

    fn path3() -> Graph {
        Graph::new(3, false, [(0, 1, 1), (1, 2, 1)]).unwrap()
    }

    fn entries(v: &[(NodeId, Length)]) -> Vec<HubEntry> {
        v.iter().map(|&(hub, dist)| HubEntry { hub, dist }).collect()
    }

    #[test]
    fn path_labeling_cover_and_query() {
        let g = path3();
        let apsp = all_pairs(&g, 10).unwrap();
        let good = Labeling::undirected(vec![
            entries(&[(0, 0), (1, 1)]),
            entries(&[(1, 0)]),
            entries(&[(1, 1), (2, 0)]),
        ]);
        assert!(verify_cover(&apsp, &good).unwrap().is_ok());
        let r = hl_query(&good, 0, 2);
        assert_eq!((r.distance, r.hub), (Some(2), Some(1)));
        assert!(r.comparisons <= 4);
        assert_eq!(hl_query(&good, 0, 0).distance, Some(0));

        let mut bad = good.clone();
        *bad.forward_mut(0) = entries(&[(0, 0)]);
        assert_eq!(verify_cover(&apsp, &bad).unwrap(), CoverCheck::Violation { s: 0, t: 1 });

        let mut wrong = good.clone();
        wrong.forward_mut(0)[1].dist = 5;
        assert_eq!(verify_cover(&apsp, &wrong).unwrap(), CoverCheck::WrongDistance { node: 0, hub: 1 });
    }

    #[test]
    fn disjoint_labels_give_no_distance() {
        let l = Labeling::undirected(vec![entries(&[(0, 0)]), entries(&[(1, 0)])]);
        assert_eq!(hl_query(&l, 0, 1).distance, None);
        let s = label_stats(&l);
        assert_eq!((s.total, s.max), (2, 1));
    }

    #[test]
    fn structural_on_g222() {
        let (g, meta) = build_gtkq(&GtkqParams::new(2, 2, 2)).unwrap();
        let l = structural_labeling(&g, &meta).unwrap();
        assert_eq!(l.forward(meta.leaves().next().unwrap()).len(), 6);
        assert_eq!(l.total(), 68);
        assert!((label_stats(&l).avg_query_cost - 2.0 * 68.0 / 14.0).abs() < 1e-12);
        let apsp = all_pairs(&g, 100).unwrap();
        assert!(verify_cover(&apsp, &l).unwrap().is_ok());
    }

    #[test]
    fn ch_labels_cover() {
        let g = path3();
        let idx = contract_preprocess(&g, &ContractionOrder::explicit(&[0, 2, 1]).unwrap()).unwrap();
        let l = ch_labeling(&idx).unwrap();
        assert_eq!(hl_query(&l, 0, 2).distance, Some(2));
        assert!(l.forward(0).iter().any(|e| e.hub == 1));

        let k3 = Graph::new(3, false, [(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        let idx = contract_preprocess(&k3, &build_order(&k3, OrderStrategy::Input, None).unwrap()).unwrap();
        assert!(verify_cover(&all_pairs(&k3, 10).unwrap(), &ch_labeling(&idx).unwrap()).unwrap().is_ok());

        let (g, meta) = build_gtkq(&GtkqParams::new(2, 2, 2)).unwrap();
        let idx = contract_preprocess(&g, &build_order(&g, OrderStrategy::ByHeight, Some(&meta)).unwrap()).unwrap();
        assert!(verify_cover(&all_pairs(&g, 100).unwrap(), &ch_labeling(&idx).unwrap()).unwrap().is_ok());
    }

    #[test]
    fn census_g222() {
        let (_, meta) = build_gtkq(&GtkqParams::new(2, 2, 2)).unwrap();
        let c = path_class_census(&meta);
        assert_eq!(c.classes.iter().map(|c| c.enumerated).collect::<Vec<_>>(), vec![4, 8]);
        assert!(c.all_match());
        let (_, meta1) = build_gtkq(&GtkqParams::new(2, 2, 1)).unwrap();
        assert!(path_class_census(&meta1).classes.is_empty());
    }

    #[test]
    fn exact_minimum_small() {
        let single = Graph::new(1, false, []).unwrap();
        assert_eq!(exact_min_total_labeling(&single, 8).unwrap().1, 1);
        let edge = Graph::new(2, false, [(0, 1, 1)]).unwrap();
        assert_eq!(exact_min_total_labeling(&edge, 8).unwrap().1, 3);
        let (l, total) = exact_min_total_labeling(&path3(), 8).unwrap();
        assert_eq!(total, 5);
        assert!(verify_cover(&all_pairs(&path3(), 10).unwrap(), &l).unwrap().is_ok());
        let big = Graph::new(9, false, []).unwrap();
        assert!(exact_min_total_labeling(&big, 8).unwrap_err().is_cap());
    }

    #[test]
    fn label_bound_values() {
        assert_eq!(cross_copy_label_bound(2, 2, 2), 8 - 20);
        // t=4, k=2, q=4: heights 1 (3 >= 3) and 2 (12 >= 3) qualify.
        assert_eq!(cross_copy_label_bound(4, 2, 4), 2 * 6 * 16 - 16 * 7);
    }

    #[test]
    fn text_dump() {
        let l = Labeling::undirected(vec![entries(&[(1, 1), (0, 0)])]);
        assert_eq!(l.to_text(), "0: (0,0) (1,1)\n");
    }
}

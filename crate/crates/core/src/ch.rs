//! Contraction hierarchies: node orders, contraction with exact witness
//! search, the upward bidirectional query, and shortcut censuses on the
//! `G(t,k,q)` family.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Length, NodeId, SearchStats};
use crate::gtkq::GtkqMeta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStrategy {
    ByHeight,
    EdgeDifference,
    Input,
    Random(u64),
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionOrder {
    /// `rank[v]` is the contraction position of `v`.
    pub rank: Vec<usize>,
    pub strategy: OrderStrategy,
}

impl ContractionOrder {
    /// Order from a node sequence (first contracted first).
    pub fn from_sequence(seq: &[NodeId], strategy: OrderStrategy) -> Result<Self> {
        let n = seq.len();
        let mut rank = vec![usize::MAX; n];
        for (r, &v) in seq.iter().enumerate() {
            if v >= n || rank[v] != usize::MAX {
                return Err(Error::InvalidParams(format!(
                    "contraction sequence is not a permutation of 0..{n} (at {v})"
                )));
            }
            rank[v] = r;
        }
        Ok(ContractionOrder { rank, strategy })
    }

    pub fn explicit(seq: &[NodeId]) -> Result<Self> {
        Self::from_sequence(seq, OrderStrategy::Explicit)
    }

    /// Nodes in contraction order.
    pub fn sequence(&self) -> Vec<NodeId> {
        let mut seq = vec![0; self.rank.len()];
        for (v, &r) in self.rank.iter().enumerate() {
            seq[r] = v;
        }
        seq
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContractionConfig {
    /// Cap on witness-search hops. `None` is exact; a cap can only add
    /// shortcuts.
    pub hop_limit: Option<usize>,
}

/// The not-yet-contracted part of the graph during preprocessing.
struct Overlay {
    adj: Vec<BTreeMap<NodeId, Length>>,
    alive: Vec<bool>,
    hop_limit: Option<usize>,
}

impl Overlay {
    fn new(g: &Graph, config: ContractionConfig) -> Self {
        let mut adj = vec![BTreeMap::new(); g.node_count()];
        for e in g.edges() {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                let slot = adj[a].entry(b).or_insert(e.len);
                *slot = (*slot).min(e.len);
            }
        }
        Overlay {
            alive: vec![true; g.node_count()],
            adj,
            hop_limit: config.hop_limit,
        }
    }

    /// Distances from `src` avoiding `skip`, up to `bound`.
    fn witness_distances(&self, src: NodeId, skip: NodeId, bound: Length) -> BTreeMap<NodeId, Length> {
        let mut dist: BTreeMap<NodeId, (Length, usize)> = BTreeMap::new();
        let mut done = BTreeSet::new();
        let mut heap = BinaryHeap::new();
        dist.insert(src, (0, 0));
        heap.push(Reverse((0, 0usize, src)));
        while let Some(Reverse((d, hops, v))) = heap.pop() {
            if d > bound {
                break;
            }
            if !done.insert(v) {
                continue;
            }
            if self.hop_limit.is_some_and(|h| hops >= h) {
                continue;
            }
            for (&w, &len) in &self.adj[v] {
                if w == skip || done.contains(&w) {
                    continue;
                }
                let nd = d + len;
                if nd > bound {
                    continue;
                }
                let better = dist.get(&w).is_none_or(|&(old, _)| nd < old);
                if better {
                    dist.insert(w, (nd, hops + 1));
                    heap.push(Reverse((nd, hops + 1, w)));
                }
            }
        }
        dist.into_iter().map(|(v, (d, _))| (v, d)).collect()
    }

    /// Shortcuts contracting `v` would add right now.
    fn needed_shortcuts(&self, v: NodeId) -> Vec<(NodeId, NodeId, Length)> {
        let nbrs: Vec<(NodeId, Length)> = self.adj[v].iter().map(|(&u, &l)| (u, l)).collect();
        let mut out = Vec::new();
        for (i, &(u, lu)) in nbrs.iter().enumerate() {
            let rest = &nbrs[i + 1..];
            if rest.is_empty() {
                continue;
            }
            let bound = rest.iter().map(|&(_, lw)| lu + lw).max().expect("non-empty");
            let dist = self.witness_distances(u, v, bound);
            for &(w, lw) in rest {
                let via = lu + lw;
                // A witness of equal length suppresses the shortcut.
                if dist.get(&w).is_none_or(|&d| d > via) {
                    out.push((u, w, via));
                }
            }
        }
        out
    }

    fn contract(&mut self, v: NodeId) -> (Vec<NodeId>, Vec<(NodeId, NodeId, Length)>) {
        let shortcuts = self.needed_shortcuts(v);
        let nbrs: Vec<NodeId> = self.adj[v].keys().copied().collect();
        for &u in &nbrs {
            self.adj[u].remove(&v);
        }
        self.adj[v].clear();
        self.alive[v] = false;
        for &(u, w, len) in &shortcuts {
            for (a, b) in [(u, w), (w, u)] {
                let slot = self.adj[a].entry(b).or_insert(len);
                *slot = (*slot).min(len);
            }
        }
        (nbrs, shortcuts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortcut {
    pub u: NodeId,
    pub v: NodeId,
    pub len: Length,
    /// Rank of the node whose contraction introduced it.
    pub rank: usize,
}

/// Remaining neighbors of a node when it was contracted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionStep {
    pub node: NodeId,
    pub neighbors: Vec<NodeId>,
    pub shortcuts_added: usize,
}

#[derive(Debug, Clone)]
pub struct ChIndex {
    pub base: Graph,
    pub order: ContractionOrder,
    pub shortcuts: Vec<Shortcut>,
    /// Edges of `E ∪ E⁺` oriented towards the higher-ranked endpoint.
    pub up: Vec<Vec<(NodeId, Length)>>,
    pub steps: Vec<ContractionStep>,
}

impl ChIndex {
    pub fn node_count(&self) -> usize {
        self.base.node_count()
    }

    pub fn rank(&self, v: NodeId) -> usize {
        self.order.rank[v]
    }

    /// `u v w rank_introduced` per shortcut.
    pub fn shortcut_dump(&self) -> String {
        let mut out = String::new();
        for s in &self.shortcuts {
            let _ = writeln!(out, "{} {} {} {}", s.u, s.v, s.len, s.rank);
        }
        out
    }
}

pub fn build_order(g: &Graph, strategy: OrderStrategy, meta: Option<&GtkqMeta>) -> Result<ContractionOrder> {
    let n = g.node_count();
    match strategy {
        OrderStrategy::ByHeight => {
            let meta = meta.ok_or_else(|| {
                Error::InvalidParams("by-height order needs G(t,k,q) metadata".into())
            })?;
            if meta.node_count() != n {
                return Err(Error::InvalidParams("metadata does not match graph".into()));
            }
            // Ids are copy-major, so (height, id) is (height, copy, id).
            let mut seq: Vec<NodeId> = (0..n).collect();
            seq.sort_by_key(|&v| (meta.height(v), v));
            ContractionOrder::from_sequence(&seq, strategy)
        }
        OrderStrategy::Input => ContractionOrder::from_sequence(&(0..n).collect::<Vec<_>>(), strategy),
        OrderStrategy::Random(seed) => {
            let mut seq: Vec<NodeId> = (0..n).collect();
            seq.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            ContractionOrder::from_sequence(&seq, strategy)
        }
        OrderStrategy::EdgeDifference => edge_difference_order(g),
        OrderStrategy::Explicit => Err(Error::InvalidParams(
            "explicit orders are built with ContractionOrder::explicit".into(),
        )),
    }
}

/// Lazy greedy by edge difference (shortcuts added minus edges removed),
/// ties broken by fewer already-contracted neighbors, then node id.
fn edge_difference_order(g: &Graph) -> Result<ContractionOrder> {
    if g.is_directed() {
        return Err(Error::InvalidParams("contraction needs an undirected graph".into()));
    }
    let n = g.node_count();
    let mut overlay = Overlay::new(g, ContractionConfig::default());
    let mut contracted_nbrs = vec![0usize; n];
    let key = |o: &Overlay, c: &[usize], v: NodeId| -> (i64, usize, NodeId) {
        let ed = o.needed_shortcuts(v).len() as i64 - o.adj[v].len() as i64;
        (ed, c[v], v)
    };
    let mut heap: BinaryHeap<Reverse<(i64, usize, NodeId)>> =
        (0..n).map(|v| Reverse(key(&overlay, &contracted_nbrs, v))).collect();
    let mut seq = Vec::with_capacity(n);
    while let Some(Reverse(stale)) = heap.pop() {
        let v = stale.2;
        if !overlay.alive[v] {
            continue;
        }
        let fresh = key(&overlay, &contracted_nbrs, v);
        if heap.peek().is_some_and(|Reverse(next)| fresh > *next) {
            heap.push(Reverse(fresh));
            continue;
        }
        let (nbrs, _) = overlay.contract(v);
        for u in nbrs {
            contracted_nbrs[u] += 1;
        }
        seq.push(v);
    }
    ContractionOrder::from_sequence(&seq, OrderStrategy::EdgeDifference)
}

pub fn contract_preprocess(g: &Graph, order: &ContractionOrder) -> Result<ChIndex> {
    contract_with_config(g, order, ContractionConfig::default())
}

pub fn contract_with_config(g: &Graph, order: &ContractionOrder, config: ContractionConfig) -> Result<ChIndex> {
    if g.is_directed() {
        return Err(Error::InvalidParams("contraction needs an undirected graph".into()));
    }
    if order.len() != g.node_count() {
        return Err(Error::InvalidParams(format!(
            "order covers {} nodes, graph has {}",
            order.len(),
            g.node_count()
        )));
    }
    let n = g.node_count();
    let mut overlay = Overlay::new(g, config);
    let mut shortcuts = Vec::new();
    let mut steps = Vec::with_capacity(n);
    for (rank, v) in order.sequence().into_iter().enumerate() {
        let (neighbors, added) = overlay.contract(v);
        steps.push(ContractionStep {
            node: v,
            neighbors,
            shortcuts_added: added.len(),
        });
        shortcuts.extend(added.into_iter().map(|(u, w, len)| Shortcut { u, v: w, len, rank }));
    }

    let mut best: BTreeMap<(NodeId, NodeId), Length> = BTreeMap::new();
    let all = g
        .edges()
        .iter()
        .map(|e| (e.u, e.v, e.len))
        .chain(shortcuts.iter().map(|s| (s.u, s.v, s.len)));
    for (a, b, len) in all {
        let (lo, hi) = if order.rank[a] < order.rank[b] { (a, b) } else { (b, a) };
        let slot = best.entry((lo, hi)).or_insert(len);
        *slot = (*slot).min(len);
    }
    let mut up = vec![Vec::new(); n];
    for ((lo, hi), len) in best {
        up[lo].push((hi, len));
    }
    Ok(ChIndex {
        base: g.clone(),
        order: order.clone(),
        shortcuts,
        up,
        steps,
    })
}

/// Full upward search space from `v`: every node reachable along
/// rank-increasing edges, with its upward distance.
pub fn upward_search(idx: &ChIndex, v: NodeId) -> BTreeMap<NodeId, Length> {
    let mut dist: BTreeMap<NodeId, Length> = BTreeMap::new();
    let mut done = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(v, 0);
    heap.push(Reverse((0, v)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if done.contains_key(&x) {
            continue;
        }
        done.insert(x, d);
        for &(y, len) in &idx.up[x] {
            let nd = d + len;
            if dist.get(&y).is_none_or(|&old| nd < old) {
                dist.insert(y, nd);
                heap.push(Reverse((nd, y)));
            }
        }
    }
    done
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChQueryResult {
    pub distance: Option<Length>,
    pub meeting: Option<NodeId>,
    pub stats: SearchStats,
}

/// Bidirectional Dijkstra over upward edges only. Each side stops once its
/// queue minimum reaches the best meeting value.
pub fn ch_query(idx: &ChIndex, s: NodeId, t: NodeId) -> Result<ChQueryResult> {
    idx.base.check_node(s)?;
    idx.base.check_node(t)?;
    let n = idx.node_count();
    let mut stats = SearchStats::default();
    let mut dist = [vec![None::<Length>; n], vec![None::<Length>; n]];
    let mut settled = [vec![false; n], vec![false; n]];
    let mut heaps = [BinaryHeap::new(), BinaryHeap::new()];
    dist[0][s] = Some(0);
    dist[1][t] = Some(0);
    heaps[0].push(Reverse((0, s)));
    heaps[1].push(Reverse((0, t)));
    let mut best: Option<(Length, NodeId)> = None;

    loop {
        let open = |side: usize, h: &BinaryHeap<Reverse<(Length, NodeId)>>, best: Option<(Length, NodeId)>| {
            h.peek()
                .map(|Reverse((d, _))| *d)
                .filter(|&d| best.is_none_or(|(bd, _)| d < bd))
                .map(|d| (d, side))
        };
        let side = match (open(0, &heaps[0], best), open(1, &heaps[1], best)) {
            (None, None) => break,
            (Some((_, s)), None) | (None, Some((_, s))) => s,
            (Some((a, _)), Some((b, _))) => {
                if a <= b {
                    0
                } else {
                    1
                }
            }
        };
        let Reverse((d, v)) = heaps[side].pop().expect("open side has entries");
        if settled[side][v] {
            continue;
        }
        settled[side][v] = true;
        stats.settled += 1;
        if let Some(od) = dist[1 - side][v] {
            if settled[1 - side][v] {
                let cand = d + od;
                if best.is_none_or(|(bd, bv)| cand < bd || (cand == bd && v < bv)) {
                    best = Some((cand, v));
                }
            }
        }
        for &(w, len) in &idx.up[v] {
            stats.relaxed += 1;
            let nd = d + len;
            if dist[side][w].is_none_or(|old| nd < old) {
                dist[side][w] = Some(nd);
                heaps[side].push(Reverse((nd, w)));
            }
        }
    }
    Ok(ChQueryResult {
        distance: best.map(|b| b.0),
        meeting: best.map(|b| b.1),
        stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChStats {
    pub e_plus: usize,
    pub leaf_shortcuts: Option<usize>,
    pub avg_settled: f64,
    pub avg_relaxed: f64,
}

/// E⁺ size and mean query work over the given pairs.
pub fn ch_stats(idx: &ChIndex, pairs: &[(NodeId, NodeId)], meta: Option<&GtkqMeta>) -> Result<ChStats> {
    let mut settled = 0usize;
    let mut relaxed = 0usize;
    for &(s, t) in pairs {
        let r = ch_query(idx, s, t)?;
        settled += r.stats.settled;
        relaxed += r.stats.relaxed;
    }
    let denom = pairs.len().max(1) as f64;
    Ok(ChStats {
        e_plus: idx.shortcuts.len(),
        leaf_shortcuts: meta.map(|m| shortcuts_at_leaves(m, idx)),
        avg_settled: settled as f64 / denom,
        avg_relaxed: relaxed as f64 / denom,
    })
}

/// Shortcuts introduced while contracting leaves.
pub fn shortcuts_at_leaves(meta: &GtkqMeta, idx: &ChIndex) -> usize {
    idx.steps
        .iter()
        .filter(|s| meta.is_leaf(s.node))
        .map(|s| s.shortcuts_added)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafShortcutCensus {
    pub leaf_shortcuts: usize,
    pub predicted: usize,
    /// Predicted but absent, plus present but not predicted.
    pub criterion_violations: usize,
}

/// Checks the by-height shortcut criterion: contracting leaf `s^(b)`
/// shortcuts `s^(a)`–`s^(b)`–`w^(b)` exactly when `a != b`, `w` is a proper
/// ancestor of `s`, and `s^(b)` goes before `s^(a)`.
pub fn leaf_shortcut_census(meta: &GtkqMeta, idx: &ChIndex) -> Result<LeafShortcutCensus> {
    if idx.order.strategy != OrderStrategy::ByHeight {
        return Err(Error::InvalidParams("leaf shortcut census needs the by-height order".into()));
    }
    let q = meta.params.q;
    let mut predicted: BTreeSet<(NodeId, NodeId, NodeId)> = BTreeSet::new();
    for s_b in meta.leaves() {
        let pos = meta.position(s_b);
        let b = meta.copy(s_b);
        for a in (0..q).filter(|&a| a != b) {
            let s_a = meta.id(a, pos);
            if idx.rank(s_b) < idx.rank(s_a) {
                for w in meta.ancestor_positions(pos) {
                    let w_b = meta.id(b, w);
                    predicted.insert((s_a.min(w_b), s_a.max(w_b), s_b));
                }
            }
        }
    }
    let seq = idx.order.sequence();
    let actual: BTreeSet<(NodeId, NodeId, NodeId)> = idx
        .shortcuts
        .iter()
        .filter(|s| meta.is_leaf(seq[s.rank]))
        .map(|s| (s.u.min(s.v), s.u.max(s.v), seq[s.rank]))
        .collect();
    Ok(LeafShortcutCensus {
        leaf_shortcuts: actual.len(),
        predicted: predicted.len(),
        criterion_violations: predicted.symmetric_difference(&actual).count(),
    })
}

/// `t^k · k · C(q,2)`: leaf shortcuts under the by-height order.
pub fn predicted_leaf_shortcuts(t: usize, k: usize, q: usize) -> usize {
    t.pow(k as u32) * k * q * q.saturating_sub(1) / 2
}

/// `C(q,2) · k · t^(k-1) · (t-1)`: the lower bound on leaf shortcuts for any
/// contraction order.
pub fn any_order_leaf_bound(t: usize, k: usize, q: usize) -> usize {
    q * q.saturating_sub(1) / 2 * k * t.pow(k as u32 - 1) * (t - 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafEdgeCensus {
    /// Shortcuts introduced at leaf contractions.
    pub leaf_shortcuts: usize,
    /// Per copy: same-copy neighbors of its leaves at their contraction.
    pub same_copy_leaf_edges: Vec<usize>,
}

pub fn leaf_edge_census(meta: &GtkqMeta, idx: &ChIndex) -> LeafEdgeCensus {
    let mut per_copy = vec![0usize; meta.params.q];
    for step in idx.steps.iter().filter(|s| meta.is_leaf(s.node)) {
        let c = meta.copy(step.node);
        per_copy[c] += step.neighbors.iter().filter(|&&u| meta.copy(u) == c).count();
    }
    LeafEdgeCensus {
        leaf_shortcuts: shortcuts_at_leaves(meta, idx),
        same_copy_leaf_edges: per_copy,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortcutDelta {
    pub node: NodeId,
    /// Per child subtree: leaves ranked above `node`.
    pub counts: Vec<usize>,
    /// Σ_{i<j} c_i·c_j − Σ c_i
    pub value: i64,
}

/// Net leaf-edge gain from contracting the non-leaf `v` before the leaves
/// counted in `counts`.
pub fn shortcut_delta(meta: &GtkqMeta, order: &ContractionOrder, v: NodeId) -> Result<ShortcutDelta> {
    if meta.is_leaf(v) {
        return Err(Error::InvalidParams(format!("node {v} is a leaf")));
    }
    let copy = meta.copy(v);
    let rv = order.rank[v];
    let counts: Vec<usize> = meta
        .child_positions(meta.position(v))
        .map(|child| {
            meta.leaf_positions_under(child)
                .into_iter()
                .filter(|&leaf| order.rank[meta.id(copy, leaf)] > rv)
                .count()
        })
        .collect();
    Ok(ShortcutDelta {
        node: v,
        value: delta_value(&counts),
        counts,
    })
}

fn delta_value(counts: &[usize]) -> i64 {
    let sum: i64 = counts.iter().map(|&c| c as i64).sum();
    let sq: i64 = counts.iter().map(|&c| (c * c) as i64).sum();
    (sum * sum - sq) / 2 - sum
}

//! Transit node routing on top of a contraction hierarchy.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ch::{ch_query, ChIndex};
use crate::error::{Error, Result};
use crate::graph::{dijkstra, Length, NodeId};
use crate::gtkq::GtkqMeta;
use crate::hub_labeling::HubEntry;

/// Tables above this many entries are left out of text dumps.
pub const TABLE_DUMP_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct TnrIndex {
    pub ch: ChIndex,
    /// Transit nodes, highest rank first.
    pub transit: Vec<NodeId>,
    /// Position of each node in `transit`.
    pub transit_slot: Vec<Option<usize>>,
    /// `table[i * |T| + j]` is the distance between transit nodes `i` and `j`.
    pub table: Vec<Option<Length>>,
    /// Access nodes per node, sorted by transit id, exact distances.
    pub access: Vec<Vec<HubEntry>>,
    /// Nodes settled by the pruned upward search, sorted.
    pub filter_data: Vec<Vec<NodeId>>,
}

impl TnrIndex {
    pub fn node_count(&self) -> usize {
        self.ch.node_count()
    }

    pub fn is_transit(&self, v: NodeId) -> bool {
        self.transit_slot[v].is_some()
    }

    pub fn table_get(&self, u: NodeId, v: NodeId) -> Option<Length> {
        let (i, j) = (self.transit_slot[u]?, self.transit_slot[v]?);
        self.table[i * self.transit.len() + j]
    }

    /// One line per node: `v: (t,d) ...`.
    pub fn access_dump(&self) -> String {
        let mut out = String::new();
        for (v, acc) in self.access.iter().enumerate() {
            let _ = write!(out, "{v}:");
            for e in acc {
                let _ = write!(out, " ({},{})", e.hub, e.dist);
            }
            out.push('\n');
        }
        out
    }
}

/// Upward search from `v` that settles transit nodes without relaxing their
/// edges.
fn pruned_upward(ch: &ChIndex, is_transit: &[bool], v: NodeId) -> BTreeMap<NodeId, Length> {
    let mut settled = BTreeMap::new();
    let mut best: BTreeMap<NodeId, Length> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(v, 0);
    heap.push(Reverse((0, v)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if settled.contains_key(&x) {
            continue;
        }
        settled.insert(x, d);
        if is_transit[x] {
            continue;
        }
        for &(y, len) in &ch.up[x] {
            let nd = d + len;
            if best.get(&y).is_none_or(|&old| nd < old) {
                best.insert(y, nd);
                heap.push(Reverse((nd, y)));
            }
        }
    }
    settled
}

/// Picks the `transit_size` highest-ranked nodes (default `ceil(sqrt(n))`)
/// and computes access nodes, filter data and the transit table.
pub fn build_tnr(ch: &ChIndex, transit_size: Option<usize>) -> Result<TnrIndex> {
    let n = ch.node_count();
    let size = transit_size.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize);
    if size > n {
        return Err(Error::InvalidParams(format!("transit size {size} exceeds node count {n}")));
    }
    let transit: Vec<NodeId> = ch.order.sequence().into_iter().rev().take(size).collect();
    let mut transit_slot = vec![None; n];
    for (i, &u) in transit.iter().enumerate() {
        transit_slot[u] = Some(i);
    }
    let is_transit: Vec<bool> = transit_slot.iter().map(Option::is_some).collect();

    let rows: Vec<Vec<Option<Length>>> = transit
        .par_iter()
        .map(|&u| {
            let dist = dijkstra(&ch.base, u)?.dist;
            Ok(transit.iter().map(|&w| dist[w]).collect())
        })
        .collect::<Result<_>>()?;
    let table: Vec<Option<Length>> = rows.into_iter().flatten().collect();
    let tsize = transit.len();
    let table_at = |u: NodeId, w: NodeId| -> Option<Length> {
        table[transit_slot[u]? * tsize + transit_slot[w]?]
    };

    let per_node: Vec<(Vec<HubEntry>, Vec<NodeId>)> = (0..n)
        .into_par_iter()
        .map(|v| {
            let space = pruned_upward(ch, &is_transit, v);
            let exact = dijkstra(&ch.base, v)?.dist;
            let mut cands: Vec<(Length, NodeId)> = space
                .keys()
                .filter(|&&x| is_transit[x])
                .map(|&x| {
                    exact[x]
                        .map(|d| (d, x))
                        .ok_or_else(|| Error::Invariant(format!("transit node {x} unreachable from {v}")))
                })
                .collect::<Result<_>>()?;
            cands.sort();
            let mut kept: Vec<(Length, NodeId)> = Vec::new();
            for (d, u) in cands {
                let dominated = kept
                    .iter()
                    .any(|&(dw, w)| table_at(w, u).is_some_and(|wu| dw + wu == d));
                if !dominated {
                    kept.push((d, u));
                }
            }
            let mut access: Vec<HubEntry> = kept.into_iter().map(|(dist, hub)| HubEntry { hub, dist }).collect();
            access.sort();
            Ok((access, space.into_keys().collect()))
        })
        .collect::<Result<_>>()?;
    let (access, filter_data) = per_node.into_iter().unzip();
    Ok(TnrIndex {
        ch: ch.clone(),
        transit,
        transit_slot,
        table,
        access,
        filter_data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locality {
    Local,
    Global,
}

/// Global iff both nodes have access nodes and their pruned search spaces
/// share no non-transit node.
pub fn locality_filter(tnr: &TnrIndex, s: NodeId, t: NodeId) -> Locality {
    if tnr.access[s].is_empty() || tnr.access[t].is_empty() {
        return Locality::Local;
    }
    let (a, b) = (&tnr.filter_data[s], &tnr.filter_data[t]);
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if !tnr.is_transit(a[i]) {
                    return Locality::Local;
                }
                i += 1;
                j += 1;
            }
        }
    }
    Locality::Global
}

/// `min dist(s,u) + table[u][v] + dist(v,t)` over access pairs.
pub fn table_answer(tnr: &TnrIndex, s: NodeId, t: NodeId) -> (Option<Length>, usize) {
    let mut best = None;
    let mut pairs = 0;
    for a in &tnr.access[s] {
        for b in &tnr.access[t] {
            pairs += 1;
            if let Some(mid) = tnr.table_get(a.hub, b.hub) {
                let d = a.dist + mid + b.dist;
                if best.is_none_or(|old| d < old) {
                    best = Some(d);
                }
            }
        }
    }
    (best, pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TnrQueryStats {
    pub classified: Locality,
    pub access_pairs: usize,
    pub fallback_settled: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TnrQueryResult {
    pub distance: Option<Length>,
    pub stats: TnrQueryStats,
}

pub fn tnr_query(tnr: &TnrIndex, s: NodeId, t: NodeId) -> Result<TnrQueryResult> {
    tnr.ch.base.check_node(s)?;
    tnr.ch.base.check_node(t)?;
    match locality_filter(tnr, s, t) {
        Locality::Global => {
            let (distance, access_pairs) = table_answer(tnr, s, t);
            Ok(TnrQueryResult {
                distance,
                stats: TnrQueryStats {
                    classified: Locality::Global,
                    access_pairs,
                    fallback_settled: 0,
                },
            })
        }
        Locality::Local => {
            let r = ch_query(&tnr.ch, s, t)?;
            Ok(TnrQueryResult {
                distance: r.distance,
                stats: TnrQueryStats {
                    classified: Locality::Local,
                    access_pairs: 0,
                    fallback_settled: r.stats.settled,
                },
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessStats {
    pub avg_access: f64,
    pub max_access: usize,
    pub global_fraction: f64,
    pub avg_access_pairs_over_global: f64,
    /// Local-classified pairs the table would have answered exactly.
    pub false_local_fraction: f64,
}

/// Exact statistics over all ordered pairs, refused above `max_pairs`.
pub fn access_stats(tnr: &TnrIndex, max_pairs: usize) -> Result<AccessStats> {
    let n = tnr.node_count();
    if n * n > max_pairs {
        return Err(Error::CapExceeded { what: "pair sweep", size: n * n, cap: max_pairs });
    }
    let mut global = 0usize;
    let mut access_pairs = 0usize;
    let mut local = 0usize;
    let mut false_local = 0usize;
    for s in 0..n {
        for t in 0..n {
            let r = tnr_query(tnr, s, t)?;
            match r.stats.classified {
                Locality::Global => {
                    global += 1;
                    access_pairs += r.stats.access_pairs;
                }
                Locality::Local => {
                    local += 1;
                    if r.distance.is_some() && table_answer(tnr, s, t).0 == r.distance {
                        false_local += 1;
                    }
                }
            }
        }
    }
    let sizes = tnr.access.iter().map(Vec::len);
    Ok(AccessStats {
        avg_access: sizes.clone().sum::<usize>() as f64 / n.max(1) as f64,
        max_access: sizes.max().unwrap_or(0),
        global_fraction: global as f64 / (n * n).max(1) as f64,
        avg_access_pairs_over_global: access_pairs as f64 / global.max(1) as f64,
        false_local_fraction: false_local as f64 / local.max(1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularCensus {
    pub regular: usize,
    pub irregular: usize,
    pub regular_fraction: f64,
}

/// Ordered cross-copy leaf pairs: regular when global with neither endpoint
/// a transit node.
pub fn regular_census(meta: &GtkqMeta, tnr: &TnrIndex) -> RegularCensus {
    let leaves: Vec<NodeId> = meta.leaves().collect();
    let (mut regular, mut irregular) = (0, 0);
    for &s in &leaves {
        for &t in leaves.iter().filter(|&&t| meta.copy(t) != meta.copy(s)) {
            let is_regular = !tnr.is_transit(s)
                && !tnr.is_transit(t)
                && locality_filter(tnr, s, t) == Locality::Global;
            if is_regular {
                regular += 1;
            } else {
                irregular += 1;
            }
        }
    }
    RegularCensus {
        regular,
        irregular,
        regular_fraction: regular as f64 / (regular + irregular).max(1) as f64,
    }
}

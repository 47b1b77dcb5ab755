//! Weighted graph storage, the Dijkstra oracle and the text graph format.
//!
//! Lengths are non-negative integers. The constructor rejects graphs whose
//! total edge length exceeds [`MAX_TOTAL_LENGTH`]; every simple path (and any
//! sum of two simple paths, as computed by label and table queries) then fits
//! in a `u64` without wraparound.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;
pub type Length = u64;

/// Upper bound on the sum of all edge lengths of a graph.
pub const MAX_TOTAL_LENGTH: Length = u64::MAX / 4;

/// Default node cap for all-pairs computations.
pub const DEFAULT_ALL_PAIRS_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub len: Length,
}

/// One adjacency entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub to: NodeId,
    pub len: Length,
    pub edge: EdgeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    directed: bool,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<Arc>>,
    // Only populated for directed graphs; undirected graphs answer
    // backward lookups from `out_adj`.
    in_adj: Vec<Vec<Arc>>,
}

impl Graph {
    pub fn new<I>(node_count: usize, directed: bool, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, Length)>,
    {
        let mut out_adj = vec![Vec::new(); node_count];
        let mut in_adj = if directed {
            vec![Vec::new(); node_count]
        } else {
            Vec::new()
        };
        let mut stored = Vec::new();
        let mut total: Length = 0;
        for (id, (u, v, len)) in edges.into_iter().enumerate() {
            for x in [u, v] {
                if x >= node_count {
                    return Err(Error::NodeOutOfRange { node: x, node_count });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            total = total
                .checked_add(len)
                .filter(|t| *t <= MAX_TOTAL_LENGTH)
                .ok_or_else(|| {
                    Error::Overflow(format!(
                        "total edge length exceeds {MAX_TOTAL_LENGTH} at edge {id}"
                    ))
                })?;
            out_adj[u].push(Arc { to: v, len, edge: id });
            if directed {
                in_adj[v].push(Arc { to: u, len, edge: id });
            } else {
                out_adj[v].push(Arc { to: u, len, edge: id });
            }
            stored.push(Edge { u, v, len });
        }
        Ok(Graph {
            node_count,
            directed,
            edges: stored,
            out_adj,
            in_adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Outgoing arcs (all incident edges when undirected).
    pub fn neighbors(&self, v: NodeId) -> &[Arc] {
        &self.out_adj[v]
    }

    /// Incoming arcs (all incident edges when undirected).
    pub fn in_neighbors(&self, v: NodeId) -> &[Arc] {
        if self.directed {
            &self.in_adj[v]
        } else {
            &self.out_adj[v]
        }
    }

    pub fn arcs(&self, v: NodeId, dir: Direction) -> &[Arc] {
        match dir {
            Direction::Forward => self.neighbors(v),
            Direction::Backward => self.in_neighbors(v),
        }
    }

    pub fn degree(&self, v: NodeId) -> usize {
        if self.directed {
            self.out_adj[v].len() + self.in_adj[v].len()
        } else {
            self.out_adj[v].len()
        }
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v < self.node_count {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: v,
                node_count: self.node_count,
            })
        }
    }

    /// Shortest direct edge between `u` and `v`, if any.
    pub fn edge_length(&self, u: NodeId, v: NodeId) -> Option<Length> {
        self.out_adj[u]
            .iter()
            .filter(|a| a.to == v)
            .map(|a| a.len)
            .min()
    }

    /// Serialize in the `p sp <n> <m> <d|u>` / `a <u> <v> <w>` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let kind = if self.directed { 'd' } else { 'u' };
        let _ = writeln!(out, "p sp {} {} {}", self.node_count, self.edges.len(), kind);
        for e in &self.edges {
            let _ = writeln!(out, "a {} {} {}", e.u, e.v, e.len);
        }
        out
    }

    /// Parse the text format. Lines starting with `c` and blank lines are
    /// ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, bool)> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |msg: &str| Error::Parse {
                line: line_no,
                msg: msg.to_string(),
            };
            match parts[0] {
                "p" => {
                    if header.is_some() {
                        return Err(parse_err("duplicate header"));
                    }
                    if parts.len() != 5 || parts[1] != "sp" {
                        return Err(parse_err("expected `p sp <n> <m> <d|u>`"));
                    }
                    let n = parts[2].parse().map_err(|_| parse_err("bad node count"))?;
                    let m = parts[3].parse().map_err(|_| parse_err("bad edge count"))?;
                    let directed = match parts[4] {
                        "d" => true,
                        "u" => false,
                        _ => return Err(parse_err("direction flag must be `d` or `u`")),
                    };
                    header = Some((n, m, directed));
                }
                "a" => {
                    if header.is_none() {
                        return Err(parse_err("edge before header"));
                    }
                    if parts.len() != 4 {
                        return Err(parse_err("expected `a <u> <v> <w>`"));
                    }
                    let u: NodeId = parts[1].parse().map_err(|_| parse_err("bad node id"))?;
                    let v: NodeId = parts[2].parse().map_err(|_| parse_err("bad node id"))?;
                    let w: Length = parts[3]
                        .parse()
                        .map_err(|_| parse_err("bad length (must be a non-negative integer)"))?;
                    edges.push((u, v, w));
                }
                other => return Err(parse_err(&format!("unknown line type `{other}`"))),
            }
        }
        let (n, m, directed) = header.ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        if edges.len() != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::new(n, directed, edges)
    }
}

/// Distances and canonical parents from one source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortestPathTree {
    pub source: NodeId,
    pub dist: Vec<Option<Length>>,
    pub parent: Vec<Option<NodeId>>,
}

impl ShortestPathTree {
    /// Vertex sequence from the source to `t` along canonical parents
    /// (reversed for backward trees).
    pub fn path_to(&self, t: NodeId) -> Vec<NodeId> {
        if self.dist[t].is_none() {
            return Vec::new();
        }
        let mut path = vec![t];
        let mut cur = t;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

/// Single-source Dijkstra. Among equal-length predecessors the smaller node id
/// becomes the parent, so every source yields one canonical tree.
pub fn dijkstra(g: &Graph, s: NodeId) -> Result<ShortestPathTree> {
    dijkstra_dir(g, s, Direction::Forward)
}

/// Dijkstra over reversed arcs: `dist[v]` is the distance from `v` to `s`.
pub fn dijkstra_dir(g: &Graph, s: NodeId, dir: Direction) -> Result<ShortestPathTree> {
    g.check_node(s)?;
    let n = g.node_count();
    let mut dist: Vec<Option<Length>> = vec![None; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[s] = Some(0);
    heap.push(Reverse((0, s)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        for a in g.arcs(v, dir) {
            if settled[a.to] {
                continue;
            }
            let nd = d + a.len;
            match dist[a.to] {
                Some(old) if old < nd => {}
                Some(old) if old == nd => {
                    if parent[a.to].is_some_and(|p| v < p) {
                        parent[a.to] = Some(v);
                    }
                }
                _ => {
                    dist[a.to] = Some(nd);
                    parent[a.to] = Some(v);
                    heap.push(Reverse((nd, a.to)));
                }
            }
        }
    }
    Ok(ShortestPathTree {
        source: s,
        dist,
        parent,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub settled: usize,
    pub relaxed: usize,
}

impl SearchStats {
    pub fn work(&self) -> usize {
        self.settled + self.relaxed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathResult {
    pub source: NodeId,
    pub target: NodeId,
    /// `None` is the unreachable marker.
    pub distance: Option<Length>,
    pub vertices: Vec<NodeId>,
}

/// Bidirectional Dijkstra. Stops once the two queue minima sum to at least
/// the best meeting distance found so far.
pub fn bidirectional_dijkstra(
    g: &Graph,
    s: NodeId,
    t: NodeId,
) -> Result<(PathResult, SearchStats)> {
    g.check_node(s)?;
    g.check_node(t)?;
    let n = g.node_count();
    let mut stats = SearchStats::default();
    if s == t {
        stats.settled = 1;
        return Ok((
            PathResult {
                source: s,
                target: t,
                distance: Some(0),
                vertices: vec![s],
            },
            stats,
        ));
    }

    let mut dist = [vec![None::<Length>; n], vec![None::<Length>; n]];
    let mut parent = [vec![None::<NodeId>; n], vec![None::<NodeId>; n]];
    let mut settled = [vec![false; n], vec![false; n]];
    let mut heaps = [BinaryHeap::new(), BinaryHeap::new()];
    let dirs = [Direction::Forward, Direction::Backward];
    dist[0][s] = Some(0);
    dist[1][t] = Some(0);
    heaps[0].push(Reverse((0, s)));
    heaps[1].push(Reverse((0, t)));
    let mut best: Option<(Length, NodeId)> = None;

    loop {
        let top = |h: &BinaryHeap<Reverse<(Length, NodeId)>>| h.peek().map(|Reverse((d, _))| *d);
        // An exhausted side has settled its whole reachable set, so the best
        // meeting value is already final.
        let (Some(tf), Some(tb)) = (top(&heaps[0]), top(&heaps[1])) else {
            break;
        };
        if best.is_some_and(|(bd, _)| tf + tb >= bd) {
            break;
        }
        let side = if tf <= tb { 0 } else { 1 };
        let Reverse((d, v)) = heaps[side].pop().expect("non-empty heap");
        if settled[side][v] {
            continue;
        }
        settled[side][v] = true;
        stats.settled += 1;
        if let Some(od) = dist[1 - side][v] {
            let cand = d + od;
            if best.is_none_or(|(bd, bv)| cand < bd || (cand == bd && v < bv)) {
                best = Some((cand, v));
            }
        }
        for a in g.arcs(v, dirs[side]) {
            stats.relaxed += 1;
            if settled[side][a.to] {
                continue;
            }
            let nd = d + a.len;
            match dist[side][a.to] {
                Some(old) if old < nd => {}
                Some(old) if old == nd => {
                    if parent[side][a.to].is_some_and(|p| v < p) {
                        parent[side][a.to] = Some(v);
                    }
                }
                _ => {
                    dist[side][a.to] = Some(nd);
                    parent[side][a.to] = Some(v);
                    heaps[side].push(Reverse((nd, a.to)));
                }
            }
            if let Some(od) = dist[1 - side][a.to] {
                let cand = nd + od;
                if best.is_none_or(|(bd, bv)| cand < bd || (cand == bd && a.to < bv)) {
                    best = Some((cand, a.to));
                }
            }
        }
    }

    let Some((distance, meet)) = best else {
        return Ok((
            PathResult {
                source: s,
                target: t,
                distance: None,
                vertices: Vec::new(),
            },
            stats,
        ));
    };
    let mut vertices = vec![meet];
    let mut cur = meet;
    while let Some(p) = parent[0][cur] {
        vertices.push(p);
        cur = p;
    }
    vertices.reverse();
    cur = meet;
    while let Some(p) = parent[1][cur] {
        vertices.push(p);
        cur = p;
    }
    Ok((
        PathResult {
            source: s,
            target: t,
            distance: Some(distance),
            vertices,
        },
        stats,
    ))
}

/// Dense all-pairs distance table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<Option<Length>>,
}

impl DistanceMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: NodeId, t: NodeId) -> Option<Length> {
        self.data[s * self.n + t]
    }

    pub fn row(&self, s: NodeId) -> &[Option<Length>] {
        &self.data[s * self.n..(s + 1) * self.n]
    }

    /// Largest finite entry.
    pub fn max_finite(&self) -> Length {
        self.data.iter().flatten().copied().max().unwrap_or(0)
    }
}

pub fn all_pairs(g: &Graph, cap: usize) -> Result<DistanceMatrix> {
    let n = g.node_count();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "all-pairs node count",
            size: n,
            cap,
        });
    }
    let rows: Vec<Vec<Option<Length>>> = (0..n)
        .into_par_iter()
        .map(|s| dijkstra(g, s).map(|tree| tree.dist))
        .collect::<Result<_>>()?;
    Ok(DistanceMatrix {
        n,
        data: rows.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub diameter: Length,
    pub max_degree: usize,
    pub node_count: usize,
    pub edge_count: usize,
}

pub fn graph_stats(g: &Graph, cap: usize) -> Result<GraphStats> {
    let apsp = all_pairs(g, cap)?;
    Ok(GraphStats {
        diameter: apsp.max_finite(),
        max_degree: (0..g.node_count()).map(|v| g.degree(v)).max().unwrap_or(0),
        node_count: g.node_count(),
        edge_count: g.edge_count(),
    })
}

/// Rescale lengths to `w·M + (id+1)` with `M = (n+1)(m+1)`.
///
/// Any simple path collects less than `M` in offsets, so strict order
/// between paths of different original length is preserved and ties among
/// originally equal paths are split by their offset sums.
pub fn perturb_unique(g: &Graph) -> Result<Graph> {
    let n = g.node_count() as Length;
    let m = g.edge_count() as Length;
    let scale = (n + 1)
        .checked_mul(m + 1)
        .ok_or_else(|| Error::Overflow("perturbation multiplier".into()))?;
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            e.len
                .checked_mul(scale)
                .and_then(|w| w.checked_add(id as Length + 1))
                .map(|w| (e.u, e.v, w))
                .ok_or_else(|| Error::Overflow(format!("perturbed length of edge {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Graph::new(g.node_count(), g.is_directed(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(3, false, [(0, 1, 1), (1, 2, 1)]).unwrap()
    }

    #[test]
    fn dijkstra_on_path() {
        let tree = dijkstra(&path3(), 0).unwrap();
        assert_eq!(tree.dist, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(tree.parent[0], None);
        assert_eq!(tree.path_to(2), vec![0, 1, 2]);
    }

    #[test]
    fn dijkstra_rejects_bad_source() {
        assert!(matches!(
            dijkstra(&path3(), 3),
            Err(Error::NodeOutOfRange { node: 3, .. })
        ));
    }

    #[test]
    fn ties_pick_smaller_parent() {
        // 0 reaches 3 through 1 and through 2 at equal cost.
        let g = Graph::new(4, false, [(0, 2, 1), (2, 3, 1), (0, 1, 1), (1, 3, 1)]).unwrap();
        let tree = dijkstra(&g, 0).unwrap();
        assert_eq!(tree.parent[3], Some(1));
        assert_eq!(dijkstra(&g, 0).unwrap(), tree);
    }

    #[test]
    fn bidirectional_basics() {
        let g = path3();
        let (r, st) = bidirectional_dijkstra(&g, 1, 1).unwrap();
        assert_eq!(r.distance, Some(0));
        assert_eq!(r.vertices, vec![1]);
        assert!(st.settled >= 1);
        let (r, _) = bidirectional_dijkstra(&g, 0, 2).unwrap();
        assert_eq!(r.distance, Some(2));
        assert_eq!(r.vertices, vec![0, 1, 2]);

        let split = Graph::new(4, false, [(0, 1, 3), (2, 3, 1)]).unwrap();
        let (r, _) = bidirectional_dijkstra(&split, 0, 3).unwrap();
        assert_eq!(r.distance, None);
        assert!(r.vertices.is_empty());
    }

    #[test]
    fn directed_bidirectional_respects_orientation() {
        let g = Graph::new(3, true, [(0, 1, 2), (1, 2, 2), (2, 0, 1)]).unwrap();
        assert_eq!(bidirectional_dijkstra(&g, 0, 2).unwrap().0.distance, Some(4));
        assert_eq!(bidirectional_dijkstra(&g, 2, 1).unwrap().0.distance, Some(3));
    }

    #[test]
    fn all_pairs_small_cases() {
        let single = Graph::new(1, false, []).unwrap();
        let m = all_pairs(&single, 10).unwrap();
        assert_eq!(m.get(0, 0), Some(0));
        assert_eq!(all_pairs(&path3(), 10).unwrap().max_finite(), 2);
        assert!(all_pairs(&path3(), 2).unwrap_err().is_cap());
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert_eq!(
            Graph::new(2, false, [(1, 1, 3)]).unwrap_err(),
            Error::SelfLoop(1)
        );
        assert!(Graph::new(2, false, [(0, 2, 3)]).is_err());
        assert!(matches!(
            Graph::new(3, false, [(0, 1, u64::MAX / 2), (1, 2, u64::MAX / 2)]),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn perturb_single_edge() {
        let g = Graph::new(2, false, [(0, 1, 1)]).unwrap();
        let p = perturb_unique(&g).unwrap();
        assert_eq!(p.edges()[0].len, 7);
        let empty = Graph::new(0, false, []).unwrap();
        assert_eq!(perturb_unique(&empty).unwrap().node_count(), 0);
    }

    #[test]
    fn perturb_splits_two_equal_routes() {
        // s=0, a=1, b=2, t=3: both 0-1-3 and 0-2-3 have length 2.
        let g = Graph::new(4, false, [(0, 1, 1), (1, 3, 1), (0, 2, 1), (2, 3, 1)]).unwrap();
        let p = perturb_unique(&g).unwrap();
        // M = 5 * 5 = 25: routes cost 25+1 + 25+2 = 53 and 25+3 + 25+4 = 57.
        let via_a = p.edge_length(0, 1).unwrap() + p.edge_length(1, 3).unwrap();
        let via_b = p.edge_length(0, 2).unwrap() + p.edge_length(2, 3).unwrap();
        assert_eq!((via_a, via_b), (53, 57));
        assert_eq!(dijkstra(&p, 0).unwrap().dist[3], Some(53));
    }

    #[test]
    fn perturb_overflow_is_an_error() {
        let g = Graph::new(2, false, [(0, 1, MAX_TOTAL_LENGTH)]).unwrap();
        assert!(matches!(perturb_unique(&g), Err(Error::Overflow(_))));
    }

    #[test]
    fn text_format_roundtrip_and_errors() {
        let g = Graph::new(3, true, [(0, 1, 4), (2, 1, 0)]).unwrap();
        let text = g.to_text();
        assert_eq!(text, "p sp 3 2 d\na 0 1 4\na 2 1 0\n");
        assert_eq!(Graph::from_text(&text).unwrap(), g);
        assert!(Graph::from_text("p sp 2 1 u\na 0 1 -3\n").is_err());
        assert!(Graph::from_text("p sp 2 2 u\na 0 1 3\n").is_err());
        assert!(Graph::from_text("a 0 1 3\n").is_err());
        assert!(Graph::from_text("c comment\np sp 2 1 u\na 0 0 3\n").is_err());
    }
}

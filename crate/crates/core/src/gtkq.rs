//! The adversarial family `G(t,k,q)`: `q` copies of a complete `t`-ary tree
//! of height `k`, where every node is joined to each proper ancestor `w` by an
//! edge of length `16^(λ(w)-1)` and to its own copies by edges of length
//! `2^(λ(v)-k-1)`. All lengths are multiplied by `2^scale_exponent`.
//!
//! Node numbering is copy-major; inside a copy nodes follow breadth-first
//! order from the root (height descending, siblings by address), so the
//! position of a node in its copy is its BFS index in the complete tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{all_pairs, Graph, Length, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtkqParams {
    pub t: usize,
    pub k: usize,
    pub q: usize,
    pub scale_exponent: u32,
}

impl GtkqParams {
    /// Parameters with the smallest scale that keeps every length integral.
    pub fn new(t: usize, k: usize, q: usize) -> Self {
        GtkqParams {
            t,
            k,
            q,
            scale_exponent: Self::min_scale(k, q),
        }
    }

    pub fn with_scale(t: usize, k: usize, q: usize, scale_exponent: u32) -> Self {
        GtkqParams {
            t,
            k,
            q,
            scale_exponent,
        }
    }

    /// The shortest cross edge is `2^(-k-1)`, so integrality needs `2^(k+1)`.
    pub fn min_scale(k: usize, q: usize) -> u32 {
        if q >= 2 {
            k as u32 + 1
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::InvalidParams(format!("t = {} (need t >= 2)", self.t)));
        }
        if self.k < 1 {
            return Err(Error::InvalidParams(format!("k = {} (need k >= 1)", self.k)));
        }
        if self.q < 1 {
            return Err(Error::InvalidParams(format!("q = {} (need q >= 1)", self.q)));
        }
        if self.scale_exponent < Self::min_scale(self.k, self.q) {
            return Err(Error::InvalidParams(format!(
                "scale exponent {} leaves non-integral cross-edge lengths (need >= {})",
                self.scale_exponent,
                Self::min_scale(self.k, self.q)
            )));
        }
        Ok(())
    }

    /// Node count of one tree, `(t^(k+1) - 1) / (t - 1)`.
    pub fn copy_size(&self) -> Result<usize> {
        let mut total: usize = 0;
        let mut level: usize = 1;
        for _ in 0..=self.k {
            total = total
                .checked_add(level)
                .ok_or_else(|| Error::Overflow("tree node count".into()))?;
            level = level
                .checked_mul(self.t)
                .ok_or_else(|| Error::Overflow("tree node count".into()))?;
        }
        Ok(total)
    }

    pub fn node_count(&self) -> Result<usize> {
        self.copy_size()?
            .checked_mul(self.q)
            .ok_or_else(|| Error::Overflow("node count".into()))
    }

    /// Length of the edge from a node to its proper ancestor of height `h`.
    pub fn ancestor_edge_length(&self, h: usize) -> Result<Length> {
        debug_assert!(h >= 1);
        pow2(4 * (h as i64 - 1) + self.scale_exponent as i64)
    }

    /// Length of the edge between two copies of a node of height `h`.
    pub fn cross_edge_length(&self, h: usize) -> Result<Length> {
        pow2(h as i64 - self.k as i64 - 1 + self.scale_exponent as i64)
    }
}

fn pow2(exp: i64) -> Result<Length> {
    if exp < 0 {
        return Err(Error::InvalidParams(format!(
            "edge length 2^{exp} is not integral"
        )));
    }
    1u64.checked_shl(exp as u32)
        .filter(|_| exp < 64)
        .ok_or_else(|| Error::Overflow(format!("edge length 2^{exp}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub copy: usize,
    /// λ(v): 0 for leaves, k for the root.
    pub height: usize,
    /// Child indices from the root; length `k - height`.
    pub address: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GtkqMeta {
    pub params: GtkqParams,
    copy_size: usize,
    nodes: Vec<NodeInfo>,
}

impl GtkqMeta {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn copy_size(&self) -> usize {
        self.copy_size
    }

    pub fn node(&self, v: NodeId) -> &NodeInfo {
        &self.nodes[v]
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn copy(&self, v: NodeId) -> usize {
        v / self.copy_size
    }

    /// BFS index of `v` inside its tree.
    pub fn position(&self, v: NodeId) -> usize {
        v % self.copy_size
    }

    pub fn height(&self, v: NodeId) -> usize {
        self.nodes[v].height
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.nodes[v].height == 0
    }

    pub fn id(&self, copy: usize, position: usize) -> NodeId {
        copy * self.copy_size + position
    }

    /// The same tree position in another copy.
    pub fn in_copy(&self, v: NodeId, copy: usize) -> NodeId {
        self.id(copy, self.position(v))
    }

    pub fn parent_position(&self, pos: usize) -> Option<usize> {
        (pos > 0).then(|| (pos - 1) / self.params.t)
    }

    pub fn child_positions(&self, pos: usize) -> impl Iterator<Item = usize> {
        let t = self.params.t;
        let first = t * pos + 1;
        let end = if self.nodes[pos].height == 0 { first } else { first + t };
        first..end
    }

    /// Proper ancestors of a tree position, nearest first.
    pub fn ancestor_positions(&self, pos: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = pos;
        while let Some(p) = self.parent_position(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Leaf positions in the subtree rooted at `pos` (inclusive).
    pub fn leaf_positions_under(&self, pos: usize) -> Vec<usize> {
        let mut frontier = vec![pos];
        for _ in 0..self.nodes[pos].height {
            frontier = frontier
                .iter()
                .flat_map(|&p| self.child_positions(p))
                .collect();
        }
        frontier
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].height == 0)
    }

    /// Lowest common ancestor position of two tree positions.
    pub fn lca_position(&self, mut a: usize, mut b: usize) -> usize {
        while a != b {
            // Deeper positions have larger BFS indices within a complete tree.
            if a > b {
                a = (a - 1) / self.params.t;
            } else {
                b = (b - 1) / self.params.t;
            }
        }
        a
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct NodeOut<'a> {
            id: NodeId,
            copy: usize,
            height: usize,
            address: &'a [usize],
        }
        #[derive(Serialize)]
        struct MetaOut<'a> {
            t: usize,
            k: usize,
            q: usize,
            scale_exponent: u32,
            nodes: Vec<NodeOut<'a>>,
        }
        let out = MetaOut {
            t: self.params.t,
            k: self.params.k,
            q: self.params.q,
            scale_exponent: self.params.scale_exponent,
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeOut {
                    id,
                    copy: n.copy,
                    height: n.height,
                    address: &n.address,
                })
                .collect(),
        };
        Ok(serde_json::to_string(&out)?)
    }

    /// Rebuild metadata from a sidecar, checking it against the canonical
    /// numbering for its parameters.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct NodeIn {
            id: NodeId,
            copy: usize,
            height: usize,
            address: Vec<usize>,
        }
        #[derive(Deserialize)]
        struct MetaIn {
            t: usize,
            k: usize,
            q: usize,
            scale_exponent: u32,
            nodes: Vec<NodeIn>,
        }
        let parsed: MetaIn = serde_json::from_str(text)?;
        let params = GtkqParams::with_scale(parsed.t, parsed.k, parsed.q, parsed.scale_exponent);
        let meta = build_meta(&params)?;
        let matches = parsed.nodes.len() == meta.nodes.len()
            && parsed.nodes.iter().enumerate().all(|(i, n)| {
                n.id == i
                    && n.copy == meta.nodes[i].copy
                    && n.height == meta.nodes[i].height
                    && n.address == meta.nodes[i].address
            });
        if !matches {
            return Err(Error::Invariant(
                "metadata sidecar does not match the canonical node numbering".into(),
            ));
        }
        Ok(meta)
    }
}

fn build_meta(params: &GtkqParams) -> Result<GtkqMeta> {
    params.validate()?;
    let copy_size = params.copy_size()?;
    params.node_count()?;
    let t = params.t;
    let k = params.k;
    let mut tree: Vec<NodeInfo> = Vec::with_capacity(copy_size);
    tree.push(NodeInfo {
        copy: 0,
        height: k,
        address: Vec::new(),
    });
    for pos in 1..copy_size {
        let parent = &tree[(pos - 1) / t];
        let mut address = parent.address.clone();
        address.push((pos - 1) % t);
        let height = parent.height - 1;
        tree.push(NodeInfo {
            copy: 0,
            height,
            address,
        });
    }
    let nodes = (0..params.q)
        .flat_map(|copy| {
            tree.iter().map(move |n| NodeInfo {
                copy,
                ..n.clone()
            })
        })
        .collect();
    Ok(GtkqMeta {
        params: *params,
        copy_size,
        nodes,
    })
}

/// `G(t,k)` with unscaled lengths (a single copy).
pub fn build_gtk(t: usize, k: usize) -> Result<(Graph, GtkqMeta)> {
    build_gtkq(&GtkqParams::with_scale(t, k, 1, 0))
}

pub fn build_gtkq(params: &GtkqParams) -> Result<(Graph, GtkqMeta)> {
    let meta = build_meta(params)?;
    let copy_size = meta.copy_size;
    let mut edges = Vec::new();
    for copy in 0..params.q {
        for pos in 0..copy_size {
            for anc in meta.ancestor_positions(pos) {
                let len = params.ancestor_edge_length(meta.nodes[anc].height)?;
                edges.push((meta.id(copy, pos), meta.id(copy, anc), len));
            }
        }
    }
    if params.q >= 2 {
        for pos in 0..copy_size {
            let len = params.cross_edge_length(meta.nodes[pos].height)?;
            for a in 0..params.q {
                for b in a + 1..params.q {
                    edges.push((meta.id(a, pos), meta.id(b, pos), len));
                }
            }
        }
    }
    let g = Graph::new(meta.node_count(), false, edges)?;
    Ok((g, meta))
}

/// λ(u,v): height of the lowest common ancestor of the two tree positions
/// (copies are ignored).
pub fn lca_height(meta: &GtkqMeta, u: NodeId, v: NodeId) -> usize {
    let lca = meta.lca_position(meta.position(u), meta.position(v));
    meta.nodes[lca].height
}

/// Where a predicted path changes copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CopySwitch {
    /// Same copy: no switch.
    None,
    /// Switch at the source's tree position.
    Source,
    /// Switch at the target's tree position.
    Target,
    /// Both switching routes are shortest.
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpPrediction {
    pub candidates: Vec<Vec<NodeId>>,
    pub via_copy_switch_at: CopySwitch,
}

fn dedup_path(path: Vec<NodeId>) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::with_capacity(path.len());
    for v in path {
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// The route that switches copies at `at` (source or target position),
/// passing through the lowest common ancestor in the other endpoint's copy.
pub fn switching_route(meta: &GtkqMeta, s: NodeId, t: NodeId, at: CopySwitch) -> Vec<NodeId> {
    let (a, b) = (meta.copy(s), meta.copy(t));
    let lca = meta.lca_position(meta.position(s), meta.position(t));
    match at {
        CopySwitch::Target => {
            dedup_path(vec![s, meta.id(a, lca), meta.in_copy(t, a), t])
        }
        _ => dedup_path(vec![s, meta.in_copy(s, b), meta.id(b, lca), t]),
    }
}

/// Predicted shortest paths between two distinct nodes.
pub fn predicted_shortest_paths(meta: &GtkqMeta, s: NodeId, t: NodeId) -> Result<SpPrediction> {
    if s == t {
        return Err(Error::InvalidParams("prediction needs s != t".into()));
    }
    if meta.copy(s) == meta.copy(t) {
        let lca = meta.lca_position(meta.position(s), meta.position(t));
        let path = dedup_path(vec![s, meta.id(meta.copy(s), lca), t]);
        return Ok(SpPrediction {
            candidates: vec![path],
            via_copy_switch_at: CopySwitch::None,
        });
    }
    let (hs, ht) = (meta.height(s), meta.height(t));
    let mut candidates = Vec::new();
    if hs <= ht {
        candidates.push(switching_route(meta, s, t, CopySwitch::Source));
    }
    if ht <= hs {
        candidates.push(switching_route(meta, s, t, CopySwitch::Target));
    }
    // Same tree position: both routes collapse to the single cross edge.
    candidates.dedup();
    let via = if candidates.len() == 2 {
        CopySwitch::Both
    } else if ht < hs {
        CopySwitch::Target
    } else {
        CopySwitch::Source
    };
    Ok(SpPrediction {
        candidates,
        via_copy_switch_at: via,
    })
}

/// Sum of shortest direct edge lengths along a vertex sequence.
pub fn path_length(g: &Graph, path: &[NodeId]) -> Option<Length> {
    path.windows(2)
        .map(|w| g.edge_length(w[0], w[1]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyStats {
    pub node_count: usize,
    /// `None` when the all-pairs cap was exceeded.
    pub diameter: Option<Length>,
    pub diameter_omitted: bool,
    pub cross_edge_count: usize,
}

pub fn family_stats(g: &Graph, meta: &GtkqMeta, cap: usize) -> Result<FamilyStats> {
    let p = &meta.params;
    let expected = p.node_count()?;
    if g.node_count() != expected {
        return Err(Error::Invariant(format!(
            "node count {} differs from q(t^(k+1)-1)/(t-1) = {expected}",
            g.node_count()
        )));
    }
    let cross_edge_count = g
        .edges()
        .iter()
        .filter(|e| meta.copy(e.u) != meta.copy(e.v))
        .count();
    let diameter = match all_pairs(g, cap) {
        Ok(m) => Some(m.max_finite()),
        Err(e) if e.is_cap() => None,
        Err(e) => return Err(e),
    };
    Ok(FamilyStats {
        node_count: g.node_count(),
        diameter,
        diameter_omitted: diameter.is_none(),
        cross_edge_count,
    })
}

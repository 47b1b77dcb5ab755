//! Exact cover by 3-sets, its reduction to minimum max-label hub labeling
//! on digraphs, and an exact decider for the resulting tiny instances.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{all_pairs, DistanceMatrix, Graph, NodeId};
use crate::hub_labeling::{verify_cover, CoverCheck, Labeling};

pub const DEFAULT_MHL_NODE_CAP: usize = 20;
pub const DEFAULT_MHL_PAIR_CAP: usize = 120;
/// Failed partial labelings remembered by the decider.
const MEMO_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct X3cInstance {
    pub universe: usize,
    pub triples: Vec<[usize; 3]>,
}

impl X3cInstance {
    pub fn new(universe: usize, triples: Vec<[usize; 3]>) -> Result<Self> {
        let inst = X3cInstance { universe, triples };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.universe.is_multiple_of(3) {
            return Err(Error::InvalidParams(format!("|U| = {} is not a multiple of 3", self.universe)));
        }
        for (i, t) in self.triples.iter().enumerate() {
            if t.iter().any(|&e| e >= self.universe) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidParams(format!("triple {i} {t:?} is not a 3-subset of U")));
            }
        }
        Ok(())
    }

    pub fn uncovered(&self) -> Vec<usize> {
        let mut seen = vec![false; self.universe];
        for t in &self.triples {
            for &e in t {
                seen[e] = true;
            }
        }
        (0..self.universe).filter(|&e| !seen[e]).collect()
    }

    /// Line 1 is `|U|`, then one triple of 0-based indices per line.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let universe = head.parse().map_err(|_| Error::Parse { line, msg: format!("bad |U| {head:?}") })?;
        let mut triples = Vec::new();
        for (line, l) in lines {
            let nums: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line, msg: format!("bad triple {l:?}") })?;
            let triple: [usize; 3] = nums
                .try_into()
                .map_err(|_| Error::Parse { line, msg: "expected three indices".into() })?;
            triples.push(triple);
        }
        X3cInstance::new(universe, triples)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.universe);
        for t in &self.triples {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }
}

/// Triple indices of an exact cover, if one exists.
pub fn x3c_solve(inst: &X3cInstance) -> Option<Vec<usize>> {
    fn go(inst: &X3cInstance, covered: &mut Vec<bool>, chosen: &mut Vec<usize>) -> bool {
        let Some(e) = covered.iter().position(|&c| !c) else { return true };
        for (i, t) in inst.triples.iter().enumerate() {
            if t.contains(&e) && t.iter().all(|&x| !covered[x]) {
                t.iter().for_each(|&x| covered[x] = true);
                chosen.push(i);
                if go(inst, covered, chosen) {
                    return true;
                }
                chosen.pop();
                t.iter().for_each(|&x| covered[x] = false);
            }
        }
        false
    }
    let mut covered = vec![false; inst.universe];
    let mut chosen = Vec::new();
    go(inst, &mut covered, &mut chosen).then_some(chosen)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Role {
    A,
    C { triple: usize },
    U { element: usize },
    B { index: usize, prime: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MhlTags {
    pub k: usize,
    pub roles: Vec<Role>,
}

#[derive(Debug, Clone)]
pub struct MhlInstance {
    pub graph: Graph,
    pub k: usize,
    pub roles: Vec<Role>,
    pub x3c: X3cInstance,
}

impl MhlInstance {
    pub fn nodes_with(&self, pred: impl Fn(&Role) -> bool) -> Vec<NodeId> {
        (0..self.roles.len()).filter(|&v| pred(&self.roles[v])).collect()
    }

    pub fn a_nodes(&self) -> Vec<NodeId> {
        self.nodes_with(|r| matches!(r, Role::A))
    }

    pub fn c_node(&self, triple: usize) -> NodeId {
        2 + triple
    }

    pub fn u_node(&self, element: usize) -> NodeId {
        2 + self.x3c.triples.len() + element
    }

    pub fn b_nodes(&self) -> Vec<NodeId> {
        self.nodes_with(|r| matches!(r, Role::B { .. }))
    }

    pub fn b_prime_nodes(&self) -> Vec<NodeId> {
        self.nodes_with(|r| matches!(r, Role::B { prime: true, .. }))
    }

    pub fn tags(&self) -> MhlTags {
        MhlTags {
            k: self.k,
            roles: self.roles.clone(),
        }
    }
}

/// Builds the digraph: `A → C` complete, `C → U` by membership, `B` a
/// bidirected clique of `2|U|/3 + 1` nodes, the first `|U|/3 − 1` of which
/// (`B'`) point to every `u`. Unit arcs, `k = |U|/3 + 1`.
pub fn reduce_x3c_to_mhl(inst: &X3cInstance) -> Result<MhlInstance> {
    inst.validate()?;
    if inst.universe == 0 {
        return Err(Error::InvalidParams("empty universe".into()));
    }
    let missing = inst.uncovered();
    if !missing.is_empty() {
        return Err(Error::InvalidParams(format!(
            "elements {missing:?} appear in no triple; the reduction is only equivalent when every element is covered"
        )));
    }
    let third = inst.universe / 3;
    let k = third + 1;
    let nb = 2 * k - 1;
    let nc = inst.triples.len();
    let mut roles = vec![Role::A, Role::A];
    roles.extend((0..nc).map(|triple| Role::C { triple }));
    roles.extend((0..inst.universe).map(|element| Role::U { element }));
    roles.extend((0..nb).map(|index| Role::B { index, prime: index < third - 1 }));

    let c0 = 2;
    let u0 = c0 + nc;
    let b0 = u0 + inst.universe;
    let mut arcs = Vec::new();
    for a in 0..2 {
        arcs.extend((0..nc).map(|c| (a, c0 + c, 1)));
    }
    for (c, t) in inst.triples.iter().enumerate() {
        arcs.extend(t.iter().map(|&e| (c0 + c, u0 + e, 1)));
    }
    for i in 0..nb {
        arcs.extend((0..nb).filter(|&j| j != i).map(|j| (b0 + i, b0 + j, 1)));
    }
    for i in 0..third - 1 {
        arcs.extend((0..inst.universe).map(|e| (b0 + i, u0 + e, 1)));
    }
    let graph = Graph::new(roles.len(), true, arcs)?;
    Ok(MhlInstance {
        graph,
        k,
        roles,
        x3c: inst.clone(),
    })
}

/// The cyclic clique scheme on `m = 2k − 1` nodes: node `i` holds the
/// window `i..i+k−1` (mod `m`) in both labels. A pair `(i, j)` whose cyclic
/// offset `j − i` is below `k` meets at `j` through `L_f(i)`; otherwise the
/// offset `i − j` is below `k` and it meets at `i` through `L_r(j)`.
pub fn cyclic_clique_hubs(k: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let m = 2 * k - 1;
    let window: Vec<Vec<usize>> = (0..m).map(|i| (0..k).map(|j| (i + j) % m).collect()).collect();
    (window.clone(), window)
}

/// The labeling built from an exact cover. A triple node outside the cover
/// stores its three elements forward; one inside stores only itself, which
/// keeps labels within `k` when `k = 2`.
pub fn labeling_from_cover(mhl: &MhlInstance, cover: &[usize]) -> Result<Labeling> {
    let x3c = &mhl.x3c;
    let mut cover_of = vec![None; x3c.universe];
    for &c in cover {
        let t = x3c
            .triples
            .get(c)
            .ok_or_else(|| Error::InvalidParams(format!("triple {c} does not exist")))?;
        for &e in t {
            if cover_of[e].replace(c).is_some() {
                return Err(Error::InvalidParams(format!("element {e} covered twice")));
            }
        }
    }
    if cover_of.iter().any(Option::is_none) {
        return Err(Error::InvalidParams("triples do not cover U".into()));
    }

    let n = mhl.graph.node_count();
    let mut fwd: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut rev: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let a_nodes = mhl.a_nodes();
    for &a in &a_nodes {
        fwd[a].push(a);
        fwd[a].extend(cover.iter().map(|&c| mhl.c_node(c)));
    }
    for (c, t) in x3c.triples.iter().enumerate() {
        let v = mhl.c_node(c);
        if cover.contains(&c) {
            fwd[v].push(v);
        } else {
            fwd[v].extend(t.iter().map(|&e| mhl.u_node(e)));
        }
        rev[v] = a_nodes.clone();
    }
    let b_prime = mhl.b_prime_nodes();
    for e in 0..x3c.universe {
        let u = mhl.u_node(e);
        rev[u].push(u);
        rev[u].push(mhl.c_node(cover_of[e].expect("checked above")));
        rev[u].extend(&b_prime);
    }
    let b = mhl.b_nodes();
    let (cf, cr) = cyclic_clique_hubs(mhl.k);
    for (i, &v) in b.iter().enumerate() {
        fwd[v] = cf[i].iter().map(|&j| b[j]).collect();
        rev[v] = cr[i].iter().map(|&j| b[j]).collect();
    }
    let apsp = all_pairs(&mhl.graph, n)?;
    Labeling::from_hub_sets(&apsp, &fwd, Some(&rev))
}

/// Directed cover check: every ordered pair `s != t` with finite distance.
pub fn verify_directed_cover(g: &Graph, labels: &Labeling) -> Result<CoverCheck> {
    let apsp = all_pairs(g, g.node_count().max(1))?;
    verify_cover(&apsp, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MhlCaps {
    pub max_nodes: usize,
    pub max_pairs: usize,
}

impl Default for MhlCaps {
    fn default() -> Self {
        MhlCaps {
            max_nodes: DEFAULT_MHL_NODE_CAP,
            max_pairs: DEFAULT_MHL_PAIR_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub enum MhlDecision {
    Yes(Labeling),
    No,
}

impl MhlDecision {
    pub fn is_yes(&self) -> bool {
        matches!(self, MhlDecision::Yes(_))
    }
}

struct Decider {
    k: u32,
    pairs: Vec<(NodeId, NodeId, u32)>,
    weight: Vec<f64>,
    failed: HashSet<Vec<u32>>,
    nodes_explored: u64,
}

impl Decider {
    /// Options for a pair: candidate hubs that fit both labels.
    fn options(&self, fwd: &[u32], rev: &[u32], s: NodeId, t: NodeId, cands: u32) -> u32 {
        let mut opts = 0;
        let mut rest = cands;
        while rest != 0 {
            let x = rest.trailing_zeros();
            rest &= rest - 1;
            let bit = 1 << x;
            let f = (fwd[s] | bit).count_ones();
            let r = (rev[t] | bit).count_ones();
            if f <= self.k && r <= self.k {
                opts |= bit;
            }
        }
        opts
    }

    fn search(&mut self, fwd: &mut [u32], rev: &mut [u32]) -> bool {
        self.nodes_explored += 1;
        // Fewest options per unit of failure weight (dom/wdeg).
        let mut pick: Option<(f64, NodeId, NodeId, u32)> = None;
        for (i, &(s, t, c)) in self.pairs.iter().enumerate() {
            if fwd[s] & rev[t] & c != 0 {
                continue;
            }
            let opts = self.options(fwd, rev, s, t, c);
            let count = opts.count_ones();
            if count == 0 {
                self.weight[i] += 1.0;
                return false;
            }
            let score = count as f64 / self.weight[i];
            if pick.is_none_or(|p| score < p.0) {
                pick = Some((score, s, t, opts));
            }
        }
        let Some((_, s, t, opts)) = pick else { return true };
        let key: Vec<u32> = fwd.iter().chain(rev.iter()).copied().collect();
        if self.failed.contains(&key) {
            return false;
        }
        let mut rest = opts;
        while rest != 0 {
            let bit = 1 << rest.trailing_zeros();
            rest &= rest - 1;
            let saved = (fwd[s], rev[t]);
            fwd[s] |= bit;
            rev[t] |= bit;
            if self.search(fwd, rev) {
                return true;
            }
            fwd[s] = saved.0;
            rev[t] = saved.1;
        }
        if self.failed.len() < MEMO_LIMIT {
            self.failed.insert(key);
        }
        false
    }
}

/// Decides whether a labeling with every `|L_f(v)|, |L_r(v)| <= k` exists.
/// Self-pairs are unconstrained. Exhaustive, so `No` is a proof.
pub fn exact_mhl_decide(g: &Graph, k: usize, caps: &MhlCaps) -> Result<MhlDecision> {
    let n = g.node_count();
    let node_cap = caps.max_nodes.min(32);
    if n > node_cap {
        return Err(Error::CapExceeded { what: "node count", size: n, cap: node_cap });
    }
    let apsp = all_pairs(g, n.max(1))?;
    let pairs = reachable_pairs(&apsp);
    if pairs.len() > caps.max_pairs {
        return Err(Error::CapExceeded {
            what: "reachable pair count",
            size: pairs.len(),
            cap: caps.max_pairs,
        });
    }
    let mut decider = Decider {
        k: k as u32,
        weight: vec![1.0; pairs.len()],
        pairs,
        failed: HashSet::new(),
        nodes_explored: 0,
    };
    let mut fwd = vec![0u32; n];
    let mut rev = vec![0u32; n];
    if !decider.search(&mut fwd, &mut rev) {
        return Ok(MhlDecision::No);
    }
    let sets = |masks: &[u32]| -> Vec<Vec<NodeId>> {
        masks.iter().map(|&m| (0..n).filter(|x| m >> x & 1 == 1).collect()).collect()
    };
    let labeling = Labeling::from_hub_sets(&apsp, &sets(&fwd), Some(&sets(&rev)))?;
    Ok(MhlDecision::Yes(labeling))
}

fn reachable_pairs(apsp: &DistanceMatrix) -> Vec<(NodeId, NodeId, u32)> {
    let n = apsp.node_count();
    let mut pairs = Vec::new();
    for s in 0..n {
        for t in (0..n).filter(|&t| t != s) {
            let Some(d) = apsp.get(s, t) else { continue };
            let mut cands = 0u32;
            for x in 0..n {
                if let (Some(a), Some(b)) = (apsp.get(s, x), apsp.get(x, t)) {
                    if a + b == d {
                        cands |= 1 << x;
                    }
                }
            }
            pairs.push((s, t, cands));
        }
    }
    pairs
}

/// Small X3C instances over `|U| ∈ {3, 6}` with every element covered:
/// the single triple on three elements, then every family of two, three
/// and four triples on six elements drawn from a fixed pool, keeping those
/// that cover `U`, until `count` instances are collected.
pub fn enumerate_x3c_family(count: usize) -> Vec<X3cInstance> {
    let mut out = vec![X3cInstance {
        universe: 3,
        triples: vec![[0, 1, 2]],
    }];
    let pool: [[usize; 3]; 8] = [
        [0, 1, 2],
        [3, 4, 5],
        [0, 1, 3],
        [2, 4, 5],
        [1, 2, 3],
        [0, 4, 5],
        [0, 2, 4],
        [1, 3, 5],
    ];
    for size in 2..=4 {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let triples: Vec<[usize; 3]> = idx.iter().map(|&i| pool[i]).collect();
            let inst = X3cInstance { universe: 6, triples };
            if inst.uncovered().is_empty() {
                out.push(inst);
                if out.len() >= count {
                    return out;
                }
            }
            // Next combination in lexicographic order.
            let Some(i) = (0..size).rev().find(|&i| idx[i] < pool.len() - size + i) else { break };
            idx[i] += 1;
            for j in i + 1..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x3c(universe: usize, triples: &[[usize; 3]]) -> X3cInstance {
        X3cInstance::new(universe, triples.to_vec()).unwrap()
    }

    #[test]
    fn solver_cases() {
        assert_eq!(x3c_solve(&x3c(3, &[[0, 1, 2]])), Some(vec![0]));
        assert_eq!(x3c_solve(&x3c(6, &[[0, 1, 2], [1, 2, 3], [2, 3, 4], [3, 4, 5]])), Some(vec![0, 3]));
        assert_eq!(x3c_solve(&x3c(6, &[[0, 1, 2], [1, 2, 3], [2, 3, 4], [2, 4, 5]])), None);
        assert_eq!(x3c_solve(&x3c(6, &[[0, 1, 2], [3, 4, 5]])), Some(vec![0, 1]));
    }

    #[test]
    fn parse_and_validate() {
        let inst = X3cInstance::from_text("6\n0 1 2\n3 4 5\n").unwrap();
        assert_eq!(X3cInstance::from_text(&inst.to_text()).unwrap(), inst);
        assert!(X3cInstance::from_text("4\n0 1 2\n").is_err());
        assert!(X3cInstance::from_text("3\n0 0 1\n").is_err());
        assert!(matches!(X3cInstance::from_text("3\n0 1\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn reduction_sizes() {
        let small = reduce_x3c_to_mhl(&x3c(3, &[[0, 1, 2]])).unwrap();
        assert_eq!((small.k, small.b_nodes().len(), small.b_prime_nodes().len()), (2, 3, 0));
        assert_eq!(small.graph.node_count(), 9);
        assert_eq!(small.graph.edge_count(), 11);

        let six = reduce_x3c_to_mhl(&x3c(6, &[[0, 1, 2], [1, 2, 3], [2, 3, 4], [3, 4, 5]])).unwrap();
        assert_eq!((six.k, six.b_nodes().len(), six.b_prime_nodes().len()), (3, 5, 1));
        assert_eq!(six.graph.node_count(), 17);

        assert!(reduce_x3c_to_mhl(&x3c(6, &[[0, 1, 2]])).is_err());
    }

    #[test]
    fn cyclic_scheme_covers_cliques() {
        for k in 2..=4 {
            let m = 2 * k - 1;
            let arcs: Vec<_> = (0..m)
                .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j, 1)))
                .collect();
            let g = Graph::new(m, true, arcs).unwrap();
            let (f, r) = cyclic_clique_hubs(k);
            assert!(f.iter().chain(&r).all(|l| l.len() == k));
            let apsp = all_pairs(&g, m).unwrap();
            let l = Labeling::from_hub_sets(&apsp, &f, Some(&r)).unwrap();
            assert!(verify_directed_cover(&g, &l).unwrap().is_ok(), "k = {k}");
        }
    }

    #[test]
    fn small_yes_instance() {
        let mhl = reduce_x3c_to_mhl(&x3c(3, &[[0, 1, 2]])).unwrap();
        let l = labeling_from_cover(&mhl, &[0]).unwrap();
        assert_eq!(l.max_label(), 2);
        assert!(verify_directed_cover(&mhl.graph, &l).unwrap().is_ok());
        for &a in &mhl.a_nodes() {
            assert!(l.reverse(a).is_empty());
        }

        // Without the cover triple in L_r(u), nothing serves a -> u.
        let mut broken = l.clone();
        let u = mhl.u_node(0);
        broken.reverse_mut(u).retain(|e| e.hub != mhl.c_node(0));
        assert_eq!(
            verify_directed_cover(&mhl.graph, &broken).unwrap(),
            CoverCheck::Violation { s: 0, t: u }
        );

        let decision = exact_mhl_decide(&mhl.graph, mhl.k, &MhlCaps::default()).unwrap();
        let MhlDecision::Yes(found) = decision else { panic!("expected a labeling") };
        assert!(found.max_label() <= 2);
        assert!(verify_directed_cover(&mhl.graph, &found).unwrap().is_ok());
    }

    #[test]
    fn decider_trivia() {
        let arc = Graph::new(2, true, [(0, 1, 1)]).unwrap();
        assert!(exact_mhl_decide(&arc, 1, &MhlCaps::default()).unwrap().is_yes());
        let empty = Graph::new(3, true, []).unwrap();
        assert!(exact_mhl_decide(&empty, 0, &MhlCaps::default()).unwrap().is_yes());
        let big = Graph::new(21, true, []).unwrap();
        assert!(exact_mhl_decide(&big, 1, &MhlCaps::default()).unwrap_err().is_cap());
    }

    #[test]
    fn family_has_twenty_covered_instances() {
        let fam = enumerate_x3c_family(20);
        assert_eq!(fam.len(), 20);
        assert!(fam.iter().all(|i| i.uncovered().is_empty()));
        assert!(fam.iter().any(|i| x3c_solve(i).is_some() && i.universe == 6));
        assert!(fam.iter().any(|i| x3c_solve(i).is_none()));
    }
}

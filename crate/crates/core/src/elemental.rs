//! Elemental algorithms: one deferred-acceptance run per edge of a directed
//! spanning tree over the parties, with families read off by composing the
//! resulting bijections along tree paths.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gale_shapley::{gs, round_bound, Bijection};
use crate::model::{Family, Instance, Matching};

/// Enumeration refuses more vertices than this unless the caller overrides it.
pub const DEFAULT_MAX_ENUM_P: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeViolation {
    TooFewVertices(usize),
    EdgeCount { expected: usize, found: usize },
    VertexOutOfRange { edge: usize, vertex: usize },
    SelfLoop { edge: usize, vertex: usize },
    DuplicateEdge { edge: usize },
    Cycle { edge: usize },
    NotSpanning { components: usize },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::TooFewVertices(p) => write!(f, "a tree needs at least 2 vertices, got {p}"),
            TreeViolation::EdgeCount { expected, found } => {
                write!(f, "edge count: expected {expected} edges, found {found}")
            }
            TreeViolation::VertexOutOfRange { edge, vertex } => {
                write!(f, "edge {edge} names vertex {vertex}, out of range")
            }
            TreeViolation::SelfLoop { edge, vertex } => write!(f, "edge {edge} is a self-loop on {vertex}"),
            TreeViolation::DuplicateEdge { edge } => write!(f, "edge {edge} duplicates an earlier edge"),
            TreeViolation::Cycle { edge } => write!(f, "edge {edge} closes a cycle"),
            TreeViolation::NotSpanning { components } => {
                write!(f, "not spanning: {components} connected components")
            }
        }
    }
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Checks that `edges` orient a spanning tree on `p` labeled vertices.
pub fn check_tree(p: usize, edges: &[(usize, usize)]) -> Option<TreeViolation> {
    if p < 2 {
        return Some(TreeViolation::TooFewVertices(p));
    }
    let mut parent: Vec<usize> = (0..p).collect();
    let mut seen = std::collections::HashSet::new();
    let mut components = p;
    for (i, &(a, b)) in edges.iter().enumerate() {
        if let Some(vertex) = [a, b].into_iter().find(|&v| v >= p) {
            return Some(TreeViolation::VertexOutOfRange { edge: i, vertex });
        }
        if a == b {
            return Some(TreeViolation::SelfLoop { edge: i, vertex: a });
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Some(TreeViolation::DuplicateEdge { edge: i });
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            if edges.len() != p - 1 {
                return Some(TreeViolation::EdgeCount {
                    expected: p - 1,
                    found: edges.len(),
                });
            }
            return Some(TreeViolation::Cycle { edge: i });
        }
        parent[ra] = rb;
        components -= 1;
    }
    if components > 1 {
        return Some(TreeViolation::NotSpanning { components });
    }
    None
}

/// A directed spanning tree over party indices. Edge `(a, b)` means party
/// `a` proposes to party `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirectedTree {
    p: usize,
    edges: Vec<(usize, usize)>,
}

impl DirectedTree {
    pub fn new(p: usize, edges: Vec<(usize, usize)>) -> Result<DirectedTree> {
        match check_tree(p, &edges) {
            Some(v) => Err(Error::InvalidTree(v)),
            None => Ok(DirectedTree { p, edges }),
        }
    }

    /// `0 -> 1 -> ... -> p-1`.
    pub fn path(p: usize) -> Result<DirectedTree> {
        DirectedTree::new(p, (1..p).map(|b| (b - 1, b)).collect())
    }

    /// Party 0 proposes to every other party.
    pub fn star(p: usize) -> Result<DirectedTree> {
        DirectedTree::new(p, (1..p).map(|b| (0, b)).collect())
    }

    /// Undirected tree from a Prüfer sequence, oriented by `orientation`:
    /// bit `i` set reverses the `i`-th edge in (min, max) order, which by
    /// default points from the smaller to the larger index.
    pub fn from_prufer(seq: &[usize], orientation: u64) -> Result<DirectedTree> {
        let p = seq.len() + 2;
        if let Some(&v) = seq.iter().find(|&&v| v >= p) {
            return Err(Error::InvalidTree(TreeViolation::VertexOutOfRange {
                edge: 0,
                vertex: v,
            }));
        }
        if p - 1 < 64 && orientation >> (p - 1) != 0 {
            return Err(Error::structure(
                "orientation",
                format!("bitmask {orientation} has bits beyond the {} edges", p - 1),
            ));
        }
        Ok(orient(p, &prufer_decode(seq), orientation))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Same tree with party indices relabeled through `map`.
    pub fn relabel(&self, map: &[usize], p: usize) -> Result<DirectedTree> {
        DirectedTree::new(p, self.edges.iter().map(|&(a, b)| (map[a], map[b])).collect())
    }
}

/// On-disk form of a plan: `{"edges": [[proposer, responder], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDoc {
    pub edges: Vec<[usize; 2]>,
}

impl PlanDoc {
    /// Tree over `edges.len() + 1` vertices.
    pub fn to_tree(&self) -> Result<DirectedTree> {
        DirectedTree::new(self.edges.len() + 1, self.edges.iter().map(|&[a, b]| (a, b)).collect())
    }
}

impl From<&DirectedTree> for PlanDoc {
    fn from(tree: &DirectedTree) -> PlanDoc {
        PlanDoc {
            edges: tree.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl fmt::Display for DirectedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.edges.iter().map(|(a, b)| format!("{a}->{b}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Standard Prüfer decoding. Returns undirected edges sorted by
/// `(min, max)`; each edge is stored with its smaller endpoint first.
pub fn prufer_decode(seq: &[usize]) -> Vec<(usize, usize)> {
    let p = seq.len() + 2;
    let mut degree = vec![1usize; p];
    for &v in seq {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(p - 1);
    for &v in seq {
        let leaf = (0..p).find(|&u| degree[u] == 1).expect("a leaf always exists");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<usize> = (0..p).filter(|&u| degree[u] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges.sort_unstable();
    edges
}

fn orient(p: usize, sorted: &[(usize, usize)], mask: u64) -> DirectedTree {
    let edges = sorted
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| if mask >> i & 1 == 1 { (b, a) } else { (a, b) })
        .collect();
    DirectedTree { p, edges }
}

/// Parses `prufer:<comma separated>/orient:<bitmask>`.
pub fn parse_shorthand(text: &str) -> Result<DirectedTree> {
    let bad = || Error::Parse(format!("expected 'prufer:<seq>/orient:<mask>', got '{text}'"));
    let rest = text.strip_prefix("prufer:").ok_or_else(bad)?;
    let (seq, mask) = rest.split_once("/orient:").ok_or_else(bad)?;
    let seq: Vec<usize> = if seq.trim().is_empty() {
        Vec::new()
    } else {
        seq.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    let mask: u64 = mask.trim().parse().map_err(|_| bad())?;
    DirectedTree::from_prufer(&seq, mask)
}

/// An elemental algorithm, identified by its directed tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ElementalPlan {
    pub tree: DirectedTree,
}

impl ElementalPlan {
    pub fn new(tree: DirectedTree) -> ElementalPlan {
        ElementalPlan { tree }
    }

    pub fn path(p: usize) -> Result<ElementalPlan> {
        DirectedTree::path(p).map(ElementalPlan::new)
    }

    /// Parses a plan file. Malformed JSON is a parse error; a well-formed
    /// document whose edges are not a tree is an [`Error::InvalidTree`].
    pub fn from_json(text: &str) -> Result<ElementalPlan> {
        let doc: PlanDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.to_tree().map(ElementalPlan::new)
    }

    pub fn to_doc(&self) -> PlanDoc {
        PlanDoc::from(&self.tree)
    }

    pub fn to_json(&self) -> String {
        crate::model::write_json(&self.to_doc())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementalRun {
    pub matching: Matching,
    /// One bijection per tree edge, in edge order.
    pub bijections: Vec<Bijection>,
}

impl ElementalRun {
    pub fn edge_rounds(&self) -> Vec<usize> {
        self.bijections.iter().map(|b| b.rounds_used).collect()
    }

    pub fn total_rounds(&self) -> usize {
        self.bijections.iter().map(|b| b.rounds_used).sum()
    }
}

/// Upper bound on total rounds of an elemental run.
pub fn elemental_round_bound(p: usize, n: usize) -> usize {
    p.saturating_sub(1) * round_bound(n)
}

/// Executes the plan and assembles families rooted at party 0.
pub fn run_elemental(instance: &Instance, plan: &ElementalPlan) -> Result<ElementalRun> {
    let tree = &plan.tree;
    if tree.p() != instance.p() {
        return Err(Error::structure(
            "plan",
            format!("tree spans {} parties, instance has {}", tree.p(), instance.p()),
        ));
    }
    let bijections = tree
        .edges()
        .iter()
        .map(|&(a, b)| gs(instance, a, b))
        .collect::<Result<Vec<_>>>()?;
    let matching = compose(instance.p(), instance.n(), &bijections);
    debug_assert!(
        bijections.iter().map(|b| b.rounds_used).sum::<usize>() <= elemental_round_bound(instance.p(), instance.n())
    );
    Ok(ElementalRun { matching, bijections })
}

/// Composes tree-shaped bijections into families, walking outward from
/// party 0 in breadth-first order.
fn compose(p: usize, n: usize, bijections: &[Bijection]) -> Matching {
    // adjacency: (neighbour, map from this party's members to neighbour's)
    let mut adj: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); p];
    for b in bijections {
        adj[b.proposer_party].push((b.responder_party, b.pairs.clone()));
        adj[b.responder_party].push((b.proposer_party, b.inverse()));
    }
    let mut members = vec![vec![0usize; p]; n];
    for (root, fam) in members.iter_mut().enumerate() {
        fam[0] = root;
    }
    let mut visited = vec![false; p];
    visited[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(a) = queue.pop_front() {
        for (b, map) in &adj[a] {
            if std::mem::replace(&mut visited[*b], true) {
                continue;
            }
            for fam in members.iter_mut() {
                fam[*b] = map[fam[a]];
            }
            queue.push_back(*b);
        }
    }
    let families = members.into_iter().map(Family::new).collect();
    Matching::new(p, n, families).expect("composed bijections partition the community")
}

/// Iterator over every directed spanning tree on `p` labeled vertices:
/// Prüfer sequences in lexicographic order, each crossed with all
/// orientation bitmasks in increasing order.
#[derive(Clone, Debug)]
pub struct TreeEnumeration {
    p: usize,
    seq: Vec<usize>,
    edges: Vec<(usize, usize)>,
    mask: u64,
    done: bool,
}

impl TreeEnumeration {
    /// Pairs each tree with its `prufer:<seq>/orient:<mask>` shorthand.
    pub fn with_shorthand(mut self) -> impl Iterator<Item = (String, DirectedTree)> {
        std::iter::from_fn(move || {
            let code = shorthand(&self.seq, self.mask);
            self.next().map(|tree| (code, tree))
        })
    }
}

/// Inverse of [`parse_shorthand`] for a given sequence and bitmask.
pub fn shorthand(seq: &[usize], orientation: u64) -> String {
    let seq: Vec<String> = seq.iter().map(|v| v.to_string()).collect();
    format!("prufer:{}/orient:{orientation}", seq.join(","))
}

impl Iterator for TreeEnumeration {
    type Item = DirectedTree;

    fn next(&mut self) -> Option<DirectedTree> {
        if self.done {
            return None;
        }
        let tree = orient(self.p, &self.edges, self.mask);
        self.mask += 1;
        if self.mask == 1u64 << (self.p - 1) {
            self.mask = 0;
            // odometer step, last position fastest
            let mut i = self.seq.len();
            loop {
                if i == 0 {
                    self.done = true;
                    break;
                }
                i -= 1;
                self.seq[i] += 1;
                if self.seq[i] < self.p {
                    break;
                }
                self.seq[i] = 0;
            }
            if !self.done {
                self.edges = prufer_decode(&self.seq);
            }
        }
        Some(tree)
    }
}

pub fn enumerate_trees(p: usize) -> Result<TreeEnumeration> {
    enumerate_trees_up_to(p, DEFAULT_MAX_ENUM_P)
}

/// As [`enumerate_trees`] with an explicit guard on `p`.
pub fn enumerate_trees_up_to(p: usize, max_p: usize) -> Result<TreeEnumeration> {
    if p < 2 {
        return Err(Error::InvalidTree(TreeViolation::TooFewVertices(p)));
    }
    if p > max_p || p > 64 {
        return Err(Error::Guard {
            what: "tree enumeration",
            size: p as u128,
            limit: max_p.min(64) as u128,
        });
    }
    let seq = vec![0; p - 2];
    let edges = prufer_decode(&seq);
    Ok(TreeEnumeration {
        p,
        seq,
        edges,
        mask: 0,
        done: false,
    })
}

/// `2^(p-1) * p^(p-2)`, the number of elemental algorithms over `p` parties.
pub fn count_elemental(p: usize) -> BigUint {
    assert!(p >= 2, "count_elemental needs p >= 2");
    (BigUint::from(1u32) << (p - 1)) * BigUint::from(p).pow(p as u32 - 2)
}

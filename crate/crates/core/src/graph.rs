//! Undirected player graphs: the interference graph (whose edges say which
//! actions enter which cost), the communication graph (over which estimates
//! are exchanged), and the greedy maximal triangle-free spanning subgraph
//! that lower-bounds the admissible communication graphs.
//!
//! Players are stored 0-based. Config files and CSV output use 1-based ids;
//! [`PlayerGraph::from_one_based`] and [`PlayerGraph::one_based_edges`] do
//! the conversion at that boundary.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no players")]
    EmptyGraph,
    #[error("self-loop on player {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a player outside 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("interference graph is disconnected; components: {components:?}")]
    DisconnectedGraph { components: Vec<Vec<usize>> },
    #[error("graphs have different player counts ({0} vs {1})")]
    VertexCountMismatch(usize, usize),
    #[error("communication edge ({0}, {1}) is not an interference edge")]
    NotSubgraph(usize, usize),
    #[error("communication graph is disconnected; components: {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },
    #[error("interference edge ({0}, {1}) is pruned but not covered by a communication triangle")]
    MissingTriangleCover(usize, usize),
    #[error(
        "no connected maximal triangle-free subgraph exists; communication graph must equal the interference graph"
    )]
    RequiresFullCommunication,
}

/// Simple undirected graph over players `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct PlayerGraph {
    adj: Vec<Vec<usize>>,
}

impl fmt::Debug for PlayerGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlayerGraph")
            .field("n", &self.n())
            .field("edges", &self.edges())
            .finish()
    }
}

impl PlayerGraph {
    /// Builds a graph from 0-based edges. Duplicate and reversed edges are
    /// merged.
    pub fn new<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::VertexOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adj })
    }

    /// Builds a graph from 1-based `[i, j]` pairs as they appear in config files.
    pub fn from_one_based(n: usize, edges: &[[usize; 2]]) -> Result<Self, GraphError> {
        let mut zero = Vec::with_capacity(edges.len());
        for &[u, v] in edges {
            if u == 0 || v == 0 {
                return Err(GraphError::VertexOutOfRange(u, v, n));
            }
            zero.push((u - 1, v - 1));
        }
        Self::new(n, zero)
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Self { adj }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Sorted open neighborhood.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    /// Sorted closed neighborhood `N(i) ∪ {i}`.
    pub fn closed_neighborhood(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.adj[i].len() + 1);
        let pos = self.adj[i].partition_point(|&j| j < i);
        out.extend_from_slice(&self.adj[i][..pos]);
        out.push(i);
        out.extend_from_slice(&self.adj[i][pos..]);
        out
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn one_based_edges(&self) -> Vec<[usize; 2]> {
        self.edges().into_iter().map(|(u, v)| [u + 1, v + 1]).collect()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.n();
        self.adj.iter().all(|l| l.len() + 1 == n)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() > 0 && self.components().len() == 1
    }

    pub fn is_subgraph_of(&self, other: &PlayerGraph) -> bool {
        self.n() == other.n() && self.edges().iter().all(|&(u, v)| other.has_edge(u, v))
    }

    /// Some `w` adjacent to both `u` and `v`.
    pub fn common_neighbor(&self, u: usize, v: usize) -> Option<usize> {
        let (a, b) = (&self.adj[u], &self.adj[v]);
        let (mut p, mut q) = (0, 0);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => return Some(a[p]),
            }
        }
        None
    }

    /// Number of players adjacent to both `u` and `v`.
    pub fn common_neighbor_count(&self, u: usize, v: usize) -> usize {
        self.adj[u]
            .iter()
            .filter(|w| self.adj[v].binary_search(w).is_ok())
            .count()
    }

    fn insert_edge(&mut self, u: usize, v: usize) {
        if let Err(p) = self.adj[u].binary_search(&v) {
            self.adj[u].insert(p, v);
        }
        if let Err(p) = self.adj[v].binary_search(&u) {
            self.adj[v].insert(p, u);
        }
    }

    pub fn with_edge(mut self, u: usize, v: usize) -> Self {
        self.insert_edge(u, v);
        self
    }
}

/// An interference graph that passed [`validate_interference`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceGraph(PlayerGraph);

impl Deref for InterferenceGraph {
    type Target = PlayerGraph;
    fn deref(&self) -> &PlayerGraph {
        &self.0
    }
}

impl InterferenceGraph {
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        validate_interference(PlayerGraph::complete(n))
    }

    pub fn graph(&self) -> &PlayerGraph {
        &self.0
    }

    pub fn into_inner(self) -> PlayerGraph {
        self.0
    }
}

/// A communication graph checked against an interference graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph(PlayerGraph);

impl Deref for CommGraph {
    type Target = PlayerGraph;
    fn deref(&self) -> &PlayerGraph {
        &self.0
    }
}

impl CommGraph {
    pub fn graph(&self) -> &PlayerGraph {
        &self.0
    }

    /// Accepts any connected graph without relating it to an interference
    /// graph. Used for the fully coupled baseline, where every estimate is
    /// shared by every pair and connectivity is the only requirement.
    pub fn connected_unchecked(g: PlayerGraph) -> Result<Self, GraphError> {
        if g.n() == 0 {
            return Err(GraphError::EmptyGraph);
        }
        if !g.is_connected() {
            return Err(GraphError::Disconnected {
                components: g.components(),
            });
        }
        Ok(Self(g))
    }
}

pub fn validate_interference(g: PlayerGraph) -> Result<InterferenceGraph, GraphError> {
    if g.n() == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let components = g.components();
    if components.len() > 1 {
        return Err(GraphError::DisconnectedGraph { components });
    }
    Ok(InterferenceGraph(g))
}

/// Order in which the greedy triangle-free construction visits edges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum EdgeOrder {
    #[default]
    Lexicographic,
    /// Explicit 0-based order. Must list every edge of the input graph once;
    /// edges of the input that are missing are appended lexicographically.
    Explicit(Vec<(usize, usize)>),
}

/// Greedy maximal triangle-free spanning subgraph: visit edges in `order`
/// and keep an edge iff its endpoints have no common neighbor among the
/// edges kept so far.
pub fn maximal_triangle_free_spanning_subgraph(g: &PlayerGraph, order: &EdgeOrder) -> PlayerGraph {
    let all = g.edges();
    let sequence: Vec<(usize, usize)> = match order {
        EdgeOrder::Lexicographic => all,
        EdgeOrder::Explicit(list) => {
            let norm = |(u, v): (usize, usize)| if u < v { (u, v) } else { (v, u) };
            let mut seq: Vec<(usize, usize)> = Vec::with_capacity(all.len());
            for &e in list {
                let e = norm(e);
                if g.has_edge(e.0, e.1) && !seq.contains(&e) {
                    seq.push(e);
                }
            }
            for e in all {
                if !seq.contains(&e) {
                    seq.push(e);
                }
            }
            seq
        }
    };
    let mut h = PlayerGraph::empty(g.n());
    for (u, v) in sequence {
        if h.common_neighbor(u, v).is_none() {
            h.insert_edge(u, v);
        }
    }
    h
}

pub fn is_triangle_free(g: &PlayerGraph) -> bool {
    g.edges().iter().all(|&(u, v)| g.common_neighbor(u, v).is_none())
}

/// Checks a candidate communication graph: it must be a connected spanning
/// subgraph of the interference graph, and every pruned interference edge
/// `(u, v)` must have a common communication neighbor `w`.
pub fn validate_communication(g_i: &InterferenceGraph, g_c: PlayerGraph) -> Result<CommGraph, GraphError> {
    if g_c.n() != g_i.n() {
        return Err(GraphError::VertexCountMismatch(g_i.n(), g_c.n()));
    }
    if let Some(&(u, v)) = g_c.edges().iter().find(|&&(u, v)| !g_i.has_edge(u, v)) {
        return Err(GraphError::NotSubgraph(u, v));
    }
    let components = g_c.components();
    if components.len() > 1 {
        return Err(GraphError::Disconnected { components });
    }
    for (u, v) in g_i.edges() {
        if !g_c.has_edge(u, v) && g_c.common_neighbor(u, v).is_none() {
            return Err(GraphError::MissingTriangleCover(u, v));
        }
    }
    // Greedy construction keeps connectivity, so this branch only fires if
    // that property is ever broken.
    let gm = maximal_triangle_free_spanning_subgraph(g_i, &EdgeOrder::Lexicographic);
    if !gm.is_connected() && &g_c != g_i.graph() {
        return Err(GraphError::RequiresFullCommunication);
    }
    Ok(CommGraph(g_c))
}

/// Per-player `m_i = deg(i) + 1` and their sum `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub m_vec: Vec<usize>,
    pub m: usize,
}

pub fn degree_profile(g_i: &PlayerGraph) -> DegreeProfile {
    let m_vec: Vec<usize> = (0..g_i.n()).map(|i| g_i.degree(i) + 1).collect();
    let m = m_vec.iter().sum();
    DegreeProfile { m_vec, m }
}

/// `B = A + I`: adjacency plus identity.
pub fn b_matrix(g_i: &PlayerGraph) -> DMatrix<u8> {
    let n = g_i.n();
    DMatrix::from_fn(n, n, |i, j| u8::from(i == j || g_i.has_edge(i, j)))
}

//! Two-colored undirected simple graphs.
//!
//! Nodes are dense `u32` ids. The graph only ever grows (nodes, then edges
//! between existing nodes) and is read-only once handed to the simulators, so
//! it can be shared freely across worker threads.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

pub type NodeId = u32;

/// Group membership. `Red` is the minority group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    pub const ALL: [Color; 2] = [Color::Red, Color::Blue];

    /// Dense index, `Red = 0`, `Blue = 1`.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Color::Red => 0,
            Color::Blue => 1,
        }
    }

    #[inline]
    pub fn other(self) -> Color {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Blue => "blue",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Color {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "red" | "r" => Ok(Color::Red),
            "blue" | "b" => Ok(Color::Blue),
            other => Err(GraphError::Parse {
                line: 0,
                message: format!("unknown color `{other}`"),
            }),
        }
    }
}

/// Number of nodes at shortest-path distance exactly `k` from a source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KHopCount {
    pub total: u64,
    pub red: u64,
    pub blue: u64,
}

impl KHopCount {
    #[inline]
    fn add(&mut self, color: Color) {
        self.total += 1;
        match color {
            Color::Red => self.red += 1,
            Color::Blue => self.blue += 1,
        }
    }
}

/// Minority ratio, cross-group edge fraction and homophily rarefaction index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupStats {
    pub minority_ratio: f64,
    pub cross_edge_fraction: f64,
    pub rarefaction_index: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledGraph {
    colors: Vec<Color>,
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl LabeledGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        Self {
            colors: Vec::with_capacity(nodes),
            adjacency: Vec::with_capacity(nodes),
            edge_count: 0,
        }
    }

    /// Builds a graph from node colors and an edge list, rejecting self-loops
    /// and duplicate edges.
    pub fn from_edges(
        colors: impl IntoIterator<Item = Color>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let mut g = Self::new();
        for c in colors {
            g.add_node(c)?;
        }
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_node(&mut self, color: Color) -> Result<NodeId, GraphError> {
        let id = NodeId::try_from(self.colors.len()).map_err(|_| GraphError::IdOverflow {
            id: self.colors.len() as u64,
        })?;
        self.colors.push(color);
        self.adjacency.push(Vec::new());
        Ok(id)
    }

    /// Adds the undirected edge `u`-`v`.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(GraphError::SelfLoop { node: u });
        }
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        if self.adjacency[a as usize].contains(&b) {
            return Err(GraphError::DuplicateEdge { u, v });
        }
        self.push_edge(u, v);
        Ok(())
    }

    /// Caller guarantees both ids are valid, distinct and not yet adjacent.
    pub(crate) fn push_edge(&mut self, u: NodeId, v: NodeId) {
        debug_assert!(u != v);
        self.adjacency[u as usize].push(v);
        self.adjacency[v as usize].push(u);
        self.edge_count += 1;
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.colors.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn color(&self, u: NodeId) -> Color {
        self.colors[u as usize]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u as usize].len()
    }

    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adjacency[u as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.colors.len()).map(|u| u as NodeId)
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, nbrs)| {
            let u = u as NodeId;
            nbrs.iter().filter(move |&&v| u < v).map(move |&v| (u, v))
        })
    }

    pub fn count_color(&self, color: Color) -> usize {
        self.colors.iter().filter(|&&c| c == color).count()
    }

    pub fn check_node(&self, u: NodeId) -> Result<(), GraphError> {
        if (u as usize) < self.colors.len() {
            Ok(())
        } else {
            Err(GraphError::InvalidNode {
                node: u,
                node_count: self.colors.len(),
            })
        }
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0 as NodeId];
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    reached += 1;
                    stack.push(v);
                }
            }
        }
        reached == n
    }

    pub fn is_tree(&self) -> bool {
        self.node_count() > 0 && self.edge_count + 1 == self.node_count() && self.is_connected()
    }

    /// Counts nodes at distance exactly `k` from `u`.
    ///
    /// Allocates a fresh scratch buffer; use [`KHopCounter`] for many queries.
    pub fn khop_count(&self, u: NodeId, k: usize) -> Result<KHopCount, GraphError> {
        let mut counter = KHopCounter::new(self);
        let profile = counter.profile(u, k)?;
        Ok(profile[k - 1])
    }

    pub fn group_stats(&self) -> Result<GroupStats, GraphError> {
        if self.edge_count == 0 {
            return Err(GraphError::NoEdges);
        }
        let red = self.count_color(Color::Red);
        if red == 0 || red == self.node_count() {
            return Err(GraphError::SingleColor);
        }
        let r = red as f64 / self.node_count() as f64;
        let cross = self.edges().filter(|&(u, v)| self.color(u) != self.color(v)).count();
        let cross_edge_fraction = cross as f64 / self.edge_count as f64;
        Ok(GroupStats {
            minority_ratio: r,
            cross_edge_fraction,
            rarefaction_index: cross_edge_fraction / (2.0 * r * (1.0 - r)),
        })
    }

    /// Writes `u v` lines, one per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    /// Writes the `id,group` label CSV using `red` / `blue` tokens.
    pub fn write_labels<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "id,group")?;
        for (u, c) in self.colors.iter().enumerate() {
            writeln!(w, "{u},{c}")?;
        }
        Ok(())
    }
}

/// Level-limited BFS with a reusable visited buffer.
///
/// Visited marks are epoch stamps, so a query costs only the size of the
/// explored ball rather than `O(n)`.
pub struct KHopCounter<'g> {
    graph: &'g LabeledGraph,
    stamp: Vec<u64>,
    epoch: u64,
    frontier: Vec<NodeId>,
    next: Vec<NodeId>,
}

impl<'g> KHopCounter<'g> {
    pub fn new(graph: &'g LabeledGraph) -> Self {
        Self {
            graph,
            stamp: vec![0; graph.node_count()],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    /// Counts at distances `1..=max_k`; entry `k - 1` holds distance `k`.
    pub fn profile(&mut self, u: NodeId, max_k: usize) -> Result<Vec<KHopCount>, GraphError> {
        self.graph.check_node(u)?;
        if max_k == 0 {
            return Err(GraphError::ZeroHop);
        }
        self.epoch += 1;
        let epoch = self.epoch;
        let mut out = vec![KHopCount::default(); max_k];

        self.frontier.clear();
        self.frontier.push(u);
        self.stamp[u as usize] = epoch;
        for slot in out.iter_mut() {
            self.next.clear();
            for &x in &self.frontier {
                for &y in self.graph.neighbors(x) {
                    let s = &mut self.stamp[y as usize];
                    if *s != epoch {
                        *s = epoch;
                        self.next.push(y);
                        slot.add(self.graph.color(y));
                    }
                }
            }
            if self.next.is_empty() {
                break;
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
        Ok(out)
    }
}

//! Undirected graph in compressed sparse adjacency form.
//!
//! The graph is immutable after construction and safe to share across
//! threads. Neighbor slices are kept sorted so adjacency tests are a
//! binary search, which the second-order walker leans on heavily.

use crate::error::{Error, Result};

/// Dense internal node identifier.
pub type NodeId = u32;

/// Side of a bipartite graph a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    User,
    Item,
}

/// Immutable undirected graph. Adjacency is symmetric, deduplicated and
/// free of self-loops by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    degrees: Vec<u32>,
    partition: Option<Vec<Partition>>,
}

impl Graph {
    /// Builds a graph over nodes `0..node_count` from undirected edge pairs.
    ///
    /// Duplicate pairs (in either orientation) collapse to a single edge.
    /// Self-loops are rejected. If `partition` is given, every edge must
    /// join a `User` node to an `Item` node.
    pub fn from_edges(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        partition: Option<Vec<Partition>>,
    ) -> Result<Self> {
        if let Some(p) = &partition {
            if p.len() != node_count {
                return Err(Error::InvalidGraph(format!(
                    "partition tags for {} nodes but node_count is {}",
                    p.len(),
                    node_count
                )));
            }
        }

        let mut directed: Vec<(NodeId, NodeId)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if u as usize >= node_count || v as usize >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
            if let Some(p) = &partition {
                if p[u as usize] == p[v as usize] {
                    return Err(Error::PartitionViolation(u, v));
                }
            }
            directed.push((u, v));
            directed.push((v, u));
        }
        directed.sort_unstable();
        directed.dedup();

        let mut offsets = vec![0usize; node_count + 1];
        for &(u, _) in &directed {
            offsets[u as usize + 1] += 1;
        }
        for i in 1..=node_count {
            offsets[i] += offsets[i - 1];
        }
        let neighbors: Vec<NodeId> = directed.iter().map(|&(_, v)| v).collect();
        let degrees: Vec<u32> = (0..node_count)
            .map(|v| (offsets[v + 1] - offsets[v]) as u32)
            .collect();

        Ok(Graph {
            offsets,
            neighbors,
            degrees,
            partition,
        })
    }

    pub fn node_count(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, v: NodeId) -> u32 {
        self.degrees[v as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Sorted neighbor slice of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn partition(&self) -> Option<&[Partition]> {
        self.partition.as_deref()
    }

    pub fn partition_of(&self, v: NodeId) -> Option<Partition> {
        self.partition.as_ref().map(|p| p[v as usize])
    }

    /// Iterates undirected edges as (u, v) with u < v.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count() as NodeId).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Nodes with at least one neighbor.
    pub fn non_isolated_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count() as NodeId).filter(move |&v| self.degree(v) > 0)
    }

    /// Checks the structural invariants. Construction guarantees them;
    /// this exists so deserialized graphs can be validated cheaply.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.node_count();
        if self.offsets.len() != n + 1 || self.offsets[n] != self.neighbors.len() {
            return Err(Error::InvalidGraph("offsets do not cover neighbors".into()));
        }
        for v in 0..n {
            if self.offsets[v] > self.offsets[v + 1] {
                return Err(Error::InvalidGraph("offsets not non-decreasing".into()));
            }
            if self.degrees[v] as usize != self.offsets[v + 1] - self.offsets[v] {
                return Err(Error::InvalidGraph(format!("degree mismatch at node {v}")));
            }
            let slice = self.neighbors(v as NodeId);
            for w in slice.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidGraph(format!(
                        "neighbor slice of {v} not strictly increasing"
                    )));
                }
            }
            for &u in slice {
                if u == v as NodeId {
                    return Err(Error::SelfLoop(u));
                }
                if !self.has_edge(u, v as NodeId) {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric adjacency: {v} -> {u} has no reverse"
                    )));
                }
                if let Some(p) = &self.partition {
                    if p[u as usize] == p[v] {
                        return Err(Error::PartitionViolation(v as NodeId, u));
                    }
                }
            }
        }
        Ok(())
    }
}

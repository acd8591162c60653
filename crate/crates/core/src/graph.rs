//! Delivery topology: a DAG of servers, forwarders, and users.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Role of a node in the delivery graph. Servers source content, users sink
/// it, forwarders relay and cache in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Server,
    Forwarder,
    User,
}

/// Node declaration as it appears in a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDecl {
    pub id: u32,
    pub role: NodeRole,
}

/// Directed edge `from -> to` with a bandwidth capacity (Mbps) and a
/// propagation delay used by the simulator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDecl {
    pub from: u32,
    pub to: u32,
    pub capacity_mbps: f64,
    #[serde(default = "default_delay_ms")]
    pub delay_ms: f64,
}

fn default_delay_ms() -> f64 {
    5.0
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("edge references unknown node {0}")]
    UnknownNode(u32),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(u32, u32),
    #[error("graph contains a directed cycle")]
    Cyclic,
}

/// Immutable delivery graph with per-node adjacency indexes.
///
/// Nodes are stored in declaration order; `idx` values below are positions
/// into that order, `id` values are the external identifiers from the
/// scenario file.
#[derive(Debug, Clone)]
pub struct NetworkGraph {
    ids: Vec<u32>,
    roles: Vec<NodeRole>,
    edges: Vec<EdgeDecl>,
    edge_endpoints: Vec<(usize, usize)>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    id_to_idx: BTreeMap<u32, usize>,
}

impl NetworkGraph {
    pub fn new(nodes: &[NodeDecl], edges: Vec<EdgeDecl>) -> Result<Self, GraphError> {
        let mut id_to_idx = BTreeMap::new();
        for (idx, n) in nodes.iter().enumerate() {
            if id_to_idx.insert(n.id, idx).is_some() {
                return Err(GraphError::DuplicateNode(n.id));
            }
        }
        let mut edge_endpoints = Vec::with_capacity(edges.len());
        let mut seen = std::collections::BTreeSet::new();
        for e in &edges {
            let from = *id_to_idx.get(&e.from).ok_or(GraphError::UnknownNode(e.from))?;
            let to = *id_to_idx.get(&e.to).ok_or(GraphError::UnknownNode(e.to))?;
            if !seen.insert((from, to)) {
                return Err(GraphError::DuplicateEdge(e.from, e.to));
            }
            edge_endpoints.push((from, to));
        }
        let mut incoming = vec![Vec::new(); nodes.len()];
        let mut outgoing = vec![Vec::new(); nodes.len()];
        for (eidx, &(from, to)) in edge_endpoints.iter().enumerate() {
            outgoing[from].push(eidx);
            incoming[to].push(eidx);
        }
        Ok(Self {
            ids: nodes.iter().map(|n| n.id).collect(),
            roles: nodes.iter().map(|n| n.role).collect(),
            edges,
            edge_endpoints,
            incoming,
            outgoing,
            id_to_idx,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn role(&self, idx: usize) -> NodeRole {
        self.roles[idx]
    }

    pub fn id(&self, idx: usize) -> u32 {
        self.ids[idx]
    }

    pub fn idx_of(&self, id: u32) -> Option<usize> {
        self.id_to_idx.get(&id).copied()
    }

    pub fn edge(&self, eidx: usize) -> &EdgeDecl {
        &self.edges[eidx]
    }

    /// `(from_idx, to_idx)` endpoints of an edge.
    pub fn endpoints(&self, eidx: usize) -> (usize, usize) {
        self.edge_endpoints[eidx]
    }

    /// Edge indexes entering `idx` (upstream set `I`).
    pub fn incoming(&self, idx: usize) -> &[usize] {
        &self.incoming[idx]
    }

    /// Edge indexes leaving `idx` (downstream set `O`).
    pub fn outgoing(&self, idx: usize) -> &[usize] {
        &self.outgoing[idx]
    }

    pub fn node_indices(&self) -> std::ops::Range<usize> {
        0..self.ids.len()
    }

    pub fn nodes_with_role(&self, role: NodeRole) -> impl Iterator<Item = usize> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r == role)
            .map(|(i, _)| i)
    }

    pub fn capacity(&self, eidx: usize) -> f64 {
        self.edges[eidx].capacity_mbps
    }

    /// Longest-path depth from any server, per node.
    ///
    /// Servers sit at depth 0; for every edge `(i, j)`,
    /// `depth(j) >= depth(i) + 1`, so a node reachable via both a 2-hop and
    /// a 3-hop path gets depth 3. Nodes unreachable from any server are
    /// reported as `None`. Fails if the graph has a directed cycle.
    pub fn compute_depths(&self) -> Result<Vec<Option<usize>>, GraphError> {
        let order = self.topological_order()?;
        let mut depth: Vec<Option<usize>> = self
            .roles
            .iter()
            .map(|r| if *r == NodeRole::Server { Some(0) } else { None })
            .collect();
        for &i in &order {
            let Some(di) = depth[i] else { continue };
            for &eidx in &self.outgoing[i] {
                let (_, j) = self.edge_endpoints[eidx];
                let candidate = di + 1;
                if depth[j].map_or(true, |dj| candidate > dj) {
                    depth[j] = Some(candidate);
                }
            }
        }
        Ok(depth)
    }

    /// Kahn topological order; error on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.ids.len();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.incoming[i].len()).collect();
        let mut queue: std::collections::VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &eidx in &self.outgoing[i] {
                let (_, j) = self.edge_endpoints[eidx];
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        if order.len() != n {
            return Err(GraphError::Cyclic);
        }
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> NetworkGraph {
        // S(0) -> F(1) -> U(2)
        NetworkGraph::new(
            &[
                NodeDecl { id: 0, role: NodeRole::Server },
                NodeDecl { id: 1, role: NodeRole::Forwarder },
                NodeDecl { id: 2, role: NodeRole::User },
            ],
            vec![
                EdgeDecl { from: 0, to: 1, capacity_mbps: 10.0, delay_ms: 5.0 },
                EdgeDecl { from: 1, to: 2, capacity_mbps: 10.0, delay_ms: 5.0 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn chain_depths() {
        let g = chain();
        let d = g.compute_depths().unwrap();
        assert_eq!(d, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn longest_path_wins() {
        // S -> F1 -> F2 -> U and S -> U': U reachable via 3 hops only;
        // F3 reachable via 1 hop from S and 2 hops via F1.
        let g = NetworkGraph::new(
            &[
                NodeDecl { id: 0, role: NodeRole::Server },
                NodeDecl { id: 1, role: NodeRole::Forwarder },
                NodeDecl { id: 2, role: NodeRole::Forwarder },
                NodeDecl { id: 3, role: NodeRole::User },
            ],
            vec![
                EdgeDecl { from: 0, to: 1, capacity_mbps: 1.0, delay_ms: 5.0 },
                EdgeDecl { from: 1, to: 2, capacity_mbps: 1.0, delay_ms: 5.0 },
                EdgeDecl { from: 0, to: 2, capacity_mbps: 1.0, delay_ms: 5.0 },
                EdgeDecl { from: 2, to: 3, capacity_mbps: 1.0, delay_ms: 5.0 },
            ],
        )
        .unwrap();
        let d = g.compute_depths().unwrap();
        // node 2 is reachable in 1 hop and 2 hops: depth 2 (the maximum).
        assert_eq!(d[2], Some(2));
        assert_eq!(d[3], Some(3));
    }

    #[test]
    fn shared_forwarder_of_two_servers_has_depth_one() {
        let g = NetworkGraph::new(
            &[
                NodeDecl { id: 10, role: NodeRole::Server },
                NodeDecl { id: 11, role: NodeRole::Server },
                NodeDecl { id: 12, role: NodeRole::Forwarder },
            ],
            vec![
                EdgeDecl { from: 10, to: 12, capacity_mbps: 1.0, delay_ms: 5.0 },
                EdgeDecl { from: 11, to: 12, capacity_mbps: 1.0, delay_ms: 5.0 },
            ],
        )
        .unwrap();
        assert_eq!(g.compute_depths().unwrap()[2], Some(1));
    }

    #[test]
    fn cycle_is_an_error() {
        let g = NetworkGraph::new(
            &[
                NodeDecl { id: 0, role: NodeRole::Forwarder },
                NodeDecl { id: 1, role: NodeRole::Forwarder },
            ],
            vec![
                EdgeDecl { from: 0, to: 1, capacity_mbps: 1.0, delay_ms: 5.0 },
                EdgeDecl { from: 1, to: 0, capacity_mbps: 1.0, delay_ms: 5.0 },
            ],
        )
        .unwrap();
        assert!(matches!(g.compute_depths(), Err(GraphError::Cyclic)));
    }

    #[test]
    fn depth_labels_are_topologically_compatible() {
        let g = chain();
        let d = g.compute_depths().unwrap();
        for e in 0..g.edge_count() {
            let (i, j) = g.endpoints(e);
            assert!(d[i].unwrap() < d[j].unwrap());
        }
    }
}

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Consumer,
    Router,
    Publisher,
    Manager,
}

impl Role {
    /// Nodes that answer interests for their own prefix.
    pub fn is_producer(self) -> bool {
        matches!(self, Role::Publisher | Role::Manager)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub role: Role,
    pub cs_capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub latency: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("duplicate node id {0:?}")]
    DuplicateNode(NodeId),
    #[error("link references unknown node {0:?}")]
    UnknownNode(NodeId),
    #[error("link {0:?}-{1:?} has zero latency")]
    ZeroLatency(NodeId, NodeId),
    #[error("self loop at {0:?}")]
    SelfLoop(NodeId),
    #[error("duplicate link {0:?}-{1:?}")]
    DuplicateLink(NodeId, NodeId),
    #[error("node {0:?} is unreachable")]
    Disconnected(NodeId),
    #[error("topology has no nodes")]
    Empty,
}

/// Undirected graph of nodes joined by links with integer latencies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Topology {
    nodes: BTreeMap<NodeId, Node>,
    adjacency: BTreeMap<NodeId, BTreeMap<NodeId, u64>>,
}

impl Topology {
    pub fn new(nodes: Vec<Node>, links: Vec<Link>) -> Result<Self, TopologyError> {
        if nodes.is_empty() {
            return Err(TopologyError::Empty);
        }
        let mut by_id = BTreeMap::new();
        let mut adjacency: BTreeMap<NodeId, BTreeMap<NodeId, u64>> = BTreeMap::new();
        for n in nodes {
            adjacency.insert(n.id.clone(), BTreeMap::new());
            if let Some(dup) = by_id.insert(n.id.clone(), n) {
                return Err(TopologyError::DuplicateNode(dup.id));
            }
        }
        for l in links {
            for end in [&l.a, &l.b] {
                if !by_id.contains_key(end) {
                    return Err(TopologyError::UnknownNode(end.clone()));
                }
            }
            if l.a == l.b {
                return Err(TopologyError::SelfLoop(l.a));
            }
            if l.latency == 0 {
                return Err(TopologyError::ZeroLatency(l.a, l.b));
            }
            if adjacency[&l.a].contains_key(&l.b) {
                return Err(TopologyError::DuplicateLink(l.a, l.b));
            }
            adjacency.get_mut(&l.a).unwrap().insert(l.b.clone(), l.latency);
            adjacency.get_mut(&l.b).unwrap().insert(l.a.clone(), l.latency);
        }
        let topo = Self {
            nodes: by_id,
            adjacency,
        };
        let first = topo.nodes.keys().next().unwrap().clone();
        let reached = topo.distances_from(&first);
        if let Some(missing) = topo.nodes.keys().find(|id| !reached.contains_key(*id)) {
            return Err(TopologyError::Disconnected(missing.clone()));
        }
        Ok(topo)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn neighbors(&self, id: &str) -> impl Iterator<Item = (&NodeId, u64)> {
        self.adjacency.get(id).into_iter().flatten().map(|(n, l)| (n, *l))
    }

    pub fn latency(&self, a: &str, b: &str) -> Option<u64> {
        self.adjacency.get(a)?.get(b).copied()
    }

    /// Dijkstra over latencies. Returns `(distance, hop count)` per reachable
    /// node; among equal-latency paths the one with fewer hops wins.
    fn shortest_from(&self, src: &str) -> BTreeMap<NodeId, (u64, u64, Option<NodeId>)> {
        let mut best: BTreeMap<NodeId, (u64, u64, Option<NodeId>)> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, 0u64, src.to_owned(), None::<NodeId>)));
        while let Some(Reverse((d, h, node, via))) = heap.pop() {
            if best.contains_key(&node) {
                continue;
            }
            best.insert(node.clone(), (d, h, via));
            for (next, lat) in self.neighbors(&node) {
                if !best.contains_key(next) {
                    heap.push(Reverse((d + lat, h + 1, next.clone(), Some(node.clone()))));
                }
            }
        }
        best
    }

    pub fn distances_from(&self, src: &str) -> BTreeMap<NodeId, u64> {
        self.shortest_from(src)
            .into_iter()
            .map(|(k, (d, _, _))| (k, d))
            .collect()
    }

    /// Number of links on the shortest path between two nodes.
    pub fn hop_distance(&self, a: &str, b: &str) -> Option<u64> {
        self.shortest_from(a).get(b).map(|(_, h, _)| *h)
    }

    /// For every node, the neighbor to forward to in order to reach `dst`.
    pub fn next_hops_toward(&self, dst: &str) -> BTreeMap<NodeId, NodeId> {
        // Paths are symmetric, so the predecessor on a path from dst is the
        // next hop toward it.
        self.shortest_from(dst)
            .into_iter()
            .filter_map(|(node, (_, _, via))| via.map(|v| (node, v)))
            .collect()
    }

    pub fn ids_with_role(&self, role: Role) -> BTreeSet<NodeId> {
        self.nodes
            .values()
            .filter(|n| n.role == role)
            .map(|n| n.id.clone())
            .collect()
    }
}

//! Router-level topologies: Watts-Strogatz generation, the line-oriented
//! topology file format, and shortest-path routing tables.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::time::SimDuration;

pub type NodeId = usize;

/// Default per-link propagation delay.
pub const DEFAULT_LINK_DELAY: SimDuration = SimDuration::from_millis(10);

/// Number of extra seeds tried when a rewired graph comes out disconnected.
pub const WS_CONNECTIVITY_RETRIES: u64 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no connected Watts-Strogatz graph after {attempts} attempts (seeds {first_seed}..)")]
    GenerationFailure { attempts: u64, first_seed: u64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate link {a} {b}")]
    DuplicateEdge { line: usize, a: NodeId, b: NodeId },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: NodeId },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("producer set is empty")]
    EmptyProducerSet,
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
}

/// Immutable undirected topology with uniform link delay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: BTreeSet<(NodeId, NodeId)>,
    adjacency: Vec<Vec<NodeId>>,
    link_delay: SimDuration,
}

impl Graph {
    /// Builds a graph from an edge list. Edges are normalized to `(min, max)`.
    /// Self-loops and duplicates are rejected; connectivity is not checked.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self, TopologyError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        if node_count == 0 {
            return Err(TopologyError::InvalidParameter(
                "node count must be positive".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for (i, (a, b)) in edges.into_iter().enumerate() {
            if a >= node_count {
                return Err(TopologyError::UnknownNode(a));
            }
            if b >= node_count {
                return Err(TopologyError::UnknownNode(b));
            }
            if a == b {
                return Err(TopologyError::SelfLoop {
                    line: i + 1,
                    node: a,
                });
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(TopologyError::DuplicateEdge { line: i + 1, a, b });
            }
        }
        Ok(Self::from_edge_set(node_count, set))
    }

    fn from_edge_set(node_count: usize, edges: BTreeSet<(NodeId, NodeId)>) -> Self {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Graph {
            node_count,
            edges,
            adjacency,
            link_delay: DEFAULT_LINK_DELAY,
        }
    }

    pub fn with_link_delay(mut self, delay: SimDuration) -> Self {
        self.link_delay = delay;
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    /// Neighbors of `node`, ascending by id.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn link_delay(&self) -> SimDuration {
        self.link_delay
    }

    pub fn is_connected(&self) -> bool {
        bfs_distances(self, 0).iter().all(Option::is_some)
    }

    /// Renders the graph in the topology file format accepted by [`load_topology`].
    pub fn to_topology_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {}", self.node_count);
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "link {a} {b}");
        }
        out
    }
}

/// Hop distances from `source` to every node; `None` for unreachable nodes.
pub fn bfs_distances(graph: &Graph, source: NodeId) -> Vec<Option<u32>> {
    let mut dist = vec![None; graph.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap_or(0);
        for &u in graph.neighbors(v) {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Generates a Watts-Strogatz small-world graph.
///
/// Starts from the ring lattice where each node links to its `k / 2` nearest
/// neighbors on each side, then walks the lattice edges `(i, i + d mod n)` for
/// ascending `i` and `d` and, with probability `p`, moves the far endpoint to a
/// node chosen uniformly among those not already adjacent to `i`. Edge count is
/// preserved. If the result is disconnected the generator retries with
/// `seed + 1`, `seed + 2`, ... up to [`WS_CONNECTIVITY_RETRIES`] times.
pub fn generate_ws(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph, TopologyError> {
    if n < 3 {
        return Err(TopologyError::InvalidParameter(format!(
            "n must be at least 3, got {n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(TopologyError::InvalidParameter(format!(
            "k must satisfy 1 <= k < n, got k={k}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(TopologyError::InvalidParameter(format!(
            "p must be in [0, 1], got {p}"
        )));
    }

    for attempt in 0..=WS_CONNECTIVITY_RETRIES {
        let graph = rewire_lattice(n, k, p, seed.wrapping_add(attempt));
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(TopologyError::GenerationFailure {
        attempts: WS_CONNECTIVITY_RETRIES + 1,
        first_seed: seed,
    })
}

fn rewire_lattice(n: usize, k: usize, p: f64, seed: u64) -> Graph {
    let half = k / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for d in 1..=half {
            let j = (i + d) % n;
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }

    let mut candidates = Vec::with_capacity(n);
    for i in 0..n {
        for d in 1..=half {
            let j = (i + d) % n;
            if !rng.random_bool(p) {
                continue;
            }
            candidates.clear();
            candidates.extend((0..n).filter(|&m| m != i && !adj[i].contains(&m)));
            if let Some(&m) = candidates.choose(&mut rng) {
                adj[i].remove(&j);
                adj[j].remove(&i);
                adj[i].insert(m);
                adj[m].insert(i);
            }
        }
    }

    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
        .collect();
    Graph::from_edge_set(n, edges)
}

/// Parses the line-oriented topology format.
///
/// ```text
/// # comment
/// nodes 3
/// link 0 1
/// link 1 2
/// ```
pub fn load_topology(text: &str) -> Result<Graph, TopologyError> {
    let mut node_count: Option<usize> = None;
    let mut edges = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match (node_count, fields.as_slice()) {
            (None, ["nodes", count]) => {
                let count = parse_index(count, line)?;
                if count == 0 {
                    return Err(TopologyError::Parse {
                        line,
                        msg: "node count must be positive".into(),
                    });
                }
                node_count = Some(count);
            }
            (None, _) => {
                return Err(TopologyError::Parse {
                    line,
                    msg: format!("expected `nodes <N>`, found `{trimmed}`"),
                })
            }
            (Some(_), ["nodes", ..]) => {
                return Err(TopologyError::Parse {
                    line,
                    msg: "repeated `nodes` declaration".into(),
                })
            }
            (Some(n), ["link", a, b]) => {
                let a = parse_index(a, line)?;
                let b = parse_index(b, line)?;
                for node in [a, b] {
                    if node >= n {
                        return Err(TopologyError::Parse {
                            line,
                            msg: format!("node {node} out of range 0..{n}"),
                        });
                    }
                }
                if a == b {
                    return Err(TopologyError::SelfLoop { line, node: a });
                }
                if !edges.insert((a.min(b), a.max(b))) {
                    return Err(TopologyError::DuplicateEdge { line, a, b });
                }
            }
            (Some(_), _) => {
                return Err(TopologyError::Parse {
                    line,
                    msg: format!("expected `link <a> <b>`, found `{trimmed}`"),
                })
            }
        }
    }

    let n = node_count.ok_or(TopologyError::Parse {
        line: text.lines().count().max(1),
        msg: "missing `nodes <N>` declaration".into(),
    })?;
    let graph = Graph::from_edge_set(n, edges);
    if !graph.is_connected() {
        return Err(TopologyError::Disconnected);
    }
    Ok(graph)
}

fn parse_index(field: &str, line: usize) -> Result<usize, TopologyError> {
    field.parse().map_err(|_| TopologyError::Parse {
        line,
        msg: format!("`{field}` is not a non-negative integer"),
    })
}

/// Per-producer shortest-path next hops and distances, plus the graph diameter.
#[derive(Debug, Clone)]
pub struct RoutingTables {
    producers: Vec<NodeId>,
    producer_slot: Vec<Option<usize>>,
    // Indexed [producer slot][node].
    distance: Vec<Vec<u32>>,
    next_hop: Vec<Vec<Option<NodeId>>>,
    diameter: u32,
}

impl RoutingTables {
    pub fn producers(&self) -> &[NodeId] {
        &self.producers
    }

    /// Hop distance from `node` to `producer`, if `producer` is a routed producer.
    pub fn distance(&self, node: NodeId, producer: NodeId) -> Option<u32> {
        let slot = (*self.producer_slot.get(producer)?)?;
        self.distance[slot].get(node).copied()
    }

    /// The neighbor of `node` on the chosen shortest path toward `producer`.
    /// `None` when `node == producer` or `producer` has no routes.
    pub fn next_hop(&self, node: NodeId, producer: NodeId) -> Option<NodeId> {
        let slot = (*self.producer_slot.get(producer)?)?;
        self.next_hop[slot].get(node).copied().flatten()
    }

    pub fn diameter(&self) -> u32 {
        self.diameter
    }
}

/// Builds FIB data toward every producer with BFS. Among equal-cost
/// neighbors the smallest node id is chosen.
pub fn compute_routing(
    graph: &Graph,
    producers: &BTreeSet<NodeId>,
) -> Result<RoutingTables, TopologyError> {
    if producers.is_empty() {
        return Err(TopologyError::EmptyProducerSet);
    }
    if let Some(&bad) = producers.iter().find(|&&p| p >= graph.node_count()) {
        return Err(TopologyError::UnknownNode(bad));
    }

    let n = graph.node_count();
    let mut all_pairs: Vec<Vec<u32>> = Vec::with_capacity(n);
    for source in 0..n {
        let dist = bfs_distances(graph, source);
        let dist: Option<Vec<u32>> = dist.into_iter().collect();
        all_pairs.push(dist.ok_or(TopologyError::Disconnected)?);
    }
    let diameter = all_pairs
        .iter()
        .flat_map(|row| row.iter().copied())
        .max()
        .unwrap_or(0);

    let producers: Vec<NodeId> = producers.iter().copied().collect();
    let mut producer_slot = vec![None; n];
    let mut distance = Vec::with_capacity(producers.len());
    let mut next_hop = Vec::with_capacity(producers.len());
    for (slot, &target) in producers.iter().enumerate() {
        producer_slot[target] = Some(slot);
        // Undirected graph: distance(v, t) == distance(t, v).
        let dist = all_pairs[target].clone();
        let hops = (0..n)
            .map(|v| {
                if v == target {
                    None
                } else {
                    graph
                        .neighbors(v)
                        .iter()
                        .copied()
                        .find(|&u| dist[u] + 1 == dist[v])
                }
            })
            .collect();
        distance.push(dist);
        next_hop.push(hops);
    }

    Ok(RoutingTables {
        producers,
        producer_slot,
        distance,
        next_hop,
        diameter,
    })
}

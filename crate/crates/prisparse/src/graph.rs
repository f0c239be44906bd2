//! Core graph types: weighted undirected graphs with vertex priorities,
//! edge-subset subgraphs, shortest paths, metric closures, and spanning trees.
//!
//! Everything here is deterministic. Vertices are addressed by dense indices
//! assigned in sorted label order, so "smallest identifier" and "smallest
//! index" coincide, and every tie-break below is stated in those terms.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use num_traits::Zero;
use thiserror::Error;

use crate::weight::{format_weight, Weight};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("vertex {vertex} has priority {priority}, above the instance maximum k={k}")]
    PriorityOutOfRange { vertex: String, priority: u32, k: u32 },
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("edge endpoint {0} is not a declared vertex")]
    UnknownVertex(String),
    #[error("self-loop on vertex {0}")]
    SelfLoop(String),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(String, String),
    #[error("edge {u}-{v} has non-positive weight {weight}")]
    NonPositiveWeight { u: String, v: String, weight: String },
    #[error("no path between {from} and {to}")]
    Unreachable { from: String, to: String },
    #[error("terminals {a} and {b} are in different components")]
    Disconnected { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: Weight,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// An immutable undirected graph with positive rational edge weights and a
/// priority in `0..=k` on every vertex. Priority-0 vertices are free to use
/// as intermediate (Steiner) vertices but carry no connectivity or distance
/// requirements of their own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityGraph {
    labels: Vec<String>,
    priorities: Vec<u32>,
    k: u32,
    edges: Vec<Edge>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
}

impl PriorityGraph {
    /// Builds a graph from labelled vertices and edges. Rejects self-loops,
    /// parallel edges, unknown endpoints, non-positive weights, and
    /// priorities above `k`.
    pub fn new(
        vertices: Vec<(String, u32)>,
        edge_list: Vec<(String, String, Weight)>,
        k: u32,
    ) -> Result<Self, GraphError> {
        if k < 1 {
            return Err(GraphError::InvalidK);
        }
        let mut sorted: Vec<(String, u32)> = vertices;
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(GraphError::DuplicateVertex(pair[0].0.clone()));
            }
        }
        for (label, priority) in &sorted {
            if *priority > k {
                return Err(GraphError::PriorityOutOfRange {
                    vertex: label.clone(),
                    priority: *priority,
                    k,
                });
            }
        }
        let labels: Vec<String> = sorted.iter().map(|(l, _)| l.clone()).collect();
        let priorities: Vec<u32> = sorted.iter().map(|(_, p)| *p).collect();
        let index = |label: &str| -> Result<VertexId, GraphError> {
            labels
                .binary_search_by(|probe| probe.as_str().cmp(label))
                .map_err(|_| GraphError::UnknownVertex(label.to_string()))
        };

        let mut edges = Vec::with_capacity(edge_list.len());
        for (a, b, weight) in edge_list {
            let ia = index(&a)?;
            let ib = index(&b)?;
            if ia == ib {
                return Err(GraphError::SelfLoop(a));
            }
            if !(weight > Weight::zero()) {
                return Err(GraphError::NonPositiveWeight {
                    u: a,
                    v: b,
                    weight: format_weight(&weight),
                });
            }
            let (u, v) = if ia < ib { (ia, ib) } else { (ib, ia) };
            edges.push(Edge { u, v, weight });
        }
        edges.sort_by(|x, y| (x.u, x.v).cmp(&(y.u, y.v)));
        for pair in edges.windows(2) {
            if (pair[0].u, pair[0].v) == (pair[1].u, pair[1].v) {
                return Err(GraphError::DuplicateEdge(
                    labels[pair[0].u].clone(),
                    labels[pair[0].v].clone(),
                ));
            }
        }

        let mut adj = vec![Vec::new(); labels.len()];
        for (id, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, id));
            adj[e.v].push((e.u, id));
        }
        for list in &mut adj {
            list.sort();
        }

        Ok(PriorityGraph { labels, priorities, k, edges, adj })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v]
    }

    pub fn priority(&self, v: VertexId) -> u32 {
        self.priorities[v]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_id(&self, label: &str) -> Option<VertexId> {
        self.labels.binary_search_by(|probe| probe.as_str().cmp(label)).ok()
    }

    /// Looks up an edge by endpoint indices, either order.
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&(u, v)))
            .ok()
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }

    /// Vertices with priority at least `level`, in index order.
    pub fn terminals(&self, level: u32) -> BTreeSet<VertexId> {
        (0..self.labels.len())
            .filter(|&v| self.priorities[v] >= level)
            .collect()
    }

    pub fn max_priority(&self) -> u32 {
        self.priorities.iter().copied().max().unwrap_or(0)
    }

    /// Returns a copy with the given per-vertex priorities and maximum `k`.
    pub fn with_priorities(&self, priorities: Vec<u32>, k: u32) -> Result<Self, GraphError> {
        if k < 1 {
            return Err(GraphError::InvalidK);
        }
        assert_eq!(priorities.len(), self.labels.len());
        for (v, p) in priorities.iter().enumerate() {
            if *p > k {
                return Err(GraphError::PriorityOutOfRange {
                    vertex: self.labels[v].clone(),
                    priority: *p,
                    k,
                });
            }
        }
        Ok(PriorityGraph {
            labels: self.labels.clone(),
            priorities,
            k,
            edges: self.edges.clone(),
            adj: self.adj.clone(),
        })
    }

    /// Single-source shortest-path distances, optionally restricted to an
    /// edge subset. `None` marks unreachable vertices.
    pub fn distances_from(
        &self,
        source: VertexId,
        allowed: Option<&BTreeSet<EdgeId>>,
    ) -> Vec<Option<Weight>> {
        let mut dist: Vec<Option<Weight>> = vec![None; self.labels.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = Some(Weight::zero());
        heap.push(Reverse((Weight::zero(), source)));
        while let Some(Reverse((d, x))) = heap.pop() {
            if dist[x].as_ref() != Some(&d) {
                continue;
            }
            for &(y, eid) in &self.adj[x] {
                if let Some(filter) = allowed {
                    if !filter.contains(&eid) {
                        continue;
                    }
                }
                let nd = d.clone() + self.edges[eid].weight.clone();
                if dist[y].as_ref().map_or(true, |old| nd < *old) {
                    dist[y] = Some(nd.clone());
                    heap.push(Reverse((nd, y)));
                }
            }
        }
        dist
    }

    /// Minimum-weight path from `from` to `to`. Among equal-weight paths the
    /// lexicographically smallest vertex sequence wins. Returns the distance
    /// and the path as an edge-id sequence (empty when `from == to`).
    pub fn shortest_path(
        &self,
        from: VertexId,
        to: VertexId,
    ) -> Result<(Weight, Vec<EdgeId>), GraphError> {
        let dist_to_target = self.distances_from(to, None);
        match dist_to_target[from].clone() {
            None => Err(GraphError::Unreachable {
                from: self.labels[from].clone(),
                to: self.labels[to].clone(),
            }),
            Some(total) => {
                let path = self.lex_walk(from, to, &dist_to_target);
                Ok((total, path))
            }
        }
    }

    /// Greedy construction of the lexicographically smallest shortest path:
    /// from each vertex, step to the smallest neighbor that still lies on a
    /// minimum-weight path to the target.
    fn lex_walk(
        &self,
        from: VertexId,
        to: VertexId,
        dist_to_target: &[Option<Weight>],
    ) -> Vec<EdgeId> {
        let mut path = Vec::new();
        let mut x = from;
        while x != to {
            let remaining = dist_to_target[x].clone().expect("walk started reachable");
            let mut step: Option<(VertexId, EdgeId)> = None;
            for &(y, eid) in &self.adj[x] {
                if let Some(dy) = &dist_to_target[y] {
                    if dy.clone() + self.edges[eid].weight.clone() == remaining {
                        step = Some((y, eid));
                        break; // adjacency is sorted, first hit is smallest
                    }
                }
            }
            let (y, eid) = step.expect("positive weights guarantee progress");
            path.push(eid);
            x = y;
        }
        path
    }

    /// Complete graph over `terminals` whose edge weights are shortest-path
    /// distances in `self`, with one memoized witness path per pair.
    pub fn metric_closure(
        &self,
        terminals: &BTreeSet<VertexId>,
    ) -> Result<MetricClosure, GraphError> {
        let terms: Vec<VertexId> = terminals.iter().copied().collect();
        let dist_maps: BTreeMap<VertexId, Vec<Option<Weight>>> = terms
            .iter()
            .map(|&t| (t, self.distances_from(t, None)))
            .collect();

        let mut closure_edges = Vec::new();
        let mut witnesses = Vec::new();
        for (i, &u) in terms.iter().enumerate() {
            for &v in &terms[i + 1..] {
                let to_v = &dist_maps[&v];
                match to_v[u].clone() {
                    None => {
                        return Err(GraphError::Disconnected {
                            a: self.labels[u].clone(),
                            b: self.labels[v].clone(),
                        })
                    }
                    Some(d) => {
                        closure_edges.push((
                            self.labels[u].clone(),
                            self.labels[v].clone(),
                            d,
                        ));
                        witnesses.push(self.lex_walk(u, v, to_v));
                    }
                }
            }
        }

        let vertices: Vec<(String, u32)> =
            terms.iter().map(|&t| (self.labels[t].clone(), 1)).collect();
        let graph = PriorityGraph::new(vertices, closure_edges, 1)
            .expect("closure construction is well-formed");

        // The closure graph re-sorts edges by endpoint index; realign the
        // witness list with the closure's own edge order.
        let mut aligned = vec![Vec::new(); witnesses.len()];
        let mut cursor = 0;
        for (i, &u) in terms.iter().enumerate() {
            for &v in &terms[i + 1..] {
                let cu = graph.vertex_id(self.label(u)).expect("closure vertex");
                let cv = graph.vertex_id(self.label(v)).expect("closure vertex");
                let id = graph.edge_between(cu, cv).expect("closure edge");
                aligned[id] = witnesses[cursor].clone();
                cursor += 1;
            }
        }
        let to_parent = graph
            .labels
            .iter()
            .map(|l| self.vertex_id(l).expect("closure label"))
            .collect();

        Ok(MetricClosure { graph, to_parent, witnesses: aligned })
    }

    /// Minimum spanning tree over the whole vertex set, Kruskal order
    /// `(weight, endpoint indices)`. Errors if the graph is disconnected.
    pub fn minimum_spanning_tree(&self) -> Result<Subgraph, GraphError> {
        let mut order: Vec<EdgeId> = (0..self.edges.len()).collect();
        order.sort_by(|&a, &b| {
            (self.edges[a].weight.clone(), a).cmp(&(self.edges[b].weight.clone(), b))
        });
        let mut dsu = Dsu::new(self.labels.len());
        let mut chosen = BTreeSet::new();
        for eid in order {
            let e = &self.edges[eid];
            if dsu.union(e.u, e.v) {
                chosen.insert(eid);
            }
        }
        if self.labels.len() > 1 {
            let root = dsu.find(0);
            for v in 1..self.labels.len() {
                if dsu.find(v) != root {
                    return Err(GraphError::Disconnected {
                        a: self.labels[0].clone(),
                        b: self.labels[v].clone(),
                    });
                }
            }
        }
        Ok(Subgraph::from_edges(chosen))
    }
}

/// Metric closure of a graph over a terminal set: the complete closure graph
/// plus, for every closure edge, the memoized witness path (edge ids in the
/// parent graph) realizing its weight.
#[derive(Debug, Clone)]
pub struct MetricClosure {
    pub graph: PriorityGraph,
    /// Closure vertex index -> parent vertex index.
    pub to_parent: Vec<VertexId>,
    /// Closure edge id -> witness path in the parent graph.
    pub witnesses: Vec<Vec<EdgeId>>,
}

/// A subgraph of some parent graph: a set of edge ids plus any terminals
/// retained without incident edges (a one-terminal solution is an empty
/// edge set that still "contains" its terminal).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Subgraph {
    pub edges: BTreeSet<EdgeId>,
    pub isolated: BTreeSet<VertexId>,
}

impl Subgraph {
    pub fn from_edges(edges: BTreeSet<EdgeId>) -> Self {
        Subgraph { edges, isolated: BTreeSet::new() }
    }

    pub fn single_vertex(v: VertexId) -> Self {
        Subgraph { edges: BTreeSet::new(), isolated: [v].into() }
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.isolated.is_empty()
    }

    pub fn vertices(&self, g: &PriorityGraph) -> BTreeSet<VertexId> {
        let mut vs = self.isolated.clone();
        for &eid in &self.edges {
            vs.insert(g.edge(eid).u);
            vs.insert(g.edge(eid).v);
        }
        vs
    }

    pub fn weight(&self, g: &PriorityGraph) -> Weight {
        self.edges
            .iter()
            .map(|&eid| g.edge(eid).weight.clone())
            .fold(Weight::zero(), |acc, w| acc + w)
    }

    pub fn union(&self, other: &Subgraph) -> Subgraph {
        Subgraph {
            edges: self.edges.union(&other.edges).copied().collect(),
            isolated: self.isolated.union(&other.isolated).copied().collect(),
        }
    }
}

/// Union-find over dense vertex indices.
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    /// Returns false if `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// True when every vertex of `among` lies in one connected component of the
/// given edge set.
pub(crate) fn all_connected(
    g: &PriorityGraph,
    edges: &BTreeSet<EdgeId>,
    among: &BTreeSet<VertexId>,
) -> bool {
    let mut dsu = Dsu::new(g.vertex_count());
    for &eid in edges {
        let e = g.edge(eid);
        dsu.union(e.u, e.v);
    }
    let mut it = among.iter();
    if let Some(&first) = it.next() {
        let root = dsu.find(first);
        for &v in it {
            if dsu.find(v) != root {
                return false;
            }
        }
    }
    true
}

/// Extends an acyclic base edge set by the candidate edges that do not close
/// a cycle, considered in ascending `(weight, id)` order. With an empty base
/// this is Kruskal restricted to the candidate set: a minimum spanning
/// forest of the subgraph the candidates induce.
pub(crate) fn forest_extend(
    g: &PriorityGraph,
    base: &BTreeSet<EdgeId>,
    candidates: &BTreeSet<EdgeId>,
) -> BTreeSet<EdgeId> {
    let mut dsu = Dsu::new(g.vertex_count());
    let mut kept = base.clone();
    for &eid in base {
        let e = g.edge(eid);
        dsu.union(e.u, e.v);
    }
    let mut order: Vec<EdgeId> = candidates.iter().copied().filter(|e| !base.contains(e)).collect();
    order.sort_by(|&a, &b| {
        (&g.edge(a).weight, a).cmp(&(&g.edge(b).weight, b))
    });
    for eid in order {
        let e = g.edge(eid);
        if dsu.union(e.u, e.v) {
            kept.insert(eid);
        }
    }
    kept
}

/// Within a forest, the unique minimal subtree spanning `terminals`: the
/// terminal component with every branch not leading to a terminal stripped.
/// `None` when the terminals do not share one component of the forest.
pub(crate) fn minimal_terminal_subtree(
    g: &PriorityGraph,
    forest: &BTreeSet<EdgeId>,
    terminals: &BTreeSet<VertexId>,
) -> Option<BTreeSet<EdgeId>> {
    if terminals.len() <= 1 {
        return Some(BTreeSet::new());
    }
    if !all_connected(g, forest, terminals) {
        return None;
    }
    let mut dsu = Dsu::new(g.vertex_count());
    for &eid in forest {
        let e = g.edge(eid);
        dsu.union(e.u, e.v);
    }
    let root = dsu.find(*terminals.iter().next().expect("nonempty"));
    let mut degree = vec![0usize; g.vertex_count()];
    let mut live: BTreeSet<EdgeId> = BTreeSet::new();
    for &eid in forest {
        let e = g.edge(eid);
        if dsu.find(e.u) == root {
            degree[e.u] += 1;
            degree[e.v] += 1;
            live.insert(eid);
        }
    }
    loop {
        let strip: Vec<EdgeId> = live
            .iter()
            .copied()
            .filter(|&eid| {
                let e = g.edge(eid);
                (degree[e.u] == 1 && !terminals.contains(&e.u))
                    || (degree[e.v] == 1 && !terminals.contains(&e.v))
            })
            .collect();
        if strip.is_empty() {
            return Some(live);
        }
        for eid in strip {
            let e = g.edge(eid);
            degree[e.u] -= 1;
            degree[e.v] -= 1;
            live.remove(&eid);
        }
    }
}

//! Weighted similarity graphs and the deterministic algorithms the scorers
//! share: threshold filtering, connected components, the maximum spanning
//! tree bottleneck and k-core pruning.
//!
//! Throughout the crate an edge survives a threshold `t` when `w >= t`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// One undirected edge, stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected simple graph whose edge weights are pairwise similarity
/// probabilities in `[0, 1]`.
///
/// Edges are kept sorted by `(u, v)` so that every traversal of a graph
/// visits them in the same order.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<Edge>,
}

/// Marks an absent edge in [`WeightedGraph::weight_matrix`].
pub const NO_EDGE: f64 = -1.0;

impl WeightedGraph {
    /// Builds a graph, canonicalizing each edge to `u < v`.
    ///
    /// Rejects an empty node set, self-loops, out-of-range endpoints,
    /// duplicate pairs and weights outside `[0, 1]` (including NaN).
    pub fn new<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if node_count == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on node {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if v >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has weight {w} outside [0, 1]"
                )));
            }
            out.push(Edge { u, v, w });
        }
        out.sort_by_key(|e| (e.u, e.v));
        if let Some(pair) = out.windows(2).find(|p| (p[0].u, p[0].v) == (p[1].u, p[1].v)) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                pair[0].u, pair[0].v
            )));
        }
        Ok(Self { node_count, edges: out })
    }

    /// Complete graph with every pair weighted by `weight(u, v)`.
    pub fn complete(node_count: usize, mut weight: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut edges = Vec::with_capacity(node_count * node_count.saturating_sub(1) / 2);
        for u in 0..node_count {
            for v in u + 1..node_count {
                edges.push((u, v, weight(u, v)));
            }
        }
        Self::new(node_count, edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Per-node neighbor lists, each sorted by neighbor index. Entries are
    /// `(neighbor, weight, edge index)`.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64, usize)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.u].push((e.v, e.w, i));
            adj[e.v].push((e.u, e.w, i));
        }
        for list in &mut adj {
            list.sort_by_key(|&(n, _, _)| n);
        }
        adj
    }

    /// Dense row-major weight matrix with [`NO_EDGE`] for absent pairs and
    /// on the diagonal.
    pub fn weight_matrix(&self) -> Vec<f64> {
        let n = self.node_count;
        let mut m = vec![NO_EDGE; n * n];
        for e in &self.edges {
            m[e.u * n + e.v] = e.w;
            m[e.v * n + e.u] = e.w;
        }
        m
    }

    /// Same graph with node `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.node_count {
            return Err(Error::LengthMismatch {
                expected: self.node_count,
                found: perm.len(),
            });
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("relabeling is not a permutation".into()));
            }
        }
        Self::new(self.node_count, self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.w)))
    }

    /// Copy with one edge reweighted. Used by gradient checks and tests.
    pub fn with_weight(&self, edge_index: usize, w: f64) -> Result<Self> {
        let mut edges: Vec<_> = self.edges.iter().map(|e| (e.u, e.v, e.w)).collect();
        let slot = edges
            .get_mut(edge_index)
            .ok_or_else(|| Error::InvalidParameter(format!("no edge with index {edge_index}")))?;
        slot.2 = w;
        Self::new(self.node_count, edges)
    }
}

/// Assignment of nodes to clusters `0..cluster_count`, every id used.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    cluster_count: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering clusters in
    /// order of their smallest member.
    pub fn from_labels<T: Eq + std::hash::Hash + Clone>(labels: &[T]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParameter("partition of zero nodes".into()));
        }
        let mut ids = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Ok(Self {
            assignment,
            cluster_count: ids.len(),
        })
    }

    /// Accepts an assignment only if its ids are exactly `0..k` and appear
    /// in order of first use.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let canonical = Self::from_labels(&assignment)?;
        if canonical.assignment != assignment {
            return Err(Error::InvalidParameter(
                "cluster ids must be 0..k numbered by smallest member".into(),
            ));
        }
        Ok(canonical)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Members of each cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.sets -= 1;
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }
}

/// Connected components after dropping every edge with `w < t`.
///
/// `t` is clamped into `[0, 1]`. Cluster ids follow the smallest node index
/// each component contains.
pub fn components_at_threshold(g: &WeightedGraph, t: f64) -> Partition {
    let t = t.clamp(0.0, 1.0);
    let mut uf = UnionFind::new(g.node_count());
    for e in g.edges().iter().filter(|e| e.w >= t) {
        uf.union(e.u, e.v);
    }
    let roots: Vec<usize> = (0..g.node_count()).map(|v| uf.find(v)).collect();
    Partition::from_labels(&roots).expect("graph has at least one node")
}

/// Largest threshold at which `g` is still a single component.
///
/// This is the smallest edge of a maximum spanning tree: the graph stays
/// connected for every `t <= b` and splits for any `t > b`. A graph that is
/// already disconnected with all edges kept yields `0.0`; a single node can
/// never split and yields `1.0`.
pub fn tc_min_split_threshold(g: &WeightedGraph) -> f64 {
    let n = g.node_count();
    if n == 1 {
        return 1.0;
    }
    let mut order: Vec<&Edge> = g.edges().iter().collect();
    order.sort_by(|a, b| b.w.total_cmp(&a.w));
    let mut uf = UnionFind::new(n);
    for e in order {
        if uf.union(e.u, e.v) && uf.set_count() == 1 {
            return e.w;
        }
    }
    0.0
}

/// Nodes surviving recursive removal of every node with fewer than `k`
/// neighbors in the subgraph of edges with `w >= t`. Sorted ascending;
/// possibly empty.
pub fn k_core(g: &WeightedGraph, k: usize, t: f64) -> Vec<usize> {
    let n = g.node_count();
    let mut adj = vec![Vec::new(); n];
    for e in g.edges().iter().filter(|e| e.w >= t) {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| degree[v] < k).collect();
    for &v in &queue {
        removed[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if removed[w] {
                continue;
            }
            degree[w] -= 1;
            if degree[w] < k {
                removed[w] = true;
                queue.push_back(w);
            }
        }
    }
    (0..n).filter(|&v| !removed[v]).collect()
}

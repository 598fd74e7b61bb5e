#![allow(dead_code)]

use std::collections::VecDeque;

use icdetect_core::graph::WeightedGraph;
use proptest::prelude::*;

/// Random simple graph: each pair present with probability `density`,
/// weights either continuous or on a coarse grid (to force ties).
pub fn random_graph(rng: &mut impl rand::Rng, n: usize, density: f64, coarse: bool) -> WeightedGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(density) {
                let w = if coarse {
                    rng.random_range(0..=10) as f64 / 10.0
                } else {
                    rng.random_range(0.0..=1.0)
                };
                edges.push((u, v, w));
            }
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

/// Proptest strategy over graphs with up to `max_n` nodes.
pub fn arb_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (1..=max_n, 0.0f64..=1.0, any::<bool>(), any::<u64>()).prop_map(|(n, density, coarse, seed)| {
        let mut rng = icdetect_core::rng::seeded(seed);
        random_graph(&mut rng, n, density, coarse)
    })
}

/// Adjacency lists of the edges with `w >= t`.
pub fn adjacency(g: &WeightedGraph, t: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.node_count()];
    for e in g.edges() {
        if e.w >= t {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
    }
    adj
}

/// Number of connected components among `alive` nodes, by BFS.
pub fn bfs_components(adj: &[Vec<usize>], alive: &[bool]) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut count = 0;
    for s in 0..adj.len() {
        if !alive[s] || seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if alive[y] && !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    count
}

pub fn connected_at(g: &WeightedGraph, t: f64) -> bool {
    bfs_components(&adjacency(g, t), &vec![true; g.node_count()]) == 1
}

/// Largest distinct edge weight at which the graph stays connected, by
/// trying every one.
pub fn brute_t_min(g: &WeightedGraph) -> f64 {
    if g.node_count() == 1 {
        return 1.0;
    }
    g.edges()
        .iter()
        .map(|e| e.w)
        .filter(|&w| connected_at(g, w))
        .fold(0.0, f64::max)
}

/// k-core by synchronous rounds: every node below degree `k` in the current
/// subgraph is dropped at once, until nothing changes.
pub fn k_core_rounds(g: &WeightedGraph, k: usize, t: f64) -> Vec<usize> {
    let adj = adjacency(g, t);
    let mut alive = vec![true; g.node_count()];
    loop {
        let doomed: Vec<usize> = (0..adj.len())
            .filter(|&v| alive[v] && adj[v].iter().filter(|&&u| alive[u]).count() < k)
            .collect();
        if doomed.is_empty() {
            break;
        }
        for v in doomed {
            alive[v] = false;
        }
    }
    (0..adj.len()).filter(|&v| alive[v]).collect()
}

/// k-core removing one node at a time, highest index first.
pub fn k_core_reverse(g: &WeightedGraph, k: usize, t: f64) -> Vec<usize> {
    let adj = adjacency(g, t);
    let mut alive = vec![true; g.node_count()];
    'outer: loop {
        for v in (0..adj.len()).rev() {
            if alive[v] && adj[v].iter().filter(|&&u| alive[u]).count() < k {
                alive[v] = false;
                continue 'outer;
            }
        }
        break;
    }
    (0..adj.len()).filter(|&v| alive[v]).collect()
}

/// `1 - t*` with `t*` the largest of `{0} ∪ weights` where the k-core keeps
/// every node and is connected.
pub fn brute_kcore_score(g: &WeightedGraph, k: usize) -> f64 {
    let whole = |t: f64| k_core_rounds(g, k, t).len() == g.node_count() && connected_at(g, t);
    let mut grid: Vec<f64> = g.edges().iter().map(|e| e.w).collect();
    grid.push(0.0);
    match grid.into_iter().filter(|&t| whole(t)).reduce(f64::max) {
        Some(t) => 1.0 - t,
        None => 1.0,
    }
}

/// Two dense cliques of `size` nodes with internal weight `inside`, joined
/// by a single edge of weight `bridge`.
pub fn bridged_cliques(size: usize, inside: f64, bridge: f64) -> WeightedGraph {
    let mut edges = Vec::new();
    for base in [0, size] {
        for u in 0..size {
            for v in u + 1..size {
                edges.push((base + u, base + v, inside));
            }
        }
    }
    edges.push((size - 1, size, bridge));
    WeightedGraph::new(2 * size, edges).unwrap()
}

pub fn random_permutation(rng: &mut impl rand::Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

mod common;

use common::*;
use icdetect_core::classical::{kcore_score, tc_score};
use icdetect_core::graph::{components_at_threshold, k_core, tc_min_split_threshold, Partition, UnionFind};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn bottleneck_matches_sweep(g in arb_graph(12)) {
        prop_assert_eq!(tc_min_split_threshold(&g), brute_t_min(&g));
    }

    #[test]
    fn components_match_bfs(g in arb_graph(12), t in 0.0f64..=1.0) {
        let p = components_at_threshold(&g, t);
        prop_assert_eq!(p.len(), g.node_count());
        prop_assert_eq!(p.cluster_count(), bfs_components(&adjacency(&g, t), &vec![true; g.node_count()]));
        // Nodes joined by a kept edge share a cluster.
        for e in g.edges().iter().filter(|e| e.w >= t) {
            prop_assert_eq!(p.assignment()[e.u], p.assignment()[e.v]);
        }
    }

    #[test]
    fn components_refine_as_threshold_rises(g in arb_graph(12), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let coarse = components_at_threshold(&g, lo);
        let fine = components_at_threshold(&g, hi);
        prop_assert!(fine.cluster_count() >= coarse.cluster_count());
        for u in 0..g.node_count() {
            for v in 0..g.node_count() {
                if fine.assignment()[u] == fine.assignment()[v] {
                    prop_assert_eq!(coarse.assignment()[u], coarse.assignment()[v]);
                }
            }
        }
    }

    #[test]
    fn k_core_is_order_independent(g in arb_graph(12), k in 1usize..6, t in 0.0f64..=1.0) {
        let queue = k_core(&g, k, t);
        prop_assert_eq!(&queue, &k_core_rounds(&g, k, t));
        prop_assert_eq!(&queue, &k_core_reverse(&g, k, t));
    }

    #[test]
    fn k_core_survivors_have_degree_k(g in arb_graph(12), k in 1usize..6, t in 0.0f64..=1.0) {
        let core = k_core(&g, k, t);
        let adj = adjacency(&g, t);
        for &v in &core {
            let deg = adj[v].iter().filter(|u| core.binary_search(u).is_ok()).count();
            prop_assert!(deg >= k);
        }
    }

    #[test]
    fn kcore_score_matches_sweep(g in arb_graph(10), k in 1usize..8) {
        prop_assert_eq!(kcore_score(&g, k).unwrap(), brute_kcore_score(&g, k));
    }

    #[test]
    fn scores_are_bounded_and_ordered(g in arb_graph(12), k in 1usize..8) {
        let tc = tc_score(&g);
        let kc = kcore_score(&g, k).unwrap();
        let kc_next = kcore_score(&g, k + 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&tc));
        prop_assert!((0.0..=1.0).contains(&kc));
        // A whole k-core needs connectivity, and a (k+1)-core is a k-core.
        prop_assert!(kc >= tc);
        prop_assert!(kc_next >= kc);
    }

    #[test]
    fn scores_ignore_node_names(g in arb_graph(12), seed in any::<u64>(), k in 1usize..6) {
        let mut rng = icdetect_core::rng::seeded(seed);
        let perm = random_permutation(&mut rng, g.node_count());
        let h = g.relabel(&perm).unwrap();
        prop_assert_eq!(tc_min_split_threshold(&g), tc_min_split_threshold(&h));
        prop_assert_eq!(kcore_score(&g, k).unwrap(), kcore_score(&h, k).unwrap());
        let mut core: Vec<usize> = k_core(&g, k, 0.5).into_iter().map(|v| perm[v]).collect();
        core.sort_unstable();
        prop_assert_eq!(core, k_core(&h, k, 0.5));
    }

    #[test]
    fn tc_score_falls_as_an_edge_strengthens(g in arb_graph(12), pick in any::<prop::sample::Index>(), bump in 0.0f64..=1.0) {
        prop_assume!(g.edge_count() > 0);
        let i = pick.index(g.edge_count());
        let w = g.edges()[i].w;
        let h = g.with_weight(i, w + (1.0 - w) * bump).unwrap();
        prop_assert!(tc_score(&h) <= tc_score(&g));
    }

    #[test]
    fn kcore_sweep_ignores_extra_grid_points(g in arb_graph(10), k in 1usize..6, extra in prop::collection::vec(0.0f64..=1.0, 0..8)) {
        let whole = |t: f64| k_core_rounds(&g, k, t).len() == g.node_count() && connected_at(&g, t);
        let mut grid: Vec<f64> = g.edges().iter().map(|e| e.w).collect();
        grid.push(0.0);
        grid.extend(extra);
        let refined = grid.into_iter().filter(|&t| whole(t)).reduce(f64::max).map_or(1.0, |t| 1.0 - t);
        prop_assert_eq!(refined, kcore_score(&g, k).unwrap());
    }

    #[test]
    fn partition_canonical_form(labels in prop::collection::vec(0u8..5, 1..30)) {
        let p = Partition::from_labels(&labels).unwrap();
        let mut next = 0;
        for &c in p.assignment() {
            prop_assert!(c <= next);
            if c == next {
                next += 1;
            }
        }
        prop_assert_eq!(next, p.cluster_count());
        prop_assert_eq!(Partition::from_assignment(p.assignment().to_vec()).unwrap(), p.clone());
        for (i, &a) in labels.iter().enumerate() {
            for (j, &b) in labels.iter().enumerate() {
                prop_assert_eq!(a == b, p.assignment()[i] == p.assignment()[j]);
            }
        }
    }

    #[test]
    fn union_find_counts_sets(n in 1usize..40, pairs in prop::collection::vec((0usize..40, 0usize..40), 0..60)) {
        let mut uf = UnionFind::new(n);
        let mut labels: Vec<usize> = (0..n).collect();
        for (a, b) in pairs.into_iter().filter(|&(a, b)| a < n && b < n) {
            let merged = uf.union(a, b);
            let (la, lb) = (labels[a], labels[b]);
            prop_assert_eq!(merged, la != lb);
            for l in &mut labels {
                if *l == lb {
                    *l = la;
                }
            }
        }
        let mut distinct = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(uf.set_count(), distinct.len());
    }
}

#[test]
fn thousand_graph_bottleneck_sweep() {
    let mut rng = icdetect_core::rng::seeded(11);
    for i in 0..1000 {
        let n = 1 + i % 12;
        let g = random_graph(&mut rng, n, 0.2 + 0.8 * ((i / 12) % 5) as f64 / 4.0, i % 2 == 0);
        assert_eq!(tc_min_split_threshold(&g), brute_t_min(&g), "graph {i}: {g:?}");
    }
}

#[test]
fn bridged_cliques_scores() {
    let g = bridged_cliques(3, 0.95, 0.2);
    assert_eq!(tc_min_split_threshold(&g), 0.2);
    assert!((tc_score(&g) - 0.8).abs() < 1e-15);
    // Each triangle is its own 2-core, so only connectivity limits the sweep.
    assert!((kcore_score(&g, 2).unwrap() - 0.8).abs() < 1e-15);
    assert_eq!(kcore_score(&g, 2).unwrap(), brute_kcore_score(&g, 2));
}

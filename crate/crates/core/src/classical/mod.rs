//! Non-neural cluster scorers: transitive closure, k-core and SuperPart.

pub mod forest;
pub mod superpart;

use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::eval::{best_threshold, GraphScorer};
use crate::graph::{components_at_threshold, k_core, tc_min_split_threshold, WeightedGraph};

pub use forest::{forest_fit, forest_score, DecisionTree, ForestConfig, RandomForestModel, TreeNode};
pub use superpart::{superpart_featurize, superpart_score, SuperPartFeatures, SuperPartModel, FEATURE_COUNT};

/// Range of `k` searched on the validation split.
pub const K_RANGE: std::ops::RangeInclusive<usize> = 3..=9;

/// `1 - t_min`: high when the graph falls apart at a low threshold.
pub fn tc_score(g: &WeightedGraph) -> f64 {
    1.0 - tc_min_split_threshold(g)
}

/// `1 - t*`, where `t*` is the largest threshold at which the k-core of the
/// filtered graph is still the whole node set and connected. Candidates are
/// `0` and the distinct edge weights; between two of them the filtered graph
/// does not change. Returns `1.0` when the k-core is already incomplete or
/// split with every edge kept.
pub fn kcore_score(g: &WeightedGraph, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let whole = |t: f64| k_core(g, k, t).len() == g.node_count() && components_at_threshold(g, t).cluster_count() == 1;
    let mut grid: Vec<f64> = g.edges().iter().map(|e| e.w).collect();
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    // Raising t only removes edges, so `whole` holds on a prefix of the grid.
    let whole_count = grid.partition_point(|&t| whole(t));
    let last_whole = whole_count.checked_sub(1).map(|i| grid[i]);
    Ok(last_whole.map_or(1.0, |t| 1.0 - t))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TcScorer;

impl GraphScorer for TcScorer {
    fn score(&self, g: &WeightedGraph) -> Result<f64> {
        Ok(tc_score(g))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KCoreScorer {
    pub k: usize,
}

impl GraphScorer for KCoreScorer {
    fn score(&self, g: &WeightedGraph) -> Result<f64> {
        kcore_score(g, self.k)
    }
}

/// Chooses `k` from [`K_RANGE`] by best validation F1; ties go to the
/// smaller `k`. Returns `(k, validation F1)`.
pub fn select_k(dataset: &Dataset) -> Result<(usize, f64)> {
    let val = dataset.labeled(Split::Val)?;
    if val.is_empty() {
        return Err(Error::InvalidParameter("k selection needs a validation split".into()));
    }
    let labels: Vec<bool> = val.iter().map(|ex| ex.label).collect();
    let mut best: Option<(usize, f64)> = None;
    for k in K_RANGE {
        let scores = val
            .iter()
            .map(|ex| kcore_score(&ex.graph, k))
            .collect::<Result<Vec<_>>>()?;
        let (_, f1) = best_threshold(&scores, &labels)?;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((k, f1));
        }
    }
    Ok(best.expect("K_RANGE is non-empty"))
}

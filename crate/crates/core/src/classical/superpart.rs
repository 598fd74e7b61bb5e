//! Graph-level features for the SuperPart-style scorer and the
//! featurize-then-forest model built on them.

use serde::{Deserialize, Serialize};

use super::forest::{forest_fit, forest_score, ForestConfig, RandomForestModel};
use crate::dataset::LabeledExample;
use crate::error::{Error, Result};
use crate::eval::GraphScorer;
use crate::graph::{components_at_threshold, WeightedGraph};

/// Threshold at which the mean weight of filtered-out edges is measured.
pub const EXTERNAL_EDGE_THRESHOLD: f64 = 0.5;

/// Thresholds for the component-count and fraction-below slots.
pub const THRESHOLD_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

const SUMMARY_SLOTS: usize = 7;

/// Length of every feature vector.
pub const FEATURE_COUNT: usize = SUMMARY_SLOTS + 2 * THRESHOLD_GRID.len();

/// Fixed-length graph features. Slot order:
///
/// | slots  | content                                                   |
/// |--------|-----------------------------------------------------------|
/// | 0..6   | node count, edge count, mean, min, max, std of weights    |
/// | 6      | mean weight of edges below 0.5 (0 if none)                |
/// | 7..16  | components after dropping edges below each grid threshold |
/// | 16..25 | fraction of edges below each grid threshold               |
#[derive(Clone, Debug, PartialEq)]
pub struct SuperPartFeatures(pub Vec<f64>);

impl SuperPartFeatures {
    pub fn node_count(&self) -> f64 {
        self.0[0]
    }
    pub fn edge_count(&self) -> f64 {
        self.0[1]
    }
    pub fn mean_edge(&self) -> f64 {
        self.0[2]
    }
    pub fn min_edge(&self) -> f64 {
        self.0[3]
    }
    pub fn max_edge(&self) -> f64 {
        self.0[4]
    }
    pub fn std_edge(&self) -> f64 {
        self.0[5]
    }
    pub fn mean_external_edge(&self) -> f64 {
        self.0[6]
    }
    pub fn component_counts(&self) -> &[f64] {
        &self.0[SUMMARY_SLOTS..SUMMARY_SLOTS + THRESHOLD_GRID.len()]
    }
    pub fn fractions_below(&self) -> &[f64] {
        &self.0[SUMMARY_SLOTS + THRESHOLD_GRID.len()..]
    }

    /// Slot names, in order.
    pub fn names() -> Vec<String> {
        let mut names: Vec<String> = [
            "node_count",
            "edge_count",
            "mean_edge",
            "min_edge",
            "max_edge",
            "std_edge",
            "mean_external_edge_at_0.5",
        ]
        .map(String::from)
        .to_vec();
        names.extend(THRESHOLD_GRID.iter().map(|t| format!("component_count_at_{t}")));
        names.extend(THRESHOLD_GRID.iter().map(|t| format!("fraction_edges_below_{t}")));
        names
    }
}

pub fn superpart_featurize(g: &WeightedGraph) -> Result<SuperPartFeatures> {
    let weights: Vec<f64> = g.edges().iter().map(|e| e.w).collect();
    if weights.is_empty() {
        return Err(Error::InvalidGraph("edgeless graph has no edge statistics".into()));
    }
    let m = weights.len() as f64;
    let mean = weights.iter().sum::<f64>() / m;
    let var = weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / m;
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let removed: Vec<f64> = weights
        .iter()
        .copied()
        .filter(|&w| w < EXTERNAL_EDGE_THRESHOLD)
        .collect();
    let external = if removed.is_empty() {
        0.0
    } else {
        removed.iter().sum::<f64>() / removed.len() as f64
    };

    let mut v = Vec::with_capacity(FEATURE_COUNT);
    v.extend([g.node_count() as f64, m, mean, min, max, var.sqrt(), external]);
    v.extend(
        THRESHOLD_GRID
            .iter()
            .map(|&t| components_at_threshold(g, t).cluster_count() as f64),
    );
    v.extend(
        THRESHOLD_GRID
            .iter()
            .map(|&t| weights.iter().filter(|&&w| w < t).count() as f64 / m),
    );
    Ok(SuperPartFeatures(v))
}

/// Random forest over [`SuperPartFeatures`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperPartModel {
    pub feature_names: Vec<String>,
    pub external_edge_threshold: f64,
    pub forest: RandomForestModel,
}

impl SuperPartModel {
    pub fn fit(train: &[LabeledExample], config: &ForestConfig) -> Result<Self> {
        let x = train
            .iter()
            .map(|ex| superpart_featurize(&ex.graph).map(|f| f.0))
            .collect::<Result<Vec<_>>>()?;
        let y: Vec<bool> = train.iter().map(|ex| ex.label).collect();
        Ok(Self {
            feature_names: SuperPartFeatures::names(),
            external_edge_threshold: EXTERNAL_EDGE_THRESHOLD,
            forest: forest_fit(&x, &y, config)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.forest.feature_count != FEATURE_COUNT || self.feature_names != SuperPartFeatures::names() {
            return Err(Error::Schema(format!(
                "model expects {} features named differently from this build's {FEATURE_COUNT}",
                self.forest.feature_count
            )));
        }
        self.forest.validate()
    }
}

pub fn superpart_score(model: &SuperPartModel, g: &WeightedGraph) -> Result<f64> {
    forest_score(&model.forest, &superpart_featurize(g)?.0)
}

impl GraphScorer for SuperPartModel {
    fn score(&self, g: &WeightedGraph) -> Result<f64> {
        superpart_score(self, g)
    }
}

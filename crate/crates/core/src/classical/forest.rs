//! CART random forest: bootstrap resampling, Gini impurity, random feature
//! subsets per split. Each tree draws from its own RNG substream, so fitting
//! in parallel gives the same forest as fitting sequentially.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub tree_count: usize,
    /// `None` grows each tree until its leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// `None` means `ceil(sqrt(feature_count))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            tree_count: 200,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Fraction of (bootstrap-weighted) training samples of class 1.
    Leaf { fraction: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Root at index 0.
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                TreeNode::Leaf { fraction } => return fraction,
            }
        }
    }

    fn validate(&self, feature_count: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidParameter("empty decision tree".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    // Children always follow their parent, which also rules out cycles.
                    if feature >= feature_count
                        || !threshold.is_finite()
                        || left <= i
                        || right <= i
                        || left >= self.nodes.len()
                        || right >= self.nodes.len()
                    {
                        return Err(Error::InvalidParameter(format!("malformed split node {i}")));
                    }
                }
                TreeNode::Leaf { fraction } => {
                    if !(0.0..=1.0).contains(&fraction) {
                        return Err(Error::InvalidParameter(format!(
                            "leaf {i} fraction {fraction} outside [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub feature_count: usize,
    pub config: ForestConfig,
    pub trees: Vec<DecisionTree>,
}

impl RandomForestModel {
    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::InvalidParameter("forest has no trees".into()));
        }
        self.trees.iter().try_for_each(|t| t.validate(self.feature_count))
    }
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    mtry: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

impl TreeBuilder<'_> {
    fn leaf(&mut self, samples: &[usize]) -> usize {
        let pos = samples.iter().filter(|&&i| self.y[i]).count();
        self.nodes.push(TreeNode::Leaf {
            fraction: pos as f64 / samples.len() as f64,
        });
        self.nodes.len() - 1
    }

    /// Best `(feature, threshold, weighted child impurity)` among the first
    /// `mtry` features, in random order, that are not constant on `samples`.
    fn best_split(&self, samples: &mut [usize], rng: &mut Rng) -> Option<(usize, f64, f64)> {
        let mut features: Vec<usize> = (0..self.x[0].len()).collect();
        features.shuffle(rng);
        let total = samples.len();
        let total_pos = samples.iter().filter(|&&i| self.y[i]).count();
        let mut best: Option<(usize, f64, f64)> = None;
        let mut tried = 0;
        for f in features {
            if tried == self.mtry {
                break;
            }
            samples.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let first = self.x[samples[0]][f];
            let last = self.x[samples[total - 1]][f];
            if first == last {
                continue;
            }
            tried += 1;
            let mut left_pos = 0;
            for k in 1..total {
                if self.y[samples[k - 1]] {
                    left_pos += 1;
                }
                let (lo, hi) = (self.x[samples[k - 1]][f], self.x[samples[k]][f]);
                if lo == hi || k < self.min_leaf || total - k < self.min_leaf {
                    continue;
                }
                let impurity = (k as f64 * gini(left_pos, k)
                    + (total - k) as f64 * gini(total_pos - left_pos, total - k))
                    / total as f64;
                if best.is_none_or(|b| impurity < b.2) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((f, threshold, impurity));
                }
            }
        }
        best
    }

    fn grow(&mut self, samples: &mut [usize], depth: usize, rng: &mut Rng) -> usize {
        let pos = samples.iter().filter(|&&i| self.y[i]).count();
        let pure = pos == 0 || pos == samples.len();
        let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || samples.len() < 2 * self.min_leaf {
            return self.leaf(samples);
        }
        let Some((feature, threshold, _)) = self.best_split(samples, rng) else {
            return self.leaf(samples);
        };
        let slot = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { fraction: 0.0 });
        let x = self.x;
        let (mut left, mut right): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&i| x[i][feature] <= threshold);
        let left_id = self.grow(&mut left, depth + 1, rng);
        let right_id = self.grow(&mut right, depth + 1, rng);
        self.nodes[slot] = TreeNode::Split {
            feature,
            threshold,
            left: left_id,
            right: right_id,
        };
        slot
    }
}

pub fn forest_fit(features: &[Vec<f64>], labels: &[bool], config: &ForestConfig) -> Result<RandomForestModel> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: features.len(),
            found: labels.len(),
        });
    }
    if features.len() < 2 {
        return Err(Error::InvalidParameter("forest needs at least 2 training rows".into()));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let feature_count = features[0].len();
    if feature_count == 0 {
        return Err(Error::InvalidParameter("feature vectors are empty".into()));
    }
    if let Some(row) = features.iter().find(|r| r.len() != feature_count) {
        return Err(Error::LengthMismatch {
            expected: feature_count,
            found: row.len(),
        });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forest training features".into()));
    }
    if config.tree_count == 0 || config.min_samples_leaf == 0 {
        return Err(Error::InvalidParameter(
            "tree_count and min_samples_leaf must be positive".into(),
        ));
    }
    let mtry = config
        .features_per_split
        .unwrap_or_else(|| (feature_count as f64).sqrt().ceil() as usize)
        .clamp(1, feature_count);

    let n = features.len();
    let trees = rng::substreams(config.seed, config.tree_count)
        .into_par_iter()
        .map(|mut rng| {
            let mut bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x: features,
                y: labels,
                mtry,
                max_depth: config.max_depth,
                min_leaf: config.min_samples_leaf,
                nodes: Vec::new(),
            };
            builder.grow(&mut bootstrap, 0, &mut rng);
            DecisionTree { nodes: builder.nodes }
        })
        .collect();
    Ok(RandomForestModel {
        feature_count,
        config: config.clone(),
        trees,
    })
}

/// Mean class-1 leaf fraction across trees.
pub fn forest_score(model: &RandomForestModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.feature_count {
        return Err(Error::LengthMismatch {
            expected: model.feature_count,
            found: x.len(),
        });
    }
    let sum: f64 = model.trees.iter().map(|t| t.predict(x)).sum();
    Ok(sum / model.trees.len() as f64)
}

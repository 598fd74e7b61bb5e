//! Threshold selection, F1, precision-recall curves and the
//! validate-then-test protocol used to compare scorers.
//!
//! A graph is predicted inconsistent when its score is `>=` the threshold.
//! PR-AUC is the step-wise sum `sum (R_i - R_{i-1}) * P_i` over groups of
//! tied scores, taken in descending score order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Anything that maps a graph to an inconsistency score in `[0, 1]`.
pub trait GraphScorer: Send + Sync {
    fn score(&self, g: &WeightedGraph) -> Result<f64>;
}

impl<F> GraphScorer for F
where
    F: Fn(&WeightedGraph) -> Result<f64> + Send + Sync,
{
    fn score(&self, g: &WeightedGraph) -> Result<f64> {
        self(g)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Confusion {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Confusion {
    fn f1(&self) -> f64 {
        // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); zero when nothing is
        // predicted positive or nothing is positive.
        if self.tp == 0 {
            return 0.0;
        }
        2.0 * self.tp as f64 / (2 * self.tp + self.fp + self.fn_) as f64
    }
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    Ok(())
}

fn confusion(scores: &[f64], labels: &[bool], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    c
}

pub fn precision_recall_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<(f64, f64)> {
    check_lengths(scores, labels)?;
    let c = confusion(scores, labels, threshold);
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok((ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn_)))
}

pub fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::InvalidParameter("no scores".into()));
    }
    Ok(confusion(scores, labels, threshold).f1())
}

/// Candidate thresholds: the lowest and highest score plus every midpoint
/// between adjacent distinct scores.
pub fn threshold_grid(scores: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut grid = Vec::with_capacity(sorted.len() + 1);
    if let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) {
        grid.push(lo);
        grid.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
        if hi != lo {
            grid.push(hi);
        }
    }
    grid
}

/// Threshold maximizing F1 over [`threshold_grid`], ties going to the
/// higher threshold.
pub fn best_threshold(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let mut best = (f64::NEG_INFINITY, -1.0);
    for t in threshold_grid(scores) {
        let f1 = confusion(scores, labels, t).f1();
        if f1 > best.1 || (f1 == best.1 && t > best.0) {
            best = (t, f1);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// One point per distinct score, descending threshold.
    pub points: Vec<PrPoint>,
    pub auc: f64,
}

pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<PrCurve> {
    check_lengths(scores, labels)?;
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut auc, mut prev_recall) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / positives as f64;
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push(PrPoint {
            threshold,
            precision,
            recall,
        });
    }
    Ok(PrCurve { points, auc })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredGraph {
    pub id: String,
    pub split: Split,
    pub score: f64,
    pub label: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub seed: u64,
    pub chosen_threshold: f64,
    pub validation_f1: f64,
    pub test_f1: f64,
    pub test_pr_auc: f64,
    pub prediction_rule: String,
    pub pr_auc_rule: String,
    pub scores: Vec<ScoredGraph>,
}

/// Scores every graph of the dataset, in dataset order.
pub fn score_dataset(scorer: &dyn GraphScorer, dataset: &Dataset) -> Result<Vec<ScoredGraph>> {
    dataset
        .entries
        .par_iter()
        .map(|e| {
            let score = scorer.score(&e.graph)?;
            Ok(ScoredGraph {
                id: e.id.clone(),
                split: e.split,
                score,
                label: e.label,
            })
        })
        .collect()
}

fn split_scores(scores: &[ScoredGraph], split: Split) -> Result<(Vec<f64>, Vec<bool>)> {
    scores
        .iter()
        .filter(|s| s.split == split)
        .map(|s| {
            let y = s.label.ok_or_else(|| Error::InvalidRecord {
                id: s.id.clone(),
                message: format!("{} split requires labels", split.as_str()),
            })?;
            Ok((s.score, y))
        })
        .collect::<Result<Vec<_>>>()
        .map(|pairs| pairs.into_iter().unzip())
}

/// Picks the F1-optimal threshold on the validation split, then reports F1
/// at that threshold and PR-AUC on the test split.
pub fn evaluate_scores(name: &str, seed: u64, scores: Vec<ScoredGraph>) -> Result<EvalReport> {
    let (val_s, val_y) = split_scores(&scores, Split::Val)?;
    let (test_s, test_y) = split_scores(&scores, Split::Test)?;
    if val_s.is_empty() || test_s.is_empty() {
        return Err(Error::InvalidParameter(
            "evaluation needs non-empty validation and test splits".into(),
        ));
    }
    let (threshold, validation_f1) = best_threshold(&val_s, &val_y)?;
    let test_f1 = f1_at(&test_s, &test_y, threshold)?;
    let test_pr_auc = pr_curve(&test_s, &test_y)?.auc;
    Ok(EvalReport {
        scorer: name.to_owned(),
        seed,
        chosen_threshold: threshold,
        validation_f1,
        test_f1,
        test_pr_auc,
        prediction_rule: "score >= threshold".into(),
        pr_auc_rule: "step-wise, tied scores grouped".into(),
        scores,
    })
}

pub fn evaluate_scorer(name: &str, seed: u64, scorer: &dyn GraphScorer, dataset: &Dataset) -> Result<EvalReport> {
    evaluate_scores(name, seed, score_dataset(scorer, dataset)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanWithError {
    pub mean: f64,
    /// Sample standard deviation over sqrt(n).
    pub std_error: f64,
    pub n: usize,
}

impl MeanWithError {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "standard error needs at least 2 values, got {n}"
            )));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n,
        })
    }
}

impl std::fmt::Display for MeanWithError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ({:.3})", self.mean, self.std_error)
    }
}

/// Runs `pipeline` once per seed (concurrently) and summarizes test F1.
/// Reports come back in seed order.
pub fn multi_seed_report<F>(seeds: &[u64], pipeline: F) -> Result<(MeanWithError, Vec<EvalReport>)>
where
    F: Fn(u64) -> Result<EvalReport> + Sync,
{
    if seeds.len() < 2 {
        return Err(Error::InvalidParameter("multi-seed report needs n_seeds >= 2".into()));
    }
    let reports = seeds.par_iter().map(|&s| pipeline(s)).collect::<Result<Vec<_>>>()?;
    let f1s: Vec<f64> = reports.iter().map(|r| r.test_f1).collect();
    Ok((MeanWithError::from_values(&f1s)?, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED_SCORES: [f64; 4] = [0.9, 0.6, 0.4, 0.1];
    const WORKED_LABELS: [bool; 4] = [true, false, true, false];

    #[test]
    fn f1_examples() {
        assert_eq!(f1_at(&[0.9, 0.8, 0.2], &[true, true, false], 0.5).unwrap(), 1.0);
        assert_eq!(f1_at(&[0.9, 0.2], &[false, true], 0.5).unwrap(), 0.0);
        let (p, r) = precision_recall_at(&WORKED_SCORES, &WORKED_LABELS, 0.5).unwrap();
        assert_eq!((p, r), (0.5, 0.5));
        assert_eq!(f1_at(&WORKED_SCORES, &WORKED_LABELS, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn f1_degenerate_cases() {
        assert_eq!(f1_at(&[0.1, 0.2], &[true, false], 0.9).unwrap(), 0.0);
        assert_eq!(f1_at(&[0.1, 0.2], &[false, false], 0.0).unwrap(), 0.0);
        assert!(f1_at(&[0.1], &[true, false], 0.5).is_err());
        assert!(f1_at(&[], &[], 0.5).is_err());
    }

    #[test]
    fn best_threshold_worked_case() {
        // Predicting the top three gives P = 2/3, R = 1, so F1 = 0.8.
        let (t, f1) = best_threshold(&WORKED_SCORES, &WORKED_LABELS).unwrap();
        assert!((f1 - 0.8).abs() < 1e-12);
        assert!(t <= 0.4 && t > 0.1, "{t}");
        // Exhaustive: every cut of the sorted scores.
        for k in 0..=4 {
            let (mut tp, mut fp) = (0.0, 0.0);
            for &y in &WORKED_LABELS[..k] {
                if y {
                    tp += 1.0
                } else {
                    fp += 1.0
                }
            }
            let brute: f64 = if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + (2.0 - tp))
            };
            assert!(brute <= f1 + 1e-15);
        }
    }

    #[test]
    fn best_threshold_separated() {
        let (t, f1) = best_threshold(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(f1, 1.0);
        assert!(t > 0.2 && t <= 0.8);
    }

    #[test]
    fn best_threshold_constant_scores() {
        let labels = [true, false, false, true, false];
        let q = 2.0 / 5.0;
        let (_, f1) = best_threshold(&[0.5; 5], &labels).unwrap();
        assert!((f1 - 2.0 * q / (q + 1.0)).abs() < 1e-12);
        assert!(matches!(
            best_threshold(&[0.5; 2], &[true, true]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn pr_curve_worked_case() {
        let c = pr_curve(&WORKED_SCORES, &WORKED_LABELS).unwrap();
        assert!((c.auc - (0.5 + (2.0 / 3.0) * 0.5)).abs() < 1e-12);
        assert_eq!(c.points.len(), 4);
        assert!(c.points.windows(2).all(|w| w[0].threshold > w[1].threshold));
    }

    #[test]
    fn pr_curve_trivial_cases() {
        assert_eq!(pr_curve(&[0.3], &[true]).unwrap().auc, 1.0);
        let scores: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let labels: Vec<bool> = (0..10).map(|i| i >= 5).collect();
        assert_eq!(pr_curve(&scores, &labels).unwrap().auc, 1.0);
        assert!(matches!(pr_curve(&[0.1], &[false]), Err(Error::NoPositives)));
    }

    #[test]
    fn pr_curve_groups_ties() {
        let c = pr_curve(&[0.5, 0.5, 0.5, 0.1], &[true, false, false, true]).unwrap();
        assert_eq!(c.points.len(), 2);
        assert!((c.points[0].precision - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.auc - (0.5 / 3.0 + 0.5 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn standard_error_definition() {
        let m = MeanWithError::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((m.std_error - sd / 2.0).abs() < 1e-15);
        assert!(MeanWithError::from_values(&[1.0]).is_err());
    }
}

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{batch_gradients, bce_from_logit, forward};
use super::{GnnConfig, GnnParameters};
use crate::dataset::{Dataset, LabeledExample, Split};
use crate::error::{Error, Result};
use crate::eval::pr_curve;
use crate::rng::{self, derive_seed};

/// Adam with the usual `(0.9, 0.999, 1e-8)` constants.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u32,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, param_count: usize) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: vec![0.0; param_count],
            second: vec![0.0; param_count],
        }
    }

    pub fn step(&mut self, params: &mut GnnParameters, grad: &GnnParameters) -> Result<()> {
        let mut theta = params.to_flat();
        let g = grad.to_flat();
        if theta.len() != self.first.len() || g.len() != theta.len() {
            return Err(Error::LengthMismatch {
                expected: self.first.len(),
                found: g.len(),
            });
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..theta.len() {
            self.first[i] = self.beta1 * self.first[i] + (1.0 - self.beta1) * g[i];
            self.second[i] = self.beta2 * self.second[i] + (1.0 - self.beta2) * g[i] * g[i];
            let m_hat = self.first[i] / c1;
            let v_hat = self.second[i] / c2;
            theta[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        params.set_flat(&theta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-graph loss over the epoch's minibatches, before each update.
    pub train_loss: f64,
    pub val_loss: f64,
    /// `None` when the validation split has no positives.
    pub val_pr_auc: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Higher is better: validation PR-AUC, then lower validation loss.
fn selection_key(r: &EpochRecord) -> (f64, f64) {
    (r.val_pr_auc.unwrap_or(0.0), -r.val_loss)
}

fn evaluate(params: &GnnParameters, config: &GnnConfig, val: &[LabeledExample]) -> Result<(f64, Option<f64>)> {
    let mut scores = Vec::with_capacity(val.len());
    let mut loss = 0.0;
    for ex in val {
        let t = forward(params, config, &ex.graph)?;
        loss += bce_from_logit(t.logit, ex.label);
        scores.push(t.probability);
    }
    let labels: Vec<bool> = val.iter().map(|e| e.label).collect();
    let auc = if labels.iter().any(|&y| y) {
        Some(pr_curve(&scores, &labels)?.auc)
    } else {
        None
    };
    Ok((loss / val.len() as f64, auc))
}

/// Minibatch Adam on `train`, keeping the parameters from the epoch with
/// the best validation PR-AUC (validation loss breaks ties). Stops after
/// `early_stop_patience` epochs without improvement.
pub fn train_examples(
    train: &[LabeledExample],
    val: &[LabeledExample],
    config: &GnnConfig,
) -> Result<(GnnParameters, TrainingHistory)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidParameter(
            "training needs non-empty train and validation splits".into(),
        ));
    }
    let positives = train.iter().filter(|e| e.label).count();
    if positives == 0 || positives == train.len() {
        return Err(Error::SingleClass);
    }

    let mut init_rng = rng::seeded(derive_seed(config.seed, 1));
    let mut order_rng = rng::seeded(derive_seed(config.seed, 2));
    let mut params = GnnParameters::init(config, &mut init_rng);
    let mut adam = Adam::new(config.learning_rate, params.len());
    let mut best = params.clone();
    let mut history = TrainingHistory::default();
    let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&LabeledExample> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, grad) = batch_gradients(&params, config, &batch)?;
            loss_sum += loss * batch.len() as f64;
            adam.step(&mut params, &grad)?;
        }
        let (val_loss, val_pr_auc) = evaluate(&params, config, val)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss,
            val_pr_auc,
        };
        let key = selection_key(&record);
        history.epochs.push(record);
        if key > best_key {
            best_key = key;
            best = params.clone();
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.early_stop_patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    Ok((best, history))
}

/// Trains on the dataset's train split, selecting on its validation split.
pub fn train(dataset: &Dataset, config: &GnnConfig) -> Result<(GnnParameters, TrainingHistory)> {
    let train = dataset.labeled(Split::Train)?;
    let val = dataset.labeled(Split::Val)?;
    train_examples(&train, &val, config)
}

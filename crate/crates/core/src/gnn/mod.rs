//! Message-passing graph classifiers over similarity-weighted graphs.
//!
//! Node states start at zero. Each step concatenates a node's state with an
//! aggregated message and passes it through an affine layer and ReLU. The
//! graph score is a two-layer readout over the mean final node state.
//!
//! Two message functions are provided:
//!
//! * [`GnnVariant::Mag`]: mean of `(h_w, e_vw)` over neighbors, followed by
//!   the max and min incoming edge weight (length `d + 3`);
//! * [`GnnVariant::MeanOnly`]: the mean term alone (length `d + 1`).

mod model;
mod train;

use rand::Rng as _;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub use model::{edge_weight_gradients, forward, loss_and_gradients, message, predict, ForwardTrace, GnnModel};
pub use train::{train, train_examples, Adam, EpochRecord, TrainingHistory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GnnVariant {
    /// Mean, max and min aggregation.
    #[serde(rename = "MAG")]
    Mag,
    /// Mean aggregation of state and edge weight only.
    #[serde(rename = "MEAN_ONLY")]
    MeanOnly,
}

impl GnnVariant {
    pub fn message_dim(self, hidden_dim: usize) -> usize {
        match self {
            GnnVariant::Mag => hidden_dim + 3,
            GnnVariant::MeanOnly => hidden_dim + 1,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            GnnVariant::Mag => "MAG-GCN",
            GnnVariant::MeanOnly => "GCN-E",
        }
    }
}

pub const LEARNING_RATE_RANGE: std::ops::RangeInclusive<f64> = 1e-3..=1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub hidden_dim: usize,
    pub steps: usize,
    pub variant: GnnVariant,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation improvement before training stops.
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            steps: 3,
            variant: GnnVariant::Mag,
            learning_rate: 3e-3,
            epochs: 200,
            batch_size: 32,
            early_stop_patience: 20,
            seed: 0,
        }
    }
}

impl GnnConfig {
    /// Hard errors for unusable settings; soft warnings (returned) for a
    /// learning rate outside the usual range.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.hidden_dim == 0 || self.steps == 0 {
            return Err(Error::InvalidParameter(
                "hidden_dim and steps must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        let mut warnings = Vec::new();
        if !LEARNING_RATE_RANGE.contains(&self.learning_rate) {
            warnings.push(format!(
                "learning_rate {} is outside the validated range [1e-3, 1e-2]",
                self.learning_rate
            ));
        }
        Ok(warnings)
    }

    pub fn message_dim(&self) -> usize {
        self.variant.message_dim(self.hidden_dim)
    }
}

/// Dense row-major matrix; serialized as an array of rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `out = self * x + bias`.
    pub(crate) fn affine(&self, x: &[f64], bias: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = bias[r] + self.row(r).iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.rows).map(|r| self.row(r)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(rows).map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateLayer {
    /// `d x (d + m)`, acting on `h_v ⊕ m_v`.
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub hidden_weight: Matrix,
    pub hidden_bias: Vec<f64>,
    pub output_weight: Vec<f64>,
    pub output_bias: f64,
}

/// All trainable weights: one untied update layer per step plus readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnParameters {
    pub layers: Vec<UpdateLayer>,
    pub readout: Readout,
}

impl GnnParameters {
    pub fn zeros(config: &GnnConfig) -> Self {
        let d = config.hidden_dim;
        let m = config.message_dim();
        Self {
            layers: (0..config.steps)
                .map(|_| UpdateLayer {
                    weight: Matrix::zeros(d, d + m),
                    bias: vec![0.0; d],
                })
                .collect(),
            readout: Readout {
                hidden_weight: Matrix::zeros(d, d),
                hidden_bias: vec![0.0; d],
                output_weight: vec![0.0; d],
                output_bias: 0.0,
            },
        }
    }

    /// Every entry uniform in `±1/sqrt(fan_in)` of the layer it feeds.
    pub fn init(config: &GnnConfig, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(config);
        let d = config.hidden_dim as f64;
        let update_bound = 1.0 / (d + config.message_dim() as f64).sqrt();
        let readout_bound = 1.0 / d.sqrt();
        let mut fill = |xs: &mut [f64], bound: f64| {
            for x in xs {
                *x = rng.random_range(-bound..bound);
            }
        };
        for layer in &mut p.layers {
            fill(layer.weight.as_mut_slice(), update_bound);
            fill(&mut layer.bias, update_bound);
        }
        let r = &mut p.readout;
        fill(r.hidden_weight.as_mut_slice(), readout_bound);
        fill(&mut r.hidden_bias, readout_bound);
        fill(&mut r.output_weight, readout_bound);
        fill(std::slice::from_mut(&mut r.output_bias), readout_bound);
        p
    }

    /// Parameter blocks in a fixed order.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * self.layers.len() + 4);
        for l in &self.layers {
            out.push(l.weight.as_slice());
            out.push(&l.bias);
        }
        let r = &self.readout;
        out.extend([
            r.hidden_weight.as_slice(),
            &r.hidden_bias,
            &r.output_weight,
            std::slice::from_ref(&r.output_bias),
        ]);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.layers.len() + 4);
        for l in &mut self.layers {
            out.push(l.weight.as_mut_slice());
            out.push(&mut l.bias);
        }
        let r = &mut self.readout;
        out.push(r.hidden_weight.as_mut_slice());
        out.push(&mut r.hidden_bias);
        out.push(&mut r.output_weight);
        out.push(std::slice::from_mut(&mut r.output_bias));
        out
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Overwrites every entry from a flat vector in [`Self::blocks`] order.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: flat.len(),
            });
        }
        let mut rest = flat;
        for block in self.blocks_mut() {
            let (head, tail) = rest.split_at(block.len());
            block.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &GnnParameters, scale: f64) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    /// Checks shapes against `config` and that every entry is finite.
    pub fn validate(&self, config: &GnnConfig) -> Result<()> {
        let d = config.hidden_dim;
        let m = config.message_dim();
        let bad = |what: String| Err(Error::Schema(format!("parameter shape mismatch: {what}")));
        if self.layers.len() != config.steps {
            return bad(format!(
                "{} update layers for {} steps",
                self.layers.len(),
                config.steps
            ));
        }
        for (t, l) in self.layers.iter().enumerate() {
            if (l.weight.rows(), l.weight.cols()) != (d, d + m) || l.bias.len() != d {
                return bad(format!("update layer {t}"));
            }
        }
        let r = &self.readout;
        if (r.hidden_weight.rows(), r.hidden_weight.cols()) != (d, d)
            || r.hidden_bias.len() != d
            || r.output_weight.len() != d
        {
            return bad("readout".into());
        }
        if self.blocks().iter().any(|b| b.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("parameters".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn shapes_follow_variant() {
        for (variant, m) in [(GnnVariant::Mag, 7), (GnnVariant::MeanOnly, 5)] {
            let cfg = GnnConfig {
                hidden_dim: 4,
                steps: 2,
                variant,
                ..Default::default()
            };
            let p = GnnParameters::zeros(&cfg);
            assert_eq!(p.layers[0].weight.cols(), 4 + m);
            assert_eq!(p.len(), 2 * (4 * (4 + m) + 4) + 16 + 4 + 4 + 1);
            p.validate(&cfg).unwrap();
            let other = GnnConfig { steps: 3, ..cfg };
            assert!(p.validate(&other).is_err());
        }
    }

    #[test]
    fn init_respects_fan_in_bounds() {
        let cfg = GnnConfig::default();
        let p = GnnParameters::init(&cfg, &mut rng::seeded(1));
        let bound = 1.0 / ((16 + 19) as f64).sqrt();
        assert!(p
            .layers
            .iter()
            .all(|l| l.weight.as_slice().iter().all(|x| x.abs() < bound)));
        assert!(p.readout.output_bias.abs() < 0.25);
    }

    #[test]
    fn flat_round_trip() {
        let cfg = GnnConfig {
            hidden_dim: 3,
            steps: 2,
            ..Default::default()
        };
        let p = GnnParameters::init(&cfg, &mut rng::seeded(2));
        let mut q = GnnParameters::zeros(&cfg);
        q.set_flat(&p.to_flat()).unwrap();
        assert_eq!(p, q);
        assert!(q.set_flat(&[1.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(GnnConfig::default().validate().unwrap().is_empty());
        let hot = GnnConfig {
            learning_rate: 0.1,
            ..Default::default()
        };
        assert_eq!(hot.validate().unwrap().len(), 1);
        assert!(GnnConfig {
            hidden_dim: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(GnnConfig {
            learning_rate: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn matrix_rejects_ragged_rows() {
        assert!(serde_json::from_str::<Matrix>("[[1.0, 2.0], [3.0]]").is_err());
        let m: Matrix = serde_json::from_str("[[1.0, 2.0], [3.0, 4.0]]").unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }
}

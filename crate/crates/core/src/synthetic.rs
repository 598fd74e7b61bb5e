//! Weighted stochastic block model benchmark: complete graphs over one or
//! two hidden families, with within-family and between-family edge weights
//! drawn from two Beta distributions.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetEntry, DatasetSource, LabeledExample, Split};
use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::rng::{self, Rng};

const OPEN_INTERVAL_NUDGE: f64 = 1e-12;

/// Shape parameters of a Beta distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{what}: Beta shapes must be positive and finite, got ({}, {})",
                self.alpha, self.beta
            )))
        }
    }
}

impl std::fmt::Display for BetaParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Beta({}, {})", self.alpha, self.beta)
    }
}

impl std::str::FromStr for BetaParams {
    type Err = Error;

    /// Parses `"alpha,beta"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("expected `alpha,beta`, got `{s}`"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let alpha = a.trim().parse().map_err(|_| bad())?;
        let beta = b.trim().parse().map_err(|_| bad())?;
        Ok(Self { alpha, beta })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub size_min: usize,
    pub size_max: usize,
    /// Probability that a node belongs to the second family.
    pub p_second: f64,
    pub beta_within: BetaParams,
    pub beta_between: BetaParams,
    pub n_graphs: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            size_min: 5,
            size_max: 15,
            p_second: 0.03,
            beta_within: BetaParams::new(4.0, 1.0),
            beta_between: BetaParams::new(1.0, 4.0),
            n_graphs: 1000,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.size_min < 1 || self.size_min > self.size_max {
            return Err(Error::InvalidParameter(format!(
                "size range [{}, {}] must satisfy 1 <= min <= max",
                self.size_min, self.size_max
            )));
        }
        if !(0.0..=1.0).contains(&self.p_second) {
            return Err(Error::InvalidParameter(format!(
                "p_second {} outside [0, 1]",
                self.p_second
            )));
        }
        self.beta_within.validate("beta_within")?;
        self.beta_between.validate("beta_between")
    }
}

/// Gamma(shape, 1) by Marsaglia and Tsang's squeeze method. Shapes below one
/// are boosted: `Gamma(a) = Gamma(a + 1) * U^(1/a)`.
fn sample_gamma(shape: f64, rng: &mut Rng) -> f64 {
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        if u < 1.0 - 0.0331 * x.powi(4) {
            return d * v;
        }
        if u > 0.0 && u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from Beta(alpha, beta) as a ratio of Gamma variates, kept
/// strictly inside (0, 1).
pub fn sample_beta(alpha: f64, beta: f64, rng: &mut Rng) -> Result<f64> {
    BetaParams::new(alpha, beta).validate("sample_beta")?;
    loop {
        let x = sample_gamma(alpha, rng);
        let y = sample_gamma(beta, rng);
        let s = x + y;
        if s > 0.0 && s.is_finite() {
            return Ok((x / s).clamp(OPEN_INTERVAL_NUDGE, 1.0 - OPEN_INTERVAL_NUDGE));
        }
    }
}

/// One labeled graph: size uniform in `[size_min, size_max]`, each node in
/// the second family with probability `p_second`, complete edges weighted by
/// the family-dependent Beta distribution.
pub fn generate_example(spec: &SyntheticSpec, rng: &mut Rng) -> Result<LabeledExample> {
    spec.validate()?;
    let n = rng.random_range(spec.size_min..=spec.size_max);
    let family: Vec<bool> = (0..n).map(|_| rng.random_bool(spec.p_second)).collect();
    let mut weights = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            let p = if family[u] == family[v] {
                spec.beta_within
            } else {
                spec.beta_between
            };
            weights.push(sample_beta(p.alpha, p.beta, rng)?);
        }
    }
    let mut next = weights.into_iter();
    let graph = WeightedGraph::complete(n, |_, _| next.next().expect("one weight per pair"))?;
    let truth = Partition::from_labels(&family)?;
    let label = truth.cluster_count() >= 2;
    LabeledExample::new(graph, label, Some(truth))
}

/// `spec.n_graphs` examples from one seeded stream, then split 60/20/20 by
/// a shuffle drawn from the same stream.
pub fn generate_dataset(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    if spec.n_graphs < 10 {
        return Err(Error::InvalidParameter(format!(
            "n_graphs = {} is too small to split (need at least 10)",
            spec.n_graphs
        )));
    }
    let mut rng = rng::seeded(spec.seed);
    let examples = (0..spec.n_graphs)
        .map(|_| generate_example(spec, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let n = spec.n_graphs;
    let (n_train, n_val) = (n * 6 / 10, n * 2 / 10);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut splits = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank < n_train {
            splits[i] = Split::Train;
        } else if rank < n_train + n_val {
            splits[i] = Split::Val;
        }
    }

    let width = n.to_string().len();
    let entries = examples
        .into_iter()
        .zip(splits)
        .enumerate()
        .map(|(i, (ex, split))| DatasetEntry {
            id: format!("syn-{i:0width$}"),
            split,
            graph: ex.graph,
            label: Some(ex.label),
            truth: ex.truth,
        })
        .collect();
    Ok(Dataset::new(
        DatasetSource::Synthetic { spec: spec.clone() },
        Some(rng::RNG_NAME.to_owned()),
        entries,
    ))
}

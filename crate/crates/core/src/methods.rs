//! Uniform fitting interface over every scorer, used by the benchmark grid
//! and the CLI.

use serde::{Deserialize, Serialize};

use crate::classical::{select_k, ForestConfig, KCoreScorer, SuperPartModel, TcScorer};
use crate::dataset::{Dataset, Split};
use crate::error::Result;
use crate::eval::GraphScorer;
use crate::gnn::{self, GnnConfig, GnnModel, GnnVariant, TrainingHistory};
use crate::graph::WeightedGraph;
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Tc,
    Kcore,
    Superpart,
    GcnE,
    MagGcn,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Tc,
        Method::Kcore,
        Method::Superpart,
        Method::GcnE,
        Method::MagGcn,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Method::Tc => "TC",
            Method::Kcore => "K-Core",
            Method::Superpart => "SuperPart",
            Method::GcnE => GnnVariant::MeanOnly.display_name(),
            Method::MagGcn => GnnVariant::Mag.display_name(),
        }
    }

    fn seed_purpose(self) -> u64 {
        match self {
            Method::Tc => 10,
            Method::Kcore => 11,
            Method::Superpart => 12,
            Method::GcnE => 13,
            Method::MagGcn => 14,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "tc" => Ok(Method::Tc),
            "kcore" | "k_core" => Ok(Method::Kcore),
            "superpart" => Ok(Method::Superpart),
            "gcn_e" | "mean_only" => Ok(Method::GcnE),
            "mag_gcn" | "mag" => Ok(Method::MagGcn),
            _ => Err(crate::error::Error::InvalidParameter(format!("unknown method `{s}`"))),
        }
    }
}

/// Hyperparameters shared by the trainable methods. Seeds inside are
/// overridden per run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodSettings {
    pub gnn: GnnConfig,
    pub forest: ForestConfig,
}

#[derive(Clone, Debug)]
pub enum FittedScorer {
    Tc,
    Kcore { k: usize, validation_f1: f64 },
    Superpart(SuperPartModel),
    Gnn { model: GnnModel, history: TrainingHistory },
}

impl GraphScorer for FittedScorer {
    fn score(&self, g: &WeightedGraph) -> Result<f64> {
        match self {
            FittedScorer::Tc => TcScorer.score(g),
            FittedScorer::Kcore { k, .. } => KCoreScorer { k: *k }.score(g),
            FittedScorer::Superpart(m) => m.score(g),
            FittedScorer::Gnn { model, .. } => model.score(g),
        }
    }
}

/// Fits `method` on the dataset's train split (selecting on validation
/// where the method has anything to select). `seed` replaces the seeds in
/// `settings`, derived separately per method.
pub fn fit_method(method: Method, dataset: &Dataset, seed: u64, settings: &MethodSettings) -> Result<FittedScorer> {
    let seed = derive_seed(seed, method.seed_purpose());
    match method {
        Method::Tc => Ok(FittedScorer::Tc),
        Method::Kcore => {
            let (k, validation_f1) = select_k(dataset)?;
            Ok(FittedScorer::Kcore { k, validation_f1 })
        }
        Method::Superpart => {
            let config = ForestConfig {
                seed,
                ..settings.forest.clone()
            };
            let train = dataset.labeled(Split::Train)?;
            Ok(FittedScorer::Superpart(SuperPartModel::fit(&train, &config)?))
        }
        Method::GcnE | Method::MagGcn => {
            let variant = if method == Method::MagGcn {
                GnnVariant::Mag
            } else {
                GnnVariant::MeanOnly
            };
            let config = GnnConfig {
                variant,
                seed,
                ..settings.gnn.clone()
            };
            let (parameters, history) = gnn::train(dataset, &config)?;
            Ok(FittedScorer::Gnn {
                model: GnnModel { config, parameters },
                history,
            })
        }
    }
}

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classical::SuperPartModel;
use crate::error::{Error, Result};
use crate::gnn::{GnnConfig, GnnModel, GnnParameters, GnnVariant, TrainingHistory};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnCheckpoint {
    pub format_version: u32,
    pub variant: GnnVariant,
    pub config: GnnConfig,
    pub parameters: GnnParameters,
    pub training_history: TrainingHistory,
}

impl GnnCheckpoint {
    pub fn new(config: GnnConfig, parameters: GnnParameters, training_history: TrainingHistory) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            variant: config.variant,
            config,
            parameters,
            training_history,
        }
    }

    pub fn model(&self) -> GnnModel {
        GnnModel {
            config: self.config.clone(),
            parameters: self.parameters.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperPartCheckpoint {
    pub format_version: u32,
    pub model: SuperPartModel,
}

impl SuperPartCheckpoint {
    pub fn new(model: SuperPartModel) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            model,
        }
    }
}

/// Any trained model, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Checkpoint {
    Gnn(GnnCheckpoint),
    Superpart(SuperPartCheckpoint),
}

impl Checkpoint {
    /// Checks the format version and that parameter shapes agree with the
    /// embedded configuration.
    pub fn validate(&self) -> Result<()> {
        let version = match self {
            Checkpoint::Gnn(c) => c.format_version,
            Checkpoint::Superpart(c) => c.format_version,
        };
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported checkpoint format_version {version}"
            )));
        }
        match self {
            Checkpoint::Gnn(c) => {
                if c.variant != c.config.variant {
                    return Err(Error::Schema("variant disagrees with config.variant".into()));
                }
                c.config.validate()?;
                c.parameters.validate(&c.config)
            }
            Checkpoint::Superpart(c) => c.model.validate(),
        }
    }

    pub fn scorer(&self) -> Box<dyn crate::eval::GraphScorer> {
        match self {
            Checkpoint::Gnn(c) => Box::new(c.model()),
            Checkpoint::Superpart(c) => Box::new(c.model.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Checkpoint::Gnn(c) => c.variant.display_name(),
            Checkpoint::Superpart(_) => "SuperPart",
        }
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    super::write_json(checkpoint, BufWriter::new(file))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let checkpoint: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
    checkpoint.validate()?;
    Ok(checkpoint)
}

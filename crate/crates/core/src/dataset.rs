//! In-memory datasets of labeled graphs with train/validation/test splits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::synthetic::SyntheticSpec;

/// A graph with its inconsistent-cluster label (`true` = should be split)
/// and, when known, the ground-truth partition.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub graph: WeightedGraph,
    pub label: bool,
    pub truth: Option<Partition>,
}

impl LabeledExample {
    /// Checks that the label agrees with the ground-truth partition.
    pub fn new(graph: WeightedGraph, label: bool, truth: Option<Partition>) -> Result<Self> {
        if let Some(p) = &truth {
            if p.len() != graph.node_count() {
                return Err(Error::LengthMismatch {
                    expected: graph.node_count(),
                    found: p.len(),
                });
            }
            if label != (p.cluster_count() >= 2) {
                return Err(Error::InvalidParameter(format!(
                    "label {} disagrees with a {}-cluster truth partition",
                    u8::from(label),
                    p.cluster_count()
                )));
            }
        }
        Ok(Self { graph, label, truth })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub split: Split,
    pub graph: WeightedGraph,
    /// `None` for unlabeled graphs that can only be scored.
    pub label: Option<bool>,
    pub truth: Option<Partition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic { spec: SyntheticSpec },
    External { name: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub negative: usize,
    pub positive: usize,
    pub unlabeled: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub source: DatasetSource,
    pub rng: Option<String>,
    pub class_counts: ClassCounts,
    pub split_sizes: SplitSizes,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub entries: Vec<DatasetEntry>,
}

pub const DATASET_FORMAT_VERSION: u32 = 1;

impl Dataset {
    /// Assembles a dataset, computing the header's counts from the entries.
    pub fn new(source: DatasetSource, rng: Option<String>, entries: Vec<DatasetEntry>) -> Self {
        let (class_counts, split_sizes) = tally(&entries);
        Self {
            header: DatasetHeader {
                format_version: DATASET_FORMAT_VERSION,
                source,
                rng,
                class_counts,
                split_sizes,
            },
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Labeled examples of one split; fails if any of them is unlabeled.
    pub fn labeled(&self, split: Split) -> Result<Vec<LabeledExample>> {
        self.split(split)
            .map(|e| {
                let label = e.label.ok_or_else(|| Error::InvalidRecord {
                    id: e.id.clone(),
                    message: format!("{} split requires labels", split.as_str()),
                })?;
                Ok(LabeledExample {
                    graph: e.graph.clone(),
                    label,
                    truth: e.truth.clone(),
                })
            })
            .collect()
    }

    /// True when the header's counts match the entries.
    pub fn header_consistent(&self) -> bool {
        tally(&self.entries) == (self.header.class_counts, self.header.split_sizes)
    }
}

fn tally(entries: &[DatasetEntry]) -> (ClassCounts, SplitSizes) {
    let mut classes = ClassCounts::default();
    let mut splits = SplitSizes::default();
    for e in entries {
        match e.label {
            Some(true) => classes.positive += 1,
            Some(false) => classes.negative += 1,
            None => classes.unlabeled += 1,
        }
        match e.split {
            Split::Train => splits.train += 1,
            Split::Val => splits.val += 1,
            Split::Test => splits.test += 1,
        }
    }
    (classes, splits)
}

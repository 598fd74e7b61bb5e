//! On-disk formats.
//!
//! * Datasets are JSON Lines: a header object, then one graph per line.
//! * Checkpoints and reports are JSON documents.
//! * Per-graph scores and PR curves are CSV.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so
//! every value survives a save/load cycle bit for bit.

mod checkpoint;
mod ic_stratified;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetEntry, DatasetHeader, Split, DATASET_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::eval::{PrCurve, ScoredGraph};
use crate::graph::{Partition, WeightedGraph};

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, GnnCheckpoint, SuperPartCheckpoint, CHECKPOINT_FORMAT_VERSION,
};
pub use ic_stratified::{load_ic_stratified, read_ic_records, IC_STRATIFIED_SCHEMA};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    id: String,
    nodes: usize,
    edges: Vec<(usize, usize, f64)>,
    label: Option<u8>,
    truth: Option<Vec<usize>>,
    split: Split,
}

impl GraphRecord {
    fn from_entry(e: &DatasetEntry) -> Self {
        Self {
            id: e.id.clone(),
            nodes: e.graph.node_count(),
            edges: e.graph.edges().iter().map(|x| (x.u, x.v, x.w)).collect(),
            label: e.label.map(u8::from),
            truth: e.truth.as_ref().map(|p| p.assignment().to_vec()),
            split: e.split,
        }
    }

    fn into_entry(self) -> Result<DatasetEntry> {
        let id = self.id;
        let invalid = |message: String| Error::InvalidRecord {
            id: id.clone(),
            message,
        };
        let graph = WeightedGraph::new(self.nodes, self.edges).map_err(|e| invalid(e.to_string()))?;
        let label = match self.label {
            None => None,
            Some(0) => Some(false),
            Some(1) => Some(true),
            Some(other) => return Err(invalid(format!("label must be 0, 1 or null, got {other}"))),
        };
        let truth = self
            .truth
            .map(Partition::from_assignment)
            .transpose()
            .map_err(|e| invalid(e.to_string()))?;
        if let Some(p) = &truth {
            if p.len() != graph.node_count() {
                return Err(invalid(format!(
                    "truth covers {} nodes, graph has {}",
                    p.len(),
                    graph.node_count()
                )));
            }
            if let Some(y) = label {
                if y != (p.cluster_count() >= 2) {
                    return Err(invalid("label disagrees with truth partition".into()));
                }
            }
        }
        Ok(DatasetEntry {
            id,
            split: self.split,
            graph,
            label,
            truth,
        })
    }
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let io = |e| Error::io("<dataset>", e);
    serde_json::to_writer(&mut out, &dataset.header)?;
    out.write_all(b"\n").map_err(io)?;
    for e in &dataset.entries {
        serde_json::to_writer(&mut out, &GraphRecord::from_entry(e))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let io = |e| Error::io("<dataset>", e);
    let header_line = loop {
        match lines.next() {
            None => {
                return Err(Error::Format {
                    line: 1,
                    message: "missing header".into(),
                })
            }
            Some((_, line)) => {
                let line = line.map_err(io)?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let header: DatasetHeader = serde_json::from_str(&header_line).map_err(|e| Error::Format {
        line: 1,
        message: format!("invalid header: {e}"),
    })?;
    if header.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::Format {
            line: 1,
            message: format!("unsupported format_version {}", header.format_version),
        });
    }
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GraphRecord = serde_json::from_str(&line).map_err(|e| Error::Format {
            line: line_no,
            message: e.to_string(),
        })?;
        let entry = record.into_entry().map_err(|e| Error::Format {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(entry.id.clone()) {
            return Err(Error::Format {
                line: line_no,
                message: format!("duplicate graph id `{}`", entry.id),
            });
        }
        entries.push(entry);
    }
    let dataset = Dataset { header, entries };
    if !dataset.header_consistent() {
        return Err(Error::Format {
            line: 1,
            message: "header class counts or split sizes disagree with the records".into(),
        });
    }
    Ok(dataset)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(dataset, BufWriter::new(file)).map_err(|e| with_path(e, path))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

/// Per-graph scores as CSV with header `id,score,label` (empty label for
/// unlabeled graphs).
pub fn write_scores_csv<W: Write>(scores: &[ScoredGraph], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Schema(format!("writing scores: {e}"));
    w.write_record(["id", "score", "label"]).map_err(csv_err)?;
    for s in scores {
        let label = s.label.map_or(String::new(), |y| u8::from(y).to_string());
        w.write_record([s.id.as_str(), &s.score.to_string(), &label])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<scores>", e))
}

/// One row of a scores CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    pub score: f64,
    pub label: Option<u8>,
}

pub fn read_scores_csv<R: Read>(input: R) -> Result<Vec<ScoreRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| Error::Format {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "score", "label"] {
        return Err(Error::Format {
            line: 1,
            message: "expected header `id,score,label`".into(),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            let row: ScoreRow = row.map_err(|e| Error::Format {
                line: i + 2,
                message: e.to_string(),
            })?;
            if !row.score.is_finite() || row.label.is_some_and(|l| l > 1) {
                return Err(Error::Format {
                    line: i + 2,
                    message: format!("invalid row for `{}`", row.id),
                });
            }
            Ok(row)
        })
        .collect()
}

/// PR curve as CSV with header `threshold,precision,recall`, one row per
/// distinct score.
pub fn write_pr_csv<W: Write>(curve: &PrCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Schema(format!("writing PR curve: {e}"));
    w.write_record(["threshold", "precision", "recall"]).map_err(csv_err)?;
    for p in &curve.points {
        w.write_record([p.threshold.to_string(), p.precision.to_string(), p.recall.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<pr curve>", e))
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").map_err(|e| Error::io("<json>", e))
}

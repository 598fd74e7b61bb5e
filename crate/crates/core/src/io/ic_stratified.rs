//! Loader for the public IC-Stratified benchmark.
//!
//! Format assumptions are confined to this file. Each input is JSON Lines,
//! one candidate family per line (see [`IC_STRATIFIED_SCHEMA`]). Nodes in
//! `edges` may be referenced by name or by position in `nodes`; `partition`
//! gives each node's ground-truth cluster in the same order as `nodes`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::Deserialize;
use serde_json::Value;

use crate::dataset::{Dataset, DatasetEntry, DatasetSource, Split};
use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::rng;

pub const IC_STRATIFIED_SCHEMA: &str = r#"one JSON object per line: {"graph_id": str, "nodes": [name, ...], "edges": [[name_or_index, name_or_index, score], ...], "partition": [cluster, ...]}"#;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyRecord {
    graph_id: Value,
    nodes: Vec<Value>,
    edges: Vec<(Value, Value, f64)>,
    partition: Vec<Value>,
}

fn key(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn schema_error(line: usize, message: impl std::fmt::Display) -> Error {
    Error::Schema(format!(
        "line {line}: {message}; expected IC-Stratified records as {IC_STRATIFIED_SCHEMA}"
    ))
}

/// Parses one IC-Stratified file into `(id, graph, truth)` triples.
pub fn read_ic_records<R: Read>(input: R) -> Result<Vec<(String, WeightedGraph, Partition)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<ic-stratified>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FamilyRecord = serde_json::from_str(&line).map_err(|e| schema_error(line_no, e))?;
        let id = key(&rec.graph_id);
        if rec.partition.len() != rec.nodes.len() {
            return Err(schema_error(
                line_no,
                format!("`{id}`: partition and nodes differ in length"),
            ));
        }
        let index: HashMap<String, usize> = rec.nodes.iter().enumerate().map(|(i, n)| (key(n), i)).collect();
        if index.len() != rec.nodes.len() {
            return Err(schema_error(line_no, format!("`{id}`: duplicate node names")));
        }
        let resolve = |v: &Value| -> Result<usize> {
            if let Some(&i) = index.get(&key(v)) {
                return Ok(i);
            }
            match v.as_u64() {
                Some(i) if (i as usize) < rec.nodes.len() => Ok(i as usize),
                _ => Err(schema_error(line_no, format!("`{id}`: unknown node {v}"))),
            }
        };
        let edges = rec
            .edges
            .iter()
            .map(|(a, b, w)| Ok((resolve(a)?, resolve(b)?, *w)))
            .collect::<Result<Vec<_>>>()?;
        let graph = WeightedGraph::new(rec.nodes.len(), edges).map_err(|e| Error::InvalidRecord {
            id: id.clone(),
            message: e.to_string(),
        })?;
        let labels: Vec<String> = rec.partition.iter().map(key).collect();
        let truth = Partition::from_labels(&labels)?;
        out.push((id, graph, truth));
    }
    if out.is_empty() {
        return Err(schema_error(1, "no records"));
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<Vec<(String, WeightedGraph, Partition)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ic_records(file).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Loads the train and test files. A family is labeled inconsistent when
/// its ground truth has two or more clusters. The training file is split
/// 80/20 into train and validation by a shuffle seeded with `seed`.
pub fn load_ic_stratified(train_path: impl AsRef<Path>, test_path: impl AsRef<Path>, seed: u64) -> Result<Dataset> {
    let train = read_file(train_path.as_ref())?;
    let test = read_file(test_path.as_ref())?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut rng::seeded(seed));
    let n_train = train.len() * 8 / 10;
    let mut splits = vec![Split::Val; train.len()];
    for &i in &order[..n_train] {
        splits[i] = Split::Train;
    }

    let entry = |(id, graph, truth): (String, WeightedGraph, Partition), split| DatasetEntry {
        id,
        split,
        label: Some(truth.cluster_count() >= 2),
        graph,
        truth: Some(truth),
    };
    let mut entries: Vec<DatasetEntry> = train.into_iter().zip(splits).map(|(r, s)| entry(r, s)).collect();
    entries.extend(test.into_iter().map(|r| entry(r, Split::Test)));
    let mut seen = std::collections::HashSet::new();
    for e in &mut entries {
        if !seen.insert(e.id.clone()) {
            e.id = format!("{}#{}", e.id, e.split.as_str());
            if !seen.insert(e.id.clone()) {
                return Err(Error::InvalidRecord {
                    id: e.id.clone(),
                    message: "duplicate graph id".into(),
                });
            }
        }
    }
    Ok(Dataset::new(
        DatasetSource::External {
            name: "IC-Stratified".into(),
        },
        Some(rng::RNG_NAME.to_owned()),
        entries,
    ))
}

//! Inconsistent-cluster detection: deciding whether a graph of pairwise
//! entity-similarity scores is one consistent cluster or should be split.
//!
//! The crate provides the graph algorithms ([`graph`]), a synthetic
//! weighted stochastic block model benchmark ([`synthetic`]), classical
//! scorers ([`classical`]), message-passing classifiers ([`gnn`]), the
//! evaluation protocol ([`eval`]) and file formats ([`io`]).

pub mod bench;
pub mod classical;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod io;
pub mod methods;
pub mod rng;
pub mod synthetic;

pub use dataset::{Dataset, DatasetEntry, LabeledExample, Split};
pub use error::{Error, Result};
pub use eval::{EvalReport, GraphScorer, PrCurve};
pub use gnn::{GnnConfig, GnnModel, GnnParameters, GnnVariant};
pub use graph::{Partition, WeightedGraph};
pub use methods::{fit_method, FittedScorer, Method, MethodSettings};
pub use synthetic::{BetaParams, SyntheticSpec};

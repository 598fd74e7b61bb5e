//! Fixtures shared by the benchmarks.

use icdetect_core::synthetic::generate_dataset;
use icdetect_core::{Dataset, GnnConfig, GnnParameters, LabeledExample, Split, SyntheticSpec, WeightedGraph};

/// Complete graph on `n` nodes with deterministic weights in `[0, 1]`.
pub fn complete_graph(n: usize) -> WeightedGraph {
    WeightedGraph::complete(n, |u, v| ((u * 31 + v * 17) % 97) as f64 / 96.0).expect("valid weights")
}

/// Synthetic dataset from the noisy benchmark row.
pub fn noisy_dataset(n_graphs: usize) -> Dataset {
    let spec = SyntheticSpec {
        n_graphs,
        beta_within: icdetect_core::BetaParams::new(3.0, 1.5),
        beta_between: icdetect_core::BetaParams::new(1.0, 1.0),
        seed: 1,
        ..Default::default()
    };
    generate_dataset(&spec).expect("valid spec")
}

pub fn train_examples(dataset: &Dataset) -> Vec<LabeledExample> {
    dataset.labeled(Split::Train).expect("labeled")
}

pub fn initialized_gnn(config: &GnnConfig) -> GnnParameters {
    GnnParameters::init(config, &mut icdetect_core::rng::seeded(0))
}

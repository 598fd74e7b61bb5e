// Backpropagation indexes several parallel buffers per unit.
#![allow(clippy::needless_range_loop)]

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GnnConfig, GnnParameters, GnnVariant};
use crate::dataset::LabeledExample;
use crate::error::{Error, Result};
use crate::eval::GraphScorer;
use crate::graph::WeightedGraph;

type Neighbors = [(usize, f64, usize)];

/// Writes the aggregated message for one node into `out` and returns the
/// neighbor-list positions of the max and min edge (lowest neighbor index
/// on ties). `states` is the row-major `n x d` state matrix.
fn write_message(
    variant: GnnVariant,
    d: usize,
    states: &[f64],
    neighbors: &Neighbors,
    out: &mut [f64],
) -> Option<(usize, usize)> {
    out.fill(0.0);
    if neighbors.is_empty() {
        return None;
    }
    let (mut arg_max, mut arg_min) = (0, 0);
    for (slot, &(w, e, _)) in neighbors.iter().enumerate() {
        for (o, h) in out[..d].iter_mut().zip(&states[w * d..(w + 1) * d]) {
            *o += h;
        }
        out[d] += e;
        if e > neighbors[arg_max].1 {
            arg_max = slot;
        }
        if e < neighbors[arg_min].1 {
            arg_min = slot;
        }
    }
    let inv = 1.0 / neighbors.len() as f64;
    for o in &mut out[..=d] {
        *o *= inv;
    }
    if variant == GnnVariant::Mag {
        out[d + 1] = neighbors[arg_max].1;
        out[d + 2] = neighbors[arg_min].1;
    }
    Some((arg_max, arg_min))
}

/// Aggregated message for a node whose neighbors have states
/// `neighbor_states` and connecting edge weights `edge_weights`. An empty
/// neighborhood yields zeros.
pub fn message(
    variant: GnnVariant,
    hidden_dim: usize,
    neighbor_states: &[Vec<f64>],
    edge_weights: &[f64],
) -> Result<Vec<f64>> {
    if neighbor_states.len() != edge_weights.len() {
        return Err(Error::LengthMismatch {
            expected: neighbor_states.len(),
            found: edge_weights.len(),
        });
    }
    if let Some(h) = neighbor_states.iter().find(|h| h.len() != hidden_dim) {
        return Err(Error::LengthMismatch {
            expected: hidden_dim,
            found: h.len(),
        });
    }
    let states: Vec<f64> = neighbor_states.concat();
    let neighbors: Vec<(usize, f64, usize)> = edge_weights.iter().enumerate().map(|(i, &e)| (i, e, i)).collect();
    let mut out = vec![0.0; variant.message_dim(hidden_dim)];
    write_message(variant, hidden_dim, &states, &neighbors, &mut out);
    Ok(out)
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    pub node_count: usize,
    /// `steps + 1` row-major `n x d` state matrices, starting from zeros.
    pub hidden: Vec<Vec<f64>>,
    /// `steps` row-major `n x m` message matrices; entry `t` produced
    /// `hidden[t + 1]`.
    pub messages: Vec<Vec<f64>>,
    /// Pre-ReLU update outputs, same layout as `hidden[1..]`.
    pub pre_activations: Vec<Vec<f64>>,
    pub pooled: Vec<f64>,
    pub readout_pre: Vec<f64>,
    pub logit: f64,
    pub probability: f64,
    #[serde(skip)]
    extremes: Vec<Option<(usize, usize)>>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(z)` against `y`, from the logit.
pub(crate) fn bce_from_logit(z: f64, y: bool) -> f64 {
    let y = if y { 1.0 } else { 0.0 };
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn check_finite(xs: &[f64], what: impl FnOnce() -> String) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what()))
    }
}

fn forward_with(
    params: &GnnParameters,
    config: &GnnConfig,
    g: &WeightedGraph,
    neighbors: &[Vec<(usize, f64, usize)>],
) -> Result<ForwardTrace> {
    let n = g.node_count();
    let d = config.hidden_dim;
    let m = config.message_dim();
    let mut hidden = vec![vec![0.0; n * d]];
    let mut messages = Vec::with_capacity(config.steps);
    let mut pre_activations = Vec::with_capacity(config.steps);
    let mut extremes = vec![None; n];
    let mut input = vec![0.0; d + m];
    for (t, layer) in params.layers.iter().enumerate() {
        let h = hidden.last().expect("initial state present");
        let mut msg = vec![0.0; n * m];
        let mut pre = vec![0.0; n * d];
        for v in 0..n {
            let ext = write_message(config.variant, d, h, &neighbors[v], &mut msg[v * m..(v + 1) * m]);
            if t == 0 {
                extremes[v] = ext;
            }
            input[..d].copy_from_slice(&h[v * d..(v + 1) * d]);
            input[d..].copy_from_slice(&msg[v * m..(v + 1) * m]);
            layer.weight.affine(&input, &layer.bias, &mut pre[v * d..(v + 1) * d]);
        }
        check_finite(&pre, || format!("message-passing step {t}"))?;
        hidden.push(pre.iter().map(|&x| x.max(0.0)).collect());
        messages.push(msg);
        pre_activations.push(pre);
    }

    let last = hidden.last().expect("initial state present");
    let mut pooled = vec![0.0; d];
    for v in 0..n {
        for (p, x) in pooled.iter_mut().zip(&last[v * d..(v + 1) * d]) {
            *p += x;
        }
    }
    for p in &mut pooled {
        *p /= n as f64;
    }
    let r = &params.readout;
    let mut readout_pre = vec![0.0; d];
    r.hidden_weight.affine(&pooled, &r.hidden_bias, &mut readout_pre);
    let logit = r.output_bias
        + r.output_weight
            .iter()
            .zip(&readout_pre)
            .map(|(w, z)| w * z.max(0.0))
            .sum::<f64>();
    if !logit.is_finite() {
        return Err(Error::NonFinite("readout".into()));
    }
    Ok(ForwardTrace {
        node_count: n,
        hidden,
        messages,
        pre_activations,
        pooled,
        readout_pre,
        logit,
        probability: sigmoid(logit),
        extremes,
    })
}

pub fn forward(params: &GnnParameters, config: &GnnConfig, g: &WeightedGraph) -> Result<ForwardTrace> {
    params.validate(config)?;
    forward_with(params, config, g, &g.neighbors())
}

/// Probability that `g` is an inconsistent cluster.
pub fn predict(params: &GnnParameters, config: &GnnConfig, g: &WeightedGraph) -> Result<f64> {
    forward(params, config, g).map(|t| t.probability)
}

/// Reverse pass for one graph. Returns the loss, the parameter gradient and
/// the gradient with respect to each edge weight (in `g.edges()` order).
fn backward_one(
    params: &GnnParameters,
    config: &GnnConfig,
    g: &WeightedGraph,
    label: bool,
) -> Result<(f64, GnnParameters, Vec<f64>)> {
    let neighbors = g.neighbors();
    let trace = forward_with(params, config, g, &neighbors)?;
    let n = g.node_count();
    let d = config.hidden_dim;
    let m = config.message_dim();
    let mut grad = GnnParameters::zeros(config);
    let mut edge_grad = vec![0.0; g.edge_count()];

    let loss = bce_from_logit(trace.logit, label);
    let dlogit = trace.probability - if label { 1.0 } else { 0.0 };

    // Readout.
    let r = &params.readout;
    let gr = &mut grad.readout;
    gr.output_bias = dlogit;
    let mut dpre_readout = vec![0.0; d];
    for i in 0..d {
        let z = trace.readout_pre[i];
        let a = z.max(0.0);
        gr.output_weight[i] = dlogit * a;
        dpre_readout[i] = if z > 0.0 { dlogit * r.output_weight[i] } else { 0.0 };
    }
    let mut dpooled = vec![0.0; d];
    for i in 0..d {
        let dz = dpre_readout[i];
        gr.hidden_bias[i] = dz;
        if dz == 0.0 {
            continue;
        }
        for (j, gw) in gr.hidden_weight.row_mut(i).iter_mut().enumerate() {
            *gw = dz * trace.pooled[j];
        }
        for (dp, w) in dpooled.iter_mut().zip(r.hidden_weight.row(i)) {
            *dp += dz * w;
        }
    }
    let mut dh_next = vec![0.0; n * d];
    for v in 0..n {
        for j in 0..d {
            dh_next[v * d + j] = dpooled[j] / n as f64;
        }
    }

    // Message-passing steps, last to first.
    let mut input = vec![0.0; d + m];
    let mut dinput = vec![0.0; d + m];
    let mut dpre = vec![0.0; d];
    for t in (0..config.steps).rev() {
        let layer = &params.layers[t];
        let glayer = &mut grad.layers[t];
        let h = &trace.hidden[t];
        let pre = &trace.pre_activations[t];
        let msg = &trace.messages[t];
        let mut dh = vec![0.0; n * d];
        for v in 0..n {
            let mut any = false;
            for i in 0..d {
                dpre[i] = if pre[v * d + i] > 0.0 { dh_next[v * d + i] } else { 0.0 };
                any |= dpre[i] != 0.0;
            }
            if !any {
                continue;
            }
            input[..d].copy_from_slice(&h[v * d..(v + 1) * d]);
            input[d..].copy_from_slice(&msg[v * m..(v + 1) * m]);
            dinput.fill(0.0);
            for i in 0..d {
                let g_i = dpre[i];
                if g_i == 0.0 {
                    continue;
                }
                glayer.bias[i] += g_i;
                for ((gw, x), (di, w)) in glayer
                    .weight
                    .row_mut(i)
                    .iter_mut()
                    .zip(&input)
                    .zip(dinput.iter_mut().zip(layer.weight.row(i)))
                {
                    *gw += g_i * x;
                    *di += g_i * w;
                }
            }
            for j in 0..d {
                dh[v * d + j] += dinput[j];
            }
            let nb = &neighbors[v];
            if nb.is_empty() {
                continue;
            }
            let dmsg = &dinput[d..];
            let inv = 1.0 / nb.len() as f64;
            for &(w, _, edge) in nb {
                for j in 0..d {
                    dh[w * d + j] += dmsg[j] * inv;
                }
                edge_grad[edge] += dmsg[d] * inv;
            }
            if config.variant == GnnVariant::Mag {
                let (arg_max, arg_min) = trace.extremes[v].expect("non-empty neighborhood");
                edge_grad[nb[arg_max].2] += dmsg[d + 1];
                edge_grad[nb[arg_min].2] += dmsg[d + 2];
            }
        }
        dh_next = dh;
    }
    Ok((loss, grad, edge_grad))
}

/// Mean binary cross-entropy over `batch` and its exact gradient.
/// Per-graph gradients are computed in parallel and summed in batch order.
pub fn loss_and_gradients(
    params: &GnnParameters,
    config: &GnnConfig,
    batch: &[LabeledExample],
) -> Result<(f64, GnnParameters)> {
    let refs: Vec<&LabeledExample> = batch.iter().collect();
    batch_gradients(params, config, &refs)
}

pub(crate) fn batch_gradients(
    params: &GnnParameters,
    config: &GnnConfig,
    batch: &[&LabeledExample],
) -> Result<(f64, GnnParameters)> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    params.validate(config)?;
    let parts = batch
        .par_iter()
        .map(|ex| backward_one(params, config, &ex.graph, ex.label))
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / batch.len() as f64;
    let mut total = GnnParameters::zeros(config);
    let mut loss = 0.0;
    for (l, g, _) in &parts {
        loss += l;
        total.add_scaled(g, 1.0);
    }
    let mut flat = total.to_flat();
    flat.iter_mut().for_each(|x| *x *= scale);
    total.set_flat(&flat)?;
    Ok((loss * scale, total))
}

/// Gradient of the single-graph loss with respect to each edge weight, in
/// `g.edges()` order. Max/min slots route to the one contributing edge.
pub fn edge_weight_gradients(
    params: &GnnParameters,
    config: &GnnConfig,
    g: &WeightedGraph,
    label: bool,
) -> Result<Vec<f64>> {
    params.validate(config)?;
    backward_one(params, config, g, label).map(|(_, _, e)| e)
}

/// A trained classifier: configuration plus parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnModel {
    pub config: GnnConfig,
    pub parameters: GnnParameters,
}

impl GraphScorer for GnnModel {
    fn score(&self, g: &WeightedGraph) -> Result<f64> {
        predict(&self.parameters, &self.config, g)
    }
}

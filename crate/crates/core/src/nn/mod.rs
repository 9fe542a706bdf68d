//! Dense feed-forward networks stored as flat parameter vectors.
//!
//! A network is an [`MlpArch`] plus a [`ParamVector`]. Parameters are laid
//! out layer-major; within a layer the row-major `(n_out, n_in)` weight
//! matrix comes first, followed by the `n_out` biases. Genetic operators act
//! on the flat vector directly, so this layout is part of the contract.
//!
//! Two evaluation paths exist: the single-sample functions in this module
//! and the batched, matrix-based ones in [`batch`]. Rollouts use the former,
//! training uses the latter.

mod adam;
pub mod batch;
mod io;

pub use adam::AdamState;
pub use io::{load_network, load_params, read_params, save_network, save_params, write_params};

use std::fmt;
use std::ops::{Deref, DerefMut, Range};
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{rng_from_seed, Error, Result, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    /// `bound * tanh(z)`, keeping outputs inside `[-bound, bound]`.
    TanhScaled(f64),
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpArch {
    layer_sizes: Vec<usize>,
    hidden: HiddenActivation,
    output: OutputActivation,
}

/// Position of one dense layer inside a [`ParamVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub n_in: usize,
    pub n_out: usize,
    pub offset: usize,
}

impl LayerShape {
    pub fn weights(&self) -> Range<usize> {
        self.offset..self.offset + self.n_in * self.n_out
    }

    pub fn bias(&self) -> Range<usize> {
        let start = self.offset + self.n_in * self.n_out;
        start..start + self.n_out
    }

    pub fn param_count(&self) -> usize {
        (self.n_in + 1) * self.n_out
    }
}

impl MlpArch {
    pub fn new(
        layer_sizes: Vec<usize>,
        hidden: HiddenActivation,
        output: OutputActivation,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidArch(format!(
                "need at least an input and an output layer, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::InvalidArch(format!(
                "layer sizes must be positive, got {layer_sizes:?}"
            )));
        }
        if let OutputActivation::TanhScaled(bound) = output {
            if !(bound > 0.0 && bound.is_finite()) {
                return Err(Error::InvalidArch(format!(
                    "tanh bound must be positive, got {bound}"
                )));
            }
        }
        Ok(Self {
            layer_sizes,
            hidden,
            output,
        })
    }

    /// ReLU hidden layers with a `bound * tanh` head, the policy/actor shape.
    pub fn policy(input: usize, hidden: &[usize], output: usize, bound: f64) -> Result<Self> {
        let sizes = std::iter::once(input)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(output))
            .collect();
        Self::new(sizes, HiddenActivation::Relu, OutputActivation::TanhScaled(bound))
    }

    /// ReLU hidden layers with a single linear output, the critic shape.
    pub fn critic(input: usize, hidden: &[usize]) -> Result<Self> {
        let sizes = std::iter::once(input)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(1))
            .collect();
        Self::new(sizes, HiddenActivation::Relu, OutputActivation::Identity)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn hidden_activation(&self) -> HiddenActivation {
        self.hidden
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn layers(&self) -> impl Iterator<Item = LayerShape> + '_ {
        let mut offset = 0;
        self.layer_sizes.windows(2).map(move |w| {
            let shape = LayerShape {
                n_in: w[0],
                n_out: w[1],
                offset,
            };
            offset += shape.param_count();
            shape
        })
    }

    /// `Σ (n_in + 1) · n_out` over all layers.
    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Same architecture with `extra` additional input units.
    pub fn with_extra_inputs(&self, extra: usize) -> Self {
        let mut sizes = self.layer_sizes.clone();
        sizes[0] += extra;
        Self {
            layer_sizes: sizes,
            ..self.clone()
        }
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dims("parameter vector", self.param_count(), params.len()));
        }
        Ok(())
    }

    pub(crate) fn activate(&self, layer: usize, z: f64) -> f64 {
        if layer + 1 < self.num_layers() {
            match self.hidden {
                HiddenActivation::Relu => z.max(0.0),
            }
        } else {
            match self.output {
                OutputActivation::TanhScaled(bound) => bound * z.tanh(),
                OutputActivation::Identity => z,
            }
        }
    }

    /// Derivative of the activation at pre-activation `z`.
    pub(crate) fn activate_grad(&self, layer: usize, z: f64) -> f64 {
        if layer + 1 < self.num_layers() {
            match self.hidden {
                HiddenActivation::Relu => {
                    if z > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        } else {
            match self.output {
                OutputActivation::TanhScaled(bound) => {
                    let t = z.tanh();
                    bound * (1.0 - t * t)
                }
                OutputActivation::Identity => 1.0,
            }
        }
    }
}

impl fmt::Display for MlpArch {
    /// Three-line text form used for the sidecar next to stored parameters.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.layer_sizes.iter().map(ToString::to_string).collect();
        writeln!(f, "layers {}", sizes.join(" "))?;
        match self.hidden {
            HiddenActivation::Relu => writeln!(f, "hidden relu")?,
        }
        match self.output {
            OutputActivation::TanhScaled(bound) => writeln!(f, "output tanh_scaled {bound:?}"),
            OutputActivation::Identity => writeln!(f, "output identity"),
        }
    }
}

impl FromStr for MlpArch {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::InvalidArch(reason);
        let mut sizes = None;
        let mut hidden = None;
        let mut output = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut words = line.split_whitespace();
            match words.next() {
                Some("layers") => {
                    let parsed: std::result::Result<Vec<usize>, _> =
                        words.map(str::parse).collect();
                    sizes = Some(parsed.map_err(|e| bad(format!("layer size: {e}")))?);
                }
                Some("hidden") => match words.next() {
                    Some("relu") => hidden = Some(HiddenActivation::Relu),
                    other => return Err(bad(format!("unknown hidden activation {other:?}"))),
                },
                Some("output") => match (words.next(), words.next()) {
                    (Some("identity"), None) => output = Some(OutputActivation::Identity),
                    (Some("tanh_scaled"), Some(bound)) => {
                        let bound = bound
                            .parse()
                            .map_err(|e| bad(format!("tanh bound: {e}")))?;
                        output = Some(OutputActivation::TanhScaled(bound));
                    }
                    other => return Err(bad(format!("unknown output activation {other:?}"))),
                },
                Some(key) => return Err(bad(format!("unknown key {key:?}"))),
                None => unreachable!("blank lines are filtered"),
            }
        }
        MlpArch::new(
            sizes.ok_or_else(|| bad("missing `layers` line".into()))?,
            hidden.ok_or_else(|| bad("missing `hidden` line".into()))?,
            output.ok_or_else(|| bad("missing `output` line".into()))?,
        )
    }
}

/// Flat weights of one network; the genotype of an archive elite.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Fan-in uniform weights in `[-1/√n_in, 1/√n_in]`, zero biases.
pub fn mlp_init(arch: &MlpArch, seed: u64) -> ParamVector {
    mlp_init_with(arch, &mut rng_from_seed(seed))
}

pub fn mlp_init_with(arch: &MlpArch, rng: &mut Rng) -> ParamVector {
    let mut params = vec![0.0; arch.param_count()];
    for layer in arch.layers() {
        let limit = 1.0 / (layer.n_in as f64).sqrt();
        for w in &mut params[layer.weights()] {
            *w = rng.random_range(-limit..=limit);
        }
    }
    ParamVector(params)
}

pub fn mlp_forward(arch: &MlpArch, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
    arch.check_params(params)?;
    if input.len() != arch.input_dim() {
        return Err(Error::dims("network input", arch.input_dim(), input.len()));
    }
    let mut act = input.to_vec();
    for (l, layer) in arch.layers().enumerate() {
        let pre = dense(layer, params, &act);
        act = pre.into_iter().map(|z| arch.activate(l, z)).collect();
    }
    Ok(act)
}

fn dense(layer: LayerShape, params: &[f64], input: &[f64]) -> Vec<f64> {
    let weights = &params[layer.weights()];
    let bias = &params[layer.bias()];
    weights
        .chunks_exact(layer.n_in)
        .zip(bias)
        .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
        .collect()
}

/// Gradients of `⟨output, output_grad⟩` with respect to parameters and input.
pub fn mlp_backward(
    arch: &MlpArch,
    params: &[f64],
    input: &[f64],
    output_grad: &[f64],
) -> Result<(ParamVector, Vec<f64>)> {
    arch.check_params(params)?;
    if input.len() != arch.input_dim() {
        return Err(Error::dims("network input", arch.input_dim(), input.len()));
    }
    if output_grad.len() != arch.output_dim() {
        return Err(Error::dims("output gradient", arch.output_dim(), output_grad.len()));
    }

    let layers: Vec<LayerShape> = arch.layers().collect();
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pres = Vec::with_capacity(layers.len());
    let mut act = input.to_vec();
    for (l, &layer) in layers.iter().enumerate() {
        let pre = dense(layer, params, &act);
        let next = pre.iter().map(|&z| arch.activate(l, z)).collect();
        inputs.push(std::mem::replace(&mut act, next));
        pres.push(pre);
    }

    let mut grad = vec![0.0; params.len()];
    let mut upstream = output_grad.to_vec();
    for (l, &layer) in layers.iter().enumerate().rev() {
        let delta: Vec<f64> = upstream
            .iter()
            .zip(&pres[l])
            .map(|(g, &z)| g * arch.activate_grad(l, z))
            .collect();
        let x = &inputs[l];
        let w_range = layer.weights();
        for (o, &d) in delta.iter().enumerate() {
            let row = &mut grad[w_range.start + o * layer.n_in..w_range.start + (o + 1) * layer.n_in];
            for (g, xi) in row.iter_mut().zip(x) {
                *g = d * xi;
            }
        }
        grad[layer.bias()].copy_from_slice(&delta);

        let weights = &params[w_range];
        let mut down = vec![0.0; layer.n_in];
        for (row, &d) in weights.chunks_exact(layer.n_in).zip(&delta) {
            for (acc, w) in down.iter_mut().zip(row) {
                *acc += w * d;
            }
        }
        upstream = down;
    }
    Ok((ParamVector(grad), upstream))
}

/// Inserts `extra` zero-weight input columns after the existing inputs of
/// the first layer. The resulting network computes the same function of the
/// original inputs regardless of the values fed to the new ones.
pub fn widen_inputs(arch: &MlpArch, params: &[f64], extra: usize) -> (MlpArch, ParamVector) {
    let wide = arch.with_extra_inputs(extra);
    let mut out = Vec::with_capacity(wide.param_count());
    for (l, layer) in arch.layers().enumerate() {
        if l == 0 {
            for row in params[layer.weights()].chunks_exact(layer.n_in) {
                out.extend_from_slice(row);
                out.extend(std::iter::repeat_n(0.0, extra));
            }
            out.extend_from_slice(&params[layer.bias()]);
        } else {
            out.extend_from_slice(&params[layer.offset..layer.offset + layer.param_count()]);
        }
    }
    (wide, ParamVector(out))
}

/// Zeroes the first-layer weights attached to input columns `columns`.
pub fn zero_input_columns(arch: &MlpArch, values: &mut [f64], columns: Range<usize>) {
    let first = arch.layers().next().expect("at least one layer");
    let start = first.weights().start;
    for o in 0..first.n_out {
        let row = start + o * first.n_in;
        values[row + columns.start..row + columns.end].fill(0.0);
    }
}

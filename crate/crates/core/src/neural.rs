//! Dense tanh networks with hand-written reverse-mode gradients and Adam.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-layer nonlinearity; the output layer is always affine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitScheme {
    /// `U(−l, l)` with `l = √(6 / (fan_in + fan_out))`, zero biases.
    XavierUniform,
    Zeros,
}

/// Weights are stored per layer, row-major as `outputs × inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Per-sample activations, reused across calls to avoid reallocating.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl MlpParams {
    pub fn init(layer_dims: &[usize], seed: u64, scheme: InitScheme) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::Shape(format!("invalid layer dims {layer_dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let layer = (0..fan_in * fan_out)
                .map(|_| match scheme {
                    InitScheme::XavierUniform => rng.random_range(-limit..limit),
                    InitScheme::Zeros => 0.0,
                })
                .collect();
            weights.push(layer);
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self { layer_dims: layer_dims.to_vec(), activation: Activation::Tanh, weights, biases })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layer_dims: self.layer_dims.clone(),
            activation: self.activation,
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.layer_dims.len();
        if n < 2 || self.weights.len() != n - 1 || self.biases.len() != n - 1 {
            return Err(Error::Shape(format!("{} layer dims but {} weight and {} bias arrays", n, self.weights.len(), self.biases.len())));
        }
        for (l, w) in self.layer_dims.windows(2).enumerate() {
            if self.weights[l].len() != w[0] * w[1] || self.biases[l].len() != w[1] {
                return Err(Error::Shape(format!("layer {l} does not match dims {}x{}", w[1], w[0])));
            }
        }
        if self.values().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(())
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.layer_dims != other.layer_dims {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.layer_dims, other.layer_dims)));
        }
        Ok(())
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flatten().chain(self.biases.iter().flatten())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().flatten().chain(self.biases.iter_mut().flatten())
    }

    pub fn num_params(&self) -> usize {
        self.values().count()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!("input length {} != {}", input.len(), self.input_dim())));
        }
        Ok(())
    }

    fn hidden(&self, z: f64) -> f64 {
        match self.activation {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Forward pass keeping every layer's output in `ws`; returns the output.
    pub fn forward_with<'a>(&self, input: &[f64], ws: &'a mut Workspace) -> Result<&'a [f64]> {
        self.check_input(input)?;
        let layers = self.num_layers();
        ws.acts.resize(layers + 1, Vec::new());
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(input);
        for l in 0..layers {
            let (done, rest) = ws.acts.split_at_mut(l + 1);
            let x = &done[l];
            let out = &mut rest[0];
            let n_in = self.layer_dims[l];
            out.clear();
            for (row, b) in self.weights[l].chunks_exact(n_in).zip(&self.biases[l]) {
                let z = b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
                out.push(if l + 1 < layers { self.hidden(z) } else { z });
            }
        }
        Ok(&ws.acts[layers])
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut ws = Workspace::default();
        Ok(self.forward_with(input, &mut ws)?.to_vec())
    }

    /// Back-propagates `grad_output` through the pass stored in `ws` (which
    /// must come from [`forward_with`](Self::forward_with) on these
    /// parameters), adding parameter gradients into `grads` and returning the
    /// gradient with respect to the input.
    pub fn backward_with(&self, ws: &mut Workspace, grad_output: &[f64], grads: &mut MlpParams) -> Result<Vec<f64>> {
        if grad_output.len() != self.output_dim() {
            return Err(Error::Shape(format!("grad length {} != {}", grad_output.len(), self.output_dim())));
        }
        let layers = self.num_layers();
        if ws.acts.len() != layers + 1 {
            return Err(Error::Shape("workspace holds no forward pass".into()));
        }
        ws.delta.clear();
        ws.delta.extend_from_slice(grad_output);
        for l in (0..layers).rev() {
            let n_in = self.layer_dims[l];
            let x = &ws.acts[l];
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            ws.delta_prev.clear();
            ws.delta_prev.resize(n_in, 0.0);
            for (j, &d) in ws.delta.iter().enumerate() {
                gb[j] += d;
                let row = &self.weights[l][j * n_in..(j + 1) * n_in];
                let grow = &mut gw[j * n_in..(j + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * x[i];
                    ws.delta_prev[i] += d * row[i];
                }
            }
            if l > 0 && self.activation == Activation::Tanh {
                for (dp, a) in ws.delta_prev.iter_mut().zip(x) {
                    *dp *= 1.0 - a * a;
                }
            }
            std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
        Ok(ws.delta.clone())
    }
}

/// Gradient of `⟨mlp(input), grad_output⟩` with respect to every parameter.
pub fn mlp_backward(params: &MlpParams, input: &[f64], grad_output: &[f64]) -> Result<MlpParams> {
    let mut ws = Workspace::default();
    params.forward_with(input, &mut ws)?;
    let mut grads = params.zeros_like();
    params.backward_with(&mut ws, grad_output, &mut grads)?;
    Ok(grads)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: MlpParams,
    second: MlpParams,
}

impl AdamState {
    pub fn new(params: &MlpParams, config: AdamConfig) -> Self {
        Self { config, step: 0, first: params.zeros_like(), second: params.zeros_like() }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut MlpParams, grads: &MlpParams, state: &mut AdamState) -> Result<()> {
    params.same_shape(grads)?;
    params.same_shape(&state.first)?;
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let p = params.values_mut();
    let g = grads.values();
    let m = state.first.values_mut();
    let v = state.second.values_mut();
    for (((p, g), m), v) in p.zip(g).zip(m).zip(v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

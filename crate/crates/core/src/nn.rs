//! Fixed-architecture actor and critic networks with hand-written
//! backpropagation, plus the Adam optimizer that trains them.
//!
//! Actor: `obs → FC(hidden) → ReLU → FC(a)` is the common trunk; its output
//! feeds two heads `ReLU → FC(a)`, finished by a sigmoid (mean) and a
//! softplus (standard deviation). Critic: `obs → FC(hidden) → ReLU → FC(1)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{check_dim, Error, Result};
use crate::Rng;

/// Width of the hidden layer in both networks.
pub const HIDDEN: usize = 256;

/// Fully connected layer `y = W x + b`, `W` stored row-major
/// (`outputs × inputs`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform `±1/sqrt(inputs)` for weights and biases.
    pub fn init(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / libm::sqrt(inputs as f64);
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-bound..bound)).collect() };
        let weights = draw(inputs * outputs);
        let bias = draw(outputs);
        Self {
            inputs,
            outputs,
            weights,
            bias,
        }
    }

    /// Rebuilds a layer from stored values, checking the shapes.
    pub fn from_parts(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        check_dim("layer weights", inputs * outputs, weights.len())?;
        check_dim("layer bias", outputs, bias.len())?;
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("layer has non-finite parameters"));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Accumulates `dL/dW`, `dL/db` into `grad` and optionally writes
    /// `dL/dx`.
    #[inline]
    pub fn backward(&self, x: &[f64], dout: &[f64], grad: &mut Dense, dx: Option<&mut [f64]>) {
        for (o, &d) in dout.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad.bias[o] += d;
            let g = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
            for (gw, v) in g.iter_mut().zip(x) {
                *gw += d * v;
            }
        }
        if let Some(dx) = dx {
            dx.iter_mut().for_each(|v| *v = 0.0);
            for (o, &d) in dout.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                for (dv, w) in dx.iter_mut().zip(row) {
                    *dv += d * w;
                }
            }
        }
    }

    fn scale(&mut self, c: f64) {
        self.weights
            .iter_mut()
            .chain(self.bias.iter_mut())
            .for_each(|v| *v *= c);
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    relu(x) + libm::log1p(libm::exp(-libm::fabs(x)))
}

/// Layers of a network in a fixed order, for optimizers and serialization.
pub trait Layers {
    fn layers(&self) -> Vec<&Dense>;
    fn layers_mut(&mut self) -> Vec<&mut Dense>;

    fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    /// Parameters flattened layer by layer, weights before bias.
    fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    fn set_flat_params(&mut self, values: &[f64]) {
        let mut offset = 0;
        for l in self.layers_mut() {
            for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *v = values[offset];
                offset += 1;
            }
        }
    }

    fn all_finite(&self) -> bool {
        self.layers()
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

/// Gaussian policy network.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub common: Dense,
    pub trunk: Dense,
    pub mean_head: Dense,
    pub std_head: Dense,
}

/// Intermediate values of one actor forward pass.
#[derive(Debug, Clone, Default)]
pub struct ActorCache {
    pub obs: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    trunk_pre: Vec<f64>,
    trunk: Vec<f64>,
    mean_pre: Vec<f64>,
    std_pre: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Actor {
    pub fn new(obs_dim: usize, hidden: usize, action_dim: usize, rng: &mut Rng) -> Self {
        Self {
            common: Dense::init(obs_dim, hidden, rng),
            trunk: Dense::init(hidden, action_dim, rng),
            mean_head: Dense::init(action_dim, action_dim, rng),
            std_head: Dense::init(action_dim, action_dim, rng),
        }
    }

    pub fn zeros(obs_dim: usize, hidden: usize, action_dim: usize) -> Self {
        Self {
            common: Dense::zeros(obs_dim, hidden),
            trunk: Dense::zeros(hidden, action_dim),
            mean_head: Dense::zeros(action_dim, action_dim),
            std_head: Dense::zeros(action_dim, action_dim),
        }
    }

    /// Validates that the four layers chain together.
    pub fn from_layers(common: Dense, trunk: Dense, mean_head: Dense, std_head: Dense) -> Result<Self> {
        check_dim("actor trunk input", common.outputs, trunk.inputs)?;
        let a = trunk.outputs;
        check_dim("actor mean head input", a, mean_head.inputs)?;
        check_dim("actor mean head output", a, mean_head.outputs)?;
        check_dim("actor std head input", a, std_head.inputs)?;
        check_dim("actor std head output", a, std_head.outputs)?;
        Ok(Self {
            common,
            trunk,
            mean_head,
            std_head,
        })
    }

    /// Shrinks the deviation head so every output starts near `std`.
    pub fn set_initial_std(&mut self, std: f64) {
        // inverse softplus
        let b = std + libm::log(-libm::expm1(-std));
        self.std_head.scale(0.01);
        self.std_head.bias.iter_mut().for_each(|v| *v = b);
    }

    pub fn obs_dim(&self) -> usize {
        self.common.inputs
    }

    pub fn action_dim(&self) -> usize {
        self.trunk.outputs
    }

    pub fn forward_cached(&self, obs: &[f64]) -> Result<ActorCache> {
        check_dim("actor observation", self.obs_dim(), obs.len())?;
        let a = self.action_dim();
        let mut c = ActorCache {
            obs: obs.to_vec(),
            hidden_pre: vec![0.0; self.common.outputs],
            trunk_pre: vec![0.0; a],
            mean_pre: vec![0.0; a],
            std_pre: vec![0.0; a],
            ..Default::default()
        };
        self.common.forward(obs, &mut c.hidden_pre);
        c.hidden = c.hidden_pre.iter().map(|&v| relu(v)).collect();
        self.trunk.forward(&c.hidden, &mut c.trunk_pre);
        c.trunk = c.trunk_pre.iter().map(|&v| relu(v)).collect();
        self.mean_head.forward(&c.trunk, &mut c.mean_pre);
        self.std_head.forward(&c.trunk, &mut c.std_pre);
        c.mean = c.mean_pre.iter().map(|&v| sigmoid(v)).collect();
        c.std = c.std_pre.iter().map(|&v| softplus(v)).collect();
        Ok(c)
    }

    /// Mean in `(0,1)` and standard deviation `> 0` of every action component.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let c = self.forward_cached(obs)?;
        Ok((c.mean, c.std))
    }

    /// Backpropagates `dL/dmean`, `dL/dstd` through a cached pass,
    /// accumulating into `grad`.
    pub fn backward(&self, c: &ActorCache, dmean: &[f64], dstd: &[f64], grad: &mut Actor) {
        let a = self.action_dim();
        let dmean_pre: Vec<f64> = (0..a).map(|k| dmean[k] * c.mean[k] * (1.0 - c.mean[k])).collect();
        let dstd_pre: Vec<f64> = (0..a).map(|k| dstd[k] * sigmoid(c.std_pre[k])).collect();

        let mut dtrunk = vec![0.0; a];
        let mut tmp = vec![0.0; a];
        self.mean_head
            .backward(&c.trunk, &dmean_pre, &mut grad.mean_head, Some(&mut dtrunk));
        self.std_head
            .backward(&c.trunk, &dstd_pre, &mut grad.std_head, Some(&mut tmp));
        for k in 0..a {
            dtrunk[k] = if c.trunk_pre[k] > 0.0 { dtrunk[k] + tmp[k] } else { 0.0 };
        }

        let mut dhidden = vec![0.0; self.common.outputs];
        self.trunk
            .backward(&c.hidden, &dtrunk, &mut grad.trunk, Some(&mut dhidden));
        for (d, &pre) in dhidden.iter_mut().zip(&c.hidden_pre) {
            if pre <= 0.0 {
                *d = 0.0;
            }
        }
        self.common.backward(&c.obs, &dhidden, &mut grad.common, None);
    }

    pub fn zeros_like(&self) -> Actor {
        Actor::zeros(self.obs_dim(), self.common.outputs, self.action_dim())
    }
}

impl Layers for Actor {
    fn layers(&self) -> Vec<&Dense> {
        vec![&self.common, &self.trunk, &self.mean_head, &self.std_head]
    }

    fn layers_mut(&mut self) -> Vec<&mut Dense> {
        vec![
            &mut self.common,
            &mut self.trunk,
            &mut self.mean_head,
            &mut self.std_head,
        ]
    }
}

/// State-value network.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub hidden: Dense,
    pub output: Dense,
}

#[derive(Debug, Clone, Default)]
pub struct CriticCache {
    pub obs: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    pub value: f64,
}

impl Critic {
    pub fn new(obs_dim: usize, hidden: usize, rng: &mut Rng) -> Self {
        Self {
            hidden: Dense::init(obs_dim, hidden, rng),
            output: Dense::init(hidden, 1, rng),
        }
    }

    pub fn zeros(obs_dim: usize, hidden: usize) -> Self {
        Self {
            hidden: Dense::zeros(obs_dim, hidden),
            output: Dense::zeros(hidden, 1),
        }
    }

    pub fn from_layers(hidden: Dense, output: Dense) -> Result<Self> {
        check_dim("critic output input", hidden.outputs, output.inputs)?;
        check_dim("critic output width", 1, output.outputs)?;
        Ok(Self { hidden, output })
    }

    pub fn obs_dim(&self) -> usize {
        self.hidden.inputs
    }

    pub fn forward_cached(&self, obs: &[f64]) -> Result<CriticCache> {
        check_dim("critic observation", self.obs_dim(), obs.len())?;
        let mut hidden_pre = vec![0.0; self.hidden.outputs];
        self.hidden.forward(obs, &mut hidden_pre);
        let hidden: Vec<f64> = hidden_pre.iter().map(|&v| relu(v)).collect();
        let mut value = [0.0];
        self.output.forward(&hidden, &mut value);
        Ok(CriticCache {
            obs: obs.to_vec(),
            hidden_pre,
            hidden,
            value: value[0],
        })
    }

    pub fn forward(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.forward_cached(obs)?.value)
    }

    pub fn backward(&self, c: &CriticCache, dvalue: f64, grad: &mut Critic) {
        let mut dhidden = vec![0.0; self.hidden.outputs];
        self.output
            .backward(&c.hidden, &[dvalue], &mut grad.output, Some(&mut dhidden));
        for (d, &pre) in dhidden.iter_mut().zip(&c.hidden_pre) {
            if pre <= 0.0 {
                *d = 0.0;
            }
        }
        self.hidden.backward(&c.obs, &dhidden, &mut grad.hidden, None);
    }

    pub fn zeros_like(&self) -> Critic {
        Critic::zeros(self.obs_dim(), self.hidden.outputs)
    }

    /// Multiplies the last layer by `c`, which multiplies the output by `c`.
    pub fn scale_output(&mut self, c: f64) {
        self.output.scale(c);
    }
}

impl Layers for Critic {
    fn layers(&self) -> Vec<&Dense> {
        vec![&self.hidden, &self.output]
    }

    fn layers_mut(&mut self) -> Vec<&mut Dense> {
        vec![&mut self.hidden, &mut self.output]
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, param_count: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// Descends along `grad` (a network of the same shape holding dL/dθ).
    pub fn step<N: Layers>(&mut self, params: &mut N, grad: &N) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        let mut idx = 0;
        for (p, g) in params.layers_mut().into_iter().zip(grad.layers()) {
            for (w, &dw) in p
                .weights
                .iter_mut()
                .chain(p.bias.iter_mut())
                .zip(g.weights.iter().chain(&g.bias))
            {
                let m = &mut self.m[idx];
                let v = &mut self.v[idx];
                *m = self.beta1 * *m + (1.0 - self.beta1) * dw;
                *v = self.beta2 * *v + (1.0 - self.beta2) * dw * dw;
                *w -= self.lr * (*m / c1) / (libm::sqrt(*v / c2) + self.eps);
                idx += 1;
            }
        }
    }
}

/// Euclidean norm of all gradient entries.
pub fn grad_norm<N: Layers>(grad: &N) -> f64 {
    libm::sqrt(
        grad.layers()
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .map(|g| g * g)
            .sum(),
    )
}

/// Rescales `grad` so its norm is at most `max_norm`.
pub fn clip_grad<N: Layers>(grad: &mut N, max_norm: f64) {
    let norm = grad_norm(grad);
    if norm > max_norm {
        let c = max_norm / norm;
        for l in grad.layers_mut() {
            l.scale(c);
        }
    }
}

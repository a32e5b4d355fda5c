//! Spike-and-slab encoder/decoder pair.
//!
//! The encoder maps an image to slab means `μ`, slab log-variances and spike
//! probabilities `γ`. A latent sample multiplies a Gaussian slab draw by a
//! relaxed Bernoulli spike,
//!
//! ```text
//! slab = μ + exp(½·log σ²) ⊙ ε,        ε ~ N(0, 1)
//! s    = sigmoid(c · (u − (1 − γ))),   u ~ U(0, 1)
//! z    = s ⊙ slab
//! ```
//!
//! which tends to a hard `Bernoulli(γ)` gate as the temperature `c` grows.
//! The decoder maps `z` back to per-pixel logits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::rng::{Purpose, RngStream};
use crate::nn::{affine_backward, affine_forward, sigmoid, Activation, NnError, ParamStore, Tensor2D};

pub const LOG_VAR_MIN: f64 = -10.0;
pub const LOG_VAR_MAX: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
}

/// Linear ramp of the spike relaxation temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemperatureSchedule {
    pub c_start: f64,
    pub c_end: f64,
    pub ramp_epochs: u32,
}

impl TemperatureSchedule {
    /// Temperature for a 1-based epoch: `c_start` at epoch 1, reaching
    /// `c_end` after `ramp_epochs` epochs.
    pub fn at(&self, epoch: u32) -> f64 {
        if self.ramp_epochs == 0 {
            return self.c_end;
        }
        let t = (f64::from(epoch.saturating_sub(1)) / f64::from(self.ramp_epochs)).min(1.0);
        self.c_start + (self.c_end - self.c_start) * t
    }
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule {
            c_start: 10.0,
            c_end: 200.0,
            ramp_epochs: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    /// Prior probability that a latent dimension is active.
    pub alpha: f64,
    /// `γ` is clamped to `[gamma_eps, 1 − gamma_eps]`.
    pub gamma_eps: f64,
    pub temperature: TemperatureSchedule,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim: 784,
            latent_dim: 32,
            hidden: 400,
            alpha: 0.05,
            gamma_eps: 1e-6,
            temperature: TemperatureSchedule::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.latent_dim < 2 {
            return bad("latent_dim must be at least 2");
        }
        if self.input_dim == 0 || self.hidden == 0 {
            return bad("input_dim and hidden must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.gamma_eps > 0.0 && self.gamma_eps < 0.5) {
            return bad("gamma_eps must lie in (0, 0.5)");
        }
        let t = &self.temperature;
        if !(t.c_start > 0.0 && t.c_start <= t.c_end) {
            return bad("temperature needs 0 < c_start <= c_end");
        }
        Ok(())
    }
}

/// Encoder output for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSlabPosterior {
    pub mu: Tensor2D,
    /// Slab log-variance, clamped to `[-10, 10]`.
    pub log_var: Tensor2D,
    /// Spike probabilities, clamped to `[ε, 1 − ε]`.
    pub gamma: Tensor2D,
}

impl SpikeSlabPosterior {
    pub fn batch(&self) -> usize {
        self.mu.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.mu.cols()
    }
}

/// Gradients of a scalar loss with respect to the posterior parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrads {
    pub mu: Tensor2D,
    pub log_var: Tensor2D,
    pub gamma: Tensor2D,
}

impl PosteriorGrads {
    pub fn zeros(batch: usize, d: usize) -> Self {
        PosteriorGrads {
            mu: Tensor2D::zeros(batch, d),
            log_var: Tensor2D::zeros(batch, d),
            gamma: Tensor2D::zeros(batch, d),
        }
    }

    pub fn add_assign(&mut self, other: &PosteriorGrads) -> Result<(), NnError> {
        self.mu.add_assign(&other.mu)?;
        self.log_var.add_assign(&other.log_var)?;
        self.gamma.add_assign(&other.gamma)
    }
}

/// One reparameterized draw with the noise that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub z: Tensor2D,
    pub slab_noise: Tensor2D,
    pub spike_noise: Tensor2D,
    pub slab: Tensor2D,
    pub spike: Tensor2D,
    pub temperature: f64,
}

/// Intermediate values of an encoder pass needed by its backward pass.
#[derive(Debug, Clone)]
pub struct EncoderTrace {
    x: Tensor2D,
    hidden_pre: Tensor2D,
    hidden: Tensor2D,
    log_var_raw: Tensor2D,
    gamma_logit: Tensor2D,
}

/// Intermediate values of a decoder pass needed by its backward pass.
#[derive(Debug, Clone)]
pub struct DecoderTrace {
    z: Tensor2D,
    hidden_pre: Tensor2D,
    hidden: Tensor2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    enc_w: usize,
    enc_b: usize,
    mu_w: usize,
    mu_b: usize,
    lv_w: usize,
    lv_b: usize,
    gamma_w: usize,
    gamma_b: usize,
    dec_w: usize,
    dec_b: usize,
    out_w: usize,
    out_b: usize,
}

/// Parameter names in store order.
pub const PARAM_NAMES: [&str; 12] = [
    "enc.hidden.weight",
    "enc.hidden.bias",
    "enc.mu.weight",
    "enc.mu.bias",
    "enc.log_var.weight",
    "enc.log_var.bias",
    "enc.gamma.weight",
    "enc.gamma.bias",
    "dec.hidden.weight",
    "dec.hidden.bias",
    "dec.out.weight",
    "dec.out.bias",
];

impl Layout {
    fn resolve(params: &ParamStore) -> Result<Self, ModelError> {
        let idx = |name: &str| {
            params
                .index_of(name)
                .ok_or_else(|| ModelError::Nn(NnError::UnknownParam(name.to_string())))
        };
        let [a, b, c, d, e, f, g, h, i, j, k, l] = PARAM_NAMES;
        Ok(Layout {
            enc_w: idx(a)?,
            enc_b: idx(b)?,
            mu_w: idx(c)?,
            mu_b: idx(d)?,
            lv_w: idx(e)?,
            lv_b: idx(f)?,
            gamma_w: idx(g)?,
            gamma_b: idx(h)?,
            dec_w: idx(i)?,
            dec_b: idx(j)?,
            out_w: idx(k)?,
            out_b: idx(l)?,
        })
    }
}

/// Encoder `input → hidden (ReLU) → {μ, log σ², γ}` and decoder
/// `latent → hidden (ReLU) → logits`.
#[derive(Debug, Clone, PartialEq)]
pub struct VscModel {
    config: ModelConfig,
    params: ParamStore,
    layout: Layout,
}

fn shapes(config: &ModelConfig) -> [(usize, usize); 12] {
    let (n, h, d) = (config.input_dim, config.hidden, config.latent_dim);
    [
        (n, h),
        (1, h),
        (h, d),
        (1, d),
        (h, d),
        (1, d),
        (h, d),
        (1, d),
        (d, h),
        (1, h),
        (h, n),
        (1, n),
    ]
}

impl VscModel {
    /// Initializes every weight and bias from `U(−1/√fan_in, 1/√fan_in)`
    /// using the run's init stream.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = RngStream::for_purpose(seed, Purpose::Init, 0, 0);
        let mut params = ParamStore::new();
        let shapes = shapes(&config);
        for (k, (name, &(rows, cols))) in PARAM_NAMES.iter().zip(shapes.iter()).enumerate() {
            // biases share the fan-in of the weight registered just before them
            let fan_in = if rows == 1 { shapes[k - 1].0 } else { rows };
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..rows * cols).map(|_| (2.0 * rng.uniform() - 1.0) * bound).collect();
            params.insert(*name, Tensor2D::from_vec(rows, cols, data)?)?;
        }
        let layout = Layout::resolve(&params)?;
        Ok(VscModel { config, params, layout })
    }

    /// Rebuilds a model from a parameter store, checking names and shapes.
    pub fn from_params(config: ModelConfig, params: ParamStore) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = Layout::resolve(&params)?;
        if params.len() != PARAM_NAMES.len() {
            return Err(ModelError::InvalidConfig(format!(
                "expected {} parameters, found {}",
                PARAM_NAMES.len(),
                params.len()
            )));
        }
        for (p, &shape) in params.iter().zip(shapes(&config).iter()) {
            if p.value.shape() != shape {
                return Err(ModelError::Nn(NnError::ShapeMismatch {
                    op: "from_params",
                    left: shape,
                    right: p.value.shape(),
                }));
            }
        }
        Ok(VscModel { config, params, layout })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore {
        self.params
    }

    pub fn encode(&self, x: &Tensor2D) -> Result<SpikeSlabPosterior, ModelError> {
        Ok(self.encode_traced(x)?.0)
    }

    pub fn encode_traced(&self, x: &Tensor2D) -> Result<(SpikeSlabPosterior, EncoderTrace), ModelError> {
        let p = &self.params;
        let l = &self.layout;
        if x.cols() != self.config.input_dim {
            return Err(NnError::ShapeMismatch {
                op: "encode",
                left: (x.rows(), self.config.input_dim),
                right: x.shape(),
            }
            .into());
        }
        let hidden_pre = affine_forward(x, p.value(l.enc_w), p.value(l.enc_b))?;
        let hidden = hidden_pre.map(|v| Activation::Relu.apply(v));
        let mu = affine_forward(&hidden, p.value(l.mu_w), p.value(l.mu_b))?;
        let log_var_raw = affine_forward(&hidden, p.value(l.lv_w), p.value(l.lv_b))?;
        let gamma_logit = affine_forward(&hidden, p.value(l.gamma_w), p.value(l.gamma_b))?;
        let eps = self.config.gamma_eps;
        let log_var = log_var_raw.map(|v| v.clamp(LOG_VAR_MIN, LOG_VAR_MAX));
        let gamma = gamma_logit.map(|v| sigmoid(v).clamp(eps, 1.0 - eps));
        Ok((
            SpikeSlabPosterior { mu, log_var, gamma },
            EncoderTrace {
                x: x.clone(),
                hidden_pre,
                hidden,
                log_var_raw,
                gamma_logit,
            },
        ))
    }

    pub fn decode(&self, z: &Tensor2D) -> Result<Tensor2D, ModelError> {
        Ok(self.decode_traced(z)?.0)
    }

    pub fn decode_traced(&self, z: &Tensor2D) -> Result<(Tensor2D, DecoderTrace), ModelError> {
        let p = &self.params;
        let l = &self.layout;
        if z.cols() != self.config.latent_dim {
            return Err(NnError::ShapeMismatch {
                op: "decode",
                left: (z.rows(), self.config.latent_dim),
                right: z.shape(),
            }
            .into());
        }
        let hidden_pre = affine_forward(z, p.value(l.dec_w), p.value(l.dec_b))?;
        let hidden = hidden_pre.map(|v| Activation::Relu.apply(v));
        let logits = affine_forward(&hidden, p.value(l.out_w), p.value(l.out_b))?;
        Ok((
            logits,
            DecoderTrace {
                z: z.clone(),
                hidden_pre,
                hidden,
            },
        ))
    }

    /// Backpropagates `dlogits` through the decoder, accumulating parameter
    /// gradients, and returns `dL/dz`.
    pub fn decoder_backward(&mut self, trace: &DecoderTrace, dlogits: &Tensor2D) -> Result<Tensor2D, ModelError> {
        let l = self.layout;
        let out = affine_backward(&trace.hidden, self.params.value(l.out_w), dlogits)?;
        self.params.accumulate(l.out_w, &out.dw)?;
        self.params.accumulate(l.out_b, &out.db)?;
        let dpre = relu_backward(&trace.hidden_pre, &out.dx)?;
        let hid = affine_backward(&trace.z, self.params.value(l.dec_w), &dpre)?;
        self.params.accumulate(l.dec_w, &hid.dw)?;
        self.params.accumulate(l.dec_b, &hid.db)?;
        Ok(hid.dx)
    }

    /// Backpropagates posterior gradients through the clamps, the three heads
    /// and the shared hidden layer, accumulating parameter gradients.
    pub fn encoder_backward(&mut self, trace: &EncoderTrace, grads: &PosteriorGrads) -> Result<(), ModelError> {
        let l = self.layout;
        let eps = self.config.gamma_eps;
        let dlv_raw = trace.log_var_raw.zip_map(&grads.log_var, |raw, g| {
            if (LOG_VAR_MIN..=LOG_VAR_MAX).contains(&raw) {
                g
            } else {
                0.0
            }
        })?;
        let dgamma_logit = trace.gamma_logit.zip_map(&grads.gamma, |logit, g| {
            let s = sigmoid(logit);
            if (eps..=1.0 - eps).contains(&s) {
                g * s * (1.0 - s)
            } else {
                0.0
            }
        })?;

        let mu = affine_backward(&trace.hidden, self.params.value(l.mu_w), &grads.mu)?;
        let lv = affine_backward(&trace.hidden, self.params.value(l.lv_w), &dlv_raw)?;
        let gm = affine_backward(&trace.hidden, self.params.value(l.gamma_w), &dgamma_logit)?;
        self.params.accumulate(l.mu_w, &mu.dw)?;
        self.params.accumulate(l.mu_b, &mu.db)?;
        self.params.accumulate(l.lv_w, &lv.dw)?;
        self.params.accumulate(l.lv_b, &lv.db)?;
        self.params.accumulate(l.gamma_w, &gm.dw)?;
        self.params.accumulate(l.gamma_b, &gm.db)?;

        let mut dhidden = mu.dx;
        dhidden.add_assign(&lv.dx)?;
        dhidden.add_assign(&gm.dx)?;
        let dpre = relu_backward(&trace.hidden_pre, &dhidden)?;
        let enc = affine_backward(&trace.x, self.params.value(l.enc_w), &dpre)?;
        self.params.accumulate(l.enc_w, &enc.dw)?;
        self.params.accumulate(l.enc_b, &enc.db)?;
        Ok(())
    }

    /// Posterior mean with hard spikes, `μ ⊙ round(γ)`.
    pub fn hard_spike_mean(post: &SpikeSlabPosterior) -> Tensor2D {
        post.mu
            .zip_map(&post.gamma, |m, g| if g >= 0.5 { m } else { 0.0 })
            .expect("posterior fields share a shape")
    }
}

fn relu_backward(pre: &Tensor2D, upstream: &Tensor2D) -> Result<Tensor2D, NnError> {
    pre.zip_map(upstream, |x, g| g * Activation::Relu.derivative(x))
}

/// Draws `z = s ⊙ (μ + σ ⊙ ε)` with fresh noise from `rng`.
///
/// All `ε` are drawn first (row-major), then all `u`.
pub fn reparameterize(
    post: &SpikeSlabPosterior,
    rng: &mut RngStream,
    temperature: f64,
) -> Result<LatentSample, ModelError> {
    let (rows, cols) = post.mu.shape();
    let slab_noise = Tensor2D::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect())?;
    let spike_noise = Tensor2D::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform()).collect())?;
    reparameterize_with(post, slab_noise, spike_noise, temperature)
}

/// Deterministic reparameterization from recorded noise.
pub fn reparameterize_with(
    post: &SpikeSlabPosterior,
    slab_noise: Tensor2D,
    spike_noise: Tensor2D,
    temperature: f64,
) -> Result<LatentSample, ModelError> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(ModelError::BadTemperature(temperature));
    }
    let std = post.log_var.map(|lv| (0.5 * lv).exp());
    let mut slab = std.zip_map(&slab_noise, |s, e| s * e)?;
    slab.add_assign(&post.mu)?;
    let spike = spike_noise.zip_map(&post.gamma, |u, g| sigmoid(temperature * (u - (1.0 - g))))?;
    let z = spike.zip_map(&slab, |s, v| s * v)?;
    Ok(LatentSample {
        z,
        slab_noise,
        spike_noise,
        slab,
        spike,
        temperature,
    })
}

/// Chain rule from `dL/dz` back to the posterior parameters along the
/// reparameterization path.
pub fn reparameterize_backward(
    post: &SpikeSlabPosterior,
    sample: &LatentSample,
    dz: &Tensor2D,
) -> Result<PosteriorGrads, ModelError> {
    let c = sample.temperature;
    let dslab = dz.zip_map(&sample.spike, |g, s| g * s)?;
    let dspike = dz.zip_map(&sample.slab, |g, v| g * v)?;
    let half_std = post.log_var.map(|lv| 0.5 * (0.5 * lv).exp());
    let dlog_var = dslab
        .zip_map(&sample.slab_noise, |g, e| g * e)?
        .zip_map(&half_std, |g, h| g * h)?;
    let dgamma = dspike.zip_map(&sample.spike, |g, s| g * c * s * (1.0 - s))?;
    Ok(PosteriorGrads {
        mu: dslab,
        log_var: dlog_var,
        gamma: dgamma,
    })
}

/// The per-sample `γ` rows of a posterior.
pub fn gamma_of(post: &SpikeSlabPosterior) -> Vec<crate::losses::GammaVector> {
    post.gamma
        .iter_rows()
        .map(|r| crate::losses::GammaVector::from_clamped(r.to_vec()))
        .collect()
}

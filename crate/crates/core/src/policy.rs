//! Feedforward softmax policies over a finite action set.
//!
//! Parameters live in one flat vector, layer by layer, each layer stored as a
//! row-major `out × in` weight block followed by its `out` biases. Hidden
//! layers use ReLU; the output layer produces logits.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::PreferenceExample;
use crate::error::{Result, SpoError};
use crate::fdiv::{log_sum_exp, FDivergence, ProbabilityRow};

/// Flat gradient aligned with [`MlpPolicy::params`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.is_finite())
    }

    pub fn scale(&mut self, c: f64) {
        self.0.iter_mut().for_each(|g| *g *= c);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpPolicy {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Activations retained from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l]` the post-ReLU output of layer `l`.
    activations: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
}

/// JSON sidecar describing a raw little-endian `f64` parameter file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub dims: Vec<usize>,
    pub num_params: usize,
    pub dtype: String,
    pub data_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpPolicy {
    /// All-zero parameters: uniform policy for every context.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::check_dims(dims)?;
        Ok(MlpPolicy { dims: dims.to_vec(), params: vec![0.0; param_count(dims)] })
    }

    /// Per-layer uniform init in `[−1/√fan_in, 1/√fan_in]` for weights and biases.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        Self::check_dims(dims)?;
        let mut params = Vec::with_capacity(param_count(dims));
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] * w[1] + w[1]) {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Ok(MlpPolicy { dims: dims.to_vec(), params })
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        Self::check_dims(dims)?;
        let expected = param_count(dims);
        if params.len() != expected {
            return Err(SpoError::DimensionMismatch { expected, got: params.len() });
        }
        Ok(MlpPolicy { dims: dims.to_vec(), params })
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(SpoError::Config(format!("invalid layer sizes {dims:?}")));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn num_actions(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Zeroes the output layer so the policy is uniform; hidden layers keep their values.
    pub fn zero_output_layer(&mut self) {
        let n = self.dims.len();
        let last = self.dims[n - 2] * self.dims[n - 1] + self.dims[n - 1];
        let len = self.params.len();
        self.params[len - last..].iter_mut().for_each(|p| *p = 0.0);
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.input_dim() {
            return Err(SpoError::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        let layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(layers);
        activations.push(x.to_vec());
        let mut offset = 0;
        let mut logits = Vec::new();
        for l in 0..layers {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let input = activations.last().unwrap();
            let mut out: Vec<f64> = weights
                .chunks_exact(fan_in)
                .zip(biases)
                .map(|(row, b)| b + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>())
                .collect();
            if l + 1 < layers {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
                activations.push(out);
            } else {
                logits = out;
            }
        }
        let lse = log_sum_exp(&logits);
        let log_probs = logits.iter().map(|v| v - lse).collect();
        Ok(ForwardCache { activations, log_probs })
    }

    pub fn log_prob(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.log_probs)
    }

    pub fn prob_row(&self, x: &[f64]) -> Result<ProbabilityRow> {
        ProbabilityRow::from_weights(self.log_prob(x)?.iter().map(|l| l.exp()).collect())
    }

    /// Gradient of `Σ_y upstream_y · log π_θ(y|x)` with respect to all parameters.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<GradientVector> {
        let cache = self.forward(x)?;
        let mut grad = GradientVector::zeros(self.num_params());
        self.backward_into(&cache, upstream, &mut grad.0)?;
        Ok(grad)
    }

    /// Accumulates the gradient for a cached forward pass into `grad`.
    pub fn backward_into(&self, cache: &ForwardCache, upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        let k = self.num_actions();
        if upstream.len() != k {
            return Err(SpoError::DimensionMismatch { expected: k, got: upstream.len() });
        }
        if grad.len() != self.num_params() {
            return Err(SpoError::DimensionMismatch { expected: self.num_params(), got: grad.len() });
        }
        let total: f64 = upstream.iter().sum();
        // d/dlogit_k Σ u_y (logit_y − lse) = u_k − π_k Σ u
        let mut delta: Vec<f64> = upstream
            .iter()
            .zip(&cache.log_probs)
            .map(|(u, lp)| u - lp.exp() * total)
            .collect();

        let layers = self.dims.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for w in self.dims.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let base = offsets[l];
            let input = &cache.activations[l];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * fan_in..base + (o + 1) * fan_in];
                row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                grad[base + fan_in * fan_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let weights = &self.params[base..base + fan_in * fan_out];
            let mut next = vec![0.0; fan_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                next.iter_mut().zip(row).for_each(|(n, w)| *n += d * w);
            }
            // ReLU gate on the layer's own output
            next.iter_mut().zip(input).for_each(|(n, a)| {
                if *a <= 0.0 {
                    *n = 0.0
                }
            });
            delta = next;
        }
        Ok(())
    }

    /// Writes `<stem>.f64` (raw little-endian) and `<stem>.json` (shape header).
    pub fn save_checkpoint(&self, dir: &Path, stem: &str, seed: Option<u64>) -> Result<()> {
        let data_file = format!("{stem}.f64");
        let bytes: Vec<u8> = self.params.iter().flat_map(|p| p.to_le_bytes()).collect();
        fs::write(dir.join(&data_file), bytes)?;
        let header = CheckpointHeader {
            dims: self.dims.clone(),
            num_params: self.params.len(),
            dtype: "f64-le".into(),
            data_file,
            seed,
        };
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&header)?)?;
        Ok(())
    }

    /// Loads a checkpoint given the path of its JSON header.
    pub fn load_checkpoint(header_path: &Path) -> Result<Self> {
        let header: CheckpointHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
        if header.dtype != "f64-le" {
            return Err(SpoError::Config(format!("unsupported dtype {}", header.dtype)));
        }
        let dir = header_path.parent().unwrap_or_else(|| Path::new("."));
        let bytes = fs::read(dir.join(&header.data_file))?;
        if bytes.len() != header.num_params * 8 {
            return Err(SpoError::DimensionMismatch { expected: header.num_params * 8, got: bytes.len() });
        }
        let params = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        MlpPolicy::from_params(&header.dims, params)
    }
}

/// The frozen reference policy `π_ref(·|x)`.
#[derive(Clone, Debug)]
pub enum Reference {
    Uniform { actions: usize },
    Fixed(ProbabilityRow),
    Policy(MlpPolicy),
}

impl Reference {
    pub fn num_actions(&self) -> usize {
        match self {
            Reference::Uniform { actions } => *actions,
            Reference::Fixed(row) => row.len(),
            Reference::Policy(p) => p.num_actions(),
        }
    }

    pub fn log_prob(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Reference::Uniform { actions } => Ok(vec![-(*actions as f64).ln(); *actions]),
            Reference::Fixed(row) => Ok(row.as_slice().iter().map(|p| p.ln()).collect()),
            Reference::Policy(p) => p.log_prob(x),
        }
    }

    pub fn row(&self, x: &[f64]) -> Result<ProbabilityRow> {
        match self {
            Reference::Uniform { actions } => Ok(ProbabilityRow::uniform(*actions)),
            Reference::Fixed(row) => Ok(row.clone()),
            Reference::Policy(p) => p.prob_row(x),
        }
    }
}

fn log_ratios(policy: &MlpPolicy, reference: &Reference, log_probs: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let ref_lp = reference.log_prob(x)?;
    if ref_lp.len() != policy.num_actions() {
        return Err(SpoError::DimensionMismatch { expected: policy.num_actions(), got: ref_lp.len() });
    }
    Ok(log_probs.iter().zip(&ref_lp).map(|(a, b)| a - b).collect())
}

/// Potential row `h_θ(x, ·) = f'(π_θ(·|x)/π_ref(·|x))`.
pub fn potential_row(policy: &MlpPolicy, spec: &FDivergence, reference: &Reference, x: &[f64]) -> Result<Vec<f64>> {
    let lp = policy.log_prob(x)?;
    let lr = log_ratios(policy, reference, &lp, x)?;
    lr.iter()
        .map(|&l| {
            if l.is_finite() {
                Ok(spec.potential_from_log_ratio(l))
            } else {
                Err(SpoError::Domain("reference assigns zero mass to an action".into()))
            }
        })
        .collect()
}

pub fn potential(policy: &MlpPolicy, spec: &FDivergence, reference: &Reference, x: &[f64], y: usize) -> Result<f64> {
    let lp = policy.log_prob(x)?;
    let ref_lp = reference.log_prob(x)?;
    let (a, b) = (
        *lp.get(y).ok_or(SpoError::DimensionMismatch { expected: lp.len(), got: y + 1 })?,
        ref_lp[y],
    );
    if !b.is_finite() {
        return Err(SpoError::Domain(format!("reference assigns zero mass to action {y}")));
    }
    Ok(spec.potential_from_log_ratio(a - b))
}

/// `t_θ(w) = h_θ(x, y1) − h_θ(x, y0)`.
pub fn index(policy: &MlpPolicy, spec: &FDivergence, reference: &Reference, example: &PreferenceExample) -> Result<f64> {
    Ok(index_term(policy, spec, reference, example)?.t)
}

/// Index of one example together with what its gradient needs.
#[derive(Clone, Debug)]
pub struct IndexTerm {
    pub t: f64,
    /// `∂t/∂ log π_θ(y1|x)` and `∂t/∂ log π_θ(y0|x)`.
    pub slope_y1: f64,
    pub slope_y0: f64,
    pub cache: ForwardCache,
}

pub fn index_term(
    policy: &MlpPolicy,
    spec: &FDivergence,
    reference: &Reference,
    example: &PreferenceExample,
) -> Result<IndexTerm> {
    let k = policy.num_actions();
    if example.y0 >= k || example.y1 >= k {
        return Err(SpoError::DimensionMismatch { expected: k, got: example.y0.max(example.y1) + 1 });
    }
    let cache = policy.forward(&example.x)?;
    let ref_lp = reference.log_prob(&example.x)?;
    if !ref_lp[example.y0].is_finite() || !ref_lp[example.y1].is_finite() {
        return Err(SpoError::Domain("reference assigns zero mass to a compared action".into()));
    }
    let lr1 = cache.log_probs[example.y1] - ref_lp[example.y1];
    let lr0 = cache.log_probs[example.y0] - ref_lp[example.y0];
    let t = if example.y0 == example.y1 {
        0.0
    } else {
        spec.potential_from_log_ratio(lr1) - spec.potential_from_log_ratio(lr0)
    };
    Ok(IndexTerm {
        t,
        slope_y1: spec.potential_slope(lr1),
        slope_y0: -spec.potential_slope(lr0),
        cache,
    })
}

/// Back-propagates per-example `∂L/∂t_i` into a parameter gradient.
pub fn index_backward(
    policy: &MlpPolicy,
    terms: &[IndexTerm],
    examples: &[&PreferenceExample],
    dloss_dt: &[f64],
) -> Result<GradientVector> {
    let mut grad = GradientVector::zeros(policy.num_params());
    let mut upstream = vec![0.0; policy.num_actions()];
    for ((term, ex), &g) in terms.iter().zip(examples).zip(dloss_dt) {
        if g == 0.0 || ex.y0 == ex.y1 {
            continue;
        }
        upstream.iter_mut().for_each(|u| *u = 0.0);
        upstream[ex.y1] += g * term.slope_y1;
        upstream[ex.y0] += g * term.slope_y0;
        policy.backward_into(&term.cache, &upstream, &mut grad.0)?;
    }
    Ok(grad)
}

//! DPO, PSPO, OSPO and RSPO (PoP-DPO) learners.
//!
//! Every loss is a function of the per-example index `t_i` only. Each loss
//! computes `∂L/∂t_i` and hands it to [`index_backward`], so all four share
//! one gradient path through the policy network.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::PreferenceExample;
use crate::error::{Result, SpoError};
use crate::fdiv::FDivergence;
use crate::link::{pava_fit, sigmoid, Exclude, Kernel, KernelBank, MonotoneLink};
use crate::policy::{index_backward, index_term, GradientVector, IndexTerm, MlpPolicy, Reference};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Dpo,
    Pspo,
    Ospo,
    Rspo,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Dpo, Method::Pspo, Method::Ospo, Method::Rspo];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Dpo => "DPO",
            Method::Pspo => "PSPO",
            Method::Ospo => "OSPO",
            Method::Rspo => "RSPO",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SpoError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DPO" => Ok(Method::Dpo),
            "PSPO" => Ok(Method::Pspo),
            "OSPO" => Ok(Method::Ospo),
            "RSPO" | "POP-DPO" => Ok(Method::Rspo),
            other => Err(SpoError::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// When PSPO refits its isotonic link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RefitSchedule {
    /// Every `p` optimizer steps.
    Steps(usize),
    /// At the start of every `k`-th epoch.
    Epochs(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Independent uniform fan-in init.
    Random,
    /// Random hidden layers with a zeroed output layer (zero potential under a uniform reference).
    ZeroPotential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: usize,
    /// DPO warm-start epochs for PSPO/OSPO; `None` means 10% of `epochs`.
    pub warm_start_epochs: Option<usize>,
    pub pspo_refit: RefitSchedule,
    /// `None` means 32 × batch size.
    pub ospo_bank_capacity: Option<usize>,
    /// `None` means `n^{-1/5}` for a dataset of size `n`.
    pub ospo_bandwidth: Option<f64>,
    pub ospo_kernel: Kernel,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            method: Method::Dpo,
            learning_rate: 2e-3,
            epochs: 100,
            batch_size: 128,
            seed: 0,
            hidden: 32,
            warm_start_epochs: None,
            pspo_refit: RefitSchedule::Steps(50),
            ospo_bank_capacity: None,
            ospo_bandwidth: None,
            ospo_kernel: Kernel::Gaussian,
            init: Init::Random,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SpoError::Config(m.to_string()));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return bad("batch_size and hidden must be positive");
        }
        match self.pspo_refit {
            RefitSchedule::Steps(0) | RefitSchedule::Epochs(0) => return bad("pspo_refit period must be positive"),
            _ => {}
        }
        if self.ospo_bank_capacity == Some(0) {
            return bad("ospo_bank_capacity must be positive");
        }
        if let Some(h) = self.ospo_bandwidth {
            if !(h > 0.0) || !h.is_finite() {
                return bad("ospo_bandwidth must be positive");
            }
        }
        Ok(())
    }

    pub fn warm_start(&self) -> usize {
        match self.method {
            Method::Pspo | Method::Ospo => self
                .warm_start_epochs
                .unwrap_or(((self.epochs as f64) * 0.1).round() as usize)
                .min(self.epochs),
            _ => 0,
        }
    }

    pub fn bank_capacity(&self) -> usize {
        self.ospo_bank_capacity.unwrap_or(32 * self.batch_size)
    }

    pub fn bandwidth_for(&self, n: usize) -> f64 {
        self.ospo_bandwidth.unwrap_or((n as f64).powf(-0.2))
    }
}

/// Index sign chosen from `ŝ = (1/n) Σ t_θ(w_i) z_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignAlignment {
    pub s_hat: f64,
    pub flip: bool,
}

impl SignAlignment {
    pub fn none() -> Self {
        SignAlignment { s_hat: 0.0, flip: false }
    }

    /// `−1` when the potential must be negated before use.
    pub fn factor(&self) -> f64 {
        if self.flip {
            -1.0
        } else {
            1.0
        }
    }
}

pub fn sign_align(
    dataset: &[PreferenceExample],
    policy: &MlpPolicy,
    reference: &Reference,
    spec: &FDivergence,
) -> Result<SignAlignment> {
    if dataset.is_empty() {
        return Err(SpoError::Empty("sign alignment dataset"));
    }
    let mut total = 0.0;
    for ex in dataset {
        total += index_term(policy, spec, reference, ex)?.t * ex.label();
    }
    let s_hat = total / dataset.len() as f64;
    Ok(SignAlignment { s_hat, flip: s_hat < 0.0 })
}

/// Loss value, parameter gradient, and the detached batch indices.
#[derive(Clone, Debug)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: GradientVector,
    pub indices: Vec<f64>,
}

/// `log(1 + e^{−u})`.
pub fn logistic_loss(u: f64) -> f64 {
    (-u).max(0.0) + (-u.abs()).exp().ln_1p()
}

fn batch_terms(
    batch: &[&PreferenceExample],
    policy: &MlpPolicy,
    reference: &Reference,
    spec: &FDivergence,
) -> Result<Vec<IndexTerm>> {
    if batch.is_empty() {
        return Err(SpoError::Empty("batch"));
    }
    batch.iter().map(|ex| index_term(policy, spec, reference, ex)).collect()
}

fn finish(
    policy: &MlpPolicy,
    batch: &[&PreferenceExample],
    terms: &[IndexTerm],
    loss: f64,
    dloss_dt: &[f64],
) -> Result<LossOutput> {
    let grad = index_backward(policy, terms, batch, dloss_dt)?;
    Ok(LossOutput { loss, grad, indices: terms.iter().map(|t| t.t).collect() })
}

/// `(1/B) Σ log(1 + e^{−s_i})` with `s_i` the index oriented so the preferred action is in the `y1` slot.
pub fn dpo_loss(batch: &[&PreferenceExample], policy: &MlpPolicy, reference: &Reference) -> Result<LossOutput> {
    let terms = batch_terms(batch, policy, reference, &FDivergence::Kl)?;
    let b = batch.len() as f64;
    let mut loss = 0.0;
    let mut dt = Vec::with_capacity(batch.len());
    for (term, ex) in terms.iter().zip(batch) {
        let s = ex.orientation() * term.t;
        loss += logistic_loss(s);
        dt.push(-ex.orientation() * sigmoid(-s) / b);
    }
    finish(policy, batch, &terms, loss / b, &dt)
}

/// Binary cross-entropy under an arbitrary link given as `t ↦ (Ψ(t), Ψ'(t))`.
fn link_cross_entropy<F>(
    batch: &[&PreferenceExample],
    policy: &MlpPolicy,
    terms: Vec<IndexTerm>,
    mut link: F,
) -> Result<LossOutput>
where
    F: FnMut(usize, f64) -> Result<(f64, f64)>,
{
    let b = batch.len() as f64;
    let mut loss = 0.0;
    let mut dt = Vec::with_capacity(batch.len());
    for (i, (term, ex)) in terms.iter().zip(batch).enumerate() {
        let (p, dp) = link(i, term.t)?;
        let (l, dl_dp) = if ex.z { (-p.ln(), -1.0 / p) } else { (-(1.0 - p).ln(), 1.0 / (1.0 - p)) };
        loss += l;
        dt.push(dl_dp * dp / b);
    }
    finish(policy, batch, &terms, loss / b, &dt)
}

/// Cross-entropy with the soft-mode profiled link evaluated at each index.
pub fn pspo_loss(
    batch: &[&PreferenceExample],
    policy: &MlpPolicy,
    reference: &Reference,
    spec: &FDivergence,
    link: &MonotoneLink,
) -> Result<LossOutput> {
    let terms = batch_terms(batch, policy, reference, spec)?;
    link_cross_entropy(batch, policy, terms, |_, t| Ok(link.soft_with_grad(t)))
}

/// Cross-entropy with the leave-one-out kernel estimate `ĝ` at each index.
///
/// `keys` tag batch members; bank entries carrying the same key are excluded.
/// The bank is read only: callers append `indices` once the step is taken.
pub fn ospo_loss(
    batch: &[&PreferenceExample],
    keys: Option<&[u64]>,
    policy: &MlpPolicy,
    reference: &Reference,
    spec: &FDivergence,
    bank: &KernelBank,
) -> Result<LossOutput> {
    if bank.len() < batch.len() {
        return Err(SpoError::ColdBank { have: bank.len(), need: batch.len() });
    }
    if let Some(k) = keys {
        if k.len() != batch.len() {
            return Err(SpoError::DimensionMismatch { expected: batch.len(), got: k.len() });
        }
    }
    let terms = batch_terms(batch, policy, reference, spec)?;
    let bandwidth = bank.bandwidth();
    link_cross_entropy(batch, policy, terms, |i, t| {
        let exclude = keys.map_or(Exclude::Nothing, |k| Exclude::Key(k[i]));
        bank.regress_with_grad_at(t, exclude, bandwidth)
    })
}

/// Cross-entropy under a known link, e.g. the true `Ψ*` in oracle mode.
pub fn known_link_loss<F>(
    batch: &[&PreferenceExample],
    policy: &MlpPolicy,
    reference: &Reference,
    spec: &FDivergence,
    link: F,
) -> Result<LossOutput>
where
    F: Fn(f64) -> (f64, f64),
{
    let terms = batch_terms(batch, policy, reference, spec)?;
    link_cross_entropy(batch, policy, terms, |_, t| Ok(link(t)))
}

/// PoP-DPO: `(1/B²) Σ_{i,j} log(1 + e^{−(s_i + s_j)})`, diagonal included.
pub fn rspo_pop_dpo_loss(
    batch: &[&PreferenceExample],
    policy: &MlpPolicy,
    reference: &Reference,
) -> Result<LossOutput> {
    let terms = batch_terms(batch, policy, reference, &FDivergence::Kl)?;
    let s: Vec<f64> = terms.iter().zip(batch).map(|(t, ex)| ex.orientation() * t.t).collect();
    let b2 = (batch.len() * batch.len()) as f64;
    let mut loss = 0.0;
    let mut dt = Vec::with_capacity(batch.len());
    for (k, ex) in batch.iter().enumerate() {
        let mut pull = 0.0;
        for &sj in &s {
            loss += logistic_loss(s[k] + sj);
            pull += sigmoid(-(s[k] + sj));
        }
        dt.push(-2.0 * ex.orientation() * pull / b2);
    }
    finish(policy, batch, &terms, loss / b2, &dt)
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Adam { learning_rate, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; num_params], v: vec![0.0; num_params], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainLogRow {
    pub step: usize,
    pub epoch: usize,
    pub phase: Method,
    pub loss: f64,
    pub grad_norm: f64,
    pub link_refit: bool,
    pub bank_fill: usize,
    pub skipped: bool,
}

pub fn write_train_log<W: Write>(out: W, rows: &[TrainLogRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "epoch", "phase", "loss", "grad_norm", "link_refit", "bank_fill", "skipped"])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.epoch.to_string(),
            r.phase.to_string(),
            r.loss.to_string(),
            r.grad_norm.to_string(),
            u8::from(r.link_refit).to_string(),
            r.bank_fill.to_string(),
            u8::from(r.skipped).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub policy: MlpPolicy,
    /// Set for OSPO; other methods leave the sign untouched.
    pub sign: Option<SignAlignment>,
    pub log: Vec<TrainLogRow>,
    /// Final fitted link for PSPO.
    pub link: Option<MonotoneLink>,
}

impl TrainOutcome {
    pub fn sign_factor(&self) -> f64 {
        self.sign.map_or(1.0, |s| s.factor())
    }

    /// Mean logged loss per epoch over non-skipped steps.
    pub fn epoch_losses(&self) -> Vec<f64> {
        let epochs = self.log.iter().map(|r| r.epoch + 1).max().unwrap_or(0);
        (0..epochs)
            .map(|e| {
                let rows: Vec<f64> =
                    self.log.iter().filter(|r| r.epoch == e && !r.skipped).map(|r| r.loss).collect();
                rows.iter().sum::<f64>() / rows.len().max(1) as f64
            })
            .collect()
    }
}

pub fn init_policy(config: &TrainConfig, context_dim: usize, num_actions: usize) -> Result<MlpPolicy> {
    let dims = [context_dim, config.hidden, config.hidden, num_actions];
    let mut policy = MlpPolicy::random(&dims, &mut stream(config.seed, "learner-init"))?;
    if config.init == Init::ZeroPotential {
        policy.zero_output_layer();
    }
    Ok(policy)
}

fn fit_link_on(
    dataset: &[PreferenceExample],
    policy: &MlpPolicy,
    reference: &Reference,
    spec: &FDivergence,
) -> Result<MonotoneLink> {
    let points = dataset
        .iter()
        .map(|ex| Ok((index_term(policy, spec, reference, ex)?.t, ex.label())))
        .collect::<Result<Vec<_>>>()?;
    pava_fit(&points, None)
}

/// Shuffled minibatch Adam over the configured method.
///
/// PSPO and OSPO run `warm_start()` DPO epochs first. PSPO refits its link on
/// the full dataset per [`RefitSchedule`]; OSPO appends every batch's
/// detached indices to its kernel bank, and its sign is aligned on the
/// training data at the end. Steps with a non-finite loss or gradient are
/// logged and skipped.
pub fn train(
    dataset: &[PreferenceExample],
    config: &TrainConfig,
    reference: &Reference,
    spec: &FDivergence,
) -> Result<TrainOutcome> {
    config.validate()?;
    let first = dataset.first().ok_or(SpoError::Empty("training dataset"))?;
    if matches!(config.method, Method::Dpo | Method::Rspo) && !spec.is_kl() {
        return Err(SpoError::Config(format!("{} requires the KL divergence", config.method)));
    }
    let mut policy = init_policy(config, first.x.len(), reference.num_actions())?;
    let mut adam = Adam::new(policy.num_params(), config.learning_rate);
    let mut shuffle_rng = stream(config.seed, "shuffle");
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    let warm = config.warm_start();
    let mut bank = match config.method {
        Method::Ospo => Some(KernelBank::new(
            config.bank_capacity(),
            config.ospo_kernel,
            config.bandwidth_for(dataset.len()),
        )?),
        _ => None,
    };
    let mut link: Option<MonotoneLink> = None;
    let mut phase_steps = 0usize;
    let mut step = 0usize;
    let mut log = Vec::new();

    for epoch in 0..config.epochs {
        let phase = if epoch < warm { Method::Dpo } else { config.method };
        if phase == config.method && epoch == warm {
            phase_steps = 0;
            if let Some(bank) = bank.as_mut() {
                if bank.len() < config.batch_size.min(dataset.len()) {
                    for (i, ex) in dataset.iter().enumerate().take(bank.capacity()) {
                        bank.push(index_term(&policy, spec, reference, ex)?.t, ex.label(), Some(i as u64));
                    }
                }
            }
        }
        order.shuffle(&mut shuffle_rng);
        let refit_epoch = phase == Method::Pspo
            && matches!(config.pspo_refit, RefitSchedule::Epochs(k) if (epoch - warm) % k == 0);

        for (chunk_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&PreferenceExample> = chunk.iter().map(|&i| &dataset[i]).collect();
            let mut refit = false;
            if phase == Method::Pspo {
                refit = match config.pspo_refit {
                    RefitSchedule::Steps(p) => phase_steps % p == 0,
                    RefitSchedule::Epochs(_) => refit_epoch && chunk_no == 0,
                };
                if refit || link.is_none() {
                    link = Some(fit_link_on(dataset, &policy, reference, spec)?);
                    refit = true;
                }
            }
            let keys: Vec<u64> = chunk.iter().map(|&i| i as u64).collect();
            let out = match phase {
                Method::Dpo => dpo_loss(&batch, &policy, reference)?,
                Method::Rspo => rspo_pop_dpo_loss(&batch, &policy, reference)?,
                Method::Pspo => pspo_loss(&batch, &policy, reference, spec, link.as_ref().unwrap())?,
                Method::Ospo => ospo_loss(&batch, Some(&keys), &policy, reference, spec, bank.as_ref().unwrap())?,
            };
            let skipped = !out.loss.is_finite() || !out.grad.is_finite();
            if skipped {
                log::warn!("step {step}: non-finite loss {} skipped", out.loss);
            } else {
                adam.step(policy.params_mut(), out.grad.as_slice());
            }
            if let Some(bank) = bank.as_mut() {
                for (&k, (&t, ex)) in keys.iter().zip(out.indices.iter().zip(&batch)) {
                    if t.is_finite() {
                        bank.push(t, ex.label(), Some(k));
                    }
                }
            }
            log.push(TrainLogRow {
                step,
                epoch,
                phase,
                loss: out.loss,
                grad_norm: out.grad.norm(),
                link_refit: refit,
                bank_fill: bank.as_ref().map_or(0, |b| b.len()),
                skipped,
            });
            step += 1;
            phase_steps += 1;
        }
    }

    let sign = match config.method {
        Method::Ospo => Some(sign_align(dataset, &policy, reference, spec)?),
        _ => None,
    };
    Ok(TrainOutcome { policy, sign, log, link })
}

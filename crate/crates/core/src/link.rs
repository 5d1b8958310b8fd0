//! Nonparametric link estimators.
//!
//! [`pava_fit`] profiles a monotone link by isotonic regression (PSPO);
//! [`KernelBank`] holds recent `(index, label)` pairs for the scale-invariant
//! Nadaraya-Watson smoother used by OSPO.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpoError};

/// Clip applied to fitted isotonic values.
pub const PROFILE_CLIP: f64 = 1e-6;
/// Clip applied to raw kernel-regression output before mixing.
pub const KERNEL_CLIP: f64 = 1e-4;
/// Weight of the logistic term mixed into soft links and kernel output.
pub const LOGISTIC_MIX: f64 = 0.05;
/// Temperature of the distance softmax in soft link evaluation.
pub const SOFT_TEMPERATURE: f64 = 0.1;

pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Weighted isotonic least-squares fit of `z` on `u`.
///
/// Returns sorted unique breakpoints and their nondecreasing fitted values.
/// Tied `u` values are merged into one weighted point before pooling.
pub fn isotonic_regression(points: &[(f64, f64)], weights: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
    if points.is_empty() {
        return Err(SpoError::Empty("isotonic regression input"));
    }
    if let Some(w) = weights {
        if w.len() != points.len() {
            return Err(SpoError::DimensionMismatch { expected: points.len(), got: w.len() });
        }
        if w.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(SpoError::Domain("isotonic weights must be finite and positive".into()));
        }
    }
    if points.iter().any(|(u, z)| !u.is_finite() || !z.is_finite()) {
        return Err(SpoError::Domain("isotonic input must be finite".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0));

    // merge ties: (u, weight, weighted sum of z)
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(points.len());
    for i in order {
        let (u, z) = points[i];
        let w = weights.map_or(1.0, |w| w[i]);
        match merged.last_mut() {
            Some(last) if last.0 == u => {
                last.1 += w;
                last.2 += w * z;
            }
            _ => merged.push((u, w, w * z)),
        }
    }

    // blocks: (mean, weight, number of merged points)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(merged.len());
    for &(_, w, wz) in &merged {
        blocks.push((wz / w, w, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            let (m1, w1, c1) = blocks[n - 2];
            let (m2, w2, c2) = blocks[n - 1];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(n - 2);
            blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, c1 + c2));
        }
    }

    let breakpoints = merged.iter().map(|m| m.0).collect();
    let values = blocks.iter().flat_map(|&(m, _, c)| std::iter::repeat(m).take(c)).collect();
    Ok((breakpoints, values))
}

/// Nondecreasing step function fitted by PAVA.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneLink {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkMode {
    Hard,
    Soft,
}

/// PAVA fit of `z` on `u`; both evaluation modes clip into `[1e-6, 1 − 1e-6]`.
pub fn pava_fit(points: &[(f64, f64)], weights: Option<&[f64]>) -> Result<MonotoneLink> {
    let (breakpoints, values) = isotonic_regression(points, weights)?;
    Ok(MonotoneLink { breakpoints, values })
}

impl MonotoneLink {
    /// Builds a link from explicit breakpoints and values.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(SpoError::Empty("link breakpoints"));
        }
        if breakpoints.len() != values.len() {
            return Err(SpoError::DimensionMismatch { expected: breakpoints.len(), got: values.len() });
        }
        if breakpoints.windows(2).any(|w| !(w[0] <= w[1])) || values.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(SpoError::Domain("link breakpoints and values must be nondecreasing".into()));
        }
        Ok(MonotoneLink { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, u: f64, mode: LinkMode) -> f64 {
        match mode {
            LinkMode::Hard => self.hard(u),
            LinkMode::Soft => self.soft_with_grad(u).0,
        }
    }

    fn hard(&self, u: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= u);
        self.values[idx.saturating_sub(1)].clamp(PROFILE_CLIP, 1.0 - PROFILE_CLIP)
    }

    /// Distance-softmax interpolation of the step values alone, with its derivative.
    pub fn interpolate_with_grad(&self, u: f64) -> (f64, f64) {
        // weights ∝ exp(−(u − u_j)²/τ); dlogw_j/du = −2(u − u_j)/τ
        let scores: Vec<f64> = self
            .breakpoints
            .iter()
            .map(|&b| -(u - b) * (u - b) / SOFT_TEMPERATURE)
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut sw, mut swv, mut swa, mut swva) = (0.0, 0.0, 0.0, 0.0);
        for ((&s, &b), &v) in scores.iter().zip(&self.breakpoints).zip(&self.values) {
            let w = (s - max).exp();
            let a = -2.0 * (u - b) / SOFT_TEMPERATURE;
            sw += w;
            swv += w * v;
            swa += w * a;
            swva += w * v * a;
        }
        let mean = swv / sw;
        (mean, swva / sw - mean * swa / sw)
    }

    /// Soft evaluation `clip(0.95·interp(u) + 0.05·σ(u))` and its derivative in `u`.
    pub fn soft_with_grad(&self, u: f64) -> (f64, f64) {
        let (interp, d_interp) = self.interpolate_with_grad(u);
        let s = sigmoid(u);
        let value = (1.0 - LOGISTIC_MIX) * interp + LOGISTIC_MIX * s;
        let grad = (1.0 - LOGISTIC_MIX) * d_interp + LOGISTIC_MIX * s * (1.0 - s);
        if value < PROFILE_CLIP {
            (PROFILE_CLIP, 0.0)
        } else if value > 1.0 - PROFILE_CLIP {
            (1.0 - PROFILE_CLIP, 0.0)
        } else {
            (value, grad)
        }
    }

    /// CSV dump with header `breakpoint,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["breakpoint", "value"])?;
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            w.write_record([b.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn link_eval(link: &MonotoneLink, u: f64, mode: LinkMode) -> f64 {
    link.eval(u, mode)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// `(K(d), K'(d))`.
    fn eval(self, d: f64) -> (f64, f64) {
        match self {
            Kernel::Gaussian => {
                let k = (-0.5 * d * d).exp();
                (k, -d * k)
            }
            Kernel::Epanechnikov => {
                if d.abs() < 1.0 {
                    (1.0 - d * d, -2.0 * d)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }
}

/// Which stored pairs a kernel query must ignore.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exclude {
    Nothing,
    /// Position in the bank, oldest first.
    Slot(usize),
    /// Every entry tagged with this example key.
    Key(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct BankEntry {
    t: f64,
    z: f64,
    key: Option<u64>,
}

/// FIFO buffer of `(t_j, z_j)` pairs for kernel regression of `z` on the index.
#[derive(Clone, Debug)]
pub struct KernelBank {
    entries: VecDeque<BankEntry>,
    capacity: usize,
    kernel: Kernel,
    bandwidth_factor: f64,
}

impl KernelBank {
    pub fn new(capacity: usize, kernel: Kernel, bandwidth_factor: f64) -> Result<Self> {
        if capacity == 0 {
            return Err(SpoError::Config("kernel bank capacity must be positive".into()));
        }
        if !(bandwidth_factor > 0.0) || !bandwidth_factor.is_finite() {
            return Err(SpoError::Config(format!("bandwidth factor must be positive, got {bandwidth_factor}")));
        }
        Ok(KernelBank { entries: VecDeque::with_capacity(capacity), capacity, kernel, bandwidth_factor })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn bandwidth_factor(&self) -> f64 {
        self.bandwidth_factor
    }

    /// Appends a detached pair, evicting the oldest entry when full.
    pub fn push(&mut self, t: f64, z: f64, key: Option<u64>) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(BankEntry { t, z, key });
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Population standard deviation of stored indices.
    pub fn index_std(&self) -> f64 {
        let n = self.entries.len() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean = self.entries.iter().map(|e| e.t).sum::<f64>() / n;
        (self.entries.iter().map(|e| (e.t - mean).powi(2)).sum::<f64>() / n).sqrt()
    }

    /// `b = h·σ̂`, falling back to `h` when all stored indices coincide.
    pub fn bandwidth(&self) -> f64 {
        let sd = self.index_std();
        if sd > 1e-12 {
            self.bandwidth_factor * sd
        } else {
            self.bandwidth_factor
        }
    }

    fn excluded(&self, slot: usize, entry: &BankEntry, exclude: Exclude) -> bool {
        match exclude {
            Exclude::Nothing => false,
            Exclude::Slot(s) => s == slot,
            Exclude::Key(k) => entry.key == Some(k),
        }
    }

    /// Unclipped Nadaraya-Watson estimate at `u` and its derivative in `u`,
    /// for an explicit bandwidth.
    pub fn raw_with_grad_at(&self, u: f64, exclude: Exclude, bandwidth: f64) -> Result<(f64, f64)> {
        let (mut num, mut den, mut dnum, mut dden) = (0.0, 0.0, 0.0, 0.0);
        let (mut count, mut zsum) = (0usize, 0.0);
        for (slot, e) in self.entries.iter().enumerate() {
            if self.excluded(slot, e, exclude) {
                continue;
            }
            count += 1;
            zsum += e.z;
            let (k, dk) = self.kernel.eval((u - e.t) / bandwidth);
            num += k * e.z;
            den += k;
            dnum += dk * e.z / bandwidth;
            dden += dk / bandwidth;
        }
        if count == 0 {
            return Err(SpoError::Empty("kernel bank after exclusion"));
        }
        if den <= 0.0 {
            return Ok((zsum / count as f64, 0.0));
        }
        let value = num / den;
        Ok((value, (dnum - value * dden) / den))
    }

    pub fn raw(&self, u: f64, exclude: Exclude) -> Result<f64> {
        Ok(self.raw_with_grad_at(u, exclude, self.bandwidth())?.0)
    }

    /// Clipped and logistic-mixed estimate `0.95·clip(ĝ(u)) + 0.05·σ(u)` with derivative.
    pub fn regress_with_grad_at(&self, u: f64, exclude: Exclude, bandwidth: f64) -> Result<(f64, f64)> {
        let (raw, draw) = self.raw_with_grad_at(u, exclude, bandwidth)?;
        let (clipped, dclipped) = if raw < KERNEL_CLIP {
            (KERNEL_CLIP, 0.0)
        } else if raw > 1.0 - KERNEL_CLIP {
            (1.0 - KERNEL_CLIP, 0.0)
        } else {
            (raw, draw)
        };
        let s = sigmoid(u);
        Ok((
            (1.0 - LOGISTIC_MIX) * clipped + LOGISTIC_MIX * s,
            (1.0 - LOGISTIC_MIX) * dclipped + LOGISTIC_MIX * s * (1.0 - s),
        ))
    }

    pub fn regress(&self, u: f64, exclude: Exclude) -> Result<f64> {
        Ok(self.regress_with_grad_at(u, exclude, self.bandwidth())?.0)
    }
}

pub fn nw_regress(bank: &KernelBank, u: f64, exclude: Exclude) -> Result<f64> {
    bank.regress(u, exclude)
}

//! f-divergence generators and the tilted policy they induce.
//!
//! Every generator is canonicalized so that `f(1) = 0` and `f'(1) = 0`.
//! Subtracting the affine term `f'(1)(u - 1)` leaves `D_f` unchanged on
//! probability rows and makes `(f')⁻¹(0) = 1`, so a constant potential tilts
//! nothing.
//!
//! | kind       | f(u)                                  | f'(u)                     |
//! |------------|---------------------------------------|---------------------------|
//! | KL         | u ln u − u + 1                        | ln u                      |
//! | Alpha(α)   | (u^α − 1 − α(u − 1)) / (α(α − 1))     | (u^(α−1) − 1) / (α − 1)   |
//!
//! The α-family is restricted to α ∈ (0, 1) so that `f'(0⁺) = −∞`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpoError};

/// Tolerance on `Σ p = 1` for a valid [`ProbabilityRow`].
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Target accuracy of `Σ π_ref (f')⁻¹((h − λ)/β) = 1`.
pub const LAMBDA_TOL: f64 = 1e-10;
pub const LAMBDA_MAX_ITERS: usize = 200;
/// Bracket half-width multiplier cap; the bracket `[min h − βC, max h + βC]`
/// doubles `C` from 1 up to this value.
pub const LAMBDA_BRACKET_CAP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDivergence", into = "RawDivergence")]
pub enum FDivergence {
    Kl,
    Alpha(f64),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawDivergence {
    Kl,
    Alpha(f64),
}

impl TryFrom<RawDivergence> for FDivergence {
    type Error = SpoError;

    fn try_from(raw: RawDivergence) -> Result<Self> {
        match raw {
            RawDivergence::Kl => Ok(FDivergence::Kl),
            RawDivergence::Alpha(a) => FDivergence::alpha(a),
        }
    }
}

impl From<FDivergence> for RawDivergence {
    fn from(d: FDivergence) -> Self {
        match d {
            FDivergence::Kl => RawDivergence::Kl,
            FDivergence::Alpha(a) => RawDivergence::Alpha(a),
        }
    }
}

impl Default for FDivergence {
    fn default() -> Self {
        FDivergence::Kl
    }
}

impl fmt::Display for FDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FDivergence::Kl => write!(f, "kl"),
            FDivergence::Alpha(a) => write!(f, "alpha({a})"),
        }
    }
}

impl FDivergence {
    pub fn alpha(a: f64) -> Result<Self> {
        if a > 0.0 && a < 1.0 {
            Ok(FDivergence::Alpha(a))
        } else {
            Err(SpoError::Domain(format!("alpha must lie in (0,1), got {a}")))
        }
    }

    pub fn is_kl(&self) -> bool {
        matches!(self, FDivergence::Kl)
    }

    /// Canonicalized generator `f(u)` for `u > 0`.
    pub fn f(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(SpoError::Domain(format!("f requires finite u > 0, got {u}")));
        }
        Ok(self.f_unchecked(u))
    }

    fn f_unchecked(&self, u: f64) -> f64 {
        match *self {
            FDivergence::Kl => u * u.ln() - u + 1.0,
            FDivergence::Alpha(a) => (u.powf(a) - 1.0 - a * (u - 1.0)) / (a * (a - 1.0)),
        }
    }

    /// `lim_{u→0⁺} f(u)`, the cost of a reference-supported action that the
    /// policy does not charge.
    pub fn f_at_zero(&self) -> f64 {
        match *self {
            FDivergence::Kl => 1.0,
            FDivergence::Alpha(a) => 1.0 / a,
        }
    }

    pub fn f_prime(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(SpoError::Domain(format!("f' requires finite u > 0, got {u}")));
        }
        Ok(match *self {
            FDivergence::Kl => u.ln(),
            FDivergence::Alpha(a) => (u.powf(a - 1.0) - 1.0) / (a - 1.0),
        })
    }

    pub fn f_second(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(SpoError::Domain(format!("f'' requires finite u > 0, got {u}")));
        }
        Ok(match *self {
            FDivergence::Kl => 1.0 / u,
            FDivergence::Alpha(a) => u.powf(a - 2.0),
        })
    }

    /// `(f')⁻¹(v)`. Returns `+∞` when `v` is at or above `sup f'`
    /// (`1/(1−α)` for the α-family).
    pub fn f_prime_inv(&self, v: f64) -> f64 {
        match *self {
            FDivergence::Kl => v.exp(),
            FDivergence::Alpha(a) => {
                let base = 1.0 + (a - 1.0) * v;
                if base <= 0.0 {
                    f64::INFINITY
                } else {
                    base.powf(1.0 / (a - 1.0))
                }
            }
        }
    }

    /// `f'(e^ℓ)` evaluated from a log-ratio `ℓ = log(π/π_ref)`.
    pub fn potential_from_log_ratio(&self, log_ratio: f64) -> f64 {
        match *self {
            FDivergence::Kl => log_ratio,
            FDivergence::Alpha(a) => (((a - 1.0) * log_ratio).exp() - 1.0) / (a - 1.0),
        }
    }

    /// `d f'(e^ℓ) / dℓ = f''(r)·r` with `r = e^ℓ`.
    pub fn potential_slope(&self, log_ratio: f64) -> f64 {
        match *self {
            FDivergence::Kl => 1.0,
            FDivergence::Alpha(a) => ((a - 1.0) * log_ratio).exp(),
        }
    }
}

/// A probability mass function over the finite action set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityRow(Vec<f64>);

impl TryFrom<Vec<f64>> for ProbabilityRow {
    type Error = SpoError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbabilityRow::new(v)
    }
}

impl From<ProbabilityRow> for Vec<f64> {
    fn from(row: ProbabilityRow) -> Self {
        row.0
    }
}

impl ProbabilityRow {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SpoError::Empty("probability row"));
        }
        if let Some(bad) = values.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(SpoError::InvalidRow(format!("entry {bad} is not a finite nonnegative value")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(SpoError::InvalidRow(format!("entries sum to {sum}")));
        }
        Ok(ProbabilityRow(values))
    }

    /// Normalizes nonnegative weights into a row.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(SpoError::InvalidRow(format!("weights sum to {sum}")));
        }
        ProbabilityRow::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform row over zero actions");
        ProbabilityRow(vec![1.0 / k as f64; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total_variation(&self, other: &ProbabilityRow) -> f64 {
        0.5 * self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

impl std::ops::Index<usize> for ProbabilityRow {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Real number extended with `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    /// Collapses to `f64`, mapping `+∞` to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => write!(f, "inf"),
        }
    }
}

/// `D_f(p ‖ q) = Σ_{q(y)>0} q(y) f(p(y)/q(y))`, `+∞` if `p` charges a `q`-null action.
pub fn d_f(spec: &FDivergence, p: &ProbabilityRow, q: &ProbabilityRow) -> Result<ExtReal> {
    if p.len() != q.len() {
        return Err(SpoError::DimensionMismatch { expected: q.len(), got: p.len() });
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.as_slice().iter().zip(q.as_slice()) {
        if qi > 0.0 {
            total += if pi > 0.0 {
                qi * spec.f_unchecked(pi / qi)
            } else {
                qi * spec.f_at_zero()
            };
        } else if pi > 0.0 {
            return Ok(ExtReal::PosInfinity);
        }
    }
    // rounding can leave a tiny negative value when p ≈ q
    Ok(ExtReal::Finite(total.max(0.0)))
}

fn check_tilt_inputs(h: &[f64], beta: f64, reference: &ProbabilityRow) -> Result<()> {
    if h.len() != reference.len() {
        return Err(SpoError::DimensionMismatch { expected: reference.len(), got: h.len() });
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(SpoError::Domain(format!("beta must be finite and positive, got {beta}")));
    }
    if let Some(bad) = h.iter().find(|v| !v.is_finite()) {
        return Err(SpoError::Domain(format!("potential entry {bad} is not finite")));
    }
    Ok(())
}

/// Mass `Σ π_ref(y) (f')⁻¹((h(y) − λ)/β)` of the unnormalized tilt.
fn tilt_mass(spec: &FDivergence, h: &[f64], beta: f64, reference: &ProbabilityRow, lambda: f64) -> f64 {
    h.iter()
        .zip(reference.as_slice())
        .filter(|(_, &r)| r > 0.0)
        .map(|(&hy, &r)| r * spec.f_prime_inv((hy - lambda) / beta))
        .sum()
}

/// Solves for the per-context normalizer `λ` by bisection on the strictly
/// decreasing map `λ ↦ Σ π_ref (f')⁻¹((h − λ)/β)`.
pub fn normalization_lambda(
    spec: &FDivergence,
    h: &[f64],
    beta: f64,
    reference: &ProbabilityRow,
) -> Result<f64> {
    check_tilt_inputs(h, beta, reference)?;
    let support: Vec<f64> = h
        .iter()
        .zip(reference.as_slice())
        .filter(|(_, &r)| r > 0.0)
        .map(|(&v, _)| v)
        .collect();
    let h_min = support.iter().copied().fold(f64::INFINITY, f64::min);
    let h_max = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mass = |lambda: f64| tilt_mass(spec, h, beta, reference, lambda);

    let mut c = 1.0;
    let (mut lo, mut hi) = loop {
        let lo = h_min - beta * c;
        let hi = h_max + beta * c;
        if mass(lo) >= 1.0 && mass(hi) <= 1.0 {
            break (lo, hi);
        }
        c *= 2.0;
        if c > LAMBDA_BRACKET_CAP {
            return Err(SpoError::Convergence(format!(
                "could not bracket normalizer (beta={beta}, h in [{h_min}, {h_max}])"
            )));
        }
    };

    let mut best = (f64::INFINITY, 0.5 * (lo + hi));
    for _ in 0..LAMBDA_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let gap = mass(mid) - 1.0;
        if gap.abs() < best.0 {
            best = (gap.abs(), mid);
        }
        if gap.abs() <= LAMBDA_TOL {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if gap > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Interval collapsed to adjacent floats: accept if within the row tolerance.
    if best.0 <= ROW_SUM_TOL * 0.1 {
        return Ok(best.1);
    }
    Err(SpoError::Convergence(format!(
        "normalizer bisection stalled with |mass - 1| = {:e}",
        best.0
    )))
}

/// Closed-form KL normalizer `λ = β log Σ π_ref e^{h/β}`.
pub fn kl_normalization_lambda(h: &[f64], beta: f64, reference: &ProbabilityRow) -> Result<f64> {
    check_tilt_inputs(h, beta, reference)?;
    let terms: Vec<f64> = h
        .iter()
        .zip(reference.as_slice())
        .filter(|(_, &r)| r > 0.0)
        .map(|(&hy, &r)| r.ln() + hy / beta)
        .collect();
    Ok(beta * log_sum_exp(&terms))
}

/// `π_β(y) = π_ref(y) (f')⁻¹((h(y) − λ)/β)`.
///
/// KL uses the softmax closed form directly; other generators go through
/// [`normalization_lambda`].
pub fn tilted_policy(
    spec: &FDivergence,
    h: &[f64],
    beta: f64,
    reference: &ProbabilityRow,
) -> Result<ProbabilityRow> {
    check_tilt_inputs(h, beta, reference)?;
    let raw: Vec<f64> = match spec {
        FDivergence::Kl => {
            let logits: Vec<f64> = h
                .iter()
                .zip(reference.as_slice())
                .map(|(&hy, &r)| if r > 0.0 { r.ln() + hy / beta } else { f64::NEG_INFINITY })
                .collect();
            let lse = log_sum_exp(&logits);
            logits.iter().map(|l| (l - lse).exp()).collect()
        }
        FDivergence::Alpha(_) => {
            let lambda = normalization_lambda(spec, h, beta, reference)?;
            h.iter()
                .zip(reference.as_slice())
                .map(|(&hy, &r)| if r > 0.0 { r * spec.f_prime_inv((hy - lambda) / beta) } else { 0.0 })
                .collect()
        }
    };
    ProbabilityRow::from_weights(raw)
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

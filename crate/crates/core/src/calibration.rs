//! Choosing the temperature β so the tilted policy spends a divergence budget κ.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpoError};
use crate::fdiv::{d_f, tilted_policy, ExtReal, FDivergence, ProbabilityRow};
use crate::policy::{potential_row, MlpPolicy, Reference};

pub const BETA_FLOOR: f64 = 1e-3;
pub const BETA_CEILING: f64 = 1e6;
pub const DIVERGENCE_TOL: f64 = 1e-6;
pub const MAX_ITERS: usize = 100;
/// Divergence at the floor at or below this counts as a degenerate potential.
const DEGENERATE: f64 = 1e-12;
const EXPAND: f64 = 4.0;

/// Potentials and reference rows for a fixed set of contexts.
#[derive(Clone, Debug)]
pub struct PotentialTable {
    pub h: Vec<Vec<f64>>,
    pub reference: Vec<ProbabilityRow>,
}

impl PotentialTable {
    pub fn new(h: Vec<Vec<f64>>, reference: Vec<ProbabilityRow>) -> Result<Self> {
        if h.is_empty() {
            return Err(SpoError::Empty("contexts"));
        }
        if h.len() != reference.len() {
            return Err(SpoError::DimensionMismatch { expected: h.len(), got: reference.len() });
        }
        Ok(PotentialTable { h, reference })
    }

    /// Rows `sign · h_θ(x, ·)` for every context.
    pub fn from_policy(
        policy: &MlpPolicy,
        reference: &Reference,
        spec: &FDivergence,
        contexts: &[Vec<f64>],
        sign: f64,
    ) -> Result<Self> {
        let mut h = Vec::with_capacity(contexts.len());
        let mut refs = Vec::with_capacity(contexts.len());
        for x in contexts {
            h.push(potential_row(policy, spec, reference, x)?.into_iter().map(|v| sign * v).collect());
            refs.push(reference.row(x)?);
        }
        Self::new(h, refs)
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Tilted policy at every context.
    pub fn tilt(&self, spec: &FDivergence, beta: f64) -> Result<Vec<ProbabilityRow>> {
        self.h.iter().zip(&self.reference).map(|(h, r)| tilted_policy(spec, h, beta, r)).collect()
    }

    /// `Φ̂_m(β) = (1/m) Σ D_f(π_β(·|x_i) ‖ π_ref(·|x_i))`.
    pub fn divergence_at(&self, spec: &FDivergence, beta: f64) -> Result<f64> {
        let mut total = 0.0;
        for (h, r) in self.h.iter().zip(&self.reference) {
            let p = tilted_policy(spec, h, beta, r)?;
            match d_f(spec, &p, r)? {
                ExtReal::Finite(v) => total += v,
                ExtReal::PosInfinity => return Ok(f64::INFINITY),
            }
        }
        Ok(total / self.len() as f64)
    }
}

pub fn divergence_at(
    policy: &MlpPolicy,
    reference: &Reference,
    spec: &FDivergence,
    contexts: &[Vec<f64>],
    beta: f64,
) -> Result<f64> {
    PotentialTable::from_policy(policy, reference, spec, contexts, 1.0)?.divergence_at(spec, beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationWarning {
    /// Even the smallest β stays under budget; β̂ is the floor.
    PinnedFloor,
    /// Even the largest β exceeds the budget; β̂ is the ceiling.
    PinnedCeiling,
    /// Bisection ran out of iterations before reaching the tolerance.
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub beta_hat: f64,
    pub achieved_divergence: f64,
    pub bracket: [f64; 2],
    pub m: usize,
    pub iterations: usize,
    pub warning: Option<CalibrationWarning>,
}

/// Bisection in `log β` on the nonincreasing map `β ↦ Φ̂_m(β)`.
///
/// The starting bracket (default `[0.1, 10]`) is widened by factors of 4
/// until it straddles κ, never past `[BETA_FLOOR, BETA_CEILING]`.
pub fn calibrate_table(
    table: &PotentialTable,
    spec: &FDivergence,
    kappa: f64,
    bracket: Option<[f64; 2]>,
) -> Result<CalibrationResult> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(SpoError::Domain(format!("kappa must be finite and positive, got {kappa}")));
    }
    let [mut lo, mut hi] = bracket.unwrap_or([0.1, 10.0]);
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(SpoError::Domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    lo = lo.max(BETA_FLOOR);
    hi = hi.min(BETA_CEILING);
    let phi = |b: f64| table.divergence_at(spec, b);
    let done = |beta: f64, div: f64, bracket: [f64; 2], iterations: usize, warning| CalibrationResult {
        beta_hat: beta,
        achieved_divergence: div,
        bracket,
        m: table.len(),
        iterations,
        warning,
    };

    let mut phi_lo = phi(lo)?;
    while phi_lo <= kappa && lo > BETA_FLOOR {
        hi = lo;
        lo = (lo / EXPAND).max(BETA_FLOOR);
        phi_lo = phi(lo)?;
    }
    if phi_lo <= kappa {
        if phi_lo <= DEGENERATE {
            return Err(SpoError::BudgetUnattainable { kappa, beta_floor: lo, divergence: phi_lo });
        }
        log::warn!("budget {kappa} exceeds divergence {phi_lo} at beta floor; pinning");
        let warning = if (phi_lo - kappa).abs() <= DIVERGENCE_TOL { None } else { Some(CalibrationWarning::PinnedFloor) };
        return Ok(done(lo, phi_lo, [lo, lo], 0, warning));
    }
    let mut phi_hi = phi(hi)?;
    while phi_hi >= kappa && hi < BETA_CEILING {
        lo = hi;
        hi = (hi * EXPAND).min(BETA_CEILING);
        phi_hi = phi(hi)?;
    }
    if phi_hi >= kappa {
        log::warn!("divergence {phi_hi} at beta ceiling still exceeds budget {kappa}; pinning");
        let warning = if (phi_hi - kappa).abs() <= DIVERGENCE_TOL { None } else { Some(CalibrationWarning::PinnedCeiling) };
        return Ok(done(hi, phi_hi, [hi, hi], 0, warning));
    }

    let bracket = [lo, hi];
    let mut best = if (phi_lo - kappa).abs() < (phi_hi - kappa).abs() { (lo, phi_lo) } else { (hi, phi_hi) };
    for it in 1..=MAX_ITERS {
        let mid = (lo * hi).sqrt();
        let d = phi(mid)?;
        if (d - kappa).abs() < (best.1 - kappa).abs() {
            best = (mid, d);
        }
        if (d - kappa).abs() <= DIVERGENCE_TOL {
            return Ok(done(mid, d, bracket, it, None));
        }
        if d > kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(done(best.0, best.1, bracket, MAX_ITERS, Some(CalibrationWarning::MaxIterations)))
}

/// Calibrates `π_{β,θ}` with potentials `sign · h_θ` on the given contexts.
pub fn calibrate_beta(
    policy: &MlpPolicy,
    reference: &Reference,
    spec: &FDivergence,
    contexts: &[Vec<f64>],
    kappa: f64,
    bracket: Option<[f64; 2]>,
    sign: f64,
) -> Result<CalibrationResult> {
    let table = PotentialTable::from_policy(policy, reference, spec, contexts, sign)?;
    calibrate_table(&table, spec, kappa, bracket)
}

//! Evaluation metrics: index error ρ, empirical AUC, reward–divergence curves.

use serde::{Deserialize, Serialize};

use crate::calibration::PotentialTable;
use crate::error::{Result, SpoError};
use crate::fdiv::{d_f, tilted_policy, ExtReal, FDivergence, ProbabilityRow};
use crate::policy::{MlpPolicy, Reference};
use crate::synthgen::SyntheticWorld;

pub const SCALE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub beta: f64,
    pub mean_reward: f64,
    pub mean_divergence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoReport {
    pub rho: f64,
    pub best_scale: f64,
    pub centered: bool,
    /// The unconstrained optimal scale was not positive and the floor was used.
    pub scale_at_floor: bool,
}

fn check_rows(h: &[Vec<f64>], refs: &[ProbabilityRow]) -> Result<()> {
    if h.is_empty() {
        return Err(SpoError::Empty("contexts"));
    }
    if h.len() != refs.len() {
        return Err(SpoError::DimensionMismatch { expected: refs.len(), got: h.len() });
    }
    for (row, r) in h.iter().zip(refs) {
        if row.len() != r.len() {
            return Err(SpoError::DimensionMismatch { expected: r.len(), got: row.len() });
        }
    }
    Ok(())
}

fn centered(row: &[f64], r: &ProbabilityRow) -> Vec<f64> {
    let mean: f64 = row.iter().zip(r.as_slice()).map(|(v, p)| v * p).sum();
    row.iter().map(|v| v - mean).collect()
}

/// `ρ(h) = inf_{a>0, b(·)} ‖a·h + b − h*‖` in `L²(P_x × π_ref)`, estimated on the given contexts.
///
/// For fixed `a` the best offset centers each context under `π_ref`; the
/// best `a` is then the ratio of centered cross and self moments, clamped to
/// [`SCALE_FLOOR`] when not positive.
pub fn rho_metric(h: &[Vec<f64>], h_star: &[Vec<f64>], reference: &[ProbabilityRow]) -> Result<RhoReport> {
    check_rows(h, reference)?;
    check_rows(h_star, reference)?;
    let hc: Vec<Vec<f64>> = h.iter().zip(reference).map(|(row, r)| centered(row, r)).collect();
    let sc: Vec<Vec<f64>> = h_star.iter().zip(reference).map(|(row, r)| centered(row, r)).collect();
    let moment = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        a.iter()
            .zip(b)
            .zip(reference)
            .map(|((ra, rb), r)| ra.iter().zip(rb).zip(r.as_slice()).map(|((x, y), p)| p * x * y).sum::<f64>())
            .sum::<f64>()
    };
    let s_hh = moment(&hc, &hc);
    let s_hs = moment(&hc, &sc);
    let raw = s_hs / s_hh;
    let (a, at_floor) = if raw.is_finite() && raw > SCALE_FLOOR { (raw, false) } else { (SCALE_FLOOR, true) };
    let mut sq = 0.0;
    for ((ha, hs), r) in hc.iter().zip(&sc).zip(reference) {
        sq += ha.iter().zip(hs).zip(r.as_slice()).map(|((x, y), p)| p * (a * x - y).powi(2)).sum::<f64>();
    }
    Ok(RhoReport { rho: (sq / h.len() as f64).sqrt(), best_scale: a, centered: true, scale_at_floor: at_floor })
}

/// ρ of a learned policy's potential against the world's true potential.
pub fn policy_rho(
    policy: &MlpPolicy,
    spec: &FDivergence,
    sign: f64,
    world: &SyntheticWorld,
    contexts: &[Vec<f64>],
) -> Result<RhoReport> {
    let table = PotentialTable::from_policy(policy, &world.reference, spec, contexts, sign)?;
    let star = contexts.iter().map(|x| world.true_potential(x)).collect::<Result<Vec<_>>>()?;
    rho_metric(&table.h, &star, &table.reference)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AucMode {
    /// Pairs of one negative and one positive example.
    Conditional,
    /// All ordered pairs of label-oriented indices.
    Symmetric,
}

/// Twice the number of pairs `(a, b) ∈ A × B` with `a < b`, plus ties.
fn doubled_wins(sorted_a: &[f64], b: &[f64]) -> u128 {
    b.iter()
        .map(|&v| {
            let less = sorted_a.partition_point(|&a| a < v);
            let less_eq = sorted_a.partition_point(|&a| a <= v);
            (2 * less + (less_eq - less)) as u128
        })
        .sum()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical AUC with `φ(u) = 1{u > 0} + ½·1{u = 0}`, in `O(n log n)`.
pub fn empirical_auc(t: &[f64], z: &[bool], mode: AucMode) -> Result<f64> {
    if t.len() != z.len() {
        return Err(SpoError::DimensionMismatch { expected: t.len(), got: z.len() });
    }
    if t.is_empty() {
        return Err(SpoError::Empty("auc inputs"));
    }
    if let Some(bad) = t.iter().find(|v| v.is_nan()) {
        return Err(SpoError::Domain(format!("index value {bad}")));
    }
    match mode {
        AucMode::Conditional => {
            let neg = sorted(t.iter().zip(z).filter(|(_, &z)| !z).map(|(&v, _)| v).collect());
            let pos: Vec<f64> = t.iter().zip(z).filter(|(_, &z)| z).map(|(&v, _)| v).collect();
            if neg.is_empty() || pos.is_empty() {
                return Err(SpoError::Domain("conditional AUC needs both labels".into()));
            }
            let pairs = (neg.len() * pos.len()) as f64;
            Ok(doubled_wins(&neg, &pos) as f64 / (2.0 * pairs))
        }
        AucMode::Symmetric => {
            // φ(s_i + s_j) counts pairs with −s_j < s_i
            let s: Vec<f64> = t.iter().zip(z).map(|(&v, &z)| if z { v } else { -v }).collect();
            let neg_s = sorted(s.iter().map(|v| -v).collect());
            let n = s.len() as f64;
            Ok(doubled_wins(&neg_s, &s) as f64 / (2.0 * n * n))
        }
    }
}

/// Log-spaced β values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) || points < 2 {
        return Err(SpoError::Domain(format!("invalid grid [{lo}, {hi}] with {points} points")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect())
}

/// 49 points, 12 per decade, from 1e-2 to 1e2.
pub fn default_beta_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 49).expect("static grid")
}

/// Rewards and potentials of one policy on fixed contexts.
#[derive(Clone, Debug)]
pub struct RewardTable {
    pub potentials: PotentialTable,
    pub rewards: Vec<Vec<f64>>,
}

impl RewardTable {
    pub fn new(potentials: PotentialTable, rewards: Vec<Vec<f64>>) -> Result<Self> {
        check_rows(&rewards, &potentials.reference)?;
        Ok(RewardTable { potentials, rewards })
    }

    pub fn for_policy(
        policy: &MlpPolicy,
        spec: &FDivergence,
        sign: f64,
        world: &SyntheticWorld,
        contexts: &[Vec<f64>],
    ) -> Result<Self> {
        let potentials = PotentialTable::from_policy(policy, &world.reference, spec, contexts, sign)?;
        let rewards = contexts.iter().map(|x| world.reward_row(x)).collect::<Result<Vec<_>>>()?;
        Self::new(potentials, rewards)
    }

    pub fn point(&self, spec: &FDivergence, beta: f64) -> Result<ParetoPoint> {
        let mut reward = 0.0;
        let mut div = 0.0;
        for ((h, r), rew) in self.potentials.h.iter().zip(&self.potentials.reference).zip(&self.rewards) {
            let p = tilted_policy(spec, h, beta, r)?;
            reward += p.as_slice().iter().zip(rew).map(|(p, v)| p * v).sum::<f64>();
            div += match d_f(spec, &p, r)? {
                ExtReal::Finite(v) => v,
                ExtReal::PosInfinity => f64::INFINITY,
            };
        }
        let m = self.rewards.len() as f64;
        Ok(ParetoPoint { beta, mean_reward: reward / m, mean_divergence: div / m })
    }

    pub fn curve(&self, spec: &FDivergence, beta_grid: &[f64]) -> Result<Vec<ParetoPoint>> {
        check_grid(beta_grid)?;
        beta_grid.iter().map(|&b| self.point(spec, b)).collect()
    }

    /// Mean reward of the reference policy.
    pub fn reference_reward(&self) -> f64 {
        let total: f64 = self
            .potentials
            .reference
            .iter()
            .zip(&self.rewards)
            .map(|(r, rew)| r.as_slice().iter().zip(rew).map(|(p, v)| p * v).sum::<f64>())
            .sum();
        total / self.rewards.len() as f64
    }
}

fn check_grid(beta_grid: &[f64]) -> Result<()> {
    if beta_grid.is_empty() {
        return Err(SpoError::Empty("beta grid"));
    }
    if beta_grid.iter().any(|b| !(*b > 0.0) || !b.is_finite()) || beta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SpoError::Domain("beta grid must be positive and strictly ascending".into()));
    }
    Ok(())
}

/// Reward–divergence points of `π_{β,θ}` over a β grid; `sign` is the OSPO
/// alignment factor applied to the potential before tilting.
pub fn pareto_curve(
    policy: &MlpPolicy,
    world: &SyntheticWorld,
    spec: &FDivergence,
    sign: f64,
    contexts: &[Vec<f64>],
    beta_grid: &[f64],
) -> Result<Vec<ParetoPoint>> {
    RewardTable::for_policy(policy, spec, sign, world, contexts)?.curve(spec, beta_grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReward {
    pub reward: f64,
    /// κ fell outside the curve's divergence range and the nearest point was used.
    pub extrapolated: bool,
}

/// Reward at divergence κ, linearly interpolated in divergence.
///
/// Uses the point nearest κ from below and the point nearest κ from above
/// (ties toward smaller β). When one side is missing the nearest point is
/// returned and flagged.
pub fn reward_at_budget(curve: &[ParetoPoint], kappa: f64) -> Result<BudgetReward> {
    if curve.is_empty() {
        return Err(SpoError::Empty("pareto curve"));
    }
    let pick = |pred: &dyn Fn(&ParetoPoint) -> bool, key: &dyn Fn(&ParetoPoint) -> f64| {
        curve
            .iter()
            .filter(|p| pred(p))
            .min_by(|a, b| key(a).total_cmp(&key(b)).then(a.beta.total_cmp(&b.beta)))
    };
    let below = pick(&|p| p.mean_divergence <= kappa, &|p| kappa - p.mean_divergence);
    let above = pick(&|p| p.mean_divergence >= kappa, &|p| p.mean_divergence - kappa);
    match (below, above) {
        (Some(lo), Some(hi)) => {
            let span = hi.mean_divergence - lo.mean_divergence;
            let reward = if span > 0.0 {
                lo.mean_reward + (kappa - lo.mean_divergence) / span * (hi.mean_reward - lo.mean_reward)
            } else {
                lo.mean_reward
            };
            Ok(BudgetReward { reward, extrapolated: false })
        }
        _ => {
            let nearest = pick(&|p| p.mean_divergence.is_finite(), &|p| (p.mean_divergence - kappa).abs())
                .ok_or(SpoError::Domain("no finite divergence on curve".into()))?;
            Ok(BudgetReward { reward: nearest.mean_reward, extrapolated: true })
        }
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SpoError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.len() < 2 {
        return Err(SpoError::Empty("correlation needs two points"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(SpoError::Domain("correlation of a constant sequence".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Reference rows for contexts under `reference`.
pub fn reference_rows(reference: &Reference, contexts: &[Vec<f64>]) -> Result<Vec<ProbabilityRow>> {
    contexts.iter().map(|x| reference.row(x)).collect()
}

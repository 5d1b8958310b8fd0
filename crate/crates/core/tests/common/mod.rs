//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spo::data::PreferenceExample;
use spo::MlpPolicy;

/// Weighted isotonic regression by projected gradient ascent on the dual.
///
/// Solves `min ½ Σ w_i (x_i − y_i)²` s.t. `x_1 ≤ … ≤ x_n` (points already
/// sorted by their abscissa). With multipliers `μ_i ≥ 0` on `x_i − x_{i+1} ≤ 0`,
/// the primal is `x(μ) = y − W⁻¹ Aᵀ μ` and the dual gradient is `A x(μ)`.
pub fn isotonic_qp(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 2 {
        return y.to_vec();
    }
    let primal = |mu: &[f64]| -> Vec<f64> {
        let mut x = y.to_vec();
        for (i, &m) in mu.iter().enumerate() {
            x[i] -= m / w[i];
            x[i + 1] += m / w[i + 1];
        }
        x
    };
    let w_min = w.iter().copied().fold(f64::INFINITY, f64::min);
    let step = w_min / 4.0;
    let mut mu = vec![0.0; n - 1];
    for _ in 0..2_000_000 {
        let x = primal(&mu);
        let mut change: f64 = 0.0;
        for i in 0..n - 1 {
            let next = (mu[i] + step * (x[i] - x[i + 1])).max(0.0);
            change = change.max((next - mu[i]).abs());
            mu[i] = next;
        }
        if change < 1e-15 {
            break;
        }
    }
    primal(&mu)
}

/// `(1/(n₁n₀)) Σ_{z_i=0, z_j=1} φ(t_j − t_i)` by enumeration.
pub fn brute_auc_conditional(t: &[f64], z: &[bool]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..t.len() {
        for j in 0..t.len() {
            if !z[i] && z[j] {
                let d = t[j] - t[i];
                total += if d > 0.0 {
                    1.0
                } else if d == 0.0 {
                    0.5
                } else {
                    0.0
                };
                pairs += 1;
            }
        }
    }
    total / pairs as f64
}

/// Mean KL between the softmax tilt `π_ref e^{h/β}` and `π_ref`, written out directly.
pub fn kl_phi(h: &[Vec<f64>], refs: &[Vec<f64>], beta: f64) -> f64 {
    let mut total = 0.0;
    for (row, r) in h.iter().zip(refs) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = row.iter().zip(r).map(|(v, p)| p * ((v - max) / beta).exp()).collect();
        let z: f64 = weights.iter().sum();
        total += weights
            .iter()
            .zip(r)
            .map(|(w, p)| {
                let q = w / z;
                if q > 0.0 {
                    q * (q / p).ln()
                } else {
                    0.0
                }
            })
            .sum::<f64>();
    }
    total / h.len() as f64
}

/// The grid point `k · step`, `k = 1..=steps`, whose divergence is closest to κ.
pub fn grid_scan_beta(h: &[Vec<f64>], refs: &[Vec<f64>], kappa: f64, step: f64, steps: usize) -> f64 {
    (1..=steps)
        .map(|k| k as f64 * step)
        .map(|b| (b, (kl_phi(h, refs, b) - kappa).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

/// Worst relative error of a central-difference gradient over coordinates
/// whose analytic gradient exceeds `floor` in magnitude.
pub fn fd_check<F>(policy: &MlpPolicy, analytic: &[f64], eps: f64, floor: f64, loss: F) -> (f64, usize)
where
    F: Fn(&MlpPolicy) -> f64,
{
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut probe = policy.clone();
    for k in 0..policy.num_params() {
        if analytic[k].abs() <= floor {
            continue;
        }
        let base = policy.params()[k];
        probe.params_mut()[k] = base + eps;
        let up = loss(&probe);
        probe.params_mut()[k] = base - eps;
        let down = loss(&probe);
        probe.params_mut()[k] = base;
        let fd = (up - down) / (2.0 * eps);
        worst = worst.max((fd - analytic[k]).abs() / analytic[k].abs());
        checked += 1;
    }
    (worst, checked)
}

pub fn random_examples(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize) -> Vec<PreferenceExample> {
    (0..n)
        .map(|_| {
            let y0 = rng.random_range(0..k);
            // distinct actions so every example carries gradient
            let y1 = (y0 + rng.random_range(1..k)) % k;
            PreferenceExample {
                x: (0..d).map(|_| rng.sample(StandardNormal)).collect(),
                y0,
                y1,
                z: rng.random_bool(0.5),
            }
        })
        .collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

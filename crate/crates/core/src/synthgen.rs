//! Synthetic preference universe with a known teacher and a shifted-mixture link.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::PreferenceExample;
use crate::error::{Result, SpoError};
use crate::fdiv::FDivergence;
use crate::link::sigmoid;
use crate::policy::{potential_row, MlpPolicy, Reference};
use crate::rng::{stream, stream_indexed};

pub const CONTEXT_DIM: usize = 20;
pub const NUM_ACTIONS: usize = 10;
pub const HIDDEN: usize = 32;
pub const REWARD_SCALE: f64 = 10.0;
pub const LINK_SLOPE: f64 = 4.0;
pub const DEFAULT_SHIFTS: [f64; 7] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5];

/// Stream names for the seed derivation recorded in output metadata.
pub const SEED_DERIVATION: &str =
    "ChaCha8Rng::seed_from_u64(splitmix64-chain(seed, fnv1a(stream)[, index])); streams: teacher, data, eval-contexts, eval-pairs, learner-init, shuffle";

/// `g(u) = ½σ(4(u − s)) + ½σ(4(u + s))`.
///
/// Evaluated on `|u|` and reflected, so `g(u) + g(−u) = 1` holds exactly in
/// floating point.
pub fn link_mixture(u: f64, shift: f64) -> f64 {
    if u == 0.0 {
        return 0.5;
    }
    let a = u.abs();
    let g = (0.5 * sigmoid(LINK_SLOPE * (a - shift)) + 0.5 * sigmoid(LINK_SLOPE * (a + shift))).max(0.5);
    if u > 0.0 {
        g
    } else {
        1.0 - g
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticWorld {
    pub seed: u64,
    pub context_dim: usize,
    pub num_actions: usize,
    pub teacher: MlpPolicy,
    pub reward_scale: f64,
    pub shift: f64,
    pub reference: Reference,
}

pub fn policy_dims(context_dim: usize, num_actions: usize) -> Vec<usize> {
    vec![context_dim, HIDDEN, HIDDEN, num_actions]
}

/// Teacher drawn with the policy module's uniform fan-in init, seeded from `seed`.
pub fn gen_world(seed: u64) -> SyntheticWorld {
    let teacher = MlpPolicy::random(&policy_dims(CONTEXT_DIM, NUM_ACTIONS), &mut stream(seed, "teacher"))
        .expect("static dims are valid");
    SyntheticWorld {
        seed,
        context_dim: CONTEXT_DIM,
        num_actions: NUM_ACTIONS,
        teacher,
        reward_scale: REWARD_SCALE,
        shift: 0.0,
        reference: Reference::Uniform { actions: NUM_ACTIONS },
    }
}

impl SyntheticWorld {
    pub fn with_shift(mut self, shift: f64) -> Result<Self> {
        if !(shift >= 0.0) || !shift.is_finite() {
            return Err(SpoError::Domain(format!("link shift must be finite and nonnegative, got {shift}")));
        }
        self.shift = shift;
        Ok(self)
    }

    /// `h*(x, ·) = log π_θ*(·|x) − log π_ref(·|x)`.
    pub fn true_potential(&self, x: &[f64]) -> Result<Vec<f64>> {
        potential_row(&self.teacher, &FDivergence::Kl, &self.reference, x)
    }

    /// `r*(x, ·) = c_r · h*(x, ·)`.
    pub fn reward_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.true_potential(x)?.into_iter().map(|h| self.reward_scale * h).collect())
    }

    pub fn reward_gap(&self, example: &PreferenceExample) -> Result<f64> {
        let r = self.reward_row(&example.x)?;
        Ok(r[example.y1] - r[example.y0])
    }

    /// `t*(w) = h*(x, y1) − h*(x, y0)`.
    pub fn true_index(&self, example: &PreferenceExample) -> Result<f64> {
        let h = self.true_potential(&example.x)?;
        Ok(h[example.y1] - h[example.y0])
    }

    pub fn link(&self, u: f64) -> f64 {
        link_mixture(u, self.shift)
    }

    fn draw_context<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.context_dim).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// Standard-Gaussian contexts from a named stream.
    pub fn gen_contexts(&self, m: usize, stream_name: &str) -> Vec<Vec<f64>> {
        let mut rng = stream(self.seed, stream_name);
        (0..m).map(|_| self.draw_context(&mut rng)).collect()
    }

    fn gen_from<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Vec<(PreferenceExample, f64)>> {
        (0..n)
            .map(|_| {
                let x = self.draw_context(rng);
                let y0 = rng.random_range(0..self.num_actions);
                let y1 = rng.random_range(0..self.num_actions);
                let u: f64 = rng.random();
                let mut ex = PreferenceExample { x, y0, y1, z: false };
                let gap = self.reward_gap(&ex)?;
                // one uniform per example: datasets at different shifts share draws
                ex.z = u < self.link(gap);
                Ok((ex, gap))
            })
            .collect()
    }

    /// Examples together with their reward gap `Δr` (debug use only).
    pub fn gen_dataset_debug(&self, n: usize, stream_name: &str) -> Result<Vec<(PreferenceExample, f64)>> {
        if n == 0 {
            return Err(SpoError::Empty("dataset size"));
        }
        self.gen_from(&mut stream(self.seed, stream_name), n)
    }

    /// Generates `n` examples split into `shards` independently seeded shards.
    pub fn gen_dataset_sharded(&self, n: usize, shards: usize) -> Result<Vec<PreferenceExample>> {
        if n == 0 {
            return Err(SpoError::Empty("dataset size"));
        }
        let shards = shards.clamp(1, n);
        let mut out = Vec::with_capacity(n);
        for s in 0..shards {
            let size = n / shards + usize::from(s < n % shards);
            let mut rng = stream_indexed(self.seed, "data-shard", s as u64);
            out.extend(self.gen_from(&mut rng, size)?.into_iter().map(|(e, _)| e));
        }
        Ok(out)
    }
}

/// Training preferences: `x ~ N(0, I)`, `y0, y1` uniform, `z ~ Bernoulli(g(Δr))`.
pub fn gen_dataset(world: &SyntheticWorld, n: usize) -> Result<Vec<PreferenceExample>> {
    Ok(world.gen_dataset_debug(n, "data")?.into_iter().map(|(e, _)| e).collect())
}

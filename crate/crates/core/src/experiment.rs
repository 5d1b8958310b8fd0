//! Seed × shift × method sweeps of the synthetic study and their summaries.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{calibrate_table, CalibrationResult, PotentialTable};
use crate::data::PreferenceExample;
use crate::error::{Result, SpoError};
use crate::eval::{
    default_beta_grid, empirical_auc, pearson, reward_at_budget, rho_metric, AucMode, ParetoPoint, RewardTable,
};
use crate::fdiv::FDivergence;
use crate::policy::index;
use crate::synthgen::{gen_dataset, gen_world, SyntheticWorld, DEFAULT_SHIFTS, SEED_DERIVATION};
use crate::trainers::{train, write_train_log, Method, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationSplit {
    /// The training contexts.
    Train,
    /// A fresh context sample of the evaluation size.
    Heldout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Training pairs per run.
    pub n: usize,
    /// Number of replications; seeds are `first_seed .. first_seed + seeds`.
    pub seeds: usize,
    pub first_seed: u64,
    pub s_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub kappa: f64,
    pub beta_grid: Vec<f64>,
    /// Evaluation contexts per run.
    pub m: usize,
    /// Fresh preference pairs used for AUC and index correlation.
    pub eval_pairs: usize,
    pub divergence: FDivergence,
    pub calibration_split: CalibrationSplit,
    /// Training settings shared by all methods; `method` and `seed` are set per cell.
    pub train: TrainConfig,
    /// Per-method partial overrides of `train`, keyed by method name.
    pub overrides: BTreeMap<Method, toml::Table>,
    pub save_checkpoints: bool,
    pub save_train_logs: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 1000,
            seeds: 50,
            first_seed: 0,
            s_grid: DEFAULT_SHIFTS.to_vec(),
            methods: Method::ALL.to_vec(),
            kappa: 0.2,
            beta_grid: default_beta_grid(),
            m: 2000,
            eval_pairs: 2000,
            divergence: FDivergence::Kl,
            calibration_split: CalibrationSplit::Train,
            train: TrainConfig::default(),
            overrides: BTreeMap::new(),
            save_checkpoints: false,
            save_train_logs: false,
            output_dir: PathBuf::from("runs/default"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SpoError::Config(m));
        if self.n == 0 || self.seeds == 0 || self.m == 0 || self.eval_pairs < 2 {
            return bad("n, seeds and m must be at least 1 and eval_pairs at least 2".into());
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if self.s_grid.is_empty() || self.methods.is_empty() || self.beta_grid.is_empty() {
            return bad("s_grid, methods and beta_grid must be non-empty".into());
        }
        if let Some(s) = self.s_grid.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return bad(format!("shift {s} must be finite and nonnegative"));
        }
        if self.beta_grid.iter().any(|b| !(*b > 0.0)) || self.beta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("beta_grid must be positive and strictly ascending".into());
        }
        for m in Method::ALL {
            if self.methods.contains(&m) || self.overrides.contains_key(&m) {
                self.train_config(m, self.first_seed)?;
            }
        }
        Ok(())
    }

    /// Training config of one cell: shared settings, then the method's overrides.
    pub fn train_config(&self, method: Method, seed: u64) -> Result<TrainConfig> {
        let mut table = toml::Table::try_from(&self.train).map_err(|e| SpoError::Config(e.to_string()))?;
        if let Some(over) = self.overrides.get(&method) {
            for (k, v) in over {
                table.insert(k.clone(), v.clone());
            }
        }
        let mut config: TrainConfig = table.try_into()?;
        config.method = method;
        config.seed = seed;
        config.validate()?;
        Ok(config)
    }

    /// SHA-256 of the canonical JSON form of every result-affecting field.
    pub fn hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
            obj.remove("save_checkpoints");
            obj.remove("save_train_logs");
        }
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&value)?)))
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|r| self.first_seed + r).collect()
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for seed in self.seed_list() {
            for &shift in &self.s_grid {
                for &method in &self.methods {
                    cells.push(Cell { seed, shift, method });
                }
            }
        }
        cells
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub seed: u64,
    pub shift: f64,
    pub method: Method,
}

/// One row of `runs.csv`; metric fields are empty for failed runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub seed: u64,
    pub shift: f64,
    pub method: String,
    pub status: String,
    pub error: String,
    pub reward_at_budget: Option<f64>,
    pub budget_extrapolated: Option<bool>,
    pub reference_reward: Option<f64>,
    pub rho: Option<f64>,
    pub rho_scale: Option<f64>,
    pub auc_conditional: Option<f64>,
    pub auc_symmetric: Option<f64>,
    pub index_corr: Option<f64>,
    pub sign_flip: Option<bool>,
    pub s_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub calibrated_divergence: Option<f64>,
    pub heldout_divergence: Option<f64>,
    pub reward_at_beta_hat: Option<f64>,
    pub final_loss: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: Cell,
    pub row: RunRow,
    pub curve: Vec<ParetoPoint>,
    pub calibration: Option<CalibrationResult>,
}

/// The dataset used by cell `(seed, shift)`; pairs and uniforms are shared across shifts.
pub fn cell_world(seed: u64, shift: f64) -> Result<SyntheticWorld> {
    gen_world(seed).with_shift(shift)
}

fn run_cell_inner(config: &ExperimentConfig, cell: Cell) -> Result<(RunRow, Vec<ParetoPoint>, CalibrationResult)> {
    let world = cell_world(cell.seed, cell.shift)?;
    let spec = config.divergence;
    let data = gen_dataset(&world, config.n)?;
    let tc = config.train_config(cell.method, cell.seed)?;
    let outcome = train(&data, &tc, &world.reference, &spec)?;
    let sign = outcome.sign_factor();
    let policy = &outcome.policy;

    if config.save_checkpoints || config.save_train_logs {
        let dir = config.output_dir.join("cells");
        fs::create_dir_all(&dir)?;
        let stem = format!("{}_s{}_seed{}", cell.method, cell.shift, cell.seed);
        if config.save_checkpoints {
            policy.save_checkpoint(&dir, &stem, Some(cell.seed))?;
        }
        if config.save_train_logs {
            write_train_log(BufWriter::new(File::create(dir.join(format!("{stem}_log.csv")))?), &outcome.log)?;
        }
    }

    let contexts = world.gen_contexts(config.m, "eval-contexts");
    let table = RewardTable::for_policy(policy, &spec, sign, &world, &contexts)?;
    let curve = table.curve(&spec, &config.beta_grid)?;
    let budget = reward_at_budget(&curve, config.kappa)?;
    let rho = rho_metric(
        &table.potentials.h,
        &contexts.iter().map(|x| world.true_potential(x)).collect::<Result<Vec<_>>>()?,
        &table.potentials.reference,
    )?;

    let pairs: Vec<PreferenceExample> =
        world.gen_dataset_debug(config.eval_pairs, "eval-pairs")?.into_iter().map(|(e, _)| e).collect();
    let t_hat = pairs.iter().map(|e| Ok(sign * index(policy, &spec, &world.reference, e)?)).collect::<Result<Vec<_>>>()?;
    let t_star = pairs.iter().map(|e| world.true_index(e)).collect::<Result<Vec<_>>>()?;
    let z: Vec<bool> = pairs.iter().map(|e| e.z).collect();
    let auc_c = empirical_auc(&t_hat, &z, AucMode::Conditional)?;
    let auc_s = empirical_auc(&t_hat, &z, AucMode::Symmetric)?;
    let corr = pearson(&t_hat, &t_star).ok();

    let calib_contexts = match config.calibration_split {
        CalibrationSplit::Train => data.iter().map(|e| e.x.clone()).collect::<Vec<_>>(),
        CalibrationSplit::Heldout => world.gen_contexts(config.m, "calibration-contexts"),
    };
    let calib_table = PotentialTable::from_policy(policy, &world.reference, &spec, &calib_contexts, sign)?;
    let calib = calibrate_table(&calib_table, &spec, config.kappa, None)?;
    let at_hat = table.point(&spec, calib.beta_hat)?;

    let row = RunRow {
        seed: cell.seed,
        shift: cell.shift,
        method: cell.method.to_string(),
        status: "ok".into(),
        error: String::new(),
        reward_at_budget: Some(budget.reward),
        budget_extrapolated: Some(budget.extrapolated),
        reference_reward: Some(table.reference_reward()),
        rho: Some(rho.rho),
        rho_scale: Some(rho.best_scale),
        auc_conditional: Some(auc_c),
        auc_symmetric: Some(auc_s),
        index_corr: corr,
        sign_flip: outcome.sign.map(|s| s.flip),
        s_hat: outcome.sign.map(|s| s.s_hat),
        beta_hat: Some(calib.beta_hat),
        calibrated_divergence: Some(calib.achieved_divergence),
        heldout_divergence: Some(at_hat.mean_divergence),
        reward_at_beta_hat: Some(at_hat.mean_reward),
        final_loss: outcome.epoch_losses().last().copied(),
    };
    Ok((row, curve, calib))
}

/// Trains and evaluates one cell; failures become an error row.
pub fn run_cell(config: &ExperimentConfig, cell: Cell) -> CellResult {
    match run_cell_inner(config, cell) {
        Ok((row, curve, calib)) => CellResult { cell, row, curve, calibration: Some(calib) },
        Err(e) => {
            log::error!("cell {} s={} seed={} failed: {e}", cell.method, cell.shift, cell.seed);
            CellResult {
                cell,
                row: RunRow {
                    seed: cell.seed,
                    shift: cell.shift,
                    method: cell.method.to_string(),
                    status: "error".into(),
                    error: e.to_string(),
                    ..Default::default()
                },
                curve: Vec::new(),
                calibration: None,
            }
        }
    }
}

/// Linear-interpolation percentile of sorted data, `q ∈ [0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub p05: Option<f64>,
    pub p95: Option<f64>,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Summary::default();
        }
        v.sort_by(f64::total_cmp);
        Summary {
            mean: Some(v.iter().sum::<f64>() / v.len() as f64),
            p05: percentile(&v, 0.05),
            p95: percentile(&v, 0.95),
        }
    }
}

/// One `(method, shift)` row of `aggregate.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub shift: f64,
    pub runs: usize,
    pub failed: usize,
    pub reward_mean: Option<f64>,
    pub reward_p05: Option<f64>,
    pub reward_p95: Option<f64>,
    pub rho_mean: Option<f64>,
    pub rho_p05: Option<f64>,
    pub rho_p95: Option<f64>,
    pub auc_mean: Option<f64>,
    pub auc_p05: Option<f64>,
    pub auc_p95: Option<f64>,
    pub index_corr_mean: Option<f64>,
    pub index_corr_p05: Option<f64>,
    pub index_corr_p95: Option<f64>,
    pub beta_hat_mean: Option<f64>,
    pub beta_hat_p05: Option<f64>,
    pub beta_hat_p95: Option<f64>,
}

/// Seed-averaged reward–divergence curve of one `(method, shift)` at one β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: String,
    pub shift: f64,
    pub beta: f64,
    pub reward: f64,
    pub divergence: f64,
    pub runs: usize,
}

fn groups(config: &ExperimentConfig) -> Vec<(Method, f64)> {
    let mut out = Vec::new();
    for &method in &config.methods {
        for &shift in &config.s_grid {
            out.push((method, shift));
        }
    }
    out
}

pub fn aggregate(config: &ExperimentConfig, results: &[CellResult]) -> (Vec<AggregateRow>, Vec<CurveRow>) {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (method, shift) in groups(config) {
        let cell: Vec<&CellResult> =
            results.iter().filter(|r| r.cell.method == method && r.cell.shift == shift).collect();
        let ok: Vec<&RunRow> = cell.iter().map(|r| &r.row).filter(|r| r.status == "ok").collect();
        let summary = |f: fn(&RunRow) -> Option<f64>| Summary::of(ok.iter().filter_map(|r| f(r)));
        let reward = summary(|r| r.reward_at_budget);
        let rho = summary(|r| r.rho);
        let auc = summary(|r| r.auc_conditional);
        let corr = summary(|r| r.index_corr);
        let beta = summary(|r| r.beta_hat);
        rows.push(AggregateRow {
            method: method.to_string(),
            shift,
            runs: cell.len(),
            failed: cell.len() - ok.len(),
            reward_mean: reward.mean,
            reward_p05: reward.p05,
            reward_p95: reward.p95,
            rho_mean: rho.mean,
            rho_p05: rho.p05,
            rho_p95: rho.p95,
            auc_mean: auc.mean,
            auc_p05: auc.p05,
            auc_p95: auc.p95,
            index_corr_mean: corr.mean,
            index_corr_p05: corr.p05,
            index_corr_p95: corr.p95,
            beta_hat_mean: beta.mean,
            beta_hat_p05: beta.p05,
            beta_hat_p95: beta.p95,
        });
        let finished: Vec<&CellResult> = cell.iter().copied().filter(|r| !r.curve.is_empty()).collect();
        if finished.is_empty() {
            continue;
        }
        for (i, &beta) in config.beta_grid.iter().enumerate() {
            let k = finished.len() as f64;
            curves.push(CurveRow {
                method: method.to_string(),
                shift,
                beta,
                reward: finished.iter().map(|r| r.curve[i].mean_reward).sum::<f64>() / k,
                divergence: finished.iter().map(|r| r.curve[i].mean_divergence).sum::<f64>() / k,
                runs: finished.len(),
            });
        }
    }
    (rows, curves)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(SpoError::from)).collect()
}

const RUN_HEADER: [&str; 20] = [
    "seed",
    "shift",
    "method",
    "status",
    "error",
    "reward_at_budget",
    "budget_extrapolated",
    "reference_reward",
    "rho",
    "rho_scale",
    "auc_conditional",
    "auc_symmetric",
    "index_corr",
    "sign_flip",
    "s_hat",
    "beta_hat",
    "calibrated_divergence",
    "heldout_divergence",
    "reward_at_beta_hat",
    "final_loss",
];

const AGGREGATE_HEADER: [&str; 19] = [
    "method",
    "shift",
    "runs",
    "failed",
    "reward_mean",
    "reward_p05",
    "reward_p95",
    "rho_mean",
    "rho_p05",
    "rho_p95",
    "auc_mean",
    "auc_p05",
    "auc_p95",
    "index_corr_mean",
    "index_corr_p05",
    "index_corr_p95",
    "beta_hat_mean",
    "beta_hat_p05",
    "beta_hat_p95",
];

const CURVE_HEADER: [&str; 6] = ["method", "shift", "beta", "reward", "divergence", "runs"];

pub const REWARD_VS_S_HEADER: [&str; 5] = ["method", "s", "mean", "lo", "hi"];
pub const PARETO_HEADER: [&str; 4] = ["method", "beta", "reward", "divergence"];

#[derive(Clone, Debug, Serialize)]
struct Manifest<'a> {
    config_hash: String,
    config: &'a ExperimentConfig,
    seeds: Vec<u64>,
    seed_derivation: &'a str,
    cells: usize,
    failed: usize,
    version: &'a str,
}

#[derive(Clone, Debug, Serialize)]
struct RunSummary<'a> {
    seed: u64,
    shift: f64,
    method: Method,
    status: &'a str,
    calibration: Option<&'a CalibrationResult>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub results: Vec<CellResult>,
    pub aggregate: Vec<AggregateRow>,
    pub curves: Vec<CurveRow>,
    pub config_hash: String,
}

impl ExperimentOutcome {
    pub fn failed(&self) -> usize {
        self.results.iter().filter(|r| r.row.status != "ok").count()
    }
}

/// Worker count from `SPO_THREADS`; `None` lets rayon decide.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("SPO_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}

/// Runs every cell on a pool of `threads` workers and collects results in cell order.
pub fn run_cells(config: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<CellResult>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| SpoError::Config(format!("thread pool: {e}")))?;
    let cells = config.cells();
    log::info!("running {} cells on {} workers", cells.len(), pool.current_num_threads());
    Ok(pool.install(|| cells.par_iter().map(|&c| run_cell(config, c)).collect()))
}

/// Runs the sweep and writes `runs.csv`, `runs.json`, `curves.csv`,
/// `aggregate.csv`, `aggregate_curves.csv`, `budget.json` and
/// `manifest.json` under the configured output directory.
pub fn run_experiment(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutcome> {
    let results = run_cells(config, threads)?;
    let (aggregate_rows, curve_rows) = aggregate(config, &results);
    let config_hash = config.hash()?;
    let out = &config.output_dir;
    fs::create_dir_all(out)?;

    let rows: Vec<&RunRow> = results.iter().map(|r| &r.row).collect();
    write_csv(&out.join("runs.csv"), &rows, &RUN_HEADER)?;
    let summaries: Vec<RunSummary> = results
        .iter()
        .map(|r| RunSummary {
            seed: r.cell.seed,
            shift: r.cell.shift,
            method: r.cell.method,
            status: &r.row.status,
            calibration: r.calibration.as_ref(),
        })
        .collect();
    serde_json::to_writer_pretty(BufWriter::new(File::create(out.join("runs.json"))?), &summaries)?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out.join("curves.csv"))?));
    w.write_record(["seed", "shift", "method", "beta", "reward", "divergence"])?;
    for r in &results {
        for p in &r.curve {
            w.write_record([
                r.cell.seed.to_string(),
                r.cell.shift.to_string(),
                r.cell.method.to_string(),
                p.beta.to_string(),
                p.mean_reward.to_string(),
                p.mean_divergence.to_string(),
            ])?;
        }
    }
    w.flush()?;

    write_csv(&out.join("aggregate.csv"), &aggregate_rows, &AGGREGATE_HEADER)?;
    write_csv(&out.join("aggregate_curves.csv"), &curve_rows, &CURVE_HEADER)?;

    let mut budget: BTreeMap<String, BTreeMap<String, serde_json::Value>> = BTreeMap::new();
    for a in &aggregate_rows {
        budget.entry(a.method.clone()).or_default().insert(
            a.shift.to_string(),
            serde_json::json!({
                "kappa": config.kappa,
                "runs": a.runs,
                "failed": a.failed,
                "mean": a.reward_mean,
                "p05": a.reward_p05,
                "p95": a.reward_p95,
            }),
        );
    }
    serde_json::to_writer_pretty(BufWriter::new(File::create(out.join("budget.json"))?), &budget)?;

    let failed = results.iter().filter(|r| r.row.status != "ok").count();
    let manifest = Manifest {
        config_hash: config_hash.clone(),
        config,
        seeds: config.seed_list(),
        seed_derivation: SEED_DERIVATION,
        cells: results.len(),
        failed,
        version: env!("CARGO_PKG_VERSION"),
    };
    serde_json::to_writer_pretty(BufWriter::new(File::create(out.join("manifest.json"))?), &manifest)?;

    Ok(ExperimentOutcome { results, aggregate: aggregate_rows, curves: curve_rows, config_hash })
}

pub fn read_aggregate(dir: &Path) -> Result<(Vec<AggregateRow>, Vec<CurveRow>)> {
    Ok((read_csv(&dir.join("aggregate.csv"))?, read_csv(&dir.join("aggregate_curves.csv"))?))
}

pub fn read_runs(dir: &Path) -> Result<Vec<RunRow>> {
    read_csv(&dir.join("runs.csv"))
}

/// Writes `reward_vs_s.csv` and one `pareto_s{shift}.csv` per shift into `dir`.
///
/// Returns the written paths.
pub fn emit_figure_data(aggregate: &[AggregateRow], curves: &[CurveRow], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("reward_vs_s.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(REWARD_VS_S_HEADER)?;
    for a in aggregate {
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        w.write_record([a.method.clone(), a.shift.to_string(), cell(a.reward_mean), cell(a.reward_p05), cell(a.reward_p95)])?;
    }
    w.flush()?;
    written.push(path);

    let mut shifts: Vec<f64> = aggregate.iter().map(|a| a.shift).chain(curves.iter().map(|c| c.shift)).collect();
    shifts.sort_by(f64::total_cmp);
    shifts.dedup();
    for s in shifts {
        let path = dir.join(format!("pareto_s{s}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(PARETO_HEADER)?;
        for c in curves.iter().filter(|c| c.shift == s) {
            w.write_record([c.method.clone(), c.beta.to_string(), c.reward.to_string(), c.divergence.to_string()])?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

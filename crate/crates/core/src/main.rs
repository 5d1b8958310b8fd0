use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spo::calibration::calibrate_beta;
use spo::data::{read_dataset_csv, write_dataset_csv, DatasetMeta};
use spo::experiment::{emit_figure_data, read_aggregate, run_experiment, threads_from_env, ExperimentConfig};
use spo::synthgen::{gen_dataset, gen_world, SEED_DERIVATION};
use spo::{FDivergence, MlpPolicy, Reference, Result, SpoError};

#[derive(Parser)]
#[command(name = "spo", version, about = "Semiparametric preference optimization lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seed × shift × method sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides the replication count.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Generate a synthetic preference dataset with its teacher checkpoint.
    GenData {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        #[arg(long, default_value_t = 1)]
        shards: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate β for a saved policy so its tilt spends a divergence budget.
    Calibrate {
        /// Checkpoint header written by the policy module.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        kappa: f64,
        /// Dataset CSV whose contexts are used; otherwise fresh Gaussian contexts.
        #[arg(long)]
        contexts: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `kl` or `alpha:<a>`.
        #[arg(long, default_value = "kl")]
        divergence: String,
        /// Negate the potential before tilting.
        #[arg(long)]
        flip: bool,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        bracket: Option<Vec<f64>>,
    },
    /// Write figure tables from a finished run directory.
    Figures {
        dir: PathBuf,
        /// Destination directory (defaults to the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_divergence(s: &str) -> Result<FDivergence> {
    match s.trim().to_ascii_lowercase().as_str() {
        "kl" => Ok(FDivergence::Kl),
        other => match other.strip_prefix("alpha:").or_else(|| other.strip_prefix("alpha=")) {
            Some(a) => FDivergence::alpha(a.parse().map_err(|_| SpoError::Config(format!("bad alpha {a:?}")))?),
            None => Err(SpoError::Config(format!("unknown divergence {s:?}"))),
        },
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, output_dir, seeds } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            cfg.validate()?;
            let outcome = run_experiment(&cfg, threads_from_env())?;
            let failed = outcome.failed();
            println!(
                "{} cells, {} failed, config {} -> {}",
                outcome.results.len(),
                failed,
                &outcome.config_hash[..12],
                cfg.output_dir.display()
            );
            for a in &outcome.aggregate {
                println!(
                    "{:>5} s={:<5} reward@kappa mean={} [{}, {}]",
                    a.method,
                    a.shift,
                    fmt_opt(a.reward_mean),
                    fmt_opt(a.reward_p05),
                    fmt_opt(a.reward_p95)
                );
            }
            Ok(failed == 0)
        }
        Command::GenData { seed, n, shift, shards, out } => {
            let world = gen_world(seed).with_shift(shift)?;
            let data = if shards > 1 { world.gen_dataset_sharded(n, shards)? } else { gen_dataset(&world, n)? };
            fs::create_dir_all(&out)?;
            world.teacher.save_checkpoint(&out, "teacher", Some(seed))?;
            write_dataset_csv(BufWriter::new(File::create(out.join("data.csv"))?), &data)?;
            let meta = DatasetMeta {
                seed,
                shift,
                n,
                context_dim: world.context_dim,
                actions: world.num_actions,
                teacher_checkpoint: Some("teacher.json".into()),
                seed_derivation: if shards > 1 {
                    format!("{SEED_DERIVATION}; sharded over {shards} data-shard streams")
                } else {
                    SEED_DERIVATION.to_string()
                },
            };
            serde_json::to_writer_pretty(BufWriter::new(File::create(out.join("data.json"))?), &meta)?;
            println!("wrote {n} examples to {}", out.join("data.csv").display());
            Ok(true)
        }
        Command::Calibrate { policy, kappa, contexts, m, seed, divergence, flip, bracket } => {
            let spec = parse_divergence(&divergence)?;
            let policy = MlpPolicy::load_checkpoint(&policy)?;
            let reference = Reference::Uniform { actions: policy.num_actions() };
            let xs: Vec<Vec<f64>> = match contexts {
                Some(path) => read_dataset_csv(&path)?.into_iter().map(|e| e.x).collect(),
                None => {
                    let mut world = gen_world(seed);
                    world.context_dim = policy.input_dim();
                    world.gen_contexts(m, "calibration-contexts")
                }
            };
            let bracket = bracket.map(|b| [b[0], b[1]]);
            let sign = if flip { -1.0 } else { 1.0 };
            let result = calibrate_beta(&policy, &reference, &spec, &xs, kappa, bracket, sign)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            if let Some(w) = result.warning {
                eprintln!("warning: {w:?}");
            }
            Ok(true)
        }
        Command::Figures { dir, out } => {
            let (aggregate, curves) = read_aggregate(&dir)?;
            for path in emit_figure_data(&aggregate, &curves, out.as_ref().unwrap_or(&dir))? {
                println!("{}", path.display());
            }
            Ok(true)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

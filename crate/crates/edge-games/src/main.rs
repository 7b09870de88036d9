//! Command-line front end: instance generation, dynamics runs, experiment
//! sweeps, self-verification, and figure reproduction.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use edge_games::domain::{sample_instance, GameInstance, InstanceConfig, StorageRegime};
use edge_games::error::Error;
use edge_games::experiments::{
    emit_csv, emit_figure, sweep_cost, sweep_scale, FigureKind, SweepResult, SweepSpec,
};
use edge_games::game_dynamics::{run_best_response, DynamicsOptions};
use edge_games::verification::run_all_suites;

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

/// Edge-caching game simulator: providers bid for device caching under
/// budget and storage constraints.
///
/// Flag precedence: command-line flags override config-file values, which
/// override built-in defaults. The fallback seed comes from the
/// EDGE_GAMES_SEED environment variable when --seed is absent.
#[derive(Parser, Debug)]
#[command(name = "edge-games", version, disable_help_subcommand = true)]
struct Cli {
    /// Worker threads for sweeps [default: available cores]
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Instance/sampling config JSON; unknown keys are rejected
    /// [default: built-in values]
    #[arg(long)]
    config: Option<PathBuf>,

    /// Base random seed (unitless) [default: $EDGE_GAMES_SEED, else 1]
    #[arg(long)]
    seed: Option<u64>,

    /// Storage regime: light (capacities never bind) or strict (MB
    /// capacities enforced); overrides the config file value
    #[arg(long)]
    regime: Option<StorageRegime>,
}

impl CommonArgs {
    fn load_config(&self) -> Result<InstanceConfig, Error> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let config: InstanceConfig =
                    serde_json::from_str(&text).map_err(|e| Error::Json {
                        path: path.clone(),
                        source: e,
                    })?;
                config.validate()?;
                config
            }
            None => InstanceConfig::default(),
        };
        if let Some(regime) = self.regime {
            config.storage_regime = regime;
        }
        Ok(config)
    }

    fn seed(&self) -> u64 {
        self.seed
            .or_else(|| {
                std::env::var("EDGE_GAMES_SEED")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(1)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a game instance and write it as JSON
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Output instance path [default: instance.json]
        #[arg(long, default_value = "instance.json")]
        out: PathBuf,
    },
    /// Run the best-response dynamics and write a convergence report
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Load a previously generated instance instead of sampling one
        #[arg(long, conflicts_with = "config")]
        instance: Option<PathBuf>,
        /// Output report path [default: report.json]
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Iteration cap (count) [default: 100]
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
        /// Convergence threshold on per-provider utility improvement
        /// (utility units) [default: 1e-6]
        #[arg(long, default_value_t = 1e-6)]
        utility_tolerance: f64,
        /// Convergence threshold on payment steps (max-norm, monetary
        /// units) [default: 1e-6]
        #[arg(long, default_value_t = 1e-6)]
        payment_tolerance: f64,
        /// Exit with code 4 when the dynamics do not converge
        #[arg(long, action = ArgAction::SetTrue)]
        strict_exit: bool,
    },
    /// Grid sweep over provider and device counts; emits CSV + SVG
    SweepScale {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory [default: out]
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seeded replications per grid cell (count) [default: 10]
        #[arg(long, default_value_t = 10)]
        replications: usize,
        /// Also dump per-replication records as JSON
        #[arg(long, action = ArgAction::SetTrue)]
        dump_replications: bool,
    },
    /// Sweep the device cost parameter; emits CSV + SVG
    SweepCost {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory [default: out]
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seeded replications per cell (count) [default: 10]
        #[arg(long, default_value_t = 10)]
        replications: usize,
        /// Comma-separated cost values (same units as c_i)
        /// [default: 0.5,0.75,1.0,1.25,1.5]
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.75, 1.0, 1.25, 1.5])]
        costs: Vec<f64>,
        /// Also dump per-replication records as JSON
        #[arg(long, action = ArgAction::SetTrue)]
        dump_replications: bool,
    },
    /// Run the oracle, exactness, and uniqueness suites
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Optional JSON copy of the verification table
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trials per suite (count) [default: 100]
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Run both sweeps (both regimes unless --regime narrows it) and emit
    /// every CSV and figure
    ReproduceFigures {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory [default: figures]
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        /// Seeded replications per cell (count) [default: 10]
        #[arg(long, default_value_t = 10)]
        replications: usize,
    },
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::InfeasibleInstance { .. } | Error::InfeasibleAllocation(_) => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_instance(path: &Path) -> Result<GameInstance, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let instance: GameInstance = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    instance.validate()?;
    Ok(instance)
}

fn emit_sweep_outputs(
    result: &SweepResult,
    out: &Path,
    stem: &str,
    figures: &[FigureKind],
    records_json: bool,
) -> Result<(), Error> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let csv_path = out.join(format!("{stem}.csv"));
    emit_csv(result, &csv_path)?;
    println!("wrote {}", csv_path.display());
    for &kind in figures {
        let name = match kind {
            FigureKind::Iterations => "iterations",
            FigureKind::Time => "time",
            FigureKind::CpUtility => "cp_utility",
            FigureKind::EdUtility => "ed_utility",
        };
        let fig_path = out.join(format!("{stem}_{name}.svg"));
        emit_figure(result, kind, &fig_path)?;
        println!("wrote {}", fig_path.display());
    }
    if records_json {
        let path = out.join(format!("{stem}_replications.json"));
        write_json(&result.records, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep_summary(result: &SweepResult) {
    let cells = result.rows.iter().filter(|r| r.cp_index.is_none()).count();
    let converged: f64 = result
        .rows
        .iter()
        .filter(|r| r.cp_index.is_none())
        .map(|r| r.convergence_rate)
        .sum::<f64>()
        / cells.max(1) as f64;
    let time: f64 = result.records.iter().map(|r| r.wall_time_secs).sum();
    println!(
        "{} regime: {} cells, {} runs, convergence rate {:.1}%, solver time {:.2}s",
        result.regime,
        cells,
        result.records.len(),
        100.0 * converged,
        time
    );
}

fn real_main() -> Result<u8, Error> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return Ok(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::invalid(format!("--jobs: {e}")))?;
    }

    match cli.command {
        Command::Generate { common, out } => {
            let config = common.load_config()?;
            let instance = sample_instance(&config, common.seed())?;
            write_json(&instance, &out)?;
            println!(
                "wrote {} ({} CPs, {} EDs, seed {})",
                out.display(),
                instance.cp_count(),
                instance.ed_count(),
                instance.seed
            );
            Ok(0)
        }
        Command::Run {
            common,
            instance,
            out,
            max_iterations,
            utility_tolerance,
            payment_tolerance,
            strict_exit,
        } => {
            let (instance, regime) = match instance {
                Some(path) => {
                    let loaded = load_instance(&path)?;
                    (loaded, common.regime.unwrap_or(StorageRegime::Light))
                }
                None => {
                    let config = common.load_config()?;
                    let regime = config.storage_regime;
                    (sample_instance(&config, common.seed())?, regime)
                }
            };
            let options = DynamicsOptions {
                max_iterations,
                utility_tolerance,
                payment_tolerance,
                regime,
            };
            let report = run_best_response(&instance, &options)?;
            write_json(&report, &out)?;
            println!(
                "wrote {}: converged={} iterations={} solver time {:.3}s",
                out.display(),
                report.converged,
                report.iterations,
                report.wall_time.as_secs_f64()
            );
            if strict_exit && !report.converged {
                return Ok(EXIT_NOT_CONVERGED);
            }
            Ok(0)
        }
        Command::SweepScale {
            common,
            out,
            replications,
            dump_replications,
        } => {
            let config = common.load_config()?;
            let spec = SweepSpec {
                replications,
                base_config: config.clone(),
                regime: config.storage_regime,
                base_seed: common.seed(),
                ..SweepSpec::with_defaults(config.storage_regime, common.seed())
            };
            let result = sweep_scale(&spec)?;
            sweep_summary(&result);
            let stem = format!("scale_{}", result.regime);
            emit_sweep_outputs(
                &result,
                &out,
                &stem,
                &[FigureKind::Iterations, FigureKind::CpUtility],
                dump_replications,
            )?;
            Ok(0)
        }
        Command::SweepCost {
            common,
            out,
            replications,
            costs,
            dump_replications,
        } => {
            let config = common.load_config()?;
            let spec = SweepSpec {
                replications,
                base_config: config.clone(),
                regime: config.storage_regime,
                base_seed: common.seed(),
                ..SweepSpec::with_defaults(config.storage_regime, common.seed())
            };
            let result = sweep_cost(&costs, &spec)?;
            sweep_summary(&result);
            let stem = format!("cost_{}", result.regime);
            emit_sweep_outputs(
                &result,
                &out,
                &stem,
                &[FigureKind::CpUtility, FigureKind::EdUtility],
                dump_replications,
            )?;
            Ok(0)
        }
        Command::Verify {
            common,
            out,
            trials,
        } => {
            let _ = common.load_config()?; // reject malformed configs early
            let suites = run_all_suites(trials, common.seed());
            let mut all_passed = true;
            println!("{:<24} {:<6} detail", "suite", "state");
            for suite in &suites {
                all_passed &= suite.passed;
                println!(
                    "{:<24} {:<6} {}",
                    suite.name,
                    if suite.passed { "PASS" } else { "FAIL" },
                    suite.detail
                );
            }
            if let Some(path) = out {
                let rows: Vec<serde_json::Value> = suites
                    .iter()
                    .map(|s| {
                        serde_json::json!({
                            "suite": s.name,
                            "passed": s.passed,
                            "detail": s.detail,
                        })
                    })
                    .collect();
                write_json(&rows, &path)?;
                println!("wrote {}", path.display());
            }
            Ok(if all_passed { 0 } else { EXIT_VERIFY_FAILED })
        }
        Command::ReproduceFigures {
            common,
            out,
            replications,
        } => {
            let config = common.load_config()?;
            let regimes: Vec<StorageRegime> = match common.regime {
                Some(r) => vec![r],
                None => vec![StorageRegime::Light, StorageRegime::Strict],
            };
            for regime in regimes {
                let spec = SweepSpec {
                    replications,
                    base_config: InstanceConfig {
                        storage_regime: regime,
                        ..config.clone()
                    },
                    regime,
                    base_seed: common.seed(),
                    ..SweepSpec::with_defaults(regime, common.seed())
                };
                let scale = sweep_scale(&spec)?;
                sweep_summary(&scale);
                emit_sweep_outputs(
                    &scale,
                    &out,
                    &format!("scale_{regime}"),
                    &[FigureKind::Iterations, FigureKind::CpUtility],
                    false,
                )?;
                let cost = sweep_cost(&[0.5, 0.75, 1.0, 1.25, 1.5], &spec)?;
                sweep_summary(&cost);
                emit_sweep_outputs(
                    &cost,
                    &out,
                    &format!("cost_{regime}"),
                    &[FigureKind::CpUtility, FigureKind::EdUtility],
                    false,
                )?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

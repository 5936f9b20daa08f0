use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wpcn_cli::experiment::{self, Experiment, SimOverrides};
use wpcn_cli::output::{self, emit};
use wpcn_cli::{preset, CliError, ExperimentConfig};

/// Throughput of a wireless-powered CSMA network.
#[derive(Parser)]
#[command(name = "wpcn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed-point analysis (plus the unlimited-battery benchmark if enabled).
    Analyze(Common),
    /// Slot-level Monte Carlo simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Per-level WET statistics; defaults to `<out>.eda.csv`.
        #[arg(long)]
        eda_out: Option<PathBuf>,
    },
    /// Exact stationary analysis of the joint battery chain.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Exact per-level WET conditionals; defaults to `<out>.eda.csv`.
        #[arg(long)]
        eda_out: Option<PathBuf>,
    },
    /// All methods side by side with relative errors against the analysis.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Relative errors; defaults to `<out>.errors.csv`.
        #[arg(long)]
        errors_out: Option<PathBuf>,
    },
    /// Print a built-in experiment as an editable config file.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment: table1, size-sweep, pt-sweep, pt-sweep-wide, small.
    #[arg(long)]
    preset: Option<String>,
    /// Results CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    burn_in: Option<u64>,
}

impl SimArgs {
    fn overrides(&self) -> SimOverrides {
        SimOverrides {
            seed: self.seed,
            num_slots: self.slots,
            burn_in: self.burn_in,
        }
    }
}

impl Common {
    fn experiment(&self) -> Result<Experiment, CliError> {
        let config = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => unreachable!("clap requires one"),
        };
        Experiment::new(config)
    }

    /// Companion file next to `--out`, unless given explicitly.
    fn companion(&self, explicit: &Option<PathBuf>, suffix: &str) -> Option<PathBuf> {
        explicit.clone().or_else(|| {
            self.out.as_ref().map(|out| {
                let stem = out.file_stem().unwrap_or_default().to_string_lossy();
                out.with_file_name(format!("{stem}.{suffix}"))
            })
        })
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(common) => {
            let exp = common.experiment()?;
            let rows = experiment::analysis_rows(&exp)?;
            emit(common.out.as_deref(), &output::results_csv(&rows))
        }
        Command::Simulate {
            common,
            sim,
            eda_out,
        } => {
            let exp = common.experiment()?;
            let points = experiment::simulate(&exp, &sim.overrides())?;
            let rows: Vec<_> = points.iter().map(|p| p.row.clone()).collect();
            emit(common.out.as_deref(), &output::results_csv(&rows))?;
            for p in &points {
                let t = &p.tally;
                eprintln!(
                    "N={} p_t={}: {} slots (wet {}, success {}, collision {}, idle {}), psi {}",
                    p.row.devices,
                    p.row.transmit_prob,
                    t.total(),
                    t.wet,
                    t.success,
                    t.collision,
                    t.idle,
                    p.row.psi
                );
                for (label, f) in &p.flatness {
                    eprintln!(
                        "  {label}: EDA mean {} max deviation {} level-1 {} ({} levels, {} below {} samples)",
                        fmt_opt(f.mean),
                        fmt_opt(f.max_rel_deviation),
                        fmt_opt(f.level_one),
                        f.included.len(),
                        f.excluded.len(),
                        experiment::EDA_MIN_SAMPLES
                    );
                }
            }
            if let Some(path) = common.companion(&eda_out, "eda.csv") {
                let eda: Vec<_> = points.iter().flat_map(|p| p.eda.iter().cloned()).collect();
                emit(Some(&path), &output::eda_csv(&eda))?;
            }
            Ok(())
        }
        Command::Oracle { common, eda_out } => {
            let exp = common.experiment()?;
            let points = experiment::oracle(&exp)?;
            let rows: Vec<_> = points.iter().map(|p| p.row.clone()).collect();
            emit(common.out.as_deref(), &output::results_csv(&rows))?;
            for p in &points {
                eprintln!(
                    "N={} p_t={}: balance residual {:e}",
                    p.row.devices, p.row.transmit_prob, p.balance_residual
                );
            }
            if let Some(path) = common.companion(&eda_out, "eda.csv") {
                let cond: Vec<_> = points
                    .iter()
                    .flat_map(|p| p.conditionals.iter().cloned())
                    .collect();
                emit(Some(&path), &output::exact_eda_csv(&cond))?;
            }
            Ok(())
        }
        Command::Compare {
            common,
            sim,
            errors_out,
        } => {
            let exp = common.experiment()?;
            let cmp = experiment::compare(&exp, &sim.overrides())?;
            emit(common.out.as_deref(), &output::results_csv(&cmp.rows))?;
            if let Some(path) = common.companion(&errors_out, "errors.csv") {
                emit(Some(&path), &output::errors_csv(&cmp.errors))?;
            }
            for line in &cmp.summary {
                eprintln!("{line}");
            }
            Ok(())
        }
        Command::Preset { name, out } => {
            emit(out.as_deref().map(Path::new), &preset(&name)?.to_toml())
        }
    }
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

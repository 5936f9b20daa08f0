//! Runs an experiment file through each evaluation method.
//!
//! Points are evaluated in parallel; results always come back in point order.

use rayon::prelude::*;
use wpcn_core::analysis::{analyze, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use wpcn_core::oracle::exact_analysis;
use wpcn_core::simulator::{run, EdaFlatness, RunOptions, SlotTally};
use wpcn_core::{benchmark_unlimited, Error as CoreError, SlotDurations, ThroughputReport};

use crate::config::{ExperimentConfig, Point};
use crate::error::CliError;
use crate::output::{EdaRow, ErrorRow, ExactEdaRow, ResultRow, Source};

/// Minimum visits for a battery level to enter the flatness summary.
pub const EDA_MIN_SAMPLES: u64 = 100;

/// Command-line overrides of the simulation settings in the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimOverrides {
    pub seed: Option<u64>,
    pub num_slots: Option<u64>,
    pub burn_in: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub points: Vec<Point>,
    pub durations: SlotDurations,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, CliError> {
        let points = config.points()?;
        let durations = config.timing.to_timing().slot_durations();
        Ok(Self {
            config,
            points,
            durations,
        })
    }

    fn row(&self, point: &Point, source: Source, report: &ThroughputReport) -> ResultRow {
        ResultRow {
            experiment: self.config.experiment.clone(),
            source,
            devices: point.network.len(),
            transmit_prob: point.network.transmit_prob(),
            capacity: point.network.capacity(),
            probs: report.slot_probs,
            psi: report.psi,
            per_user_rate: report.per_user_rate,
        }
    }

    /// Group label, qualified by the point when the experiment sweeps.
    fn group_label(&self, point: &Point, group: &str) -> String {
        if self.points.len() == 1 {
            return group.to_string();
        }
        match point.m {
            Some(m) => format!("{group}/N{}/m{m}", point.network.len()),
            None => format!(
                "{group}/N{}/p{}",
                point.network.len(),
                point.network.transmit_prob()
            ),
        }
    }

    fn options(&self, overrides: &SimOverrides, index: usize) -> RunOptions {
        let seed = overrides.seed.unwrap_or(self.config.seed);
        let mut options = RunOptions::new(
            seed.wrapping_add(index as u64),
            overrides.num_slots.unwrap_or(self.config.num_slots),
        );
        options.burn_in = overrides.burn_in.unwrap_or(self.config.burn_in);
        options
    }
}

/// Analysis rows, each followed by its benchmark row when requested.
pub fn analysis_rows(exp: &Experiment) -> Result<Vec<ResultRow>, CliError> {
    let per_point: Vec<Vec<ResultRow>> = exp
        .points
        .par_iter()
        .map(|point| {
            let result = analyze(
                &point.network,
                &exp.durations,
                DEFAULT_TOL,
                DEFAULT_MAX_ITERS,
            )?;
            let mut rows = vec![exp.row(point, Source::Analysis, &result.report)];
            if exp.config.benchmark {
                let bench = benchmark_unlimited(
                    point.network.len(),
                    point.network.transmit_prob(),
                    &exp.durations,
                )?;
                rows.push(exp.row(point, Source::Benchmark, &bench));
            }
            Ok(rows)
        })
        .collect::<Result<_, CliError>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

#[derive(Debug, Clone)]
pub struct SimPoint {
    pub row: ResultRow,
    pub tally: SlotTally,
    pub eda: Vec<EdaRow>,
    /// Flatness of the pooled conditional WET estimate per group.
    pub flatness: Vec<(String, EdaFlatness)>,
}

/// Simulates every point; point `k` uses seed `seed + k`.
pub fn simulate(exp: &Experiment, overrides: &SimOverrides) -> Result<Vec<SimPoint>, CliError> {
    exp.points
        .par_iter()
        .enumerate()
        .map(|(k, point)| {
            let report = run(&point.network, &exp.durations, &exp.options(overrides, k))?;
            let freqs = report.tally.frequencies();
            let psi = report.tally.throughput();
            let row = ResultRow {
                experiment: exp.config.experiment.clone(),
                source: Source::Simulation,
                devices: point.network.len(),
                transmit_prob: point.network.transmit_prob(),
                capacity: point.network.capacity(),
                probs: freqs,
                psi,
                per_user_rate: psi / point.network.len() as f64,
            };
            let mut eda = Vec::new();
            let mut flatness = Vec::new();
            for (name, members) in &point.groups {
                let label = exp.group_label(point, name);
                let e = point.network.devices()[members[0]].harvest_units;
                let counts = report.eda.pooled(members);
                for (state, (&occurrences, &wet_count)) in
                    counts.occurrences.iter().zip(&counts.wet).enumerate()
                {
                    eda.push(EdaRow {
                        device_type: label.clone(),
                        harvest_units: e,
                        state: state as u32,
                        occurrences,
                        wet_count,
                    });
                }
                flatness.push((label, counts.flatness(EDA_MIN_SAMPLES)));
            }
            Ok(SimPoint {
                row,
                tally: report.tally,
                eda,
                flatness,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OraclePoint {
    pub row: ResultRow,
    pub conditionals: Vec<ExactEdaRow>,
    pub balance_residual: f64,
}

fn oracle_point(exp: &Experiment, point: &Point) -> Result<OraclePoint, CoreError> {
    let exact = exact_analysis(&point.network, &exp.durations)?;
    let mut conditionals = Vec::new();
    for (name, members) in &point.groups {
        let label = exp.group_label(point, name);
        let e = point.network.devices()[members[0]].harvest_units;
        for state in 0..=point.network.capacity() as usize {
            let mut mass = 0.0;
            let mut weighted = 0.0;
            for &n in members {
                let w = exact.marginals[n].probs()[state];
                mass += w;
                if let Some(c) = exact.wet_conditionals[n][state] {
                    weighted += w * c;
                }
            }
            conditionals.push(ExactEdaRow {
                device_type: label.clone(),
                harvest_units: e,
                state: state as u32,
                mass: mass / members.len() as f64,
                conditional: (state > 0 && mass > 0.0).then(|| weighted / mass),
            });
        }
    }
    Ok(OraclePoint {
        row: exp.row(point, Source::Oracle, &exact.report),
        conditionals,
        balance_residual: exact.balance_residual,
    })
}

/// Exact joint-chain results; fails if any point exceeds the size limits.
pub fn oracle(exp: &Experiment) -> Result<Vec<OraclePoint>, CliError> {
    exp.points
        .par_iter()
        .map(|point| oracle_point(exp, point).map_err(CliError::from))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<ResultRow>,
    pub errors: Vec<ErrorRow>,
    pub summary: Vec<String>,
}

fn rel_err(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value - reference
    } else {
        (value - reference) / reference
    }
}

/// Analysis, simulation, exact chain (where it fits) and benchmark side by side.
pub fn compare(exp: &Experiment, overrides: &SimOverrides) -> Result<Comparison, CliError> {
    let analysis = analysis_rows(exp)?;
    let sims = simulate(exp, overrides)?;
    let exact: Vec<Option<OraclePoint>> = exp
        .points
        .par_iter()
        .map(|point| match oracle_point(exp, point) {
            Ok(p) => Ok(Some(p)),
            Err(CoreError::StateSpaceTooLarge { .. }) => Ok(None),
            Err(err) => Err(CliError::from(err)),
        })
        .collect::<Result<_, CliError>>()?;

    let per_point = if exp.config.benchmark { 2 } else { 1 };
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (k, sim) in sims.iter().enumerate() {
        let reference = &analysis[k * per_point];
        rows.push(reference.clone());
        let mut others = vec![sim.row.clone()];
        if let Some(p) = &exact[k] {
            others.push(p.row.clone());
        }
        if exp.config.benchmark {
            others.push(analysis[k * per_point + 1].clone());
        }
        for row in others {
            errors.push(ErrorRow {
                experiment: row.experiment.clone(),
                source: row.source,
                devices: row.devices,
                transmit_prob: row.transmit_prob,
                p_ene: rel_err(row.probs.p_ene, reference.probs.p_ene),
                p_suc: rel_err(row.probs.p_suc, reference.probs.p_suc),
                psi: rel_err(row.psi, reference.psi),
            });
            rows.push(row);
        }
    }

    let mut summary = Vec::new();
    let skipped = exact.iter().filter(|p| p.is_none()).count();
    if skipped > 0 {
        summary.push(format!(
            "exact chain skipped at {skipped} of {} points (state space too large)",
            exp.points.len()
        ));
    }
    if exp.points.len() > 1 {
        for source in [
            Source::Analysis,
            Source::Simulation,
            Source::Oracle,
            Source::Benchmark,
        ] {
            let series: Vec<(usize, &ResultRow)> = rows
                .iter()
                .filter(|r| r.source == source)
                .enumerate()
                .collect();
            if series.len() < exp.points.len() {
                continue;
            }
            let argmax = |key: fn(&ResultRow) -> f64| {
                let (k, _) = series
                    .iter()
                    .max_by(|a, b| key(a.1).total_cmp(&key(b.1)))
                    .expect("non-empty series");
                let row = series[*k].1;
                (describe(&exp.points[*k]), key(row))
            };
            let (at_suc, suc) = argmax(|r| r.probs.p_suc);
            let (at_psi, psi) = argmax(|r| r.psi);
            summary.push(format!(
                "{source}: max P_suc {suc} at {at_suc}; max psi {psi} at {at_psi}"
            ));
        }
    }
    Ok(Comparison {
        rows,
        errors,
        summary,
    })
}

fn describe(point: &Point) -> String {
    match point.m {
        Some(m) => format!("N={} m={m}", point.network.len()),
        None => format!(
            "N={} p_t={}",
            point.network.len(),
            point.network.transmit_prob()
        ),
    }
}

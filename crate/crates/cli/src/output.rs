//! CSV writers. Numbers use Rust's shortest round-trip decimal form, so equal
//! results always produce identical bytes.

use std::fmt::{self, Write as _};
use std::path::Path;

use wpcn_core::SlotProbabilities;

use crate::error::CliError;

pub const RESULTS_HEADER: &str =
    "experiment,source,N,p_t,C,P_ene,P_suc,P_idl,P_col,psi,per_user_rate";
pub const EDA_HEADER: &str = "device_type,e_n,state,occurrences,wet_count,p_e_hat";
pub const EXACT_EDA_HEADER: &str = "device_type,e_n,state,w,p_e_exact";
pub const ERRORS_HEADER: &str = "experiment,source,N,p_t,rel_err_P_ene,rel_err_P_suc,rel_err_psi";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Analysis,
    Simulation,
    Oracle,
    Benchmark,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Analysis => "analysis",
            Source::Simulation => "simulation",
            Source::Oracle => "oracle",
            Source::Benchmark => "benchmark",
        })
    }
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub source: Source,
    pub devices: usize,
    pub transmit_prob: f64,
    pub capacity: u32,
    pub probs: SlotProbabilities,
    pub psi: f64,
    pub per_user_rate: f64,
}

/// Conditional WET statistics of one device type at one battery level.
#[derive(Debug, Clone, PartialEq)]
pub struct EdaRow {
    pub device_type: String,
    pub harvest_units: u32,
    pub state: u32,
    pub occurrences: u64,
    pub wet_count: u64,
}

/// Exact counterpart of [`EdaRow`] from the joint chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactEdaRow {
    pub device_type: String,
    pub harvest_units: u32,
    pub state: u32,
    pub mass: f64,
    pub conditional: Option<f64>,
}

/// Relative deviation of one source from the analysis at the same point.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub experiment: String,
    pub source: Source,
    pub devices: usize,
    pub transmit_prob: f64,
    pub p_ene: f64,
    pub p_suc: f64,
    pub psi: f64,
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let p = &r.probs;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.source,
            r.devices,
            r.transmit_prob,
            r.capacity,
            p.p_ene,
            p.p_suc,
            p.p_idl,
            p.p_col,
            r.psi,
            r.per_user_rate
        )
        .unwrap();
    }
    out
}

pub fn eda_csv(rows: &[EdaRow]) -> String {
    let mut out = format!("{EDA_HEADER}\n");
    for r in rows {
        let ratio = (r.occurrences > 0).then(|| r.wet_count as f64 / r.occurrences as f64);
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.device_type,
            r.harvest_units,
            r.state,
            r.occurrences,
            r.wet_count,
            opt(ratio)
        )
        .unwrap();
    }
    out
}

pub fn exact_eda_csv(rows: &[ExactEdaRow]) -> String {
    let mut out = format!("{EXACT_EDA_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.device_type,
            r.harvest_units,
            r.state,
            r.mass,
            opt(r.conditional)
        )
        .unwrap();
    }
    out
}

pub fn errors_csv(rows: &[ErrorRow]) -> String {
    let mut out = format!("{ERRORS_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.experiment, r.source, r.devices, r.transmit_prob, r.p_ene, r.p_suc, r.psi
        )
        .unwrap();
    }
    out
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

//! Experiment files.
//!
//! An experiment is a TOML document. Radio and timing parameters use the
//! human-facing units of a datasheet (milliseconds, megahertz, milliwatts) and
//! are converted to SI on load. The device population is a list of groups;
//! each group either fixes its harvest units directly or gives a distance from
//! which the link budget derives them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wpcn_core::model::{DeviceProfile, NetworkConfig, ProtocolTiming, RadioParams};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_slots")]
    pub num_slots: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: u64,
    pub capacity: u32,
    /// Also report the unlimited-battery benchmark.
    #[serde(default)]
    pub benchmark: bool,
    /// Total population sizes to sweep; group counts are scaled to each.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    pub transmit: TransmitRule,
    #[serde(rename = "group")]
    pub groups: Vec<DeviceGroup>,
    #[serde(default)]
    pub radio: RadioSection,
    #[serde(default)]
    pub timing: TimingSection,
}

fn default_seed() -> u64 {
    1
}

fn default_slots() -> u64 {
    10_000_000
}

fn default_burn_in() -> u64 {
    wpcn_core::simulator::DEFAULT_BURN_IN
}

/// How the transmit probability is chosen at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitRule {
    /// A fixed probability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_t: Option<f64>,
    /// `"1/N"`: one over the population size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    /// Sweep `p_t = 1/m` over these values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceGroup {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
}

impl DeviceGroup {
    pub fn label(&self, index: usize) -> String {
        match (&self.name, self.e_n) {
            (Some(name), _) => name.clone(),
            (None, Some(e)) => format!("e{e}"),
            (None, None) => format!("group{index}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub harvest_efficiency: f64,
    pub tx_antenna_gain: f64,
    pub rx_antenna_gain: f64,
    pub hap_power_w: f64,
    pub wd_tx_power_mw: f64,
    pub carrier_freq_mhz: f64,
    pub pathloss_exp: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self {
            harvest_efficiency: 0.51,
            tx_antenna_gain: 2.5,
            rx_antenna_gain: 2.0,
            hap_power_w: 3.0,
            wd_tx_power_mw: 2.0,
            carrier_freq_mhz: 915.0,
            pathloss_exp: 2.0,
        }
    }
}

impl RadioSection {
    pub fn to_params(&self) -> RadioParams {
        RadioParams {
            harvest_efficiency: self.harvest_efficiency,
            tx_antenna_gain: self.tx_antenna_gain,
            rx_antenna_gain: self.rx_antenna_gain,
            hap_power: self.hap_power_w,
            wd_tx_power: self.wd_tx_power_mw * 1e-3,
            carrier_freq: self.carrier_freq_mhz * 1e6,
            pathloss_exp: self.pathloss_exp,
        }
    }
}

/// Frame timing in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub difs_ms: f64,
    pub pifs_ms: f64,
    pub sifs_ms: f64,
    pub erb_ms: f64,
    pub ack_ms: f64,
    pub sigma_ms: f64,
    pub payload_ms: f64,
    pub energy_transfer_ms: f64,
}

impl Default for TimingSection {
    fn default() -> Self {
        Self {
            difs_ms: 50.0,
            pifs_ms: 30.0,
            sifs_ms: 10.0,
            erb_ms: 30.0,
            ack_ms: 20.0,
            sigma_ms: 50.0,
            payload_ms: 420.0,
            energy_transfer_ms: 2430.0,
        }
    }
}

impl TimingSection {
    pub fn to_timing(&self) -> ProtocolTiming {
        ProtocolTiming {
            difs: self.difs_ms * 1e-3,
            pifs: self.pifs_ms * 1e-3,
            sifs: self.sifs_ms * 1e-3,
            erb: self.erb_ms * 1e-3,
            ack: self.ack_ms * 1e-3,
            mini_slot: self.sigma_ms * 1e-3,
            payload: self.payload_ms * 1e-3,
            energy_transfer: self.energy_transfer_ms * 1e-3,
        }
    }
}

/// One parameter point of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub network: NetworkConfig,
    /// `m` when the transmit probability is `1/m`.
    pub m: Option<u32>,
    /// Device indices of each group, in group order.
    pub groups: Vec<(String, Vec<usize>)>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML text; parsing it yields an equal configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let rules = [
            self.transmit.p_t.is_some(),
            self.transmit.rule.is_some(),
            self.transmit.m.is_some(),
        ];
        if rules.iter().filter(|&&r| r).count() != 1 {
            return Err(CliError::Parse(
                "transmit: set exactly one of `p_t`, `rule` or `m`".into(),
            ));
        }
        if let Some(rule) = &self.transmit.rule {
            if rule != "1/N" {
                return Err(CliError::Parse(format!(
                    "transmit.rule: unknown rule `{rule}` (expected \"1/N\")"
                )));
            }
        }
        if matches!(&self.transmit.m, Some(m) if m.is_empty()) {
            return Err(CliError::Parse("transmit.m: sweep list is empty".into()));
        }
        if matches!(&self.transmit.m, Some(m) if m.iter().any(|&m| m < 2)) {
            return Err(CliError::Parse(
                "transmit.m: values must be at least 2".into(),
            ));
        }
        if matches!(&self.sizes, Some(s) if s.is_empty()) {
            return Err(CliError::Parse("sizes: sweep list is empty".into()));
        }
        if self.groups.is_empty() {
            return Err(CliError::Parse("at least one [[group]] is required".into()));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.e_n.is_some() == g.distance_m.is_some() {
                return Err(CliError::Parse(format!(
                    "group {i}: set exactly one of `e_n` or `distance_m`"
                )));
            }
            if g.count == 0 {
                return Err(CliError::Parse(format!(
                    "group {i}: count must be positive"
                )));
            }
        }
        self.radio.to_params().validate()?;
        self.timing.to_timing().validate()?;
        // Surfaces population errors (capacity, e_n range) at load time.
        self.points()?;
        Ok(())
    }

    fn base_size(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    fn group_counts(&self, total: Option<usize>) -> Result<Vec<usize>, CliError> {
        let base = self.base_size();
        match total {
            None => Ok(self.groups.iter().map(|g| g.count).collect()),
            Some(n) if n % base == 0 => {
                Ok(self.groups.iter().map(|g| g.count * n / base).collect())
            }
            Some(n) => Err(CliError::Parse(format!(
                "sizes: {n} devices cannot be split in the group ratio (group counts sum to {base})"
            ))),
        }
    }

    fn group_profiles(&self) -> Result<Vec<DeviceProfile>, CliError> {
        let radio = self.radio.to_params();
        let timing = self.timing.to_timing();
        self.groups
            .iter()
            .map(|g| match (g.e_n, g.distance_m) {
                (Some(e), _) => Ok(DeviceProfile::with_units(e)),
                (None, Some(d)) => Ok(DeviceProfile::at_distance(&radio, &timing, d)?),
                (None, None) => unreachable!("validated"),
            })
            .collect()
    }

    /// Parameter points in output order: population size outermost, then `m`.
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        let profiles = self.group_profiles()?;
        let sizes: Vec<Option<usize>> = match &self.sizes {
            Some(sizes) => sizes.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let mut points = Vec::new();
        for size in sizes {
            let counts = self.group_counts(size)?;
            let mut devices = Vec::new();
            let mut groups = Vec::new();
            for (i, (profile, &count)) in profiles.iter().zip(&counts).enumerate() {
                let start = devices.len();
                devices.extend(std::iter::repeat_n(*profile, count));
                groups.push((self.groups[i].label(i), (start..devices.len()).collect()));
            }
            let n = devices.len();
            let transmit: Vec<(f64, Option<u32>)> = match (&self.transmit.p_t, &self.transmit.m) {
                (Some(p), _) => vec![(*p, None)],
                (None, Some(ms)) => ms.iter().map(|&m| (1.0 / m as f64, Some(m))).collect(),
                (None, None) => vec![(1.0 / n as f64, Some(n as u32))],
            };
            for (p_t, m) in transmit {
                let network = NetworkConfig::new(devices.clone(), p_t, self.capacity)?;
                points.push(Point {
                    network,
                    m,
                    groups: groups.clone(),
                });
            }
        }
        Ok(points)
    }
}

/// Built-in experiments.
pub const PRESETS: &[(&str, &str)] = &[
    ("table1", include_str!("../presets/table1.toml")),
    ("size-sweep", include_str!("../presets/size-sweep.toml")),
    ("pt-sweep", include_str!("../presets/pt-sweep.toml")),
    (
        "pt-sweep-wide",
        include_str!("../presets/pt-sweep-wide.toml"),
    ),
    ("small", include_str!("../presets/small.toml")),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Parse(format!(
            "unknown preset `{name}` (known: {})",
            names.join(", ")
        ))
    })?;
    ExperimentConfig::from_toml(text)
}

//! Physical and protocol parameters shared by the analysis, the simulator and
//! the oracle.
//!
//! All durations are in seconds, energies in joules, powers in watts and
//! frequencies in hertz. Human-facing units (milliseconds, megahertz) are
//! converted by the configuration layer before reaching these types.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Link-budget parameters of the HAP-to-device energy transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    pub harvest_efficiency: f64,
    pub tx_antenna_gain: f64,
    pub rx_antenna_gain: f64,
    /// HAP transmit power during energy transfer.
    pub hap_power: f64,
    /// Device transmit power during a payload.
    pub wd_tx_power: f64,
    pub carrier_freq: f64,
    pub pathloss_exp: f64,
}

impl RadioParams {
    /// Powercast-style outdoor sensor parameters used throughout the experiments.
    pub fn table1() -> Self {
        Self {
            harvest_efficiency: 0.51,
            tx_antenna_gain: 2.5,
            rx_antenna_gain: 2.0,
            hap_power: 3.0,
            wd_tx_power: 2.0e-3,
            carrier_freq: 915.0e6,
            pathloss_exp: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.harvest_efficiency > 0.0 && self.harvest_efficiency < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "harvest efficiency must lie in (0, 1), got {}",
                self.harvest_efficiency
            )));
        }
        let positive = [
            ("tx antenna gain", self.tx_antenna_gain),
            ("rx antenna gain", self.rx_antenna_gain),
            ("HAP power", self.hap_power),
            ("device tx power", self.wd_tx_power),
            ("carrier frequency", self.carrier_freq),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.pathloss_exp >= 2.0 && self.pathloss_exp.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "path-loss exponent must be at least 2, got {}",
                self.pathloss_exp
            )));
        }
        Ok(())
    }

    /// Combined antenna gain: product of the transmit and receive gains.
    pub fn antenna_gain(&self) -> f64 {
        self.tx_antenna_gain * self.rx_antenna_gain
    }

    /// Energy spent by a device on one payload of length `payload`.
    pub fn unit_energy(&self, payload: f64) -> f64 {
        self.wd_tx_power * payload
    }
}

/// Energy received by a device at `distance` meters during one energy transfer
/// of length `t_et` seconds.
pub fn harvested_energy(radio: &RadioParams, t_et: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::Domain(format!(
            "distance must be positive, got {distance}"
        )));
    }
    let path_gain =
        (SPEED_OF_LIGHT / (4.0 * PI * radio.carrier_freq * distance)).powf(radio.pathloss_exp);
    Ok(radio.harvest_efficiency * radio.antenna_gain() * radio.hap_power * t_et * path_gain)
}

/// Quantizes harvested energy into whole payload units.
///
/// Rounds to the nearest unit and never returns less than one, since every
/// associated device must gain at least one unit per energy transfer.
pub fn energy_units(harvested: f64, unit_energy: f64) -> Result<u32> {
    if !(unit_energy > 0.0 && unit_energy.is_finite()) {
        return Err(Error::Domain(format!(
            "unit energy must be positive, got {unit_energy}"
        )));
    }
    if !(harvested >= 0.0 && harvested.is_finite()) {
        return Err(Error::Domain(format!(
            "harvested energy must be non-negative, got {harvested}"
        )));
    }
    let units = (harvested / unit_energy).round();
    if units > u32::MAX as f64 {
        return Err(Error::Domain(format!("{units} energy units overflow")));
    }
    Ok((units as u32).max(1))
}

/// Inter-frame spacings and frame lengths of the protocol, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolTiming {
    pub difs: f64,
    pub pifs: f64,
    pub sifs: f64,
    pub erb: f64,
    /// ACK and NAK share this length.
    pub ack: f64,
    /// Idle mini-slot length σ.
    pub mini_slot: f64,
    pub payload: f64,
    pub energy_transfer: f64,
}

impl ProtocolTiming {
    pub fn table1() -> Self {
        Self {
            difs: 0.050,
            pifs: 0.030,
            sifs: 0.010,
            erb: 0.030,
            ack: 0.020,
            mini_slot: 0.050,
            payload: 0.420,
            energy_transfer: 2.43,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("DIFS", self.difs),
            ("PIFS", self.pifs),
            ("SIFS", self.sifs),
            ("ERB", self.erb),
            ("ACK", self.ack),
            ("mini-slot", self.mini_slot),
            ("payload", self.payload),
            ("energy transfer", self.energy_transfer),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} duration must be positive, got {value}"
                )));
            }
        }
        // ACK/NAK before ERB before data.
        if !(self.sifs < self.pifs && self.pifs < self.difs) {
            return Err(Error::InvalidConfig(format!(
                "spacings must satisfy SIFS < PIFS < DIFS, got {} / {} / {}",
                self.sifs, self.pifs, self.difs
            )));
        }
        Ok(())
    }

    pub fn slot_durations(&self) -> SlotDurations {
        slot_durations(self)
    }
}

/// Air time consumed by each slot type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotDurations {
    pub t_suc: f64,
    pub t_col: f64,
    pub t_idl: f64,
    pub t_ene: f64,
}

impl SlotDurations {
    pub fn table1() -> Self {
        slot_durations(&ProtocolTiming::table1())
    }
}

pub fn slot_durations(timing: &ProtocolTiming) -> SlotDurations {
    let t_wit = timing.difs + timing.payload + timing.sifs + timing.ack;
    SlotDurations {
        t_suc: t_wit,
        t_col: t_wit,
        t_idl: timing.mini_slot,
        t_ene: timing.pifs + timing.erb + timing.sifs + timing.energy_transfer,
    }
}

/// One wireless device as seen by the scheduler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceProfile {
    /// Distance to the HAP in meters, when known.
    pub distance: Option<f64>,
    /// Energy units gained per energy transfer slot (e_n).
    pub harvest_units: u32,
}

impl DeviceProfile {
    pub fn with_units(harvest_units: u32) -> Self {
        Self {
            distance: None,
            harvest_units,
        }
    }

    /// Places a device at `distance` and derives its harvest units from the
    /// link budget.
    pub fn at_distance(
        radio: &RadioParams,
        timing: &ProtocolTiming,
        distance: f64,
    ) -> Result<Self> {
        let harvested = harvested_energy(radio, timing.energy_transfer, distance)?;
        let harvest_units = energy_units(harvested, radio.unit_energy(timing.payload))?;
        Ok(Self {
            distance: Some(distance),
            harvest_units,
        })
    }
}

/// A device population sharing one battery capacity and one transmit
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    devices: Vec<DeviceProfile>,
    transmit_prob: f64,
    capacity: u32,
}

impl NetworkConfig {
    pub fn new(devices: Vec<DeviceProfile>, transmit_prob: f64, capacity: u32) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::InvalidConfig("population is empty".into()));
        }
        if !(transmit_prob > 0.0 && transmit_prob < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "transmit probability must lie in (0, 1), got {transmit_prob}"
            )));
        }
        if capacity < 2 {
            return Err(Error::InvalidConfig(format!(
                "battery capacity must be at least 2, got {capacity}"
            )));
        }
        for (n, device) in devices.iter().enumerate() {
            if device.harvest_units < 1 || device.harvest_units >= capacity {
                return Err(Error::InvalidConfig(format!(
                    "device {n}: harvest units must lie in [1, {}), got {}",
                    capacity, device.harvest_units
                )));
            }
        }
        Ok(Self {
            devices,
            transmit_prob,
            capacity,
        })
    }

    /// Population given as `(count, harvest_units)` groups, in order.
    pub fn from_groups(groups: &[(usize, u32)], transmit_prob: f64, capacity: u32) -> Result<Self> {
        let devices = groups
            .iter()
            .flat_map(|&(count, units)| {
                std::iter::repeat_n(DeviceProfile::with_units(units), count)
            })
            .collect();
        Self::new(devices, transmit_prob, capacity)
    }

    /// 12 devices harvesting one unit and 6 harvesting two, C = 30, p_t = 1/18.
    pub fn reference_population() -> Self {
        Self::from_groups(&[(12, 1), (6, 2)], 1.0 / 18.0, 30).expect("valid population")
    }

    pub fn devices(&self) -> &[DeviceProfile] {
        &self.devices
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn transmit_prob(&self) -> f64 {
        self.transmit_prob
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn harvest_units(&self) -> impl Iterator<Item = u32> + '_ {
        self.devices.iter().map(|d| d.harvest_units)
    }

    /// Same population with a different transmit probability.
    pub fn with_transmit_prob(&self, transmit_prob: f64) -> Result<Self> {
        Self::new(self.devices.clone(), transmit_prob, self.capacity)
    }

    /// Distinct harvest-unit values in ascending order, each with the device
    /// indices holding it.
    pub fn device_types(&self) -> Vec<(u32, Vec<usize>)> {
        let mut types: Vec<(u32, Vec<usize>)> = Vec::new();
        for (n, device) in self.devices.iter().enumerate() {
            match types.iter_mut().find(|(e, _)| *e == device.harvest_units) {
                Some((_, members)) => members.push(n),
                None => types.push((device.harvest_units, vec![n])),
            }
        }
        types.sort_by_key(|(e, _)| *e);
        types
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Harvest formula evaluated term by term.
    fn hand_evaluation(d: f64) -> f64 {
        let wavelength = 3.0e8 / 915.0e6;
        let friis = wavelength / (4.0 * std::f64::consts::PI * d);
        0.51 * (2.5 * 2.0) * 3.0 * 2.43 * friis * friis
    }

    #[test]
    fn harvest_at_five_meters() {
        let e = harvested_energy(&RadioParams::table1(), 2.43, 5.0).unwrap();
        assert!((e - 5.06e-4).abs() < 0.01e-4, "{e}");
        assert!((e - hand_evaluation(5.0)).abs() / e < 1e-12);
    }

    #[test]
    fn inverse_square_law() {
        let radio = RadioParams::table1();
        let near = harvested_energy(&radio, 2.43, 3.0).unwrap();
        let far = harvested_energy(&radio, 2.43, 6.0).unwrap();
        assert!((near / far - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_hap_power_harvests_nothing() {
        let radio = RadioParams {
            hap_power: 0.0,
            ..RadioParams::table1()
        };
        assert_eq!(harvested_energy(&radio, 2.43, 5.0).unwrap(), 0.0);
        assert!(radio.validate().is_err());
    }

    #[test]
    fn non_positive_distance_is_rejected() {
        let radio = RadioParams::table1();
        assert!(matches!(
            harvested_energy(&radio, 2.43, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            harvested_energy(&radio, 2.43, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn quantization() {
        assert_eq!(energy_units(2.1, 1.0).unwrap(), 2);
        assert_eq!(energy_units(0.1, 1.0).unwrap(), 1);
        assert_eq!(energy_units(0.0, 1.0).unwrap(), 1);
        assert!(energy_units(1.0, 0.0).is_err());
        assert!(energy_units(1.0, -2.0).is_err());
    }

    #[test]
    fn reference_slot_durations() {
        let d = SlotDurations::table1();
        assert!((d.t_suc - 0.5).abs() < 1e-12);
        assert_eq!(d.t_suc, d.t_col);
        assert!((d.t_ene - 2.5).abs() < 1e-12);
        assert!((d.t_idl - 0.05).abs() < 1e-12);
    }

    #[test]
    fn spacing_order_is_enforced() {
        assert!(ProtocolTiming::table1().validate().is_ok());
        let bad = ProtocolTiming {
            pifs: 0.060,
            ..ProtocolTiming::table1()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn network_invariants() {
        assert!(NetworkConfig::from_groups(&[(2, 1)], 0.0, 4).is_err());
        assert!(NetworkConfig::from_groups(&[(2, 1)], 1.0, 4).is_err());
        assert!(NetworkConfig::from_groups(&[(2, 4)], 0.5, 4).is_err());
        assert!(NetworkConfig::from_groups(&[(2, 1)], 0.5, 1).is_err());
        assert!(NetworkConfig::from_groups(&[], 0.5, 4).is_err());
        let cfg = NetworkConfig::reference_population();
        assert_eq!(cfg.len(), 18);
        let types = cfg.device_types();
        assert_eq!(types.len(), 2);
        assert_eq!(types[0].1.len(), 12);
        assert_eq!(types[1], (2, (12..18).collect()));
    }
}

//! Seeded slot-level simulation of the distributed WET/WIT protocol.
//!
//! Each slot is classified at its start. If any battery is empty that device's
//! ERB wins the channel (PIFS beats DIFS), the HAP transfers energy and every
//! device gains its `e_n` units, capped at `C`. Otherwise every device flips a
//! `p_t` coin, in index order, and the slot is a success, a collision or an
//! idle mini-slot. Transmitters spend one unit whether or not they collide.
//!
//! Runs use ChaCha8 seeded through `seed_from_u64`, so a seed reproduces the
//! same outcome sequence on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::SlotProbabilities;
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, SlotDurations};

pub const DEFAULT_BURN_IN: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    pub batteries: Vec<u32>,
    pub slot_index: u64,
}

impl SimState {
    /// Every battery full.
    pub fn full(config: &NetworkConfig) -> Self {
        Self {
            batteries: vec![config.capacity(); config.len()],
            slot_index: 0,
        }
    }

    pub fn new(batteries: Vec<u32>, config: &NetworkConfig) -> Result<Self> {
        if batteries.len() != config.len() {
            return Err(Error::InvalidConfig(format!(
                "{} initial batteries for {} devices",
                batteries.len(),
                config.len()
            )));
        }
        if let Some((n, b)) = batteries
            .iter()
            .enumerate()
            .find(|&(_, &b)| b > config.capacity())
        {
            return Err(Error::InvalidConfig(format!(
                "device {n}: initial battery {b} exceeds capacity {}",
                config.capacity()
            )));
        }
        Ok(Self {
            batteries,
            slot_index: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotOutcome {
    Wet,
    Success(usize),
    /// Indices of the colliding devices, ascending, at least two.
    Collision(Vec<usize>),
    Idle,
}

/// Advances the network by one slot.
pub fn step<R: Rng + ?Sized>(
    state: &mut SimState,
    config: &NetworkConfig,
    rng: &mut R,
) -> SlotOutcome {
    state.slot_index += 1;
    let capacity = config.capacity();
    if state.batteries.contains(&0) {
        for (b, e) in state.batteries.iter_mut().zip(config.harvest_units()) {
            *b = (*b + e).min(capacity);
        }
        return SlotOutcome::Wet;
    }

    let p_t = config.transmit_prob();
    let mut first = None;
    let mut colliders: Vec<usize> = Vec::new();
    for n in 0..state.batteries.len() {
        if rng.random_bool(p_t) {
            match first {
                None => first = Some(n),
                Some(f) => {
                    if colliders.is_empty() {
                        colliders.push(f);
                    }
                    colliders.push(n);
                }
            }
        }
    }
    match first {
        None => SlotOutcome::Idle,
        Some(n) if colliders.is_empty() => {
            state.batteries[n] -= 1;
            SlotOutcome::Success(n)
        }
        Some(_) => {
            for &n in &colliders {
                state.batteries[n] -= 1;
            }
            SlotOutcome::Collision(colliders)
        }
    }
}

/// Slot counts and air time accumulated over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTally {
    pub wet: u64,
    pub success: u64,
    pub collision: u64,
    pub idle: u64,
    pub per_device_success: Vec<u64>,
    /// Total simulated air time in seconds.
    pub air_time: f64,
    /// Air time spent on successful payloads.
    pub success_air_time: f64,
}

impl SlotTally {
    pub fn new(devices: usize) -> Self {
        Self {
            wet: 0,
            success: 0,
            collision: 0,
            idle: 0,
            per_device_success: vec![0; devices],
            air_time: 0.0,
            success_air_time: 0.0,
        }
    }

    pub fn record(&mut self, outcome: &SlotOutcome, durations: &SlotDurations) {
        match outcome {
            SlotOutcome::Wet => {
                self.wet += 1;
                self.air_time += durations.t_ene;
            }
            SlotOutcome::Success(n) => {
                self.success += 1;
                self.per_device_success[*n] += 1;
                self.air_time += durations.t_suc;
                self.success_air_time += durations.t_suc;
            }
            SlotOutcome::Collision(_) => {
                self.collision += 1;
                self.air_time += durations.t_col;
            }
            SlotOutcome::Idle => {
                self.idle += 1;
                self.air_time += durations.t_idl;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.wet + self.success + self.collision + self.idle
    }

    /// Empirical slot-type frequencies.
    pub fn frequencies(&self) -> SlotProbabilities {
        let total = self.total().max(1) as f64;
        SlotProbabilities {
            p_ene: self.wet as f64 / total,
            p_suc: self.success as f64 / total,
            p_idl: self.idle as f64 / total,
            p_col: self.collision as f64 / total,
        }
    }

    /// Fraction of air time carrying successful payloads.
    pub fn throughput(&self) -> f64 {
        if self.air_time > 0.0 {
            self.success_air_time / self.air_time
        } else {
            0.0
        }
    }

    /// Adds another run's counts. Both tallies must cover the same population.
    pub fn merge(&mut self, other: &SlotTally) {
        assert_eq!(
            self.per_device_success.len(),
            other.per_device_success.len()
        );
        self.wet += other.wet;
        self.success += other.success;
        self.collision += other.collision;
        self.idle += other.idle;
        for (a, b) in self
            .per_device_success
            .iter_mut()
            .zip(&other.per_device_success)
        {
            *a += b;
        }
        self.air_time += other.air_time;
        self.success_air_time += other.success_air_time;
    }
}

/// Battery-level visit counts and the WET slots observed at each level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateCounts {
    /// Slot starts at each level `0..=C`.
    pub occurrences: Vec<u64>,
    /// Of those, slots that turned out to be WET.
    pub wet: Vec<u64>,
}

impl StateCounts {
    fn new(capacity: u32) -> Self {
        Self {
            occurrences: vec![0; capacity as usize + 1],
            wet: vec![0; capacity as usize + 1],
        }
    }

    fn add(&mut self, other: &StateCounts) {
        for (a, b) in self.occurrences.iter_mut().zip(&other.occurrences) {
            *a += b;
        }
        for (a, b) in self.wet.iter_mut().zip(&other.wet) {
            *a += b;
        }
    }

    pub fn capacity(&self) -> u32 {
        (self.occurrences.len() - 1) as u32
    }

    /// Estimated WET probability at `level`, if the level was ever visited.
    pub fn ratio(&self, level: usize) -> Option<f64> {
        match self.occurrences[level] {
            0 => None,
            k => Some(self.wet[level] as f64 / k as f64),
        }
    }

    /// Flatness of the conditional WET probability over levels `2..=C`.
    ///
    /// Level 1 sits next to the empty state and is reported separately; levels
    /// with fewer than `min_samples` visits are listed as excluded.
    pub fn flatness(&self, min_samples: u64) -> EdaFlatness {
        let min_samples = min_samples.max(1);
        let mut included = Vec::new();
        let mut excluded = Vec::new();
        for level in 2..self.occurrences.len() {
            if self.occurrences[level] >= min_samples {
                included.push(level as u32);
            } else {
                excluded.push(level as u32);
            }
        }
        let ratios: Vec<f64> = included
            .iter()
            .map(|&i| self.ratio(i as usize).expect("sampled level"))
            .collect();
        let (mean, max_rel_deviation) = if ratios.is_empty() {
            (None, None)
        } else {
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let dev = if mean > 0.0 {
                ratios
                    .iter()
                    .map(|r| (r - mean).abs() / mean)
                    .fold(0.0, f64::max)
            } else {
                0.0
            };
            (Some(mean), Some(dev))
        };
        let level_one = if self.occurrences.len() > 1 && self.occurrences[1] >= min_samples {
            self.ratio(1)
        } else {
            None
        };
        EdaFlatness {
            mean,
            max_rel_deviation,
            level_one,
            included,
            excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdaFlatness {
    /// Mean conditional WET probability over the included levels.
    pub mean: Option<f64>,
    /// Largest `|p̂(i) - mean| / mean` over the included levels.
    pub max_rel_deviation: Option<f64>,
    /// Estimate at level 1, when sufficiently sampled.
    pub level_one: Option<f64>,
    pub included: Vec<u32>,
    pub excluded: Vec<u32>,
}

impl EdaFlatness {
    /// No level met the sample threshold.
    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }
}

/// Per-device battery statistics gathered at slot starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdaEstimate {
    devices: Vec<StateCounts>,
}

impl EdaEstimate {
    pub fn new(devices: usize, capacity: u32) -> Self {
        Self {
            devices: vec![StateCounts::new(capacity); devices],
        }
    }

    fn record(&mut self, batteries: &[u32], outcome: &SlotOutcome) {
        let wet = matches!(outcome, SlotOutcome::Wet);
        for (counts, &b) in self.devices.iter_mut().zip(batteries) {
            counts.occurrences[b as usize] += 1;
            if wet {
                counts.wet[b as usize] += 1;
            }
        }
    }

    pub fn device(&self, n: usize) -> &StateCounts {
        &self.devices[n]
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    /// Counts summed over a group of devices.
    pub fn pooled(&self, members: &[usize]) -> StateCounts {
        let mut total = StateCounts::new(self.devices[0].capacity());
        for &n in members {
            total.add(&self.devices[n]);
        }
        total
    }

    pub fn merge(&mut self, other: &EdaEstimate) {
        assert_eq!(self.devices.len(), other.devices.len());
        for (a, b) in self.devices.iter_mut().zip(&other.devices) {
            a.add(b);
        }
    }
}

/// Flatness report for each device.
pub fn measure_eda(estimate: &EdaEstimate, min_samples: u64) -> Vec<EdaFlatness> {
    estimate
        .devices
        .iter()
        .map(|counts| counts.flatness(min_samples))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialBatteries {
    Full,
    Explicit(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    pub num_slots: u64,
    /// Slots simulated before counting starts.
    pub burn_in: u64,
    pub initial: InitialBatteries,
}

impl RunOptions {
    pub fn new(seed: u64, num_slots: u64) -> Self {
        Self {
            seed,
            num_slots,
            burn_in: DEFAULT_BURN_IN,
            initial: InitialBatteries::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub tally: SlotTally,
    pub eda: EdaEstimate,
    pub final_state: SimState,
}

impl SimReport {
    /// Slot-start battery histogram of device `n`, levels `0..=C`.
    pub fn battery_histogram(&self, n: usize) -> &[u64] {
        &self.eda.device(n).occurrences
    }
}

pub fn run(
    config: &NetworkConfig,
    durations: &SlotDurations,
    options: &RunOptions,
) -> Result<SimReport> {
    if options.num_slots == 0 {
        return Err(Error::InvalidConfig(
            "number of slots must be at least 1".into(),
        ));
    }
    let mut state = match &options.initial {
        InitialBatteries::Full => SimState::full(config),
        InitialBatteries::Explicit(b) => SimState::new(b.clone(), config)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 0..options.burn_in {
        step(&mut state, config, &mut rng);
    }

    let mut tally = SlotTally::new(config.len());
    let mut eda = EdaEstimate::new(config.len(), config.capacity());
    let mut start = state.batteries.clone();
    for _ in 0..options.num_slots {
        start.copy_from_slice(&state.batteries);
        let outcome = step(&mut state, config, &mut rng);
        eda.record(&start, &outcome);
        tally.record(&outcome, durations);
    }
    Ok(SimReport {
        tally,
        eda,
        final_state: state,
    })
}

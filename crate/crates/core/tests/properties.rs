use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wpcn_core::analysis::{
    analyze, benchmark_unlimited, outage_probability, psi, slot_probabilities, solve_fixed_point,
    stationary_matrix, stationary_recursive, ChainParams, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use wpcn_core::markov::power_iteration;
use wpcn_core::model::{energy_units, harvested_energy, NetworkConfig, RadioParams, SlotDurations};
use wpcn_core::oracle::single_device_chain;
use wpcn_core::simulator::{self, SimState, SlotOutcome};

fn chain_params() -> impl Strategy<Value = ChainParams> {
    (2u32..=60)
        .prop_flat_map(|c| (1..c, Just(c), 0.02f64..0.98, 0.0f64..0.95))
        .prop_map(|(e, c, p_t, p_e)| ChainParams::new(e, c, p_t, p_e).unwrap())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn three_stationary_solvers_agree(params in chain_params()) {
        let rec = stationary_recursive(&params);
        let mat = stationary_matrix(&params).unwrap();
        prop_assert!(max_diff(rec.probs(), mat.probs()) < 1e-9);

        let c = params.capacity() as usize;
        let mut start = vec![0.0; c + 1];
        start[c] = 1.0;
        let pi = power_iteration(&single_device_chain(&params), start, 1e-14, 100_000_000).unwrap();
        prop_assert!(max_diff(rec.probs(), &pi.dist) < 1e-9);
    }

    #[test]
    fn outage_decreases_with_wet_probability(
        params in chain_params(),
        a in 0.001f64..0.99,
        b in 0.001f64..0.99,
    ) {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let at = |p_e| outage_probability(
            &ChainParams::new(params.harvest_units(), params.capacity(), params.transmit_prob(), p_e).unwrap(),
        );
        prop_assert!(at(a) >= at(b) - 1e-12);
    }

    #[test]
    fn levels_above_harvest_unreachable_without_foreign_wet(params in chain_params()) {
        let p = ChainParams::new(params.harvest_units(), params.capacity(), params.transmit_prob(), 0.0).unwrap();
        let w = stationary_recursive(&p);
        for &x in &w.probs()[p.harvest_units() as usize + 1..] {
            prop_assert_eq!(x, 0.0);
        }
    }

    #[test]
    fn slot_probabilities_form_a_distribution(
        outage in prop::collection::vec(0.0f64..0.999, 1..30),
        p_t in 0.001f64..0.999,
    ) {
        let p = slot_probabilities(&outage, p_t);
        prop_assert!((p.total() - 1.0).abs() < 1e-10);
        for x in [p.p_ene, p.p_suc, p.p_idl, p.p_col] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn benchmark_dominates(
        groups in prop::collection::vec((1usize..5, 1u32..4), 1..4),
        m in 2u32..40,
    ) {
        let config = NetworkConfig::from_groups(&groups, 1.0 / m as f64, 12).unwrap();
        let d = SlotDurations::table1();
        let wpcn = analyze(&config, &d, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let bench = benchmark_unlimited(config.len(), config.transmit_prob(), &d).unwrap();
        prop_assert!(bench.psi >= wpcn.report.psi);
        prop_assert!(wpcn.fixed_point.residual <= DEFAULT_TOL);
        let image = psi(&config, &wpcn.fixed_point.outage);
        prop_assert!(max_diff(&image, &wpcn.fixed_point.outage) <= DEFAULT_TOL);
    }

    #[test]
    fn harvest_monotone_in_distance(d in 0.5f64..20.0, delta in 0.01f64..5.0) {
        let radio = RadioParams::table1();
        let near = harvested_energy(&radio, 2.43, d).unwrap();
        let far = harvested_energy(&radio, 2.43, d + delta).unwrap();
        prop_assert!(near > far);
        prop_assert!(energy_units(near, 8.4e-4).unwrap() >= 1);
    }

    #[test]
    fn simulator_keeps_batteries_in_range(
        units in prop::collection::vec(1u32..4, 1..6),
        p_t in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let groups: Vec<(usize, u32)> = units.iter().map(|&e| (1, e)).collect();
        let config = NetworkConfig::from_groups(&groups, p_t, 5).unwrap();
        let mut state = SimState::full(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2_000 {
            let before = state.batteries.clone();
            let outcome = simulator::step(&mut state, &config, &mut rng);
            prop_assert_eq!(before.contains(&0), outcome == SlotOutcome::Wet);
            prop_assert!(state.batteries.iter().all(|&b| b <= 5));
            match outcome {
                SlotOutcome::Wet => {
                    for ((a, b), e) in before.iter().zip(&state.batteries).zip(&units) {
                        prop_assert_eq!(*b, (a + e).min(5));
                    }
                }
                SlotOutcome::Collision(ref who) => prop_assert!(who.len() >= 2),
                _ => {}
            }
        }
    }
}

#[test]
fn permuting_identical_devices_permutes_the_fixed_point() {
    let a = NetworkConfig::from_groups(&[(3, 1), (2, 2), (1, 3)], 0.1, 10).unwrap();
    let b = NetworkConfig::from_groups(&[(1, 3), (2, 2), (3, 1)], 0.1, 10).unwrap();
    let fa = solve_fixed_point(&a, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
    let fb = solve_fixed_point(&b, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
    let reversed: Vec<f64> = fb.outage.iter().rev().copied().collect();
    assert!(max_diff(&fa.outage, &reversed) < 1e-12);
}

#[test]
fn energy_bookkeeping_per_device() {
    // Over any window, spent minus harvested (before capping) never exceeds
    // the battery drop, with equality when no harvest is clipped.
    let config = NetworkConfig::from_groups(&[(2, 1), (2, 3)], 0.4, 6).unwrap();
    let units: Vec<u32> = config.harvest_units().collect();
    let mut state = SimState::full(&config);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let initial = state.batteries.clone();
    let mut spent = [0i64; 4];
    let mut harvested = [0i64; 4];
    let mut clipped = [false; 4];
    for _ in 0..5_000 {
        let before = state.batteries.clone();
        match simulator::step(&mut state, &config, &mut rng) {
            SlotOutcome::Wet => {
                for n in 0..4 {
                    harvested[n] += units[n] as i64;
                    clipped[n] |= before[n] + units[n] > 6;
                }
            }
            SlotOutcome::Success(n) => spent[n] += 1,
            SlotOutcome::Collision(who) => who.iter().for_each(|&n| spent[n] += 1),
            SlotOutcome::Idle => {}
        }
    }
    for n in 0..4 {
        let drop = initial[n] as i64 - state.batteries[n] as i64;
        let net = spent[n] - harvested[n];
        if clipped[n] {
            assert!(net <= drop);
        } else {
            assert_eq!(net, drop);
        }
    }
}

#[test]
fn equal_seeds_reproduce_runs() {
    let config = NetworkConfig::reference_population();
    let d = SlotDurations::table1();
    let opts = simulator::RunOptions::new(5, 100_000);
    let a = simulator::run(&config, &d, &opts).unwrap();
    let b = simulator::run(&config, &d, &opts).unwrap();
    assert_eq!(a, b);
    let c = simulator::run(&config, &d, &simulator::RunOptions::new(6, 100_000)).unwrap();
    assert_ne!(a.tally, c.tally);
}

#[test]
fn full_start_spends_before_first_wet() {
    // Large harvests: the first WET slot cannot come before some device has
    // transmitted C times.
    let config = NetworkConfig::from_groups(&[(3, 9)], 0.3, 10).unwrap();
    let mut state = SimState::full(&config);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sends = [0u32; 3];
    loop {
        match simulator::step(&mut state, &config, &mut rng) {
            SlotOutcome::Wet => break,
            SlotOutcome::Success(n) => sends[n] += 1,
            SlotOutcome::Collision(who) => who.iter().for_each(|&n| sends[n] += 1),
            SlotOutcome::Idle => {}
        }
    }
    assert_eq!(sends.iter().max(), Some(&10));
}

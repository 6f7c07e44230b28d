//! Controller pieces against hand-evaluated codes, an exhaustive candidate
//! scan, and the closed-form learning curve.

use qvr_core::liwc::{
    apply_delta, encode_motion, reward_update, select_delta, ControllerConfig, ControllerState, DeltaTag, MappingTable,
    MotionIndex, MotionSample, MotionThresholds, TABLE_DEPTH, TAG_COUNT,
};
use qvr_core::perfmodel::{LatencyEstimate, RateEstimates};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rates(alpha: f64) -> RateEstimates {
    RateEstimates {
        gpu_rate_tri_per_s: 1e8,
        remote_gpu_rate_tri_per_s: 8e8,
        throughput_bps: 200e6,
        alpha,
    }
}

fn sample(d6: [f64; 6], gaze: (f64, f64)) -> MotionSample {
    MotionSample { d6, gaze_delta: gaze }
}

#[test]
fn hand_built_motion_codes() {
    let t = MotionThresholds::default();
    let z = [0.0; 6];
    let cases: [(MotionSample, u16); 12] = [
        (MotionSample::STILL, 0),
        // One bit per head DoF.
        (sample([0.02, 0.0, 0.0, 0.0, 0.0, 0.0], (0.0, 0.0)), 0b00_00_000001),
        (sample([0.0, -0.02, 0.0, 0.0, 0.0, 0.0], (0.0, 0.0)), 0b00_00_000010),
        (sample([0.0, 0.0, 0.011, 0.0, 0.0, 0.0], (0.0, 0.0)), 0b00_00_000100),
        (sample([0.0, 0.0, 0.0, 0.6, 0.0, 0.0], (0.0, 0.0)), 0b00_00_001000),
        (sample([0.0, 0.0, 0.0, 0.0, -1.0, 0.0], (0.0, 0.0)), 0b00_00_010000),
        (sample([0.0, 0.0, 0.0, 0.0, 0.0, 2.0], (0.0, 0.0)), 0b00_00_100000),
        // Exactly at threshold stays clear.
        (sample([0.01, 0.0, 0.0, 0.5, 0.0, 0.0], (4.0, 0.0)), 0),
        // Gaze +x, 2x threshold: direction 0, bucket 1.
        (sample(z, (8.0, 1.0)), 0b01_00_000000),
        // Gaze +y, 5x threshold: direction 1, bucket 2.
        (sample(z, (3.0, 20.0)), 0b10_01_000000),
        // Gaze -x, 20x threshold: direction 2, bucket 3.
        (sample(z, (-80.0, 10.0)), 0b11_10_000000),
        // Gaze -y with yaw and dx: direction 3, bucket 1, bits 0 and 5.
        (sample([0.5, 0.0, 0.0, 0.0, 0.0, -0.7], (0.0, -6.0)), 0b01_11_100001),
    ];
    for (i, (s, expected)) in cases.iter().enumerate() {
        assert_eq!(encode_motion(s, &t).code(), *expected, "case {i}");
    }
}

#[test]
fn table_rows_fit_the_flat_layout() {
    assert_eq!(TABLE_DEPTH, 32768);
    assert_eq!(TAG_COUNT, 11);
    const { assert!(1024 * TAG_COUNT <= TABLE_DEPTH) };
    assert!(MotionIndex::new(1023).is_ok());
    assert!(MotionIndex::new(1024).is_err());
    assert!(DeltaTag::new(6).is_err());
    assert_eq!(
        DeltaTag::ALL.map(DeltaTag::delta_deg),
        [-5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5]
    );
}

fn random_state(rng: &mut ChaCha8Rng) -> ControllerState {
    let mut table = MappingTable::zeroed();
    for code in 0..1024u16 {
        let idx = MotionIndex::new(code).unwrap();
        for tag in DeltaTag::ALL {
            // Coarse values force frequent ties.
            table.set(idx, tag, rng.gen_range(-8..=8) as f64 * 0.001);
        }
    }
    ControllerState::new(table, rates(0.1), 20.0, (5.0, 90.0)).unwrap()
}

#[test]
fn select_delta_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let state = random_state(&mut rng);
    for _ in 0..5000 {
        let idx = MotionIndex::new(rng.gen_range(0..1024)).unwrap();
        let est = LatencyEstimate::new(0.0, rng.gen_range(-0.01..0.01));
        let chosen = select_delta(&state, idx, &est);
        // Smallest mismatch, then smallest step, then most negative.
        let mut best = None::<(f64, i8, i8)>;
        for d in -5i8..=5 {
            let tag = DeltaTag::new(d).unwrap();
            let err = (state.table.get(idx, tag) - est.delta_s).abs();
            let better = match best {
                None => true,
                Some((e, a, b)) => err < e || (err == e && (d.abs() < a || (d.abs() == a && d < b))),
            };
            if better {
                best = Some((err, d.abs(), d));
            }
        }
        assert_eq!(chosen.delta_deg(), best.unwrap().2);
    }
}

#[test]
fn apply_delta_clamps_at_bounds() {
    let config = ControllerConfig::default();
    let state = ControllerState::with_linear_prior(rates(0.1), &config, 0.002).unwrap();
    assert_eq!(state.current_e1_deg, 5.0);
    let lowered = apply_delta(state.clone(), DeltaTag::new(-5).unwrap());
    assert_eq!(lowered.current_e1_deg, 5.0);
    let raised = apply_delta(state, DeltaTag::new(3).unwrap());
    assert_eq!(raised.current_e1_deg, 8.0);
    let mut high = raised;
    high.current_e1_deg = 88.0;
    assert_eq!(apply_delta(high, DeltaTag::new(5).unwrap()).current_e1_deg, 90.0);
}

#[test]
fn constant_reward_converges_geometrically() {
    let table = MappingTable::zeroed();
    let mut state = ControllerState::new(table, rates(0.5), 10.0, (5.0, 90.0)).unwrap();
    let idx = MotionIndex::new(7).unwrap();
    let tag = DeltaTag::new(2).unwrap();
    let c = 0.004;
    for expected in [0.5 * c, 0.75 * c, 0.875 * c, 0.9375 * c] {
        state = reward_update(state, idx, tag, c);
        let got = state.table.get(idx, tag);
        // Entries are half precision.
        assert!((got - expected).abs() <= expected * 1e-3, "{got} vs {expected}");
    }
    assert_eq!(state.table.visits(idx, tag), 4);
    assert_eq!(state.table.get(idx, DeltaTag::new(1).unwrap()), 0.0);
}

#[test]
fn non_finite_reward_leaves_table_untouched() {
    let state = ControllerState::new(MappingTable::linear_prior(0.001), rates(0.5), 10.0, (5.0, 90.0)).unwrap();
    let idx = MotionIndex::new(3).unwrap();
    let tag = DeltaTag::new(1).unwrap();
    let next = reward_update(state.clone(), idx, tag, f64::NAN);
    assert_eq!(next.table, state.table);
}

#[test]
fn linear_prior_is_proportional_to_step() {
    let table = MappingTable::linear_prior(0.0005);
    let idx = MotionIndex::new(100).unwrap();
    for (tag, value) in table.row(idx) {
        let expected = 0.0005 * tag.delta_deg() as f64;
        assert!((value - expected).abs() <= 1e-3 * expected.abs() + 1e-9);
    }
}

#[test]
fn table_round_trips_through_file_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("controller.bin");
    let mut table = MappingTable::linear_prior(0.0007);
    table.set(MotionIndex::new(55).unwrap(), DeltaTag::new(-3).unwrap(), 0.0123);
    let thresholds = MotionThresholds::default();
    let sidecar_path = table.save(&path, 0.1, &thresholds).unwrap();
    assert_eq!(sidecar_path, dir.path().join("controller.bin.json"));
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 2 * TABLE_DEPTH as u64);
    let (loaded, sidecar) = MappingTable::load(&path).unwrap();
    assert_eq!(loaded.to_le_bytes(), table.to_le_bytes());
    assert_eq!(sidecar.alpha, 0.1);
    assert_eq!(sidecar.thresholds, thresholds);
    assert!(MappingTable::from_le_bytes(&[0u8; 10]).is_err());
}

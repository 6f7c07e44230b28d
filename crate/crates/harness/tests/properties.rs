use std::collections::HashSet;

use proptest::prelude::*;
use qvr_core::channel::ProfileName;
use qvr_core::pipeline::{run_trace, Mode, PipelineConfig};
use qvr_harness::config::{config_from_value, with_network};
use qvr_harness::experiment::{read_frames, write_frames, ExperimentSpec};
use qvr_harness::presets::{clock_scale, PRESETS};
use qvr_harness::trace::{generate_trace, MotionModel, TraceSpec};

fn network() -> impl Strategy<Value = ProfileName> {
    prop_oneof![
        Just(ProfileName::Wifi),
        Just(ProfileName::Lte4g),
        Just(ProfileName::Early5g)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn configs_survive_a_json_round_trip(
        rate in 1e7..1e9f64, ffr in 1.0..40.0f64, snr in 5.0..40.0f64, name in network(), seed in any::<u64>(),
    ) {
        let mut config = PipelineConfig::default();
        config.rates.gpu_rate_tri_per_s = rate;
        config.ffr_e1_deg = ffr;
        config.profile.snr_db = snr;
        let config = with_network(config, name, seed).unwrap();
        let back = config_from_value(serde_json::to_value(&config).unwrap()).unwrap();
        prop_assert_eq!(back, config);
    }

    #[test]
    fn clock_scale_is_proportional(a in 1u32..2000, b in 1u32..2000) {
        prop_assert_eq!(a <= b, clock_scale(a) <= clock_scale(b));
        prop_assert!((clock_scale(a) * b as f64 - clock_scale(b) * a as f64).abs() < 1e-9 * (a.max(b) as f64));
    }

    #[test]
    fn sweep_cells_are_distinct(
        apps in prop::sample::subsequence(PRESETS.iter().map(|p| p.name).collect::<Vec<_>>(), 1..5),
        clocks in prop::collection::hash_set(100u32..900, 1..4),
        networks in prop::sample::subsequence(vec![ProfileName::Wifi, ProfileName::Lte4g, ProfileName::Early5g], 1..=3),
    ) {
        let spec = ExperimentSpec {
            modes: vec![Mode::Qvr],
            apps: apps.iter().map(|a| a.to_string()).collect(),
            gpu_clocks_mhz: clocks.into_iter().collect(),
            networks,
            motion_model: MotionModel::Still,
            frames: 1,
            seed: 0,
            warmup: 0,
            pipeline: None,
            output_dir: None,
        };
        spec.validate().unwrap();
        let cells = spec.cells();
        prop_assert_eq!(cells.len(), spec.apps.len() * spec.gpu_clocks_mhz.len() * spec.networks.len());
        let ids: HashSet<_> = cells.iter().map(|c| c.id()).collect();
        prop_assert_eq!(ids.len(), cells.len());
    }

    #[test]
    fn frame_tables_round_trip_exactly(seed in any::<u64>(), name in network(), mode_idx in 0usize..6) {
        let config = with_network(PipelineConfig::default(), name, seed).unwrap();
        let trace = generate_trace(&TraceSpec::synthetic("hl2-h", MotionModel::SaccadeMix, 4, seed), &config.display).unwrap();
        let run = run_trace(Mode::ALL[mode_idx], &config, &trace, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.csv");
        write_frames(&path, &run.reports).unwrap();
        prop_assert_eq!(read_frames(&path).unwrap(), run.reports);
    }
}

use qvr_core::channel::ProfileName;
use qvr_core::perfmodel::REMOTE_RATE_MULTIPLIER;
use qvr_core::pipeline::PipelineConfig;
use qvr_harness::config::{config_from_value, load_config, with_network};
use serde_json::json;

#[test]
fn empty_object_gives_the_defaults() {
    assert_eq!(config_from_value(json!({})).unwrap(), PipelineConfig::default());
}

#[test]
fn aliases_and_derived_fields() {
    let config = config_from_value(json!({
        "rates": { "gpu_tri_per_s": 2e8 },
        "profile": { "name": "lte4g" },
        "display": { "width_px": 1280, "height_px": 1600 },
    }))
    .unwrap();
    assert_eq!(config.rates.gpu_rate_tri_per_s, 2e8);
    assert_eq!(config.rates.remote_gpu_rate_tri_per_s, 2e8 * REMOTE_RATE_MULTIPLIER);
    assert_eq!(config.profile.throughput_bps, 100e6);
    assert_eq!(config.rates.throughput_bps, 100e6);
    assert_eq!(config.mar.omega_star, config.display.pixel_mar_arcmin());
    // Untouched display fields keep their defaults.
    assert_eq!(config.display.eyes, PipelineConfig::default().display.eyes);
}

#[test]
fn explicit_values_beat_derivations() {
    let config = config_from_value(json!({
        "rates": { "gpu_rate_tri_per_s": 1e8, "remote_gpu_rate_tri_per_s": 3e8, "throughput_bps": 50e6 },
        "mar": { "omega_star": 4.5 },
    }))
    .unwrap();
    assert_eq!(config.rates.remote_gpu_rate_tri_per_s, 3e8);
    assert_eq!(config.rates.throughput_bps, 50e6);
    assert_eq!(config.mar.omega_star, 4.5);
}

#[test]
fn bad_configs_are_rejected() {
    assert!(config_from_value(json!([])).is_err());
    assert!(config_from_value(json!({ "turbo": true })).is_err());
    assert!(config_from_value(json!({ "rates": { "warp_factor": 9 } })).is_err());
    assert!(config_from_value(json!({ "profile": { "name": "dialup" } })).is_err());
    assert!(config_from_value(json!({ "uca_overlap_fraction": 1.5 })).is_err());
}

#[test]
fn loads_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, r#"{ "ffr_e1_deg": 7.5 }"#).unwrap();
    assert_eq!(load_config(&path).unwrap().ffr_e1_deg, 7.5);
    assert!(load_config(&dir.path().join("missing.json")).is_err());
}

#[test]
fn named_network_keeps_custom_link_terms() {
    let mut base = PipelineConfig::default();
    base.profile.snr_db = 30.0;
    let config = with_network(base, ProfileName::Early5g, 4).unwrap();
    assert_eq!(config.profile.name, ProfileName::Early5g);
    assert_eq!(config.profile.throughput_bps, 500e6);
    assert_eq!(config.rates.throughput_bps, 500e6);
    assert_eq!(config.profile.snr_db, 30.0);
    assert_eq!(config.profile.seed, 4);
}

//! JSON configuration files. Any key may be omitted; derived quantities that are
//! not given explicitly follow the values they depend on:
//!
//! - `mar.omega_star` defaults to the display's pixel MAR,
//! - `rates.remote_gpu_tri_per_s` defaults to eight times the local rate,
//! - `rates.throughput_bps` defaults to the selected profile's nominal rate.

use std::fs;
use std::path::Path;

use qvr_core::channel::{ChannelProfile, ProfileName};
use qvr_core::perfmodel::REMOTE_RATE_MULTIPLIER;
use qvr_core::pipeline::PipelineConfig;
use serde_json::{Map, Value};

use crate::HarnessError;

/// Keys accepted in place of the struct field names.
const KEY_ALIASES: &[(&str, &str, &str)] = &[
    ("rates", "gpu_tri_per_s", "gpu_rate_tri_per_s"),
    ("rates", "remote_gpu_tri_per_s", "remote_gpu_rate_tri_per_s"),
];

fn object<'a>(root: &'a mut Map<String, Value>, key: &str) -> Option<&'a mut Map<String, Value>> {
    root.get_mut(key).and_then(Value::as_object_mut)
}

pub fn config_from_value(mut value: Value) -> Result<PipelineConfig, HarnessError> {
    let root = value
        .as_object_mut()
        .ok_or_else(|| HarnessError::Spec("config must be a JSON object".into()))?;
    for (section, alias, field) in KEY_ALIASES {
        if let Some(obj) = object(root, section) {
            if let Some(v) = obj.remove(*alias) {
                obj.insert(field.to_string(), v);
            }
        }
    }

    let given =
        |root: &Map<String, Value>, section: &str, key: &str| root.get(section).and_then(|s| s.get(key)).is_some();
    let omega_star_given = given(root, "mar", "omega_star");
    let remote_given = given(root, "rates", "remote_gpu_rate_tri_per_s");
    let throughput_given = given(root, "rates", "throughput_bps");

    let mut merged = serde_json::to_value(PipelineConfig::default())?;
    let defaults = merged.as_object_mut().expect("struct serializes to an object");
    if let Some(profile) = object(root, "profile") {
        if let Some(name) = profile.get("name").and_then(Value::as_str) {
            let name: ProfileName = name.parse()?;
            if let (Some(nominal), false) = (name.nominal_throughput_bps(), profile.contains_key("throughput_bps")) {
                profile.insert("throughput_bps".into(), nominal.into());
            }
        }
    }
    for (key, val) in root.iter() {
        let slot = defaults
            .get_mut(key)
            .ok_or_else(|| HarnessError::Spec(format!("unknown config key {key:?}")))?;
        merge(slot, val);
    }

    let mut config: PipelineConfig = serde_json::from_value(merged)?;
    if !omega_star_given {
        config.mar.omega_star = config.display.pixel_mar_arcmin();
    }
    if !remote_given {
        config.rates.remote_gpu_rate_tri_per_s = config.rates.gpu_rate_tri_per_s * REMOTE_RATE_MULTIPLIER;
    }
    if !throughput_given {
        config.rates.throughput_bps = config.profile.throughput_bps;
    }
    config.validate()?;
    Ok(config)
}

/// Overlays `over` onto `base`, descending into objects so partial sections keep
/// their remaining defaults. Unknown nested keys survive and are rejected when
/// the result is deserialized.
fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(base), Value::Object(over)) => {
            for (k, v) in over {
                match base.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        base.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let value: Value = serde_json::from_str(&text)?;
    config_from_value(value)
}

/// Applies a named network profile and seed on top of a configuration.
pub fn with_network(config: PipelineConfig, name: ProfileName, seed: u64) -> Result<PipelineConfig, HarnessError> {
    let profile = if name == ProfileName::Custom {
        config.profile
    } else {
        ChannelProfile {
            snr_db: config.profile.snr_db,
            overhead_s: config.profile.overhead_s,
            ..ChannelProfile::preset(name)?
        }
    };
    Ok(config.with_profile(profile.with_seed(seed)))
}

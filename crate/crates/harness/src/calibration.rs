//! The rule that fixes the local GPU rate: the heaviest preset must render a
//! 15 degree fovea within one 90 Hz frame.

use qvr_core::foveation::{fovea_workload_fraction, layer_geometry, EccentricityState};
use qvr_core::pipeline::PipelineConfig;

use crate::presets::{AppPreset, PRESETS};
use crate::trace::{generate_trace, MotionModel, TraceSpec};
use crate::HarnessError;

pub const CALIBRATION_E1_DEG: f64 = 15.0;
pub const FRAME_BUDGET_S: f64 = 0.011;

/// Fovea workload share for a still, gaze-centred view of the preset.
pub fn fovea_fraction(preset: &AppPreset, base: &PipelineConfig, e1_deg: f64) -> Result<f64, HarnessError> {
    let config = preset.config(base);
    let trace = generate_trace(
        &TraceSpec::synthetic(preset.name, MotionModel::Still, 1, 0),
        &config.display,
    )?;
    let frame = &trace[0];
    let ecc = EccentricityState::select(e1_deg, frame.gaze_px, &config.mar, &config.display)?;
    let geom = layer_geometry(&ecc, &config.mar, &config.display);
    Ok(fovea_workload_fraction(&frame.scene, &geom, frame.gaze_px)?)
}

/// Local render time of the preset's fovea at `e1_deg` under `base`'s GPU rate.
pub fn local_latency(preset: &AppPreset, base: &PipelineConfig, e1_deg: f64) -> Result<f64, HarnessError> {
    Ok(preset.triangles as f64 * fovea_fraction(preset, base, e1_deg)? / base.rates.gpu_rate_tri_per_s)
}

/// Smallest GPU rate at which every preset renders a calibration-sized fovea in budget.
pub fn calibrated_gpu_rate(base: &PipelineConfig) -> Result<f64, HarnessError> {
    PRESETS.iter().try_fold(0.0f64, |rate, preset| {
        let work = preset.triangles as f64 * fovea_fraction(preset, base, CALIBRATION_E1_DEG)?;
        Ok(rate.max(work / FRAME_BUDGET_S))
    })
}

/// The preset with the largest fovea workload at the calibration eccentricity.
pub fn heaviest_preset(base: &PipelineConfig) -> Result<&'static AppPreset, HarnessError> {
    let mut best: Option<(&'static AppPreset, f64)> = None;
    for preset in PRESETS {
        let work = preset.triangles as f64 * fovea_fraction(preset, base, CALIBRATION_E1_DEG)?;
        if best.is_none_or(|(_, w)| work > w) {
            best = Some((preset, work));
        }
    }
    Ok(best.expect("presets are non-empty").0)
}

//! Scene and motion traces: seeded synthetic generators and CSV ingestion.

use std::path::{Path, PathBuf};

use qvr_core::foveation::DisplayConfig;
use qvr_core::liwc::MotionSample;
use qvr_core::perfmodel::{DensityGrid, SceneFrame};
use qvr_core::pipeline::TraceFrame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::presets::{self, DENSITY_CORE_DEG, DENSITY_POWER};
use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Synthetic,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionModel {
    Still,
    Pan,
    SaccadeMix,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneModel {
    Preset(String),
    Custom(CustomScene),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomScene {
    pub triangles: u64,
    pub f_range: (f64, f64),
    #[serde(default = "default_core")]
    pub density_core_deg: f64,
    #[serde(default = "default_power")]
    pub density_power: f64,
}

fn default_core() -> f64 {
    DENSITY_CORE_DEG
}

fn default_power() -> f64 {
    DENSITY_POWER
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    pub kind: TraceKind,
    pub frames: usize,
    pub scene_model: SceneModel,
    pub motion_model: MotionModel,
    pub seed: u64,
    /// Source file when `kind` is csv.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl TraceSpec {
    pub fn synthetic(preset: &str, motion_model: MotionModel, frames: usize, seed: u64) -> Self {
        Self {
            kind: TraceKind::Synthetic,
            frames,
            scene_model: SceneModel::Preset(preset.to_string()),
            motion_model,
            seed,
            path: None,
        }
    }

    pub fn scene(&self) -> Result<CustomScene, HarnessError> {
        match &self.scene_model {
            SceneModel::Preset(name) => {
                let preset = presets::find(name)?;
                Ok(CustomScene {
                    triangles: preset.triangles,
                    f_range: preset.f_range,
                    density_core_deg: DENSITY_CORE_DEG,
                    density_power: DENSITY_POWER,
                })
            }
            SceneModel::Custom(custom) => Ok(*custom),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.frames == 0 {
            return Err(HarnessError::Spec("trace needs at least one frame".into()));
        }
        let scene = self.scene()?;
        let (lo, hi) = scene.f_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(HarnessError::Spec(format!("f range [{lo}, {hi}] invalid")));
        }
        if !(scene.density_core_deg > 0.0 && scene.density_power >= 0.0) {
            return Err(HarnessError::Spec("density shape parameters invalid".into()));
        }
        match (self.kind, self.motion_model, &self.path) {
            (TraceKind::Csv, _, None) => Err(HarnessError::Spec("csv trace needs a path".into())),
            (TraceKind::Synthetic, MotionModel::Csv, _) => {
                Err(HarnessError::Spec("csv motion needs a csv trace".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Head and gaze state for one synthetic frame.
struct MotionStep {
    motion: MotionSample,
    gaze_px: (f64, f64),
    hotspot_px: (f64, f64),
}

/// Fixation length range for saccade-mix traces, frames.
const FIXATION_FRAMES: (u32, u32) = (20, 60);
/// Head jitter as a fraction of each DoF threshold.
const JITTER_SCALE: f64 = 0.4;

fn still(frames: usize, center: (f64, f64)) -> Vec<MotionStep> {
    (0..frames)
        .map(|_| MotionStep {
            motion: MotionSample::STILL,
            gaze_px: center,
            hotspot_px: center,
        })
        .collect()
}

/// Steady yaw while the content of interest sways sideways and the eyes track it.
fn pan(frames: usize, disp: &DisplayConfig) -> Vec<MotionStep> {
    const YAW_DEG_PER_FRAME: f64 = 0.8;
    const PERIOD_FRAMES: f64 = 240.0;
    let (cx, cy) = disp.center();
    let amplitude = 0.15 * disp.width();
    let spot = |n: usize| {
        (
            cx + amplitude * (std::f64::consts::TAU * n as f64 / PERIOD_FRAMES).sin(),
            cy,
        )
    };
    (0..frames)
        .map(|n| {
            let now = spot(n);
            let prev = if n == 0 { now } else { spot(n - 1) };
            MotionStep {
                motion: MotionSample {
                    d6: [0.0, 0.0, 0.0, 0.0, 0.0, YAW_DEG_PER_FRAME],
                    gaze_delta: (now.0 - prev.0, now.1 - prev.1),
                },
                gaze_px: now,
                hotspot_px: now,
            }
        })
        .collect()
}

/// Fixations with small head jitter, broken by gaze jumps that come with a head turn.
fn saccade_mix(frames: usize, disp: &DisplayConfig, rng: &mut ChaCha8Rng) -> Vec<MotionStep> {
    let thresholds = qvr_core::liwc::MotionThresholds::default();
    let mut gaze = disp.center();
    let mut until_jump = rng.gen_range(FIXATION_FRAMES.0..=FIXATION_FRAMES.1);
    let mut steps = Vec::with_capacity(frames);
    for _ in 0..frames {
        let mut d6 = [0.0; 6];
        for (d, t) in d6.iter_mut().zip(thresholds.dof) {
            *d = rng.gen_range(-1.0..=1.0) * JITTER_SCALE * t;
        }
        let prev = gaze;
        if until_jump == 0 {
            gaze = (
                rng.gen_range(0.25..=0.75) * disp.width(),
                rng.gen_range(0.25..=0.75) * disp.height(),
            );
            let turn = rng.gen_range(1.0..=3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            d6[5] += turn;
            until_jump = rng.gen_range(FIXATION_FRAMES.0..=FIXATION_FRAMES.1);
        } else {
            until_jump -= 1;
        }
        steps.push(MotionStep {
            motion: MotionSample {
                d6,
                gaze_delta: (gaze.0 - prev.0, gaze.1 - prev.1),
            },
            gaze_px: gaze,
            hotspot_px: gaze,
        });
    }
    steps
}

fn scene_frames(
    steps: Vec<MotionStep>,
    scene: &CustomScene,
    triangles: impl Fn(usize) -> u64,
    disp: &DisplayConfig,
    seed: u64,
) -> Vec<TraceFrame> {
    // A separate stream so the f schedule does not shift with the motion model.
    let mut f_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_F00D);
    let (lo, hi) = scene.f_range;
    let mut cached: Option<((f64, f64), DensityGrid)> = None;
    steps
        .into_iter()
        .enumerate()
        .map(|(n, step)| {
            let density = match &cached {
                Some((spot, grid)) if *spot == step.hotspot_px => grid.clone(),
                _ => {
                    let grid = DensityGrid::radial(
                        (disp.width(), disp.height()),
                        disp.pixels_per_degree(),
                        step.hotspot_px,
                        scene.density_core_deg,
                        scene.density_power,
                    );
                    cached = Some((step.hotspot_px, grid.clone()));
                    grid
                }
            };
            let u: f64 = f_rng.gen();
            TraceFrame {
                scene: SceneFrame {
                    frame_id: n as u64,
                    triangles: triangles(n),
                    density,
                    interactive_fraction_f: lo + (hi - lo) * u,
                },
                motion: step.motion,
                gaze_px: step.gaze_px,
            }
        })
        .collect()
}

pub fn generate_trace(spec: &TraceSpec, disp: &DisplayConfig) -> Result<Vec<TraceFrame>, HarnessError> {
    spec.validate()?;
    let scene = spec.scene()?;
    if spec.kind == TraceKind::Csv {
        let path = spec.path.as_deref().expect("validated");
        return read_csv_trace(path, &scene, disp, spec.frames, spec.seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let steps = match spec.motion_model {
        MotionModel::Still => still(spec.frames, disp.center()),
        MotionModel::Pan => pan(spec.frames, disp),
        MotionModel::SaccadeMix => saccade_mix(spec.frames, disp, &mut rng),
        MotionModel::Csv => unreachable!("rejected by validate"),
    };
    Ok(scene_frames(steps, &scene, |_| scene.triangles, disp, spec.seed))
}

pub const CSV_TRACE_HEADER: [&str; 12] = [
    "frame_id",
    "triangles",
    "dx",
    "dy",
    "dz",
    "droll",
    "dpitch",
    "dyaw",
    "gaze_x",
    "gaze_y",
    "hotspot_x",
    "hotspot_y",
];

#[derive(Debug, Deserialize)]
struct CsvTraceRow {
    #[allow(dead_code)]
    frame_id: u64,
    triangles: u64,
    dx: f64,
    dy: f64,
    dz: f64,
    droll: f64,
    dpitch: f64,
    dyaw: f64,
    gaze_x: f64,
    gaze_y: f64,
    hotspot_x: Option<f64>,
    hotspot_y: Option<f64>,
}

/// Reads up to `max_frames` rows. Gaze deltas come from consecutive gaze points,
/// and the density hotspot defaults to the gaze point.
pub fn read_csv_trace(
    path: &Path,
    scene: &CustomScene,
    disp: &DisplayConfig,
    max_frames: usize,
    seed: u64,
) -> Result<Vec<TraceFrame>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| HarnessError::csv(path, e))?;
    let mut steps = Vec::new();
    let mut triangles = Vec::new();
    let mut prev_gaze = None;
    for record in reader.deserialize::<CsvTraceRow>().take(max_frames) {
        let row = record.map_err(|e| HarnessError::csv(path, e))?;
        let gaze = (row.gaze_x, row.gaze_y);
        let (px, py) = prev_gaze.unwrap_or(gaze);
        prev_gaze = Some(gaze);
        let motion = MotionSample {
            d6: [row.dx, row.dy, row.dz, row.droll, row.dpitch, row.dyaw],
            gaze_delta: (gaze.0 - px, gaze.1 - py),
        };
        if !motion.is_finite() {
            return Err(HarnessError::Spec(format!(
                "{}: non-finite motion in frame {}",
                path.display(),
                steps.len()
            )));
        }
        steps.push(MotionStep {
            motion,
            gaze_px: gaze,
            hotspot_px: (row.hotspot_x.unwrap_or(gaze.0), row.hotspot_y.unwrap_or(gaze.1)),
        });
        triangles.push(row.triangles);
    }
    if steps.is_empty() {
        return Err(HarnessError::Spec(format!("{}: no trace rows", path.display())));
    }
    Ok(scene_frames(steps, scene, |n| triangles[n], disp, seed))
}

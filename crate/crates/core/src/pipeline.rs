//! Per-frame simulation of the six rendering modes over a scene and motion trace.
//!
//! Every report exposes each addend of its end-to-end latency:
//!
//! `t_e2e = sensor + cl_ls + max(t_local, t_remote_exposed) + t_compose + display`
//!
//! where `t_remote_exposed` is the remote path left on the critical path (all of
//! it, except when the static baseline's prefetch hides part) and `t_compose` is
//! the composition and timewarp time that cannot overlap rendering.

use serde::{Deserialize, Serialize};

use crate::channel::{transmit, ChannelProfile, ProfileName};
use crate::error::{Error, Result};
use crate::foveation::{
    default_compression_ratio, fovea_workload_fraction, layer_geometry, periphery_bytes, DisplayConfig,
    EccentricityState, LayerGeometry, MarParams,
};
use crate::liwc::{
    apply_delta, encode_motion, reward_update, select_delta, ControllerConfig, ControllerState, MotionSample,
};
use crate::perfmodel::{
    fps, predict_local_latency, predict_remote_latency, LatencyEstimate, RateEstimates, SceneFrame, DEFAULT_ALPHA,
    REMOTE_RATE_MULTIPLIER,
};
use crate::uca::{tile_count, UcaCostModel, TILE_SIZE};

/// Local GPU throughput at the 500 MHz reference clock, triangles per second.
/// Chosen so the heaviest workload preset renders a 15 degree fovea in 11 ms.
pub const DEFAULT_GPU_TRI_PER_S: f64 = 1.33e8;

pub const DEFAULT_WARMUP_FRAMES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    LocalOnly,
    RemoteOnly,
    Static,
    Ffr,
    Dfr,
    Qvr,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::LocalOnly,
        Mode::RemoteOnly,
        Mode::Static,
        Mode::Ffr,
        Mode::Dfr,
        Mode::Qvr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::LocalOnly => "local-only",
            Mode::RemoteOnly => "remote-only",
            Mode::Static => "static",
            Mode::Ffr => "ffr",
            Mode::Dfr => "dfr",
            Mode::Qvr => "qvr",
        }
    }

    pub fn uses_controller(self) -> bool {
        matches!(self, Mode::Dfr | Mode::Qvr)
    }

    pub fn is_foveated(self) -> bool {
        matches!(self, Mode::Ffr | Mode::Dfr | Mode::Qvr)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub display: DisplayConfig,
    pub mar: MarParams,
    /// Hardware rates; also the controller's initial estimates.
    pub rates: RateEstimates,
    pub profile: ChannelProfile,
    /// Dedicated composition/timewarp units.
    pub cost: UcaCostModel,
    /// The same tile work when it runs on the GPU instead.
    pub gpu_compose_cost: UcaCostModel,
    pub controller: ControllerConfig,
    pub compression_ratio: f64,
    pub blend_band_px: u32,
    pub sensor_latency_s: f64,
    pub display_latency_s: f64,
    pub cl_ls_latency_s: f64,
    /// Share of the UCA pass that overlaps rendering.
    pub uca_overlap_fraction: f64,
    pub ffr_e1_deg: f64,
    /// Overrides the scene's interactive fraction for the static baseline.
    pub static_f: Option<f64>,
    pub static_mispredict_threshold: f64,
    /// How far ahead the static baseline prefetches the background.
    pub static_prefetch_lead_s: f64,
    pub depth_bytes_per_pixel: u32,
    pub mtp_budget_s: f64,
    pub fps_target_hz: f64,
    /// Latency ratios in this closed range count as balanced.
    pub balance_band: (f64, f64),
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let display = DisplayConfig::default();
        let profile = ChannelProfile::preset(ProfileName::Wifi).expect("named preset");
        Self {
            display,
            mar: MarParams::for_display(&display),
            rates: RateEstimates {
                gpu_rate_tri_per_s: DEFAULT_GPU_TRI_PER_S,
                remote_gpu_rate_tri_per_s: DEFAULT_GPU_TRI_PER_S * REMOTE_RATE_MULTIPLIER,
                throughput_bps: profile.throughput_bps,
                alpha: DEFAULT_ALPHA,
            },
            profile,
            cost: UcaCostModel::default(),
            gpu_compose_cost: UcaCostModel::default(),
            controller: ControllerConfig::default(),
            compression_ratio: default_compression_ratio(),
            blend_band_px: crate::uca::DEFAULT_BLEND_BAND_PX,
            sensor_latency_s: 0.002,
            display_latency_s: 0.005,
            cl_ls_latency_s: 0.001,
            uca_overlap_fraction: 0.5,
            ffr_e1_deg: 5.0,
            static_f: None,
            static_mispredict_threshold: 3.0,
            static_prefetch_lead_s: 0.033,
            depth_bytes_per_pixel: 2,
            mtp_budget_s: 0.025,
            fps_target_hz: 90.0,
            balance_band: (0.8, 1.25),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.display.validate()?;
        self.mar.validate()?;
        self.rates.validate()?;
        self.profile.validate()?;
        self.cost.validate()?;
        self.gpu_compose_cost.validate()?;
        self.controller.validate()?;
        let latencies = [
            self.sensor_latency_s,
            self.display_latency_s,
            self.cl_ls_latency_s,
            self.static_prefetch_lead_s,
            self.mtp_budget_s,
        ];
        if latencies.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::Config("latencies must be non-negative".into()));
        }
        if !(self.fps_target_hz > 0.0) {
            return Err(Error::Config("fps target must be positive".into()));
        }
        if !(self.compression_ratio > 0.0 && self.compression_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "compression ratio {} outside (0, 1]",
                self.compression_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.uca_overlap_fraction) {
            return Err(Error::Config("uca_overlap_fraction outside [0, 1]".into()));
        }
        if let Some(f) = self.static_f {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!("static_f {f} outside [0, 1]")));
            }
        }
        if !(self.static_mispredict_threshold > 0.0) {
            return Err(Error::Config("static mispredict threshold must be positive".into()));
        }
        if !(self.ffr_e1_deg > 0.0) {
            return Err(Error::Config("ffr_e1_deg must be positive".into()));
        }
        let (lo, hi) = self.balance_band;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return Err(Error::Config("balance band must bracket 1".into()));
        }
        Ok(())
    }

    /// Switches the display, re-deriving the display MAR from its pixel pitch.
    pub fn with_display(mut self, display: DisplayConfig) -> Self {
        self.mar.omega_star = display.pixel_mar_arcmin();
        self.display = display;
        self
    }

    /// Switches the network, resetting the throughput estimate to its nominal value.
    pub fn with_profile(mut self, profile: ChannelProfile) -> Self {
        self.rates.throughput_bps = profile.throughput_bps;
        self.profile = profile;
        self
    }

    /// Scales the local GPU clock: triangle rate and GPU-side composition both
    /// track it, the remote server and UCA units do not.
    pub fn with_gpu_clock_scale(mut self, scale: f64) -> Self {
        self.rates.gpu_rate_tri_per_s *= scale;
        self.gpu_compose_cost.freq_hz *= scale;
        self
    }

    fn frame_tiles(&self) -> u64 {
        self.display.eyes as u64 * tile_count(self.display.width_px, self.display.height_px, TILE_SIZE)
    }

    pub fn gpu_compose_latency_s(&self) -> f64 {
        self.gpu_compose_cost.latency_for_tiles(self.frame_tiles())
    }

    pub fn uca_latency_s(&self) -> f64 {
        self.cost.latency_for_tiles(self.frame_tiles())
    }

    /// Full-frame compressed colour bytes for one eye.
    fn eye_frame_bytes(&self, bytes_per_pixel: u32) -> u64 {
        let raw = self.display.area_px() * bytes_per_pixel as f64 * self.compression_ratio;
        (raw - 1e-6).max(0.0).ceil() as u64
    }

    fn clamp_to_display(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (x.clamp(0.0, self.display.width()), y.clamp(0.0, self.display.height()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceFrame {
    pub scene: SceneFrame,
    pub motion: MotionSample,
    /// Absolute gaze point on the display.
    pub gaze_px: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame_id: u64,
    pub mode: Mode,
    /// Zero for modes without a fovea.
    pub e1_deg: f64,
    pub e2_star_deg: f64,
    pub motion_code: u16,
    pub delta_deg: i8,
    pub t_sensor_s: f64,
    pub t_cl_ls_s: f64,
    pub t_local_s: f64,
    pub t_remote_render_s: f64,
    pub t_transmit_s: f64,
    pub t_remote_path_s: f64,
    pub t_remote_exposed_s: f64,
    /// Full UCA pass time; zero when composition runs on the GPU.
    pub t_uca_s: f64,
    /// Composition and timewarp time left on the critical path.
    pub t_compose_s: f64,
    pub t_display_s: f64,
    pub t_e2e_s: f64,
    pub t_gpu_s: f64,
    pub t_network_s: f64,
    pub fps_hz: f64,
    pub bytes_tx: u64,
    pub latency_ratio: Option<f64>,
    pub balanced: bool,
    pub static_mispredict: bool,
}

impl FrameReport {
    /// End-to-end latency recomputed from the exposed components.
    pub fn recomposed_e2e_s(&self) -> f64 {
        self.t_sensor_s
            + self.t_cl_ls_s
            + self.t_local_s.max(self.t_remote_exposed_s)
            + self.t_compose_s
            + self.t_display_s
    }
}

/// Frame rate from whichever of the GPU and network timelines is busy; an idle
/// timeline imposes no bound.
fn frame_rate(t_gpu_s: f64, t_network_s: f64) -> f64 {
    match (t_gpu_s > 0.0, t_network_s > 0.0) {
        (true, true) => fps(t_gpu_s, t_network_s).expect("both positive"),
        (true, false) => 1.0 / t_gpu_s,
        (false, true) => 1.0 / t_network_s,
        (false, false) => f64::INFINITY,
    }
}

/// Fovea layout, workload split, and periphery payload for one eccentricity.
struct FoveatedLayout {
    ecc: EccentricityState,
    geom: LayerGeometry,
    fovea_fraction: f64,
    bytes: u64,
}

fn foveated_layout(
    config: &PipelineConfig,
    scene: &SceneFrame,
    e1_deg: f64,
    center: (f64, f64),
) -> Result<FoveatedLayout> {
    let e1_deg = e1_deg.min(config.display.corner_eccentricity(center));
    let ecc = EccentricityState::select(e1_deg, center, &config.mar, &config.display)?;
    let geom = layer_geometry(&ecc, &config.mar, &config.display);
    let fovea_fraction = fovea_workload_fraction(scene, &geom, center)?;
    let bytes = periphery_bytes(&geom, &config.display, config.compression_ratio);
    Ok(FoveatedLayout {
        ecc,
        geom,
        fovea_fraction,
        bytes,
    })
}

/// Splits a periphery payload into middle and outer streams for each eye, in
/// proportion to each layer's transmitted pixels.
fn periphery_streams(geom: &LayerGeometry, bytes: u64, eyes: u32) -> Vec<u64> {
    let middle = geom.middle_area_px / (geom.s1 * geom.s1);
    let total = geom.periphery_pixel_cost();
    let middle_bytes = if total > 0.0 {
        ((bytes as f64 * middle / total).round() as u64).min(bytes)
    } else {
        0
    };
    let mut streams = Vec::with_capacity(2 * eyes as usize);
    for layer_bytes in [middle_bytes, bytes - middle_bytes] {
        let share = layer_bytes / eyes as u64;
        let extra = layer_bytes % eyes as u64;
        streams.extend((0..eyes as u64).map(|eye| share + u64::from(eye < extra)));
    }
    streams
}

struct Timing {
    t_local_s: f64,
    t_remote_render_s: f64,
    t_transmit_s: f64,
    t_remote_exposed_s: Option<f64>,
    t_uca_s: f64,
    t_compose_s: f64,
    gpu_busy_compose: bool,
    bytes_tx: u64,
    static_mispredict: bool,
}

fn finish(
    mode: Mode,
    config: &PipelineConfig,
    frame: &TraceFrame,
    timing: Timing,
    e1_deg: f64,
    e2_star_deg: f64,
    motion_code: u16,
    delta_deg: i8,
) -> FrameReport {
    let t_remote_path_s = timing.t_remote_render_s.max(timing.t_transmit_s);
    let t_remote_exposed_s = timing.t_remote_exposed_s.unwrap_or(t_remote_path_s);
    let t_gpu_s = timing.t_local_s
        + if timing.gpu_busy_compose {
            timing.t_compose_s
        } else {
            0.0
        };
    let t_network_s = t_remote_path_s;
    let t_e2e_s = config.sensor_latency_s
        + config.cl_ls_latency_s
        + timing.t_local_s.max(t_remote_exposed_s)
        + timing.t_compose_s
        + config.display_latency_s;
    let latency_ratio = (timing.t_local_s > 0.0 && t_remote_path_s > 0.0).then(|| t_remote_path_s / timing.t_local_s);
    let (lo, hi) = config.balance_band;
    FrameReport {
        frame_id: frame.scene.frame_id,
        mode,
        e1_deg,
        e2_star_deg,
        motion_code,
        delta_deg,
        t_sensor_s: config.sensor_latency_s,
        t_cl_ls_s: config.cl_ls_latency_s,
        t_local_s: timing.t_local_s,
        t_remote_render_s: timing.t_remote_render_s,
        t_transmit_s: timing.t_transmit_s,
        t_remote_path_s,
        t_remote_exposed_s,
        t_uca_s: timing.t_uca_s,
        t_compose_s: timing.t_compose_s,
        t_display_s: config.display_latency_s,
        t_e2e_s,
        t_gpu_s,
        t_network_s,
        fps_hz: frame_rate(t_gpu_s, t_network_s),
        bytes_tx: timing.bytes_tx,
        latency_ratio,
        balanced: latency_ratio.is_some_and(|r| (lo..=hi).contains(&r)),
        static_mispredict: timing.static_mispredict,
    }
}

/// Builds the controller's starting state: the configured initial eccentricity
/// and a linear-prior table scaled by the first frame's predicted local latency.
pub fn initial_controller_state(config: &PipelineConfig, first: &TraceFrame) -> Result<ControllerState> {
    config.validate()?;
    let center = config.clamp_to_display(first.gaze_px);
    let layout = foveated_layout(config, &first.scene, config.controller.e1_init_deg, center)?;
    let initial_local = predict_local_latency(&first.scene, layout.fovea_fraction, &config.rates);
    ControllerState::with_linear_prior(config.rates, &config.controller, initial_local)
}

pub fn run_frame(
    mode: Mode,
    config: &PipelineConfig,
    frame: &TraceFrame,
    mut state: ControllerState,
) -> Result<(FrameReport, ControllerState)> {
    config.validate()?;
    let scene = &frame.scene;
    if !(0.0..=1.0).contains(&scene.interactive_fraction_f) {
        return Err(Error::Config(format!(
            "interactive fraction {} outside [0, 1]",
            scene.interactive_fraction_f
        )));
    }
    let tris = scene.triangles as f64;
    let hw = &config.rates;
    let gpu_compose = config.gpu_compose_latency_s();
    let eyes = config.display.eyes as u64;

    let report = match mode {
        Mode::LocalOnly => {
            let timing = Timing {
                t_local_s: tris / hw.gpu_rate_tri_per_s,
                t_remote_render_s: 0.0,
                t_transmit_s: 0.0,
                t_remote_exposed_s: None,
                t_uca_s: 0.0,
                t_compose_s: gpu_compose,
                gpu_busy_compose: true,
                bytes_tx: 0,
                static_mispredict: false,
            };
            finish(mode, config, frame, timing, 0.0, 0.0, 0, 0)
        }
        Mode::RemoteOnly => {
            let streams = vec![config.eye_frame_bytes(config.display.bytes_per_pixel); eyes as usize];
            let tx = transmit(&config.profile, &streams, scene.frame_id)?;
            let timing = Timing {
                t_local_s: 0.0,
                t_remote_render_s: tris / hw.remote_gpu_rate_tri_per_s,
                t_transmit_s: tx.latency_s,
                t_remote_exposed_s: None,
                t_uca_s: 0.0,
                t_compose_s: gpu_compose,
                gpu_busy_compose: true,
                bytes_tx: tx.bytes,
                static_mispredict: false,
            };
            finish(mode, config, frame, timing, 0.0, 0.0, 0, 0)
        }
        Mode::Static => {
            let f = config.static_f.unwrap_or(scene.interactive_fraction_f);
            let color = config.eye_frame_bytes(config.display.bytes_per_pixel);
            let depth = config.eye_frame_bytes(config.depth_bytes_per_pixel);
            let mut streams = vec![color; eyes as usize];
            streams.extend(std::iter::repeat_n(depth, eyes as usize));
            let tx = transmit(&config.profile, &streams, scene.frame_id)?;
            let render = tris * (1.0 - f) / hw.remote_gpu_rate_tri_per_s;
            let path = render.max(tx.latency_s);
            let magnitude = frame.motion.normalized_magnitude(&config.controller.thresholds);
            let mispredict = magnitude > config.static_mispredict_threshold;
            let exposed = if mispredict {
                path
            } else {
                (path - config.static_prefetch_lead_s).max(0.0)
            };
            let timing = Timing {
                t_local_s: tris * f / hw.gpu_rate_tri_per_s,
                t_remote_render_s: render,
                t_transmit_s: tx.latency_s,
                t_remote_exposed_s: Some(exposed),
                t_uca_s: 0.0,
                t_compose_s: gpu_compose,
                gpu_busy_compose: true,
                bytes_tx: tx.bytes,
                static_mispredict: mispredict,
            };
            finish(mode, config, frame, timing, 0.0, 0.0, 0, 0)
        }
        Mode::Ffr | Mode::Dfr | Mode::Qvr => {
            let center = config.clamp_to_display(frame.gaze_px);
            let mut motion_code = 0;
            let mut delta_deg = 0;
            let mut estimate = None;
            let e1 = if mode.uses_controller() {
                state.validate()?;
                let idx = encode_motion(&frame.motion, &config.controller.thresholds);
                let current = foveated_layout(config, scene, state.current_e1_deg, center)?;
                let est = LatencyEstimate::new(
                    predict_local_latency(scene, current.fovea_fraction, &state.rates),
                    predict_remote_latency(current.bytes, &state.rates, config.profile.overhead_s),
                );
                let tag = select_delta(&state, idx, &est);
                state = apply_delta(state, tag);
                motion_code = idx.code();
                delta_deg = tag.delta_deg();
                estimate = Some((idx, tag, est));
                state.current_e1_deg
            } else {
                config.ffr_e1_deg
            };

            let layout = foveated_layout(config, scene, e1, center)?;
            let streams = periphery_streams(&layout.geom, layout.bytes, config.display.eyes);
            let tx = transmit(&config.profile, &streams, scene.frame_id)?;
            let t_local = tris * layout.fovea_fraction / hw.gpu_rate_tri_per_s;
            let render = tris * (1.0 - layout.fovea_fraction) / hw.remote_gpu_rate_tri_per_s;
            let (t_uca, t_compose, gpu_busy) = if mode == Mode::Qvr {
                let t_uca = config.uca_latency_s();
                (t_uca, (1.0 - config.uca_overlap_fraction) * t_uca, false)
            } else {
                (0.0, gpu_compose, true)
            };

            if let Some((idx, tag, est)) = estimate {
                // The table learns how much imbalance each step removes.
                let measured = render.max(tx.latency_s) - t_local;
                let before = state.last_measured_delta_s.unwrap_or(est.delta_s);
                state = reward_update(state, idx, tag, before - measured);
                state.last_measured_delta_s = Some(measured);
                let lit_tris = (tris * layout.fovea_fraction).round() as u64;
                if t_local > 0.0 && lit_tris > 0 {
                    state.rates = state.rates.observe_gpu(t_local, lit_tris)?;
                }
                let wire_s = tx.latency_s - config.profile.overhead_s;
                if wire_s > 0.0 && tx.bytes > 0 {
                    state.rates = state.rates.observe_network(wire_s, tx.bytes)?;
                }
            }

            let timing = Timing {
                t_local_s: t_local,
                t_remote_render_s: render,
                t_transmit_s: tx.latency_s,
                t_remote_exposed_s: None,
                t_uca_s: t_uca,
                t_compose_s: t_compose,
                gpu_busy_compose: gpu_busy,
                bytes_tx: tx.bytes,
                static_mispredict: false,
            };
            finish(
                mode,
                config,
                frame,
                timing,
                layout.ecc.e1_deg,
                layout.ecc.e2_star_deg,
                motion_code,
                delta_deg,
            )
        }
    };
    Ok((report, state))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub baseline: Mode,
    pub speedup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub mode: Mode,
    pub frames: usize,
    /// Frames excluded from the steady-state statistics.
    pub warmup_frames: usize,
    pub mean_e1_deg: f64,
    pub mean_t_e2e_s: f64,
    pub p50_t_e2e_s: f64,
    pub p95_t_e2e_s: f64,
    pub p99_t_e2e_s: f64,
    pub mean_t_local_s: f64,
    pub mean_t_remote_path_s: f64,
    pub mean_fps_hz: f64,
    pub total_bytes: u64,
    pub mean_latency_ratio: Option<f64>,
    pub balanced_fraction: f64,
    pub speedup_vs: Option<Speedup>,
}

impl TraceSummary {
    /// Steady-state statistics over the frames after `warmup`; a trace no longer
    /// than the warmup is summarized whole.
    pub fn from_reports(mode: Mode, reports: &[FrameReport], warmup: usize) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let warmup_frames = if reports.len() > warmup { warmup } else { 0 };
        let steady = &reports[warmup_frames..];
        let n = steady.len() as f64;
        let mean = |f: fn(&FrameReport) -> f64| steady.iter().map(f).sum::<f64>() / n;
        let mut e2e: Vec<f64> = steady.iter().map(|r| r.t_e2e_s).collect();
        e2e.sort_by(f64::total_cmp);
        let ratios: Vec<f64> = steady.iter().filter_map(|r| r.latency_ratio).collect();
        Ok(Self {
            mode,
            frames: reports.len(),
            warmup_frames,
            mean_e1_deg: mean(|r| r.e1_deg),
            mean_t_e2e_s: mean(|r| r.t_e2e_s),
            p50_t_e2e_s: nearest_rank(&e2e, 0.50),
            p95_t_e2e_s: nearest_rank(&e2e, 0.95),
            p99_t_e2e_s: nearest_rank(&e2e, 0.99),
            mean_t_local_s: mean(|r| r.t_local_s),
            mean_t_remote_path_s: mean(|r| r.t_remote_path_s),
            mean_fps_hz: mean(|r| r.fps_hz),
            total_bytes: reports.iter().map(|r| r.bytes_tx).sum(),
            mean_latency_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            balanced_fraction: steady.iter().filter(|r| r.balanced).count() as f64 / n,
            speedup_vs: None,
        })
    }

    pub fn with_baseline(mut self, baseline: &TraceSummary) -> Self {
        self.speedup_vs = Some(Speedup {
            baseline: baseline.mode,
            speedup: baseline.mean_t_e2e_s / self.mean_t_e2e_s,
        });
        self
    }
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRun {
    pub reports: Vec<FrameReport>,
    pub summary: TraceSummary,
    pub final_state: ControllerState,
}

pub fn run_trace(mode: Mode, config: &PipelineConfig, trace: &[TraceFrame], warmup: usize) -> Result<TraceRun> {
    let first = trace.first().ok_or(Error::EmptyTrace)?;
    let mut state = initial_controller_state(config, first)?;
    let mut reports = Vec::with_capacity(trace.len());
    for frame in trace {
        let (report, next) = run_frame(mode, config, frame, state)?;
        reports.push(report);
        state = next;
    }
    let summary = TraceSummary::from_reports(mode, &reports, warmup)?;
    Ok(TraceRun {
        reports,
        summary,
        final_state: state,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub mode: Mode,
    pub mean_t_e2e_s: f64,
    pub speedup_vs_local: f64,
    pub total_bytes: u64,
    pub bytes_vs_remote: f64,
    pub mean_fps_hz: f64,
    pub mean_e1_deg: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub runs: Vec<TraceRun>,
}

impl Comparison {
    pub fn row(&self, mode: Mode) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn run(&self, mode: Mode) -> Option<&TraceRun> {
        self.runs.iter().find(|r| r.summary.mode == mode)
    }
}

/// Runs every mode on the same trace and normalizes latency against local-only
/// rendering and bytes against remote-only rendering.
pub fn compare_modes(config: &PipelineConfig, trace: &[TraceFrame], warmup: usize) -> Result<Comparison> {
    let runs: Vec<TraceRun> = Mode::ALL
        .iter()
        .map(|&mode| run_trace(mode, config, trace, warmup))
        .collect::<Result<_>>()?;
    let local = runs[0].summary.clone();
    let remote_bytes = runs[1].summary.total_bytes as f64;
    let runs: Vec<TraceRun> = runs
        .into_iter()
        .map(|mut run| {
            run.summary = run.summary.clone().with_baseline(&local);
            run
        })
        .collect();
    let rows = runs
        .iter()
        .map(|run| {
            let s = &run.summary;
            ComparisonRow {
                mode: s.mode,
                mean_t_e2e_s: s.mean_t_e2e_s,
                speedup_vs_local: local.mean_t_e2e_s / s.mean_t_e2e_s,
                total_bytes: s.total_bytes,
                bytes_vs_remote: if remote_bytes > 0.0 {
                    s.total_bytes as f64 / remote_bytes
                } else {
                    0.0
                },
                mean_fps_hz: s.mean_fps_hz,
                mean_e1_deg: s.mean_e1_deg,
            }
        })
        .collect();
    Ok(Comparison { rows, runs })
}

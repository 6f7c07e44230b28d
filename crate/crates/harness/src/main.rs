use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qvr_core::channel::{loopback_transport, sha256, ProfileName};
use qvr_core::pipeline::{run_trace, Mode, PipelineConfig, DEFAULT_WARMUP_FRAMES};
use qvr_harness::calibration::{calibrated_gpu_rate, heaviest_preset, local_latency, CALIBRATION_E1_DEG};
use qvr_harness::config::{load_config, with_network};
use qvr_harness::experiment::{
    frames_file, run_experiment, summary_file, write_frames, write_json, Cell, ExperimentSpec, SummaryDoc,
};
use qvr_harness::imageio::{layer_frames, load_layers, run_uca, write_sample_inputs, UcaPose};
use qvr_harness::plots::emit_plots_data;
use qvr_harness::presets::{self, clock_scale, PRESETS, REFERENCE_CLOCK_MHZ};
use qvr_harness::schema::{self, validate_dir};
use qvr_harness::trace::{generate_trace, MotionModel, SceneModel, TraceKind, TraceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "qvr", version, about = "Collaborative foveated VR rendering simulator")]
struct Cli {
    /// Enables commands that open real sockets.
    #[arg(long, global = true)]
    integration: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trace through one mode, or all modes.
    Simulate(SimulateArgs),
    /// Run an experiment spec over apps, GPU clocks and networks.
    Sweep {
        /// Experiment spec (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write plot-ready CSVs.
        #[arg(long)]
        plots: bool,
    },
    /// Write plot-ready CSVs for a finished sweep directory.
    Plots { dir: PathBuf },
    /// Check every CSV and JSON artifact under a directory against its schema.
    ValidateSchema { dir: PathBuf },
    /// Compose foveated layers with timewarp in one pass and compare against the two-pass reference.
    Uca(UcaArgs),
    /// Derive the local GPU rate from the workload presets.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Round-trip random payloads over a loopback socket (needs --integration).
    Loopback {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 4 << 20)]
        max_bytes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Pipeline config (JSON); defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// A trace spec (.json), a trace CSV (.csv), or `<preset>[:<motion>]`.
    #[arg(long)]
    trace: String,
    /// A mode name, or `all`.
    #[arg(long, default_value = "qvr")]
    mode: String,
    /// Network profile; the config's profile when absent.
    #[arg(long)]
    network: Option<ProfileName>,
    /// Overrides the trace seed; also seeds network jitter.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Workload preset for CSV traces.
    #[arg(long, default_value = "grid")]
    app: String,
    /// Frames for preset traces, or the cap for CSV traces.
    #[arg(long, default_value_t = 300)]
    frames: usize,
    #[arg(long, default_value_t = REFERENCE_CLOCK_MHZ)]
    gpu_mhz: u32,
    #[arg(long, default_value_t = DEFAULT_WARMUP_FRAMES)]
    warmup: usize,
}

#[derive(clap::Args)]
struct UcaArgs {
    /// Layer images (PNG or PPM), fovea first, comma separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "sample")]
    layers: Vec<PathBuf>,
    /// Pose JSON: display, e1_deg, gaze_px, yaw/pitch/roll in degrees, lens_k1.
    #[arg(long, required_unless_present = "sample")]
    pose: Option<PathBuf>,
    /// Synthesize sample layers and a pose into the output directory first.
    #[arg(long)]
    sample: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_root() -> PathBuf {
    std::env::var_os("QVR_OUT_DIR").map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

fn parse_trace(args: &SimulateArgs) -> Result<TraceSpec> {
    let mut spec = if args.trace.ends_with(".json") {
        let text = std::fs::read_to_string(&args.trace).with_context(|| format!("reading {}", args.trace))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.trace))?
    } else if args.trace.ends_with(".csv") {
        TraceSpec {
            kind: TraceKind::Csv,
            frames: args.frames,
            scene_model: SceneModel::Preset(args.app.clone()),
            motion_model: MotionModel::Csv,
            seed: 0,
            path: Some(PathBuf::from(&args.trace)),
        }
    } else {
        let (preset, motion) = args.trace.split_once(':').unwrap_or((&args.trace, "saccade-mix"));
        let motion: MotionModel =
            serde_json::from_value(motion.into()).map_err(|_| anyhow::anyhow!("unknown motion model {motion:?}"))?;
        TraceSpec::synthetic(preset, motion, args.frames, 0)
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let base = match &args.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    let spec = parse_trace(&args)?;
    let (app, config) = match &spec.scene_model {
        SceneModel::Preset(name) => {
            let preset = presets::find(name)?;
            (preset.name.to_string(), preset.config(&base))
        }
        SceneModel::Custom(_) => ("custom".to_string(), base),
    };
    let config = config.with_gpu_clock_scale(clock_scale(args.gpu_mhz));
    let network = args.network.unwrap_or(config.profile.name);
    let config = with_network(config, network, spec.seed)?;
    let trace = generate_trace(&spec, &config.display)?;
    let modes: Vec<Mode> = if args.mode == "all" {
        Mode::ALL.to_vec()
    } else {
        vec![args.mode.parse()?]
    };
    let out = args.out.unwrap_or_else(|| out_root().join("simulate"));
    let cell = Cell {
        app,
        gpu_mhz: args.gpu_mhz,
        network,
    };
    let mut runs = modes
        .iter()
        .map(|&m| run_trace(m, &config, &trace, args.warmup))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(local) = runs
        .iter()
        .find(|r| r.summary.mode == Mode::LocalOnly)
        .map(|r| r.summary.clone())
    {
        for run in &mut runs {
            run.summary = run.summary.clone().with_baseline(&local);
        }
    }
    for run in &runs {
        let s = &run.summary;
        write_frames(&out.join(frames_file(s.mode)), &run.reports)?;
        let doc = SummaryDoc {
            schema: schema::SUMMARY.into(),
            cell: cell.clone(),
            seed: spec.seed,
            summary: s.clone(),
        };
        write_json(&out.join(summary_file(s.mode)), &doc)?;
        println!(
            "{:<12} e2e {:7.2} ms  p99 {:7.2} ms  fps {:7.1}  e1 {:5.1}  bytes {}",
            s.mode.as_str(),
            s.mean_t_e2e_s * 1e3,
            s.p99_t_e2e_s * 1e3,
            s.mean_fps_hz,
            s.mean_e1_deg,
            s.total_bytes
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn sweep(config: &Path, out: Option<PathBuf>, plots: bool) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let spec: ExperimentSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
    let out = out
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| out_root().join("sweep"));
    let manifest = run_experiment(&spec, &out)?;
    println!("{} cells written to {}", manifest.cells.len(), out.display());
    if plots {
        emit_plots_data(&out)?;
        println!("plot data written to {}", out.join("plots").display());
    }
    Ok(())
}

fn uca(args: UcaArgs) -> Result<()> {
    let out = args.out.unwrap_or_else(|| out_root().join("uca"));
    let (pose, layers) = if args.sample {
        let pose = match &args.pose {
            Some(path) => UcaPose::load(path)?,
            None => serde_json::from_str(r#"{"e1_deg": 20.0, "yaw_deg": 1.0, "pitch_deg": -0.5, "lens_k1": 0.05}"#)?,
        };
        let paths = write_sample_inputs(&out.join(schema::INPUTS_DIR), &pose)?;
        (pose, paths)
    } else {
        let pose = UcaPose::load(args.pose.as_deref().expect("required by clap"))?;
        (pose, args.layers)
    };
    let frames = layer_frames(&pose.geometry()?, pose.blend_band_px);
    let layers = load_layers(&layers, &frames)?;
    let stats = run_uca(&layers, &pose, &out)?;
    println!(
        "{}x{}: {} tiles ({} border), max |unified - reference| {:.2e}, UCA latency {:.3} ms",
        stats.width,
        stats.height,
        stats.tiles,
        stats.border_tiles,
        stats.max_abs_diff,
        stats.uca_latency_s * 1e3
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn calibrate(config: Option<PathBuf>) -> Result<()> {
    let mut base = match config {
        Some(path) => load_config(&path)?,
        None => PipelineConfig::default(),
    };
    let rate = calibrated_gpu_rate(&base)?;
    println!(
        "calibrated GPU rate: {rate:.6e} triangles/s (heaviest preset {})",
        heaviest_preset(&base)?.name
    );
    println!("configured GPU rate: {:.6e} triangles/s", base.rates.gpu_rate_tri_per_s);
    base.rates.gpu_rate_tri_per_s = base.rates.gpu_rate_tri_per_s.max(rate);
    println!("{:<12} {:>12} {:>12}", "preset", "T_local(15)", "T_local(40)");
    for preset in PRESETS {
        println!(
            "{:<12} {:>9.2} ms {:>9.2} ms",
            preset.name,
            local_latency(preset, &base, CALIBRATION_E1_DEG)? * 1e3,
            local_latency(preset, &base, 40.0)? * 1e3
        );
    }
    Ok(())
}

fn loopback(integration: bool, count: usize, max_bytes: usize, seed: u64) -> Result<()> {
    if !integration {
        bail!("loopback opens real sockets; pass --integration to enable it");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for i in 0..count {
        let len = rng.gen_range(0..=max_bytes);
        let mut payload = vec![0u8; len];
        rng.fill(payload.as_mut_slice());
        let receipt = loopback_transport(&payload)?;
        let ok = receipt.received_digest == sha256(&payload) && receipt.result.bytes == len as u64;
        failures += usize::from(!ok);
        println!(
            "{i:3} {len:8} B  {:8.3} ms  {}",
            receipt.result.latency_s * 1e3,
            if ok { "ok" } else { "HASH MISMATCH" }
        );
    }
    if failures > 0 {
        bail!("{failures} of {count} payloads failed the hash check");
    }
    println!("loopback: {count}/{count} payloads round-tripped with matching hashes");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep { config, out, plots } => sweep(&config, out, plots),
        Command::Plots { dir } => emit_plots_data(&dir)
            .map(|files| {
                println!(
                    "wrote {} and {} series",
                    files.local_latency.parent().unwrap().display(),
                    files.controller.len()
                )
            })
            .map_err(Into::into),
        Command::ValidateSchema { dir } => validate_dir(&dir)
            .map(|n| println!("{n} files match their schemas"))
            .map_err(Into::into),
        Command::Uca(args) => uca(args),
        Command::Calibrate { config } => calibrate(config),
        Command::Loopback { count, max_bytes, seed } => loopback(cli.integration, count, max_bytes, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

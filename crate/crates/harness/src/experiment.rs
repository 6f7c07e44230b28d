//! Sweeps over apps, GPU clocks and networks, with per-cell artifacts and a
//! final single-writer merge into the manifest and the mean-e1 matrix.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qvr_core::channel::ProfileName;
use qvr_core::pipeline::{run_trace, FrameReport, Mode, PipelineConfig, TraceRun, TraceSummary, DEFAULT_WARMUP_FRAMES};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{config_from_value, with_network};
use crate::presets::{self, clock_scale};
use crate::schema;
use crate::trace::{generate_trace, MotionModel, TraceSpec};
use crate::HarnessError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const E1_MATRIX_FILE: &str = "e1_matrix.csv";
/// Present only while the output directory holds a failed or partial sweep.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

fn default_apps() -> Vec<String> {
    vec!["grid".into()]
}

fn default_clocks() -> Vec<u32> {
    presets::GPU_CLOCKS_MHZ.to_vec()
}

fn default_networks() -> Vec<ProfileName> {
    vec![ProfileName::Wifi, ProfileName::Lte4g, ProfileName::Early5g]
}

fn default_frames() -> usize {
    300
}

fn default_motion() -> MotionModel {
    MotionModel::SaccadeMix
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP_FRAMES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub modes: Vec<Mode>,
    #[serde(default = "default_apps")]
    pub apps: Vec<String>,
    #[serde(default = "default_clocks")]
    pub gpu_clocks_mhz: Vec<u32>,
    #[serde(default = "default_networks")]
    pub networks: Vec<ProfileName>,
    #[serde(default = "default_motion")]
    pub motion_model: MotionModel,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Pipeline configuration overrides, in the config file format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let empty = [
            ("modes", self.modes.is_empty()),
            ("apps", self.apps.is_empty()),
            ("gpu_clocks_mhz", self.gpu_clocks_mhz.is_empty()),
            ("networks", self.networks.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(HarnessError::Spec(format!("sweep list {name} is empty")));
        }
        if self.frames == 0 {
            return Err(HarnessError::Spec("frames must be positive".into()));
        }
        if self.gpu_clocks_mhz.contains(&0) {
            return Err(HarnessError::Spec("GPU clock must be positive".into()));
        }
        if self.networks.contains(&ProfileName::Custom) {
            return Err(HarnessError::Spec("sweeps take named network profiles".into()));
        }
        for app in &self.apps {
            presets::find(app)?;
        }
        Ok(())
    }

    pub fn base_config(&self) -> Result<PipelineConfig, HarnessError> {
        config_from_value(
            self.pipeline
                .clone()
                .unwrap_or_else(|| Value::Object(Default::default())),
        )
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for app in &self.apps {
            for &gpu_mhz in &self.gpu_clocks_mhz {
                for &network in &self.networks {
                    cells.push(Cell {
                        app: presets::find(app).expect("validated").name.to_string(),
                        gpu_mhz,
                        network,
                    });
                }
            }
        }
        cells
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub app: String,
    pub gpu_mhz: u32,
    pub network: ProfileName,
}

impl Cell {
    pub fn id(&self) -> String {
        format!("{}_{}mhz_{}", self.app, self.gpu_mhz, self.network.as_str())
    }

    pub fn dir(&self) -> PathBuf {
        Path::new("cells").join(self.id())
    }

    pub fn config(&self, base: &PipelineConfig, seed: u64) -> Result<PipelineConfig, HarnessError> {
        let preset = presets::find(&self.app)?;
        let config = preset.config(base).with_gpu_clock_scale(clock_scale(self.gpu_mhz));
        with_network(config, self.network, seed)
    }
}

pub fn frames_file(mode: Mode) -> String {
    format!("{mode}.frames.csv")
}

pub fn summary_file(mode: Mode) -> String {
    format!("{mode}.summary.json")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub schema: String,
    pub cell: Cell,
    pub seed: u64,
    pub summary: TraceSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: String,
    pub cell: Cell,
    /// Paths relative to the output directory.
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub spec: ExperimentSpec,
    pub config: PipelineConfig,
    pub cells: Vec<CellRecord>,
    pub complete: bool,
    pub failures: Vec<String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

/// Opens a CSV writer whose file starts with the schema line.
pub fn csv_writer(path: &Path, schema_name: &str) -> Result<csv::Writer<BufWriter<File>>, HarnessError> {
    let mut out = create(path)?;
    writeln!(out, "{}", schema::schema_line(schema_name)).map_err(|e| HarnessError::io(path, e))?;
    Ok(csv::Writer::from_writer(out))
}

pub fn finish_csv(path: &Path, writer: csv::Writer<BufWriter<File>>) -> Result<(), HarnessError> {
    writer
        .into_inner()
        .map_err(|e| HarnessError::io(path, e.into_error()))?
        .flush()
        .map_err(|e| HarnessError::io(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), HarnessError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::io(path, e))
}

pub fn write_frames(path: &Path, reports: &[FrameReport]) -> Result<(), HarnessError> {
    let mut writer = csv_writer(path, schema::FRAMES)?;
    for report in reports {
        writer.serialize(report).map_err(|e| HarnessError::csv(path, e))?;
    }
    finish_csv(path, writer)
}

pub fn read_frames(path: &Path) -> Result<Vec<FrameReport>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| HarnessError::csv(path, e))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| HarnessError::csv(path, e)))
        .collect()
}

/// Runs every requested mode on one cell's trace; speedups are taken against
/// local-only rendering when it is among the modes.
pub fn run_cell(spec: &ExperimentSpec, base: &PipelineConfig, cell: &Cell) -> Result<Vec<TraceRun>, HarnessError> {
    let config = cell.config(base, spec.seed)?;
    let trace_spec = TraceSpec::synthetic(&cell.app, spec.motion_model, spec.frames, spec.seed);
    let trace = generate_trace(&trace_spec, &config.display)?;
    let mut runs: Vec<TraceRun> = spec
        .modes
        .iter()
        .map(|&mode| run_trace(mode, &config, &trace, spec.warmup))
        .collect::<Result<_, _>>()?;
    if let Some(local) = runs
        .iter()
        .find(|r| r.summary.mode == Mode::LocalOnly)
        .map(|r| r.summary.clone())
    {
        for run in &mut runs {
            run.summary = run.summary.clone().with_baseline(&local);
        }
    }
    Ok(runs)
}

fn write_cell(out: &Path, spec: &ExperimentSpec, cell: &Cell, runs: &[TraceRun]) -> Result<CellRecord, HarnessError> {
    let mut files = Vec::new();
    for run in runs {
        let mode = run.summary.mode;
        let frames = cell.dir().join(frames_file(mode));
        write_frames(&out.join(&frames), &run.reports)?;
        let summary = cell.dir().join(summary_file(mode));
        let doc = SummaryDoc {
            schema: schema::SUMMARY.into(),
            cell: cell.clone(),
            seed: spec.seed,
            summary: run.summary.clone(),
        };
        write_json(&out.join(&summary), &doc)?;
        files.extend([frames, summary]);
    }
    Ok(CellRecord {
        id: cell.id(),
        cell: cell.clone(),
        files,
    })
}

/// Mode whose mean e1 fills the matrix: QVR if run, else DFR.
pub fn matrix_mode(modes: &[Mode]) -> Option<Mode> {
    [Mode::Qvr, Mode::Dfr].into_iter().find(|m| modes.contains(m))
}

fn write_e1_matrix(
    path: &Path,
    spec: &ExperimentSpec,
    mode: Mode,
    e1: &dyn Fn(&Cell) -> Option<f64>,
) -> Result<(), HarnessError> {
    let mut writer = csv_writer(path, schema::E1_MATRIX)?;
    let mut header = vec!["app".to_string(), "gpu_mhz".to_string()];
    header.extend(spec.networks.iter().map(|n| n.as_str().to_string()));
    writer.write_record(&header).map_err(|e| HarnessError::csv(path, e))?;
    for cell_app in spec.cells().chunks(spec.networks.len()) {
        let first = &cell_app[0];
        let mut row = vec![first.app.clone(), first.gpu_mhz.to_string()];
        for cell in cell_app {
            let value = e1(cell).ok_or_else(|| HarnessError::Spec(format!("no {mode} run for {}", cell.id())))?;
            row.push(value.to_string());
        }
        writer.write_record(&row).map_err(|e| HarnessError::csv(path, e))?;
    }
    finish_csv(path, writer)
}

/// Executes the sweep into `out`. Cells run concurrently and write only their
/// own files; the manifest and matrix are written once all cells finish. On any
/// failure the manifest is still written, flagged incomplete, alongside an
/// `INCOMPLETE` marker listing the failures.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path) -> Result<Manifest, HarnessError> {
    spec.validate()?;
    let base = spec.base_config()?;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let marker = out.join(INCOMPLETE_MARKER);
    let cells = spec.cells();
    let results: Vec<Result<(CellRecord, Option<f64>), HarnessError>> = cells
        .par_iter()
        .map(|cell| {
            let runs = run_cell(spec, &base, cell)?;
            let record = write_cell(out, spec, cell, &runs)?;
            let e1 = matrix_mode(&spec.modes)
                .and_then(|m| runs.iter().find(|r| r.summary.mode == m))
                .map(|r| r.summary.mean_e1_deg);
            Ok((record, e1))
        })
        .collect();

    let mut records = Vec::new();
    let mut e1_by_cell = Vec::new();
    let mut failures = Vec::new();
    for (cell, result) in cells.iter().zip(results) {
        match result {
            Ok((record, e1)) => {
                records.push(record);
                e1_by_cell.push((cell.clone(), e1));
            }
            Err(err) => failures.push(format!("{}: {err}", cell.id())),
        }
    }

    if failures.is_empty() {
        if let Some(mode) = matrix_mode(&spec.modes) {
            let lookup = |c: &Cell| e1_by_cell.iter().find(|(k, _)| k == c).and_then(|(_, v)| *v);
            write_e1_matrix(&out.join(E1_MATRIX_FILE), spec, mode, &lookup)?;
        }
    }
    let manifest = Manifest {
        schema: schema::MANIFEST.into(),
        spec: spec.clone(),
        config: base,
        cells: records,
        complete: failures.is_empty(),
        failures: failures.clone(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    if failures.is_empty() {
        if marker.exists() {
            fs::remove_file(&marker).map_err(|e| HarnessError::io(&marker, e))?;
        }
        Ok(manifest)
    } else {
        let table = out.join(E1_MATRIX_FILE);
        if table.exists() {
            fs::remove_file(&table).map_err(|e| HarnessError::io(&table, e))?;
        }
        fs::write(&marker, failures.join("\n") + "\n").map_err(|e| HarnessError::io(&marker, e))?;
        Err(HarnessError::PartialSweep {
            failed: failures.len(),
            total: cells.len(),
            first: failures[0].clone(),
        })
    }
}

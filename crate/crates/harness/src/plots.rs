//! Plot-ready CSVs derived from a finished sweep directory.

use std::path::{Path, PathBuf};

use qvr_core::pipeline::Mode;

use crate::calibration;
use crate::experiment::{
    csv_writer, finish_csv, frames_file, matrix_mode, read_frames, summary_file, Manifest, SummaryDoc, MANIFEST_FILE,
};
use crate::presets::{PresetFamily, PRESETS};
use crate::schema;
use crate::HarnessError;

pub const PLOTS_DIR: &str = "plots";
/// Eccentricities sampled for the local-latency curves, degrees.
pub const LOCAL_LATENCY_E1_RANGE: std::ops::RangeInclusive<u32> = 5..=60;

#[derive(Clone, Debug, PartialEq)]
pub struct PlotFiles {
    pub local_latency: PathBuf,
    pub speedup: PathBuf,
    pub data_volume: PathBuf,
    pub controller: Vec<PathBuf>,
}

fn read_summary(path: &Path) -> Result<SummaryDoc, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::csv(path, e)
}

/// Writes `plots/local_latency.csv` (local latency against e1 per complexity preset),
/// `plots/speedup.csv` (latency and speedup over local-only per cell and mode),
/// `plots/data_volume.csv` (bytes normalized to remote-only), and one
/// `plots/controller_<cell>.csv` per cell with the controller's per-frame series.
pub fn emit_plots_data(dir: &Path) -> Result<PlotFiles, HarnessError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(HarnessError::MissingArtifacts(vec![manifest_path
            .display()
            .to_string()]));
    }
    let manifest = Manifest::load(dir)?;
    let missing: Vec<String> = manifest
        .cells
        .iter()
        .flat_map(|c| &c.files)
        .map(|f| dir.join(f))
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::MissingArtifacts(missing));
    }
    let out = dir.join(PLOTS_DIR);

    let local_latency = out.join("local_latency.csv");
    let mut w = csv_writer(&local_latency, schema::LOCAL_LATENCY)?;
    w.write_record(schema::LOCAL_LATENCY_COLUMNS.iter().map(|(n, _)| *n))
        .map_err(csv_err(&local_latency))?;
    for preset in PRESETS.iter().filter(|p| p.family == PresetFamily::Characterization) {
        for e1 in LOCAL_LATENCY_E1_RANGE {
            let t = calibration::local_latency(preset, &manifest.config, e1 as f64)?;
            w.write_record([preset.name.to_string(), e1.to_string(), t.to_string()])
                .map_err(csv_err(&local_latency))?;
        }
    }
    finish_csv(&local_latency, w)?;

    let speedup = out.join("speedup.csv");
    let data_volume = out.join("data_volume.csv");
    let mut speedup_w = csv_writer(&speedup, schema::SPEEDUP)?;
    let mut volume_w = csv_writer(&data_volume, schema::DATA_VOLUME)?;
    speedup_w
        .write_record(schema::SPEEDUP_COLUMNS.iter().map(|(n, _)| *n))
        .map_err(csv_err(&speedup))?;
    volume_w
        .write_record(schema::DATA_VOLUME_COLUMNS.iter().map(|(n, _)| *n))
        .map_err(csv_err(&data_volume))?;
    let mut controller = Vec::new();
    for record in &manifest.cells {
        let cell_dir = dir.join(record.cell.dir());
        let summaries: Vec<SummaryDoc> = manifest
            .spec
            .modes
            .iter()
            .map(|&m| read_summary(&cell_dir.join(summary_file(m))))
            .collect::<Result<_, _>>()?;
        let find = |mode: Mode| summaries.iter().find(|s| s.summary.mode == mode).map(|s| &s.summary);
        let key = |mode: Mode| {
            [
                record.id.clone(),
                record.cell.app.clone(),
                record.cell.gpu_mhz.to_string(),
                record.cell.network.as_str().to_string(),
                mode.to_string(),
            ]
        };
        if let Some(local) = find(Mode::LocalOnly) {
            for s in &summaries {
                let s = &s.summary;
                let mut row = key(s.mode).to_vec();
                row.push(s.mean_t_e2e_s.to_string());
                row.push((local.mean_t_e2e_s / s.mean_t_e2e_s).to_string());
                speedup_w.write_record(&row).map_err(csv_err(&speedup))?;
            }
        }
        if let Some(remote) = find(Mode::RemoteOnly) {
            for s in &summaries {
                let s = &s.summary;
                let mut row = key(s.mode).to_vec();
                row.push(s.total_bytes.to_string());
                let ratio = if remote.total_bytes > 0 {
                    s.total_bytes as f64 / remote.total_bytes as f64
                } else {
                    0.0
                };
                row.push(ratio.to_string());
                volume_w.write_record(&row).map_err(csv_err(&data_volume))?;
            }
        }
        if let Some(mode) = matrix_mode(&manifest.spec.modes) {
            let path = out.join(format!("controller_{}.csv", record.id));
            let frames = read_frames(&cell_dir.join(frames_file(mode)))?;
            let mut w = csv_writer(&path, schema::CONTROLLER)?;
            w.write_record(schema::CONTROLLER_COLUMNS.iter().map(|(n, _)| *n))
                .map_err(csv_err(&path))?;
            for f in &frames {
                let ratio = f.latency_ratio.map(|r| r.to_string()).unwrap_or_default();
                w.write_record([f.frame_id.to_string(), ratio, f.fps_hz.to_string()])
                    .map_err(csv_err(&path))?;
            }
            finish_csv(&path, w)?;
            controller.push(path);
        }
    }
    finish_csv(&speedup, speedup_w)?;
    finish_csv(&data_volume, volume_w)?;
    Ok(PlotFiles {
        local_latency,
        speedup,
        data_volume,
        controller,
    })
}

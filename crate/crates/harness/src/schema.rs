//! Versioned schemas for every emitted file and the checker behind
//! `validate-schema`.
//!
//! CSV files open with a `# schema: <name>/<version>` line followed by the
//! header row. JSON files carry a top-level `"schema"` key.

use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::HarnessError;

pub const FRAMES: &str = "qvr.frames/1";
pub const E1_MATRIX: &str = "qvr.e1-matrix/1";
pub const LOCAL_LATENCY: &str = "qvr.local-latency/1";
pub const SPEEDUP: &str = "qvr.speedup/1";
pub const DATA_VOLUME: &str = "qvr.data-volume/1";
pub const CONTROLLER: &str = "qvr.controller/1";
pub const SUMMARY: &str = "qvr.summary/1";
pub const MANIFEST: &str = "qvr.manifest/1";
pub const UCA_STATS: &str = "qvr.uca-stats/1";

/// Subdirectory name skipped by the checker.
pub const INPUTS_DIR: &str = "inputs";

pub const JSON_SCHEMAS: [&str; 3] = [SUMMARY, MANIFEST, UCA_STATS];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Text,
    Int,
    Num,
    /// Empty when undefined.
    OptNum,
    Bool,
}

use Column::*;

pub const FRAME_COLUMNS: &[(&str, Column)] = &[
    ("frame_id", Int),
    ("mode", Text),
    ("e1_deg", Num),
    ("e2_star_deg", Num),
    ("motion_code", Int),
    ("delta_deg", Int),
    ("t_sensor_s", Num),
    ("t_cl_ls_s", Num),
    ("t_local_s", Num),
    ("t_remote_render_s", Num),
    ("t_transmit_s", Num),
    ("t_remote_path_s", Num),
    ("t_remote_exposed_s", Num),
    ("t_uca_s", Num),
    ("t_compose_s", Num),
    ("t_display_s", Num),
    ("t_e2e_s", Num),
    ("t_gpu_s", Num),
    ("t_network_s", Num),
    ("fps_hz", Num),
    ("bytes_tx", Int),
    ("latency_ratio", OptNum),
    ("balanced", Bool),
    ("static_mispredict", Bool),
];

pub const LOCAL_LATENCY_COLUMNS: &[(&str, Column)] = &[("preset", Text), ("e1_deg", Num), ("t_local_s", Num)];

const CELL_COLUMNS: [(&str, Column); 5] = [
    ("cell", Text),
    ("app", Text),
    ("gpu_mhz", Int),
    ("network", Text),
    ("mode", Text),
];

pub const SPEEDUP_COLUMNS: &[(&str, Column)] = &[
    CELL_COLUMNS[0],
    CELL_COLUMNS[1],
    CELL_COLUMNS[2],
    CELL_COLUMNS[3],
    CELL_COLUMNS[4],
    ("mean_t_e2e_s", Num),
    ("speedup_vs_local", Num),
];

pub const DATA_VOLUME_COLUMNS: &[(&str, Column)] = &[
    CELL_COLUMNS[0],
    CELL_COLUMNS[1],
    CELL_COLUMNS[2],
    CELL_COLUMNS[3],
    CELL_COLUMNS[4],
    ("total_bytes", Int),
    ("bytes_vs_remote", Num),
];

pub const CONTROLLER_COLUMNS: &[(&str, Column)] = &[("frame_id", Int), ("latency_ratio", OptNum), ("fps", Num)];

/// The mean-e1 matrix: two key columns, then one numeric column per network.
pub const E1_MATRIX_KEY_COLUMNS: &[(&str, Column)] = &[("app", Text), ("gpu_mhz", Int)];

pub fn schema_line(schema: &str) -> String {
    format!("# schema: {schema}")
}

fn columns_for(schema: &str, header: &[String]) -> Option<Vec<Column>> {
    let fixed = match schema {
        FRAMES => FRAME_COLUMNS,
        LOCAL_LATENCY => LOCAL_LATENCY_COLUMNS,
        SPEEDUP => SPEEDUP_COLUMNS,
        DATA_VOLUME => DATA_VOLUME_COLUMNS,
        CONTROLLER => CONTROLLER_COLUMNS,
        E1_MATRIX => {
            let keys = E1_MATRIX_KEY_COLUMNS;
            let ok = header.len() > keys.len() && keys.iter().zip(header).all(|((name, _), h)| name == h);
            return ok.then(|| {
                keys.iter()
                    .map(|(_, c)| *c)
                    .chain(std::iter::repeat_n(Num, header.len() - keys.len()))
                    .collect()
            });
        }
        _ => return None,
    };
    let names_match = fixed.len() == header.len() && fixed.iter().zip(header).all(|((name, _), h)| name == h);
    names_match.then(|| fixed.iter().map(|(_, c)| *c).collect())
}

fn check_value(kind: Column, value: &str) -> bool {
    match kind {
        Text => !value.is_empty(),
        Int => value.parse::<i64>().is_ok(),
        Num => value.parse::<f64>().is_ok_and(|v| !v.is_nan()),
        OptNum => value.is_empty() || value.parse::<f64>().is_ok_and(|v| !v.is_nan()),
        Bool => matches!(value, "true" | "false"),
    }
}

fn check_csv(path: &Path) -> Result<(), String> {
    let file = File::open(path).map_err(|e| e.to_string())?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| e.to_string())?;
    let schema = first
        .trim_end()
        .strip_prefix("# schema: ")
        .ok_or("missing schema line")?
        .to_string();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| e.to_string())?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let columns = columns_for(&schema, &header)
        .ok_or_else(|| format!("header does not match schema {schema:?}: {}", header.join(",")))?;
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        for ((value, kind), name) in record.iter().zip(&columns).zip(&header) {
            if !check_value(*kind, value) {
                return Err(format!("line {line}: column {name} has invalid value {value:?}"));
            }
        }
    }
    Ok(())
}

fn check_json(path: &Path) -> Result<(), String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let value: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let schema = value
        .get("schema")
        .and_then(Value::as_str)
        .ok_or("missing schema key")?;
    if !JSON_SCHEMAS.contains(&schema) {
        return Err(format!("unknown schema {schema:?}"));
    }
    Ok(())
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::io(dir, e))?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            // Inputs staged for a run are user data, not emitted artifacts.
            if path.file_name().is_some_and(|n| n == INPUTS_DIR) {
                continue;
            }
            collect(&path, out)?;
        } else if matches!(path.extension().and_then(|e| e.to_str()), Some("csv" | "json")) {
            out.push(path);
        }
    }
    Ok(())
}

/// Checks every CSV and JSON file under `dir`; returns how many were checked.
/// Controller-table sidecars (`*.bin.json`) are not versioned artifacts and are skipped.
pub fn validate_dir(dir: &Path) -> Result<usize, HarnessError> {
    let mut files = Vec::new();
    collect(dir, &mut files)?;
    let mut problems = Vec::new();
    let mut checked = 0;
    for path in &files {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let result = if name.ends_with(".bin.json") {
            continue;
        } else if name.ends_with(".csv") {
            check_csv(path)
        } else {
            check_json(path)
        };
        checked += 1;
        if let Err(msg) = result {
            problems.push(format!("{}: {msg}", path.display()));
        }
    }
    if problems.is_empty() {
        Ok(checked)
    } else {
        Err(HarnessError::Schema(problems.join("; ")))
    }
}

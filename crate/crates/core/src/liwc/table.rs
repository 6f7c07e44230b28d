//! Motion-to-eccentricity mapping table: latency gradient offsets in half precision.

use std::fs;
use std::path::{Path, PathBuf};

use half::f16;
use serde::{Deserialize, Serialize};

use super::codec::{MotionIndex, MotionThresholds, MOTION_CODES};
use crate::error::{Error, Result};

pub const TABLE_DEPTH: usize = 1 << 15;
pub const TAG_COUNT: usize = 11;
pub const MAX_DELTA_DEG: i8 = 5;

const TABLE_FORMAT: &str = "f16-le";

/// Integer change to the fovea eccentricity, in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub struct DeltaTag(i8);

impl DeltaTag {
    pub const ZERO: Self = Self(0);

    /// Every tag in ascending order.
    pub const ALL: [Self; TAG_COUNT] = {
        let mut tags = [Self(0); TAG_COUNT];
        let mut i = 0;
        while i < TAG_COUNT {
            tags[i] = Self(i as i8 - MAX_DELTA_DEG);
            i += 1;
        }
        tags
    };

    pub fn new(delta_deg: i8) -> Result<Self> {
        Self::try_from(delta_deg)
    }

    pub fn delta_deg(self) -> i8 {
        self.0
    }

    /// Column within a table row.
    pub fn column(self) -> usize {
        (self.0 + MAX_DELTA_DEG) as usize
    }
}

impl TryFrom<i8> for DeltaTag {
    type Error = Error;

    fn try_from(delta_deg: i8) -> Result<Self> {
        if delta_deg.abs() <= MAX_DELTA_DEG {
            Ok(Self(delta_deg))
        } else {
            Err(Error::Config(format!("delta tag {delta_deg} outside [-5, 5]")))
        }
    }
}

impl From<DeltaTag> for i8 {
    fn from(tag: DeltaTag) -> i8 {
        tag.0
    }
}

/// Row-major: one row of `TAG_COUNT` entries per motion code, rows padded out
/// to `TABLE_DEPTH` slots.
#[derive(Clone, Debug, PartialEq)]
pub struct MappingTable {
    entries: Vec<f16>,
    visit_counts: Vec<u32>,
}

impl Default for MappingTable {
    fn default() -> Self {
        Self::zeroed()
    }
}

fn slot(idx: MotionIndex, tag: DeltaTag) -> usize {
    idx.code() as usize * TAG_COUNT + tag.column()
}

impl MappingTable {
    pub fn zeroed() -> Self {
        Self {
            entries: vec![f16::ZERO; TABLE_DEPTH],
            visit_counts: vec![0; TABLE_DEPTH],
        }
    }

    /// Every row starts at `slope_s_per_deg * delta`: raising the fovea grows the
    /// local latency relative to the remote one by a fixed amount per degree.
    pub fn linear_prior(slope_s_per_deg: f64) -> Self {
        let mut table = Self::zeroed();
        for code in 0..MOTION_CODES {
            let idx = MotionIndex::new(code as u16).expect("code in range");
            for tag in DeltaTag::ALL {
                table.entries[slot(idx, tag)] = f16::from_f64(slope_s_per_deg * tag.0 as f64);
            }
        }
        table
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, idx: MotionIndex, tag: DeltaTag) -> f64 {
        self.entries[slot(idx, tag)].to_f64()
    }

    /// Stores `value` rounded to the nearest half-precision number.
    pub fn set(&mut self, idx: MotionIndex, tag: DeltaTag, value: f64) {
        self.entries[slot(idx, tag)] = f16::from_f64(value);
    }

    pub fn visits(&self, idx: MotionIndex, tag: DeltaTag) -> u32 {
        self.visit_counts[slot(idx, tag)]
    }

    pub(crate) fn record_visit(&mut self, idx: MotionIndex, tag: DeltaTag) {
        let count = &mut self.visit_counts[slot(idx, tag)];
        *count = count.saturating_add(1);
    }

    pub fn row(&self, idx: MotionIndex) -> impl Iterator<Item = (DeltaTag, f64)> + '_ {
        DeltaTag::ALL.into_iter().map(move |tag| (tag, self.get(idx, tag)))
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.entries.iter().flat_map(|e| e.to_le_bytes()).collect()
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != TABLE_DEPTH * 2 {
            return Err(Error::TableFormat(format!(
                "expected {} bytes, found {}",
                TABLE_DEPTH * 2,
                bytes.len()
            )));
        }
        let entries: Vec<f16> = bytes
            .chunks_exact(2)
            .map(|pair| f16::from_le_bytes([pair[0], pair[1]]))
            .collect();
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::TableFormat("non-finite entry".into()));
        }
        Ok(Self {
            entries,
            visit_counts: vec![0; TABLE_DEPTH],
        })
    }

    /// Writes the flat entry file and a JSON sidecar next to it; returns the sidecar path.
    pub fn save(&self, path: &Path, alpha: f64, thresholds: &MotionThresholds) -> Result<PathBuf> {
        fs::write(path, self.to_le_bytes())?;
        let sidecar = TableSidecar {
            format: TABLE_FORMAT.into(),
            depth: self.depth(),
            motion_codes: MOTION_CODES,
            tags: DeltaTag::ALL.iter().map(|t| t.0).collect(),
            alpha,
            thresholds: *thresholds,
        };
        let sidecar_path = sidecar_path(path);
        fs::write(&sidecar_path, serde_json::to_vec_pretty(&sidecar)?)?;
        Ok(sidecar_path)
    }

    pub fn load(path: &Path) -> Result<(Self, TableSidecar)> {
        let sidecar: TableSidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
        if sidecar.format != TABLE_FORMAT || sidecar.depth != TABLE_DEPTH {
            return Err(Error::TableFormat(format!(
                "unsupported layout {} with depth {}",
                sidecar.format, sidecar.depth
            )));
        }
        let table = Self::from_le_bytes(&fs::read(path)?)?;
        Ok((table, sidecar))
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSidecar {
    pub format: String,
    pub depth: usize,
    pub motion_codes: usize,
    pub tags: Vec<i8>,
    pub alpha: f64,
    pub thresholds: MotionThresholds,
}

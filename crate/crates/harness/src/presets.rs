//! Named workload presets: triangle load, display resolution, and the range of
//! the interactive fraction the static baseline renders locally.

use qvr_core::foveation::DisplayConfig;
use qvr_core::pipeline::PipelineConfig;

use crate::HarnessError;

/// Scene work falls off as `(r + core)^-power` with angular distance from the hotspot.
pub const DENSITY_CORE_DEG: f64 = 0.5;
pub const DENSITY_POWER: f64 = 1.3;

/// Local GPU clocks swept in experiments; rates scale linearly from 500 MHz.
pub const GPU_CLOCKS_MHZ: [u32; 3] = [500, 400, 300];
pub const REFERENCE_CLOCK_MHZ: u32 = 500;

pub fn clock_scale(mhz: u32) -> f64 {
    mhz as f64 / REFERENCE_CLOCK_MHZ as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetFamily {
    /// Static-collaboration workload characterization apps.
    Characterization,
    /// Game benchmarks with published best-eccentricity references.
    Benchmark,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppPreset {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub family: PresetFamily,
    pub resolution: (u32, u32),
    pub triangles: u64,
    pub f_range: (f64, f64),
    /// Measured compressed back-buffer size per eye, KiB.
    pub back_size_kib: Option<f64>,
    /// Published best e1 in degrees, rows 500/400/300 MHz, columns Wi-Fi, 4G LTE, early 5G.
    pub reference_e1: Option<[[f64; 3]; 3]>,
}

const HIGH: (u32, u32) = (1920, 2160);
const LOW: (u32, u32) = (1280, 1600);

pub const PRESETS: &[AppPreset] = &[
    AppPreset {
        name: "foveated3d",
        aliases: &[],
        family: PresetFamily::Characterization,
        resolution: HIGH,
        triangles: 231_000,
        f_range: (0.16, 0.52),
        back_size_kib: Some(646.0),
        reference_e1: None,
    },
    AppPreset {
        name: "viking",
        aliases: &[],
        family: PresetFamily::Characterization,
        resolution: HIGH,
        triangles: 2_800_000,
        f_range: (0.10, 0.13),
        back_size_kib: Some(530.0),
        reference_e1: None,
    },
    AppPreset {
        name: "nature",
        aliases: &[],
        family: PresetFamily::Characterization,
        resolution: HIGH,
        triangles: 1_400_000,
        f_range: (0.10, 0.24),
        back_size_kib: Some(482.0),
        reference_e1: None,
    },
    AppPreset {
        name: "sponza",
        aliases: &[],
        family: PresetFamily::Characterization,
        resolution: HIGH,
        triangles: 282_000,
        f_range: (0.001, 0.20),
        back_size_kib: Some(537.0),
        reference_e1: None,
    },
    AppPreset {
        name: "san-miguel",
        aliases: &[],
        family: PresetFamily::Characterization,
        resolution: HIGH,
        triangles: 4_200_000,
        f_range: (0.06, 0.15),
        back_size_kib: Some(572.0),
        reference_e1: None,
    },
    AppPreset {
        name: "doom3-h",
        aliases: &["d3h"],
        family: PresetFamily::Benchmark,
        resolution: HIGH,
        triangles: 771_000,
        f_range: (0.10, 0.30),
        back_size_kib: None,
        reference_e1: Some([[46.4, 74.5, 22.4], [34.5, 64.3, 15.3], [27.5, 43.2, 13.1]]),
    },
    AppPreset {
        name: "doom3-l",
        aliases: &["d3l"],
        family: PresetFamily::Benchmark,
        resolution: LOW,
        triangles: 173_000,
        f_range: (0.10, 0.30),
        back_size_kib: None,
        reference_e1: Some([[85.3, 90.0, 45.2], [77.3, 90.0, 30.2], [65.4, 90.0, 27.1]]),
    },
    AppPreset {
        name: "hl2-h",
        aliases: &["h2h"],
        family: PresetFamily::Benchmark,
        resolution: HIGH,
        triangles: 1_822_000,
        f_range: (0.10, 0.25),
        back_size_kib: None,
        reference_e1: Some([[27.4, 42.2, 11.3], [23.1, 34.5, 7.8], [16.4, 30.2, 6.9]]),
    },
    AppPreset {
        name: "hl2-l",
        aliases: &["h2l"],
        family: PresetFamily::Benchmark,
        resolution: LOW,
        triangles: 1_436_000,
        f_range: (0.10, 0.25),
        back_size_kib: None,
        reference_e1: Some([[33.2, 44.3, 14.3], [26.1, 39.2, 11.5], [24.5, 35.1, 8.3]]),
    },
    AppPreset {
        name: "grid",
        aliases: &["gd"],
        family: PresetFamily::Benchmark,
        resolution: HIGH,
        triangles: 5_000_000,
        f_range: (0.05, 0.15),
        back_size_kib: None,
        reference_e1: Some([[9.9, 22.1, 5.0], [7.8, 15.5, 5.0], [6.5, 12.4, 5.0]]),
    },
    AppPreset {
        name: "ut3",
        aliases: &["nfs"],
        family: PresetFamily::Benchmark,
        resolution: HIGH,
        triangles: 2_314_000,
        f_range: (0.08, 0.20),
        back_size_kib: None,
        reference_e1: Some([[27.2, 39.1, 10.9], [22.5, 32.4, 7.4], [14.3, 27.2, 6.1]]),
    },
    AppPreset {
        name: "wolf",
        aliases: &["wf"],
        family: PresetFamily::Benchmark,
        resolution: HIGH,
        triangles: 3_618_000,
        f_range: (0.06, 0.18),
        back_size_kib: None,
        reference_e1: Some([[15.3, 25.7, 8.6], [13.2, 18.5, 6.1], [11.3, 16.4, 5.0]]),
    },
];

pub fn find(name: &str) -> Result<&'static AppPreset, HarnessError> {
    let key = name.to_ascii_lowercase();
    PRESETS
        .iter()
        .find(|p| p.name == key || p.aliases.contains(&key.as_str()))
        .ok_or_else(|| HarnessError::UnknownPreset(name.to_string()))
}

pub fn benchmarks() -> impl Iterator<Item = &'static AppPreset> {
    PRESETS.iter().filter(|p| p.family == PresetFamily::Benchmark)
}

impl AppPreset {
    /// `base` resized to this preset's resolution.
    pub fn display(&self, base: &DisplayConfig) -> DisplayConfig {
        DisplayConfig {
            width_px: self.resolution.0,
            height_px: self.resolution.1,
            ..*base
        }
    }

    /// `base` moved onto this preset's display.
    pub fn config(&self, base: &PipelineConfig) -> PipelineConfig {
        base.clone().with_display(self.display(&base.display))
    }
}

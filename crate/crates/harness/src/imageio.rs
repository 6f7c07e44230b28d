//! Image I/O for the `uca` command: layer placement, PNG/PPM loading, sample
//! layer synthesis, and the composed/reference/diff outputs.

use std::path::{Path, PathBuf};

use image::RgbImage;
use qvr_core::foveation::{layer_geometry, DisplayConfig, EccentricityState, LayerGeometry, MarParams};
use qvr_core::uca::{
    sequential_reference, uca_latency, unified_uca, LayerImage, LayerKind, ReprojectionMap, Rgb, TilePlan,
    UcaCostModel, DEFAULT_BLEND_BAND_PX,
};
use serde::{Deserialize, Serialize};

use crate::experiment::write_json;
use crate::schema;
use crate::HarnessError;

fn default_band() -> u32 {
    DEFAULT_BLEND_BAND_PX
}

/// Where the eye looks and how the head moved since the layers were rendered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcaPose {
    #[serde(default)]
    pub display: DisplayConfig,
    pub e1_deg: f64,
    /// Fovea centre in display pixels; the display centre when absent.
    #[serde(default)]
    pub gaze_px: Option<(f64, f64)>,
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
    #[serde(default)]
    pub lens_k1: f64,
    #[serde(default = "default_band")]
    pub blend_band_px: u32,
}

impl UcaPose {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn geometry(&self) -> Result<LayerGeometry, HarnessError> {
        self.display.validate()?;
        let mar = MarParams::for_display(&self.display);
        let center = self.gaze_px.unwrap_or_else(|| self.display.center());
        let ecc = EccentricityState::select(self.e1_deg, center, &mar, &self.display)?;
        Ok(layer_geometry(&ecc, &mar, &self.display))
    }

    pub fn reprojection(&self) -> ReprojectionMap {
        ReprojectionMap {
            yaw_rad: self.yaw_deg.to_radians(),
            pitch_rad: self.pitch_deg.to_radians(),
            roll_rad: self.roll_deg.to_radians(),
            lens_k1: self.lens_k1,
            focal_px: ReprojectionMap::focal_for_fov(self.display.width_px, self.display.horizontal_fov_deg),
        }
    }
}

/// Size, scale and display origin of one layer's pixel grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerFrame {
    pub kind: LayerKind,
    pub width: u32,
    pub height: u32,
    pub scale: f64,
    pub origin: (f64, f64),
}

/// Layer grids for a geometry: the fovea at full resolution around its disc,
/// the middle layer around the middle ring (the whole display when there is
/// no outer layer), and the outer layer over the whole display. Each grid
/// reaches one pixel past the blend band.
pub fn layer_frames(geom: &LayerGeometry, band_px: u32) -> Vec<LayerFrame> {
    let (w, h) = (geom.width_px as f64, geom.height_px as f64);
    let (cx, cy) = geom.center_px;
    let frame = |kind, radius: f64, scale: f64| {
        let reach = radius + band_px as f64 + scale;
        let (x0, y0) = ((cx - reach).floor().max(0.0), (cy - reach).floor().max(0.0));
        let (x1, y1) = ((cx + reach).ceil().min(w - 1.0), (cy + reach).ceil().min(h - 1.0));
        LayerFrame {
            kind,
            width: ((x1 - x0) / scale).ceil() as u32 + 1,
            height: ((y1 - y0) / scale).ceil() as u32 + 1,
            scale,
            origin: (x0, y0),
        }
    };
    let whole = w.hypot(h);
    let mut frames = vec![frame(LayerKind::Fovea, geom.fovea_radius_px, 1.0)];
    if geom.has_outer_layer() {
        frames.push(frame(LayerKind::Middle, geom.middle_outer_radius_px, geom.s1));
        frames.push(frame(LayerKind::Outer, whole, geom.s2));
    } else {
        frames.push(frame(LayerKind::Middle, whole, geom.s1));
    }
    frames
}

/// A smooth procedural scene in display coordinates.
fn sample_scene((x, y): (f64, f64), (w, h): (f64, f64)) -> Rgb {
    let (u, v) = (x / w, y / h);
    let tau = std::f64::consts::TAU;
    [
        0.5 + 0.4 * (tau * 3.0 * u).sin() * (tau * 2.0 * v).cos(),
        0.5 + 0.4 * (tau * (u + v) * 2.5).cos(),
        0.5 + 0.4 * (tau * 4.0 * v + 1.0).sin(),
    ]
    .map(|c| c as f32)
}

/// Renders the procedural scene into each layer's grid.
pub fn sample_layers(frames: &[LayerFrame], display: (u32, u32)) -> Result<Vec<LayerImage>, HarnessError> {
    let size = (display.0 as f64, display.1 as f64);
    frames
        .iter()
        .map(|f| {
            let pixels = (0..f.height)
                .flat_map(|v| (0..f.width).map(move |u| (u, v)))
                .map(|(u, v)| sample_scene((f.origin.0 + u as f64 * f.scale, f.origin.1 + v as f64 * f.scale), size))
                .collect();
            Ok(LayerImage::new(f.width, f.height, pixels, f.scale, f.origin, f.kind)?)
        })
        .collect()
}

fn image_err(path: &Path, message: impl ToString) -> HarnessError {
    HarnessError::Image {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Loads a PNG or PPM into linear [0, 1] floats.
pub fn load_rgb(path: &Path) -> Result<(u32, u32, Vec<Rgb>), HarnessError> {
    let img = image::open(path).map_err(|e| image_err(path, e))?.to_rgb32f();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0.map(|c| c.clamp(0.0, 1.0))).collect();
    Ok((w, h, pixels))
}

pub fn save_rgb(path: &Path, img: &LayerImage) -> Result<(), HarnessError> {
    let bytes = RgbImage::from_fn(img.width, img.height, |x, y| {
        image::Rgb(img.pixel(x, y).map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
    });
    bytes.save(path).map_err(|e| image_err(path, e))
}

/// Loads layers in the order of `frames`, checking each against its expected grid.
pub fn load_layers(paths: &[PathBuf], frames: &[LayerFrame]) -> Result<Vec<LayerImage>, HarnessError> {
    if paths.len() != frames.len() {
        return Err(HarnessError::Spec(format!(
            "this pose needs {} layers ({}), got {}",
            frames.len(),
            frames
                .iter()
                .map(|f| format!("{:?}", f.kind).to_lowercase())
                .collect::<Vec<_>>()
                .join(", "),
            paths.len()
        )));
    }
    paths
        .iter()
        .zip(frames)
        .map(|(path, f)| {
            let (w, h, pixels) = load_rgb(path)?;
            if (w, h) != (f.width, f.height) {
                return Err(image_err(
                    path,
                    format!("{:?} layer must be {}x{}, found {w}x{h}", f.kind, f.width, f.height),
                ));
            }
            Ok(LayerImage::new(w, h, pixels, f.scale, f.origin, f.kind)?)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcaStats {
    pub schema: String,
    pub width: u32,
    pub height: u32,
    pub tiles: usize,
    pub border_tiles: usize,
    pub max_abs_diff: f32,
    pub mean_abs_diff: f64,
    pub uca_latency_s: f64,
}

/// Scales absolute differences so small errors stay visible.
pub const DIFF_GAIN: f32 = 16.0;

/// Runs the unified pass and the sequential reference, writing `composed.png`,
/// `reference.png`, `diff.png` and `stats.json` into `out`.
pub fn run_uca(layers: &[LayerImage], pose: &UcaPose, out: &Path) -> Result<UcaStats, HarnessError> {
    let geom = pose.geometry()?;
    let map = pose.reprojection();
    let plan = TilePlan::for_frame(&geom, pose.blend_band_px, &map);
    let composed = unified_uca(layers, &geom, &map, pose.blend_band_px, &plan)?;
    let reference = sequential_reference(layers, &geom, &map, pose.blend_band_px)?;
    let diffs: Vec<Rgb> = composed
        .pixels()
        .iter()
        .zip(reference.pixels())
        .map(|(a, b)| [0, 1, 2].map(|c| (a[c] - b[c]).abs()))
        .collect();
    let mean_abs_diff = diffs.iter().flatten().map(|&d| d as f64).sum::<f64>() / (diffs.len() * 3) as f64;
    let diff_img = LayerImage::display(
        geom.width_px,
        geom.height_px,
        diffs.iter().map(|d| d.map(|c| (c * DIFF_GAIN).min(1.0))).collect(),
    )?;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    save_rgb(&out.join("composed.png"), &composed)?;
    save_rgb(&out.join("reference.png"), &reference)?;
    save_rgb(&out.join("diff.png"), &diff_img)?;
    let stats = UcaStats {
        schema: schema::UCA_STATS.into(),
        width: geom.width_px,
        height: geom.height_px,
        tiles: plan.tiles.len(),
        border_tiles: plan.border_tiles(),
        max_abs_diff: composed.max_abs_diff(&reference),
        mean_abs_diff,
        uca_latency_s: uca_latency(&plan, &UcaCostModel::default()),
    };
    write_json(&out.join("stats.json"), &stats)?;
    Ok(stats)
}

/// Writes the procedural sample layers and a pose file for them into `dir`.
pub fn write_sample_inputs(dir: &Path, pose: &UcaPose) -> Result<Vec<PathBuf>, HarnessError> {
    let geom = pose.geometry()?;
    let frames = layer_frames(&geom, pose.blend_band_px);
    let layers = sample_layers(&frames, (geom.width_px, geom.height_px))?;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut paths = Vec::new();
    for layer in &layers {
        let path = dir.join(format!("{:?}.png", layer.kind).to_lowercase());
        save_rgb(&path, layer)?;
        paths.push(path);
    }
    write_json(&dir.join("pose.json"), pose)?;
    Ok(paths)
}

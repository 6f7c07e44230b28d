//! Foveated layer composition and timewarp reprojection.
//!
//! The reference path composes the layers into a display-resolution frame and
//! then reprojects it. The unified path in [`unified_uca`] reorders the two
//! filters so each output pixel is produced by a single gather over the layers.

mod unified;

use serde::{Deserialize, Serialize};

pub use unified::{tile_count, uca_latency, unified_uca, Tile, TileKind, TilePlan, UcaCostModel, TILE_SIZE};

use crate::error::{Error, Result};
use crate::foveation::LayerGeometry;

pub type Rgb = [f32; 3];

pub const BLACK: Rgb = [0.0; 3];
pub const DEFAULT_BLEND_BAND_PX: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Fovea,
    Middle,
    Outer,
    /// Display-resolution output of composition or reprojection.
    Composite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerImage {
    pub width: u32,
    pub height: u32,
    pixels: Vec<Rgb>,
    /// Display pixels per layer pixel along each axis.
    pub scale: f64,
    /// Display position of layer pixel (0, 0).
    pub origin: (f64, f64),
    pub kind: LayerKind,
}

impl LayerImage {
    pub fn new(
        width: u32,
        height: u32,
        pixels: Vec<Rgb>,
        scale: f64,
        origin: (f64, f64),
        kind: LayerKind,
    ) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize {
            return Err(Error::Config(format!(
                "{width}x{height} layer given {} pixels",
                pixels.len()
            )));
        }
        if !(scale >= 1.0 && scale.is_finite()) {
            return Err(Error::Config(format!("layer scale {scale} below 1")));
        }
        if pixels.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Config("pixel values must lie in [0, 1]".into()));
        }
        Ok(Self {
            width,
            height,
            pixels,
            scale,
            origin,
            kind,
        })
    }

    /// Display-resolution image anchored at the display origin.
    pub fn display(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        Self::new(width, height, pixels, 1.0, (0.0, 0.0), LayerKind::Composite)
    }

    pub fn filled(
        width: u32,
        height: u32,
        color: Rgb,
        scale: f64,
        origin: (f64, f64),
        kind: LayerKind,
    ) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![color; width as usize * height as usize],
            scale,
            origin,
            kind,
        )
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn to_layer_coords(&self, (x, y): (f64, f64)) -> (f64, f64) {
        ((x - self.origin.0) / self.scale, (y - self.origin.1) / self.scale)
    }

    /// Whether the display point falls within this layer's pixel footprint.
    pub fn covers(&self, p: (f64, f64)) -> bool {
        let (u, v) = self.to_layer_coords(p);
        let eps = 1e-9;
        u >= -0.5 - eps && u <= self.width as f64 - 0.5 + eps && v >= -0.5 - eps && v <= self.height as f64 - 0.5 + eps
    }

    /// Bilinear sample at a display-space pixel position.
    pub fn sample_display(&self, p: (f64, f64)) -> Rgb {
        let (u, v) = self.to_layer_coords(p);
        bilinear_sample(self, u, v)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f32 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
            .fold(0.0, f32::max)
    }
}

/// Four clamped bilinear taps `(x, y, weight)` around a continuous pixel position.
pub fn bilinear_taps(width: u32, height: u32, x: f64, y: f64) -> [(u32, u32, f32); 4] {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = (x.floor() as u32).min(width - 1);
    let y0 = (y.floor() as u32).min(height - 1);
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = (x - x0 as f64) as f32;
    let fy = (y - y0 as f64) as f32;
    [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x1, y0, fx * (1.0 - fy)),
        (x0, y1, (1.0 - fx) * fy),
        (x1, y1, fx * fy),
    ]
}

fn weighted(acc: &mut Rgb, c: Rgb, w: f32) {
    for k in 0..3 {
        acc[k] += w * c[k];
    }
}

fn clamp_unit(c: Rgb) -> Rgb {
    c.map(|v| v.clamp(0.0, 1.0))
}

pub fn bilinear_sample(img: &LayerImage, x: f64, y: f64) -> Rgb {
    let mut out = BLACK;
    for (tx, ty, w) in bilinear_taps(img.width, img.height, x, y) {
        weighted(&mut out, img.pixel(tx, ty), w);
    }
    clamp_unit(out)
}

/// Which layers contribute at a display position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Blend {
    Single(LayerKind),
    Pair(LayerKind, LayerKind),
}

impl Blend {
    pub fn kinds(self) -> impl Iterator<Item = LayerKind> {
        let (a, b) = match self {
            Blend::Single(k) => (k, None),
            Blend::Pair(a, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }
}

/// Radius test against pixel centres, for pixel-index coordinates.
fn radius_of(geom: &LayerGeometry, (x, y): (f64, f64)) -> f64 {
    (x + 0.5 - geom.center_px.0).hypot(y + 0.5 - geom.center_px.1)
}

pub fn owner_at(geom: &LayerGeometry, p: (f64, f64)) -> LayerKind {
    let d = radius_of(geom, p);
    if d < geom.fovea_radius_px {
        LayerKind::Fovea
    } else if d < geom.middle_outer_radius_px {
        LayerKind::Middle
    } else {
        LayerKind::Outer
    }
}

pub fn blend_at(geom: &LayerGeometry, band_px: u32, p: (f64, f64)) -> Blend {
    let band = band_px as f64;
    let d = radius_of(geom, p);
    if band > 0.0 {
        if (d - geom.fovea_radius_px).abs() < band {
            return Blend::Pair(LayerKind::Fovea, LayerKind::Middle);
        }
        if geom.has_outer_layer() && (d - geom.middle_outer_radius_px).abs() < band {
            return Blend::Pair(LayerKind::Middle, LayerKind::Outer);
        }
    }
    Blend::Single(owner_at(geom, p))
}

/// Layers indexed by kind.
pub(crate) struct LayerSet<'a> {
    layers: [Option<&'a LayerImage>; 3],
}

impl<'a> LayerSet<'a> {
    pub(crate) fn new(layers: &'a [LayerImage]) -> Result<Self> {
        let mut set = [None; 3];
        for layer in layers {
            let slot = match layer.kind {
                LayerKind::Fovea => 0,
                LayerKind::Middle => 1,
                LayerKind::Outer => 2,
                LayerKind::Composite => return Err(Error::Config("composite image passed as a layer".into())),
            };
            if set[slot].replace(layer).is_some() {
                return Err(Error::Config(format!("duplicate {:?} layer", layer.kind)));
            }
        }
        Ok(Self { layers: set })
    }

    pub(crate) fn get(&self, kind: LayerKind) -> Option<&'a LayerImage> {
        match kind {
            LayerKind::Fovea => self.layers[0],
            LayerKind::Middle => self.layers[1],
            LayerKind::Outer => self.layers[2],
            LayerKind::Composite => None,
        }
    }

    /// Average of the blend's layers at a display pixel position.
    pub(crate) fn blended(&self, blend: Blend, p: (f64, f64)) -> Rgb {
        let mut acc = BLACK;
        let mut count = 0.0f32;
        for kind in blend.kinds() {
            if let Some(layer) = self.get(kind) {
                weighted(&mut acc, layer.sample_display(p), 1.0);
                count += 1.0;
            }
        }
        acc.map(|v| v / count.max(1.0))
    }

    /// Every display pixel must be covered by each layer its blend reads.
    pub(crate) fn check_coverage(&self, geom: &LayerGeometry, band_px: u32) -> Result<()> {
        for y in 0..geom.height_px {
            for x in 0..geom.width_px {
                let p = (x as f64, y as f64);
                let covered = blend_at(geom, band_px, p)
                    .kinds()
                    .all(|k| self.get(k).is_some_and(|layer| layer.covers(p)));
                if !covered {
                    return Err(Error::UncoveredPixel { x, y });
                }
            }
        }
        Ok(())
    }
}

pub fn compose_foveated(layers: &[LayerImage], geom: &LayerGeometry, blend_band_px: u32) -> Result<LayerImage> {
    let set = LayerSet::new(layers)?;
    set.check_coverage(geom, blend_band_px)?;
    let (w, h) = (geom.width_px, geom.height_px);
    let pixels = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x as f64, y as f64)))
        .map(|p| clamp_unit(set.blended(blend_at(geom, blend_band_px, p), p)))
        .collect();
    LayerImage::display(w, h, pixels)
}

/// Rotation-only timewarp with single-coefficient radial lens distortion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReprojectionMap {
    pub yaw_rad: f64,
    pub pitch_rad: f64,
    pub roll_rad: f64,
    pub lens_k1: f64,
    /// Pinhole focal length in pixels.
    pub focal_px: f64,
}

impl ReprojectionMap {
    pub fn identity(focal_px: f64) -> Self {
        Self {
            yaw_rad: 0.0,
            pitch_rad: 0.0,
            roll_rad: 0.0,
            lens_k1: 0.0,
            focal_px,
        }
    }

    /// Focal length giving `horizontal_fov_deg` across `width_px`.
    pub fn focal_for_fov(width_px: u32, horizontal_fov_deg: f64) -> f64 {
        width_px as f64 / 2.0 / (horizontal_fov_deg.to_radians() / 2.0).tan()
    }

    /// Maps output rays back into the rendered frame: yaw about the vertical
    /// axis, then pitch, then roll about the view axis.
    fn rotation(&self) -> [[f64; 3]; 3] {
        let (sy, cy) = self.yaw_rad.sin_cos();
        let (sp, cp) = self.pitch_rad.sin_cos();
        let (sr, cr) = self.roll_rad.sin_cos();
        let yaw = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let pitch = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
        let roll = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
        matmul(matmul(yaw, pitch), roll)
    }

    /// Source position in the rendered frame for output pixel `(x, y)`, or
    /// `None` when it falls outside the frame.
    pub fn source(&self, x: f64, y: f64, width: u32, height: u32) -> Option<(f64, f64)> {
        self.source_with(&self.rotation(), x, y, width, height)
    }

    fn source_with(&self, rot: &[[f64; 3]; 3], x: f64, y: f64, width: u32, height: u32) -> Option<(f64, f64)> {
        let (w, h) = (width as f64, height as f64);
        let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
        let ray = [x - cx, y - cy, self.focal_px];
        let r = rot.map(|row| row[0] * ray[0] + row[1] * ray[1] + row[2] * ray[2]);
        if r[2] <= 1e-9 {
            return None;
        }
        let project = self.focal_px / r[2];
        let (px, py) = (r[0] * project, r[1] * project);
        let norm = w.max(h) / 2.0;
        let k = 1.0 + self.lens_k1 * (px * px + py * py) / (norm * norm);
        let (sx, sy) = (cx + px * k, cy + py * k);
        let inside = sx >= -0.5 && sx <= w - 0.5 && sy >= -0.5 && sy <= h - 0.5;
        inside.then_some((sx, sy))
    }

    /// Source coordinates for every output pixel, row-major.
    pub fn source_grid(&self, width: u32, height: u32) -> Vec<Option<(f64, f64)>> {
        let rot = self.rotation();
        (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| self.source_with(&rot, x as f64, y as f64, width, height))
            .collect()
    }

    /// Largest distance between an output pixel and its in-bounds source.
    pub fn max_displacement(&self, width: u32, height: u32) -> f64 {
        self.source_grid(width, height)
            .into_iter()
            .enumerate()
            .filter_map(|(i, src)| {
                let (x, y) = ((i % width as usize) as f64, (i / width as usize) as f64);
                src.map(|(sx, sy)| (sx - x).hypot(sy - y))
            })
            .fold(0.0, f64::max)
    }
}

fn matmul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn atw(img: &LayerImage, map: &ReprojectionMap) -> LayerImage {
    let pixels = map
        .source_grid(img.width, img.height)
        .into_iter()
        .map(|src| src.map_or(BLACK, |(sx, sy)| bilinear_sample(img, sx, sy)))
        .collect();
    LayerImage::display(img.width, img.height, pixels).expect("dimensions preserved")
}

pub fn sequential_reference(
    layers: &[LayerImage],
    geom: &LayerGeometry,
    map: &ReprojectionMap,
    blend_band_px: u32,
) -> Result<LayerImage> {
    Ok(atw(&compose_foveated(layers, geom, blend_band_px)?, map))
}

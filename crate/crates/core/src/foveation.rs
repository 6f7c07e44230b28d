//! Layer sizing under a linear minimum-angle-of-resolution (MAR) acuity model.
//!
//! A frame is split into a full-resolution fovea disc of radius `e1` around the
//! gaze point, a middle ring out to `e2*`, and an outer region covering the rest
//! of the display. The two periphery layers are rendered remotely at reduced
//! per-dimension resolution `s1` and `s2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perfmodel::SceneFrame;

/// Arcminutes per degree.
const ARCMIN_PER_DEG: f64 = 60.0;

/// Per-eye back-buffer size the default compression ratio is calibrated to.
pub const CALIBRATION_BACK_SIZE_BYTES: f64 = 530.0 * 1024.0;

pub const DEFAULT_MAR_SLOPE: f64 = 0.2;
pub const DEFAULT_FOVEA_MAR_ARCMIN: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisplayConfig {
    /// Per eye.
    pub width_px: u32,
    /// Per eye.
    pub height_px: u32,
    pub horizontal_fov_deg: f64,
    pub bytes_per_pixel: u32,
    pub eyes: u32,
}

impl Default for DisplayConfig {
    fn default() -> Self {
        Self {
            width_px: 1920,
            height_px: 2160,
            horizontal_fov_deg: 120.0,
            bytes_per_pixel: 3,
            eyes: 2,
        }
    }
}

impl DisplayConfig {
    pub fn new(width_px: u32, height_px: u32, horizontal_fov_deg: f64) -> Result<Self> {
        let disp = Self {
            width_px,
            height_px,
            horizontal_fov_deg,
            ..Self::default()
        };
        disp.validate()?;
        Ok(disp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::Config("display dimensions must be positive".into()));
        }
        if !(self.horizontal_fov_deg > 0.0 && self.horizontal_fov_deg <= 180.0) {
            return Err(Error::Config(format!(
                "horizontal_fov_deg {} outside (0, 180]",
                self.horizontal_fov_deg
            )));
        }
        if self.bytes_per_pixel == 0 {
            return Err(Error::Config("bytes_per_pixel must be positive".into()));
        }
        if self.eyes != 2 {
            return Err(Error::Config(format!("eyes must be 2, got {}", self.eyes)));
        }
        Ok(())
    }

    pub fn pixels_per_degree(&self) -> f64 {
        self.width_px as f64 / self.horizontal_fov_deg
    }

    pub fn width(&self) -> f64 {
        self.width_px as f64
    }

    pub fn height(&self) -> f64 {
        self.height_px as f64
    }

    pub fn area_px(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width() / 2.0, self.height() / 2.0)
    }

    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        (0.0..=self.width()).contains(&x) && (0.0..=self.height()).contains(&y)
    }

    /// Eccentricity of the display corner farthest from `center`.
    pub fn corner_eccentricity(&self, (cx, cy): (f64, f64)) -> f64 {
        let dx = cx.max(self.width() - cx);
        let dy = cy.max(self.height() - cy);
        dx.hypot(dy) / self.pixels_per_degree()
    }

    /// MAR of one display pixel, in arcminutes.
    pub fn pixel_mar_arcmin(&self) -> f64 {
        ARCMIN_PER_DEG / self.pixels_per_degree()
    }

    /// Compression ratio that maps one full uncompressed eye buffer to `bytes_per_eye`.
    pub fn compression_ratio_for(&self, bytes_per_eye: f64) -> f64 {
        bytes_per_eye / (self.area_px() * self.bytes_per_pixel as f64)
    }
}

/// Compression ratio calibrated so a full 1920x2160 RGB eye buffer compresses to 530 KiB.
pub fn default_compression_ratio() -> f64 {
    DisplayConfig::default().compression_ratio_for(CALIBRATION_BACK_SIZE_BYTES)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarParams {
    /// Acuity slope, arcmin per degree of eccentricity.
    pub m: f64,
    /// Foveal MAR, arcmin.
    pub omega0: f64,
    /// Display MAR, arcmin.
    pub omega_star: f64,
}

impl MarParams {
    /// Defaults with the display MAR taken from the display's pixel pitch.
    pub fn for_display(disp: &DisplayConfig) -> Self {
        Self {
            m: DEFAULT_MAR_SLOPE,
            omega0: DEFAULT_FOVEA_MAR_ARCMIN,
            omega_star: disp.pixel_mar_arcmin(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0) || !(self.omega0 > 0.0) {
            return Err(Error::Config("MAR slope and foveal MAR must be positive".into()));
        }
        if !(self.omega_star >= self.omega0) {
            return Err(Error::Config(format!(
                "display MAR {} arcmin is finer than foveal MAR {} arcmin",
                self.omega_star, self.omega0
            )));
        }
        Ok(())
    }
}

impl Default for MarParams {
    fn default() -> Self {
        Self::for_display(&DisplayConfig::default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EccentricityState {
    pub e1_deg: f64,
    pub e2_star_deg: f64,
    pub fovea_center: (f64, f64),
}

impl EccentricityState {
    /// Pairs `e1` with its cost-minimizing `e2*`.
    pub fn select(e1_deg: f64, fovea_center: (f64, f64), mar: &MarParams, disp: &DisplayConfig) -> Result<Self> {
        let e2_star_deg = select_e2_star(e1_deg, fovea_center, mar, disp)?;
        Ok(Self {
            e1_deg,
            e2_star_deg,
            fovea_center,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerGeometry {
    pub center_px: (f64, f64),
    pub width_px: u32,
    pub height_px: u32,
    pub pixels_per_degree: f64,
    pub fovea_radius_px: f64,
    pub middle_outer_radius_px: f64,
    pub s1: f64,
    pub s2: f64,
    pub fovea_area_fraction: f64,
    /// Middle ring area clipped to the display.
    pub middle_area_px: f64,
    /// Display area beyond the middle ring.
    pub outer_area_px: f64,
}

impl LayerGeometry {
    pub fn e1_deg(&self) -> f64 {
        self.fovea_radius_px / self.pixels_per_degree
    }

    /// Periphery pixels that must be transmitted, after resolution reduction.
    pub fn periphery_pixel_cost(&self) -> f64 {
        self.middle_area_px / (self.s1 * self.s1) + self.outer_area_px / (self.s2 * self.s2)
    }

    pub fn has_outer_layer(&self) -> bool {
        self.middle_outer_radius_px.is_finite()
    }
}

pub fn mar_scale(e_deg: f64, mar: &MarParams) -> f64 {
    ((mar.m * e_deg + mar.omega0) / mar.omega_star).max(1.0)
}

/// Antiderivative of `sqrt(r^2 - u^2)`, with `u` clamped to `[-r, r]`.
fn half_chord_integral(u: f64, r: f64) -> f64 {
    let u = u.clamp(-r, r);
    0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin())
}

/// Area of the origin-centred disc of radius `r` inside the quadrant `X <= x, Y <= y`.
fn disc_quadrant_area(x: f64, y: f64, r: f64) -> f64 {
    if y <= -r || x <= -r {
        return 0.0;
    }
    let xc = x.min(r);
    let g = |u: f64| half_chord_integral(u, r);
    // Full chord height across [a, b].
    let full = |a: f64, b: f64| if b > a { 2.0 * (g(b) - g(a)) } else { 0.0 };
    if y >= r {
        return full(-r, xc);
    }
    let w = (r * r - y * y).sqrt();
    // Chord cut off above at y.
    let cut = |a: f64, b: f64| if b > a { y * (b - a) + g(b) - g(a) } else { 0.0 };
    if y >= 0.0 {
        full(-r, xc.min(-w)) + cut(-w, xc.min(w)) + full(w, xc)
    } else {
        cut(-w, xc.min(w))
    }
}

/// Area of a disc intersected with the rectangle `[0, width] x [0, height]`.
pub fn clipped_disc_area((cx, cy): (f64, f64), radius: f64, width: f64, height: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    let f = |x: f64, y: f64| disc_quadrant_area(x - cx, y - cy, radius);
    let area = f(width, height) - f(0.0, height) - f(width, 0.0) + f(0.0, 0.0);
    area.clamp(0.0, (std::f64::consts::PI * radius * radius).min(width * height))
}

fn disc_area_deg(e_deg: f64, center: (f64, f64), disp: &DisplayConfig) -> f64 {
    clipped_disc_area(center, e_deg * disp.pixels_per_degree(), disp.width(), disp.height())
}

/// Candidate middle/outer boundaries for a fovea of `e1_deg`: every whole degree
/// above `e1_deg` short of the corner, then the corner itself.
pub fn e2_candidates(e1_deg: f64, corner_deg: f64) -> impl Iterator<Item = f64> {
    let first = e1_deg.floor() + 1.0;
    let steps = if first < corner_deg {
        (corner_deg - first).ceil() as usize
    } else {
        0
    };
    (0..steps)
        .map(move |k| first + k as f64)
        .filter(move |&e| e < corner_deg)
        .chain(std::iter::once(corner_deg))
}

/// Transmitted pixel count of both periphery layers for a given boundary pair.
pub fn periphery_cost(e1_deg: f64, e2_deg: f64, center: (f64, f64), mar: &MarParams, disp: &DisplayConfig) -> f64 {
    let a1 = disc_area_deg(e1_deg, center, disp);
    cost_given_fovea(a1, mar_scale(e1_deg, mar), e2_deg, center, mar, disp)
}

fn cost_given_fovea(a1: f64, s1: f64, e2_deg: f64, center: (f64, f64), mar: &MarParams, disp: &DisplayConfig) -> f64 {
    let a2 = disc_area_deg(e2_deg, center, disp).max(a1);
    let s2 = mar_scale(e2_deg, mar);
    (a2 - a1) / (s1 * s1) + (disp.area_px() - a2).max(0.0) / (s2 * s2)
}

pub fn select_e2_star(e1_deg: f64, center: (f64, f64), mar: &MarParams, disp: &DisplayConfig) -> Result<f64> {
    let corner_deg = disp.corner_eccentricity(center);
    if e1_deg > corner_deg {
        return Err(Error::EccentricityOutOfRange { e1_deg, corner_deg });
    }
    // Costs are areas in pixels; anything below this is rounding noise and
    // must not override the preference for the smaller boundary.
    let tie = disp.area_px() * 1e-12;
    let a1 = disc_area_deg(e1_deg, center, disp);
    let s1 = mar_scale(e1_deg, mar);
    let mut best: Option<(f64, f64)> = None;
    for e2 in e2_candidates(e1_deg, corner_deg) {
        let cost = cost_given_fovea(a1, s1, e2, center, mar, disp);
        match best {
            Some((_, c)) if cost >= c - tie => {}
            _ => best = Some((e2, cost)),
        }
    }
    Ok(best.map(|(e2, _)| e2).unwrap_or(corner_deg))
}

pub fn layer_geometry(ecc: &EccentricityState, mar: &MarParams, disp: &DisplayConfig) -> LayerGeometry {
    let ppd = disp.pixels_per_degree();
    let fovea_radius_px = ecc.e1_deg * ppd;
    let middle_outer_radius_px = ecc.e2_star_deg * ppd;
    let (w, h) = (disp.width(), disp.height());
    let a1 = clipped_disc_area(ecc.fovea_center, fovea_radius_px, w, h);
    let a2 = clipped_disc_area(ecc.fovea_center, middle_outer_radius_px, w, h).max(a1);
    LayerGeometry {
        center_px: ecc.fovea_center,
        width_px: disp.width_px,
        height_px: disp.height_px,
        pixels_per_degree: ppd,
        fovea_radius_px,
        middle_outer_radius_px,
        s1: mar_scale(ecc.e1_deg, mar),
        s2: mar_scale(ecc.e2_star_deg, mar),
        fovea_area_fraction: (a1 / disp.area_px()).clamp(0.0, 1.0),
        middle_area_px: a2 - a1,
        outer_area_px: (disp.area_px() - a2).max(0.0),
    }
}

/// Share of the scene's rendering work whose density cells fall inside the fovea disc.
pub fn fovea_workload_fraction(scene: &SceneFrame, geom: &LayerGeometry, center: (f64, f64)) -> Result<f64> {
    let grid = &scene.density;
    grid.check_normalized()?;
    let cell_w = geom.width_px as f64 / grid.cols as f64;
    let cell_h = geom.height_px as f64 / grid.rows as f64;
    let r2 = geom.fovea_radius_px * geom.fovea_radius_px;
    let mut sum = 0.0;
    for row in 0..grid.rows {
        let dy = (row as f64 + 0.5) * cell_h - center.1;
        if dy * dy > r2 {
            continue;
        }
        // Columns the chord can reach, widened by one; the exact test follows.
        let half = (r2 - dy * dy).sqrt();
        let first = (((center.0 - half) / cell_w - 0.5).floor() - 1.0).max(0.0) as usize;
        let last = ((((center.0 + half) / cell_w - 0.5).ceil() + 1.0).max(0.0) as usize).min(grid.cols - 1);
        for col in first..=last {
            let dx = (col as f64 + 0.5) * cell_w - center.0;
            if dx * dx + dy * dy <= r2 {
                sum += grid.at(col, row);
            }
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

pub fn periphery_bytes(geom: &LayerGeometry, disp: &DisplayConfig, compression_ratio: f64) -> u64 {
    let raw = disp.eyes as f64 * disp.bytes_per_pixel as f64 * compression_ratio * geom.periphery_pixel_cost();
    // Sub-micro-byte residue comes from area cancellation, not payload.
    (raw - 1e-6).max(0.0).ceil() as u64
}

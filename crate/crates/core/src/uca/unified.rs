//! Tile-scheduled single-pass composition and reprojection, plus its cycle cost.

use serde::{Deserialize, Serialize};

use super::{
    bilinear_taps, blend_at, clamp_unit, owner_at, weighted, LayerImage, LayerSet, ReprojectionMap, Rgb, BLACK,
};
use crate::error::{Error, Result};
use crate::foveation::LayerGeometry;

pub const TILE_SIZE: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TileKind {
    /// Reads from one layer only; plain bilinear path.
    Interior,
    /// May read across a layer boundary; trilinear gather.
    Border,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tile {
    pub row: u32,
    pub col: u32,
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
    pub kind: TileKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TilePlan {
    pub tile_size: u32,
    pub frame_width: u32,
    pub frame_height: u32,
    pub blend_band_px: u32,
    /// How far outside a tile its pixels may read, in pixels.
    pub margin_px: f64,
    pub tiles: Vec<Tile>,
}

pub fn tile_count(width: u32, height: u32, tile_size: u32) -> u64 {
    width.div_ceil(tile_size) as u64 * height.div_ceil(tile_size) as u64
}

impl TilePlan {
    /// Classifies each tile by whether its pixel-centre rectangle, dilated by
    /// `margin_px`, meets a blend annulus `|d - r| <= band` around a layer boundary.
    pub fn new(geom: &LayerGeometry, blend_band_px: u32, margin_px: f64, tile_size: u32) -> Self {
        let (width, height) = (geom.width_px, geom.height_px);
        let band = blend_band_px as f64;
        let boundaries: Vec<f64> = [geom.fovea_radius_px, geom.middle_outer_radius_px]
            .into_iter()
            .filter(|r| r.is_finite())
            .collect();
        let (cx, cy) = geom.center_px;
        let mut tiles = Vec::new();
        for row in 0..height.div_ceil(tile_size) {
            for col in 0..width.div_ceil(tile_size) {
                let (x0, y0) = (col * tile_size, row * tile_size);
                let tw = tile_size.min(width - x0);
                let th = tile_size.min(height - y0);
                let lo_x = x0 as f64 + 0.5 - margin_px;
                let hi_x = (x0 + tw) as f64 - 0.5 + margin_px;
                let lo_y = y0 as f64 + 0.5 - margin_px;
                let hi_y = (y0 + th) as f64 - 0.5 + margin_px;
                let near = (cx.clamp(lo_x, hi_x) - cx).hypot(cy.clamp(lo_y, hi_y) - cy);
                let far = (cx - lo_x)
                    .abs()
                    .max((cx - hi_x).abs())
                    .hypot((cy - lo_y).abs().max((cy - hi_y).abs()));
                let border = boundaries.iter().any(|&r| near <= r + band && far >= r - band);
                tiles.push(Tile {
                    row,
                    col,
                    x0,
                    y0,
                    width: tw,
                    height: th,
                    kind: if border { TileKind::Border } else { TileKind::Interior },
                });
            }
        }
        Self {
            tile_size,
            frame_width: width,
            frame_height: height,
            blend_band_px,
            margin_px,
            tiles,
        }
    }

    /// Plan whose margin covers every reprojection displacement plus the
    /// bilinear footprint.
    pub fn for_frame(geom: &LayerGeometry, blend_band_px: u32, map: &ReprojectionMap) -> Self {
        let margin = map.max_displacement(geom.width_px, geom.height_px) + 2.0;
        Self::new(geom, blend_band_px, margin, TILE_SIZE)
    }

    pub fn border_tiles(&self) -> usize {
        self.tiles.iter().filter(|t| t.kind == TileKind::Border).count()
    }
}

fn render_tile(
    tile: &Tile,
    set: &LayerSet<'_>,
    geom: &LayerGeometry,
    band: u32,
    sources: &[Option<(f64, f64)>],
) -> Vec<Rgb> {
    let (w, h) = (geom.width_px, geom.height_px);
    let mut out = Vec::with_capacity((tile.width * tile.height) as usize);
    for y in tile.y0..tile.y0 + tile.height {
        for x in tile.x0..tile.x0 + tile.width {
            let Some(src) = sources[y as usize * w as usize + x as usize] else {
                out.push(BLACK);
                continue;
            };
            let taps = bilinear_taps(w, h, src.0, src.1);
            let mut acc = BLACK;
            match tile.kind {
                TileKind::Interior => {
                    let layer = set.get(owner_at(geom, src)).expect("coverage checked");
                    for (tx, ty, wt) in taps {
                        weighted(&mut acc, layer.sample_display((tx as f64, ty as f64)), wt);
                    }
                }
                TileKind::Border => {
                    // Shared tap weights across the blended layers: 1/M of each.
                    let blend = blend_at(geom, band, src);
                    let m = blend.kinds().count() as f32;
                    for kind in blend.kinds() {
                        let layer = set.get(kind).expect("coverage checked");
                        for (tx, ty, wt) in taps {
                            weighted(&mut acc, layer.sample_display((tx as f64, ty as f64)), wt / m);
                        }
                    }
                }
            }
            out.push(clamp_unit(acc));
        }
    }
    out
}

pub fn unified_uca(
    layers: &[LayerImage],
    geom: &LayerGeometry,
    map: &ReprojectionMap,
    blend_band_px: u32,
    plan: &TilePlan,
) -> Result<LayerImage> {
    if plan.frame_width != geom.width_px || plan.frame_height != geom.height_px {
        return Err(Error::Config("tile plan does not match the frame".into()));
    }
    let set = LayerSet::new(layers)?;
    set.check_coverage(geom, blend_band_px)?;
    let sources = map.source_grid(geom.width_px, geom.height_px);
    let w = geom.width_px as usize;
    let mut pixels = vec![BLACK; w * geom.height_px as usize];
    for tile in &plan.tiles {
        let rendered = render_tile(tile, &set, geom, blend_band_px, &sources);
        for (i, px) in rendered.into_iter().enumerate() {
            let (dx, dy) = (i as u32 % tile.width, i as u32 / tile.width);
            pixels[(tile.y0 + dy) as usize * w + (tile.x0 + dx) as usize] = px;
        }
    }
    LayerImage::display(geom.width_px, geom.height_px, pixels)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcaCostModel {
    pub cycles_per_tile: u64,
    pub units: u32,
    pub freq_hz: f64,
}

impl Default for UcaCostModel {
    fn default() -> Self {
        Self {
            cycles_per_tile: 532,
            units: 2,
            freq_hz: 5e8,
        }
    }
}

impl UcaCostModel {
    pub fn validate(&self) -> Result<()> {
        if self.cycles_per_tile == 0 || self.units == 0 || !(self.freq_hz > 0.0) {
            return Err(Error::Config("UCA cost model values must be positive".into()));
        }
        Ok(())
    }

    /// Tiles are processed in waves of `units`.
    pub fn latency_for_tiles(&self, tiles: u64) -> f64 {
        let waves = tiles.div_ceil(self.units as u64);
        (waves * self.cycles_per_tile) as f64 / self.freq_hz
    }
}

pub fn uca_latency(plan: &TilePlan, cost: &UcaCostModel) -> f64 {
    cost.latency_for_tiles(plan.tiles.len() as u64)
}

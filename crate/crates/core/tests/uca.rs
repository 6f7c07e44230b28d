//! Composition and timewarp against hand-built shifts, exact tile costs, and
//! the compose-then-warp reference.

use qvr_core::foveation::LayerGeometry;
use qvr_core::pipeline::PipelineConfig;
use qvr_core::uca::{
    atw, bilinear_taps, blend_at, owner_at, sequential_reference, tile_count, uca_latency, unified_uca, Blend,
    LayerImage, LayerKind, ReprojectionMap, Rgb, TileKind, TilePlan, UcaCostModel, DEFAULT_BLEND_BAND_PX, TILE_SIZE,
};
use qvr_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ramp(w: u32, h: u32) -> LayerImage {
    let pixels = (0..h)
        .flat_map(|y| (0..w).map(move |x| [x as f32 / 512.0, y as f32 / 512.0, 0.25]))
        .collect();
    LayerImage::display(w, h, pixels).unwrap()
}

#[test]
fn identity_warp_is_exact() {
    let img = ramp(64, 48);
    let out = atw(&img, &ReprojectionMap::identity(100.0));
    assert_eq!(out.pixels(), img.pixels());
}

#[test]
fn small_yaw_shifts_centre_row_by_one_pixel() {
    // f * tan(yaw) = 1 moves the centre ray exactly one pixel.
    let (w, h) = (257, 257);
    let focal = 1000.0;
    let map = ReprojectionMap {
        yaw_rad: (1.0f64 / focal).atan(),
        ..ReprojectionMap::identity(focal)
    };
    let (sx, sy) = map.source(128.0, 128.0, w, h).unwrap();
    assert!((sx - 129.0).abs() < 1e-9 && (sy - 128.0).abs() < 1e-9);
    let img = ramp(w, h);
    let out = atw(&img, &map);
    for x in 120..=136 {
        let got = out.pixel(x, 128)[0];
        let expected = img.pixel(x + 1, 128)[0];
        // Perspective drift stays under 1e-3 px this close to the centre.
        assert!(
            (got - expected).abs() < 1e-3 / 512.0 + 1e-6,
            "x={x}: {got} vs {expected}"
        );
    }
}

#[test]
fn stereo_display_cost_is_exact() {
    // 1920x2160 per eye in 32 px tiles: 60 x 68 = 4080 tiles, two eyes.
    assert_eq!(tile_count(1920, 2160, TILE_SIZE), 4080);
    let cost = UcaCostModel::default();
    let expected = (8160u64.div_ceil(2) * 532) as f64 / 5e8;
    assert_eq!(cost.latency_for_tiles(8160), expected);
    assert_eq!(PipelineConfig::default().uca_latency_s(), expected);
    assert_eq!(cost.latency_for_tiles(8161), (4081 * 532) as f64 / 5e8);
    let geom = two_layer_geometry(64, 64, (32.0, 32.0), 10.0, 2.0);
    let plan = TilePlan::for_frame(&geom, 4, &ReprojectionMap::identity(50.0));
    assert_eq!(uca_latency(&plan, &cost), (2 * 532) as f64 / 5e8);
}

fn two_layer_geometry(w: u32, h: u32, center: (f64, f64), fovea_r: f64, s1: f64) -> LayerGeometry {
    LayerGeometry {
        center_px: center,
        width_px: w,
        height_px: h,
        pixels_per_degree: 16.0,
        fovea_radius_px: fovea_r,
        middle_outer_radius_px: f64::INFINITY,
        s1,
        s2: s1,
        fovea_area_fraction: 0.0,
        middle_area_px: 0.0,
        outer_area_px: 0.0,
    }
}

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rgb> {
    (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect()
}

/// Random fovea and middle layers with a random warp and lens term.
fn random_frame(rng: &mut ChaCha8Rng, size: u32) -> (Vec<LayerImage>, LayerGeometry, ReprojectionMap) {
    let band = DEFAULT_BLEND_BAND_PX as f64;
    let edge = size as f64;
    let center = (rng.gen_range(0.25..0.75) * edge, rng.gen_range(0.25..0.75) * edge);
    let fovea_r = rng.gen_range(0.08..0.25) * edge;
    let s1 = rng.gen_range(1.5..3.0);
    let geom = two_layer_geometry(size, size, center, fovea_r, s1);

    let reach = fovea_r + band + 3.0;
    let lo = |c: f64| (c - reach).floor().max(0.0) as u32;
    let hi = |c: f64| ((c + reach).ceil() as u32).min(size - 1);
    let (x0, y0) = (lo(center.0), lo(center.1));
    let (fw, fh) = (hi(center.0) - x0 + 1, hi(center.1) - y0 + 1);
    let fovea = LayerImage::new(
        fw,
        fh,
        noise(rng, (fw * fh) as usize),
        1.0,
        (x0 as f64, y0 as f64),
        LayerKind::Fovea,
    )
    .unwrap();
    let mw = (edge / s1).ceil() as u32 + 2;
    let middle = LayerImage::new(
        mw,
        mw,
        noise(rng, (mw * mw) as usize),
        s1,
        (0.0, 0.0),
        LayerKind::Middle,
    )
    .unwrap();

    let [yaw, pitch, roll] = [(); 3].map(|_| rng.gen_range(-2.0f64..2.0).to_radians());
    let map = ReprojectionMap {
        yaw_rad: yaw,
        pitch_rad: pitch,
        roll_rad: roll,
        lens_k1: rng.gen_range(0.0..0.1),
        focal_px: ReprojectionMap::focal_for_fov(size, 100.0),
    };
    (vec![fovea, middle], geom, map)
}

fn layer(layers: &[LayerImage], kind: LayerKind) -> &LayerImage {
    layers.iter().find(|l| l.kind == kind).unwrap()
}

#[test]
fn unified_matches_sequential_off_seams() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let band = DEFAULT_BLEND_BAND_PX;
    for frame in 0..12 {
        let (layers, geom, map) = random_frame(&mut rng, 256);
        let plan = TilePlan::for_frame(&geom, band, &map);
        let unified = unified_uca(&layers, &geom, &map, band, &plan).unwrap();
        let reference = sequential_reference(&layers, &geom, &map, band).unwrap();
        let (w, h) = (geom.width_px, geom.height_px);
        let (mut seam, mut plain) = (0, 0);
        for tile in &plan.tiles {
            for y in tile.y0..tile.y0 + tile.height {
                for x in tile.x0..tile.x0 + tile.width {
                    let (a, b) = (unified.pixel(x, y), reference.pixel(x, y));
                    let Some(src) = map.source(x as f64, y as f64, w, h) else {
                        assert_eq!(a, b);
                        continue;
                    };
                    let used = match tile.kind {
                        TileKind::Interior => Blend::Single(owner_at(&geom, src)),
                        TileKind::Border => blend_at(&geom, band, src),
                    };
                    // Taps whose own blend differs are where the two orders disagree.
                    let mut spread = 0.0f32;
                    let mut on_seam = false;
                    for (tx, ty, wt) in bilinear_taps(w, h, src.0, src.1) {
                        let tap = (tx as f64, ty as f64);
                        let own = blend_at(&geom, band, tap);
                        if wt == 0.0 || own == used {
                            continue;
                        }
                        on_seam = true;
                        let samples: Vec<Rgb> = used
                            .kinds()
                            .chain(own.kinds())
                            .map(|k| layer(&layers, k).sample_display(tap))
                            .collect();
                        for c in 0..3 {
                            let (lo, hi) = samples.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), s| {
                                (lo.min(s[c]), hi.max(s[c]))
                            });
                            spread = spread.max(hi - lo);
                        }
                    }
                    let diff = (0..3).map(|c| (a[c] - b[c]).abs()).fold(0.0, f32::max);
                    if on_seam {
                        assert_eq!(tile.kind, TileKind::Border, "seam inside interior tile at ({x}, {y})");
                        assert!(
                            diff <= spread + 1e-4,
                            "frame {frame} seam ({x}, {y}): {diff} > {spread}"
                        );
                        seam += 1;
                    } else {
                        assert!(diff <= 1e-4, "frame {frame} ({x}, {y}): {diff}");
                        plain += 1;
                    }
                }
            }
        }
        assert!(plain > 10 * seam, "frame {frame}: {seam} seam pixels vs {plain}");
        assert!(plan.border_tiles() > 0);
    }
}

#[test]
fn uncovered_pixels_are_reported() {
    let geom = two_layer_geometry(64, 64, (32.0, 32.0), 10.0, 2.0);
    let map = ReprojectionMap::identity(50.0);
    let plan = TilePlan::for_frame(&geom, 4, &map);
    let middle = LayerImage::filled(34, 34, [0.5; 3], 2.0, (0.0, 0.0), LayerKind::Middle).unwrap();
    // A fovea layer too small for its disc.
    let fovea = LayerImage::filled(8, 8, [1.0; 3], 1.0, (28.0, 28.0), LayerKind::Fovea).unwrap();
    let err = unified_uca(&[fovea.clone(), middle.clone()], &geom, &map, 4, &plan).unwrap_err();
    assert!(matches!(err, Error::UncoveredPixel { .. }));
    assert!(sequential_reference(std::slice::from_ref(&middle), &geom, &map, 4).is_err());
    let dup = unified_uca(&[middle.clone(), middle], &geom, &map, 4, &plan);
    assert!(matches!(dup, Err(Error::Config(_))));
    assert!(LayerImage::filled(4, 4, [1.5; 3], 1.0, (0.0, 0.0), LayerKind::Fovea).is_err());
    assert!(LayerImage::filled(4, 4, [0.5; 3], 0.5, (0.0, 0.0), LayerKind::Fovea).is_err());
}

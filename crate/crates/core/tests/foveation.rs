//! Foveation geometry checked against independent oracles: hand-evaluated MAR
//! scales, Monte-Carlo and chord-integration areas, an exhaustive boundary
//! scan, and brute-force density sums.

use qvr_core::foveation::{
    clipped_disc_area, default_compression_ratio, fovea_workload_fraction, layer_geometry, mar_scale, periphery_bytes,
    select_e2_star, DisplayConfig, EccentricityState, LayerGeometry, MarParams, CALIBRATION_BACK_SIZE_BYTES,
};
use qvr_core::perfmodel::{DensityGrid, SceneFrame, DENSITY_COLS, DENSITY_ROWS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_display() -> DisplayConfig {
    DisplayConfig::default()
}

#[test]
fn display_pixel_mar_follows_pixels_per_degree() {
    let disp = default_display();
    // 1920 px over 120 degrees is 16 px/deg, so one pixel spans 60/16 arcmin.
    assert_eq!(disp.pixels_per_degree(), 16.0);
    assert_eq!(disp.pixel_mar_arcmin(), 3.75);
    assert_eq!(MarParams::for_display(&disp).omega_star, 3.75);
}

#[test]
fn mar_scale_matches_hand_evaluation() {
    let mar = MarParams::for_display(&default_display());
    // (0.2 * e + 3.0) / 3.75, evaluated by hand.
    let cases = [(5.0, 4.0 / 3.75), (15.0, 6.0 / 3.75), (40.0, 11.0 / 3.75)];
    for (e, expected) in cases {
        let s = mar_scale(e, &mar);
        assert!((s - expected).abs() < 1e-12, "e={e}: {s} vs {expected}");
    }
    // Below the display MAR the periphery cannot be coarser than a pixel.
    assert_eq!(mar_scale(0.0, &mar), 1.0);
    assert_eq!(mar_scale(3.0, &mar), 1.0);
}

fn monte_carlo_area(center: (f64, f64), r: f64, w: f64, h: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| {
            let (x, y) = (rng.gen::<f64>() * w, rng.gen::<f64>() * h);
            (x - center.0).powi(2) + (y - center.1).powi(2) <= r * r
        })
        .count();
    hits as f64 / samples as f64 * w * h
}

#[test]
fn corner_fovea_area_matches_monte_carlo() {
    let (w, h) = (1920.0, 2160.0);
    for (center, r, seed) in [
        ((0.0, 0.0), 600.0, 1),
        ((1920.0, 2160.0), 1500.0, 2),
        ((40.0, 2100.0), 900.0, 3),
    ] {
        let exact = clipped_disc_area(center, r, w, h);
        let mc = monte_carlo_area(center, r, w, h, 1_000_000, seed);
        let rel = (exact - mc).abs() / exact;
        assert!(rel < 0.005, "center {center:?} r {r}: {exact} vs {mc} ({rel})");
    }
}

/// Disc-rectangle overlap by midpoint integration of chord lengths.
fn chord_area(center: (f64, f64), r: f64, w: f64, h: f64, steps: usize) -> f64 {
    let (x0, x1) = ((center.0 - r).max(0.0), (center.0 + r).min(w));
    if x1 <= x0 {
        return 0.0;
    }
    let dx = (x1 - x0) / steps as f64;
    (0..steps)
        .map(|i| {
            let x = x0 + (i as f64 + 0.5) * dx;
            let half = (r * r - (x - center.0).powi(2)).max(0.0).sqrt();
            ((center.1 + half).min(h) - (center.1 - half).max(0.0)).max(0.0) * dx
        })
        .sum()
}

#[test]
fn clipped_area_matches_chord_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let center = (rng.gen_range(-200.0..2100.0), rng.gen_range(-200.0..2400.0));
        let r = rng.gen_range(1.0..3000.0);
        let exact = clipped_disc_area(center, r, 1920.0, 2160.0);
        let numeric = chord_area(center, r, 1920.0, 2160.0, 200_000);
        assert!(
            (exact - numeric).abs() <= 1e-6 * (1920.0 * 2160.0),
            "center {center:?} r {r}: {exact} vs {numeric}"
        );
    }
}

/// Periphery pixel cost from chord-integrated areas.
fn oracle_cost(e1: f64, e2: f64, center: (f64, f64), mar: &MarParams, disp: &DisplayConfig) -> f64 {
    let ppd = disp.pixels_per_degree();
    let (w, h) = (disp.width(), disp.height());
    let a1 = chord_area(center, e1 * ppd, w, h, 40_000);
    let a2 = chord_area(center, e2 * ppd, w, h, 40_000).max(a1);
    let s = |e: f64| ((mar.m * e + mar.omega0) / mar.omega_star).max(1.0);
    (a2 - a1) / s(e1).powi(2) + (w * h - a2).max(0.0) / s(e2).powi(2)
}

#[test]
fn e2_star_is_global_minimum_of_full_scan() {
    let disp = default_display();
    let mar = MarParams::for_display(&disp);
    for (center, e1) in [
        (disp.center(), 5.0),
        (disp.center(), 12.0),
        (disp.center(), 30.5),
        ((300.0, 400.0), 8.0),
        ((1900.0, 2100.0), 20.0),
    ] {
        let corner = disp.corner_eccentricity(center);
        let chosen = select_e2_star(e1, center, &mar, &disp).unwrap();
        let chosen_cost = oracle_cost(e1, chosen, center, &mar, &disp);
        // Every whole degree past e1 and the corner itself.
        let mut grid: Vec<f64> = (1..)
            .map(|k| e1.floor() + k as f64)
            .take_while(|&e| e < corner)
            .collect();
        grid.push(corner);
        let best = grid
            .iter()
            .map(|&e2| oracle_cost(e1, e2, center, &mar, &disp))
            .fold(f64::INFINITY, f64::min);
        assert!(
            chosen_cost <= best * (1.0 + 1e-6) + 1e-3,
            "center {center:?} e1 {e1}: chose {chosen} at {chosen_cost}, scan best {best}"
        );
        assert!(chosen > e1 && chosen <= corner);
    }
}

#[test]
fn e1_beyond_corner_is_rejected() {
    let disp = default_display();
    let mar = MarParams::for_display(&disp);
    let corner = disp.corner_eccentricity(disp.center());
    assert!(select_e2_star(corner + 1.0, disp.center(), &mar, &disp).is_err());
}

fn chessboard(cols: usize, rows: usize) -> DensityGrid {
    let weights = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| if (r + c) % 2 == 0 { 3.0 } else { 1.0 }))
        .collect();
    DensityGrid::from_weights(cols, rows, weights).unwrap()
}

#[test]
fn fovea_fraction_matches_direct_cell_sum() {
    let disp = default_display();
    let mar = MarParams::for_display(&disp);
    let density = chessboard(DENSITY_COLS, DENSITY_ROWS);
    let scene = SceneFrame {
        frame_id: 0,
        triangles: 1_000_000,
        density: density.clone(),
        interactive_fraction_f: 0.1,
    };
    for (center, e1) in [(disp.center(), 10.0), ((200.0, 300.0), 25.0), ((1700.0, 1000.0), 40.0)] {
        let ecc = EccentricityState::select(e1, center, &mar, &disp).unwrap();
        let geom = layer_geometry(&ecc, &mar, &disp);
        let got = fovea_workload_fraction(&scene, &geom, center).unwrap();
        let (cw, ch) = (1920.0 / DENSITY_COLS as f64, 2160.0 / DENSITY_ROWS as f64);
        let r = e1 * 16.0;
        let mut expected = 0.0;
        for row in 0..DENSITY_ROWS {
            for col in 0..DENSITY_COLS {
                let (x, y) = ((col as f64 + 0.5) * cw, (row as f64 + 0.5) * ch);
                if (x - center.0).hypot(y - center.1) <= r {
                    expected += density.at(col, row);
                }
            }
        }
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }
}

#[test]
fn unnormalized_density_is_rejected() {
    let disp = default_display();
    let mar = MarParams::for_display(&disp);
    let scene = SceneFrame {
        frame_id: 0,
        triangles: 10,
        density: DensityGrid::from_raw(2, 2, vec![0.5; 4]),
        interactive_fraction_f: 0.0,
    };
    let ecc = EccentricityState::select(10.0, disp.center(), &mar, &disp).unwrap();
    let geom = layer_geometry(&ecc, &mar, &disp);
    assert!(fovea_workload_fraction(&scene, &geom, disp.center()).is_err());
}

#[test]
fn unscaled_full_periphery_is_one_compressed_frame_per_eye() {
    let disp = default_display();
    let ratio = default_compression_ratio();
    let geom = LayerGeometry {
        center_px: disp.center(),
        width_px: disp.width_px,
        height_px: disp.height_px,
        pixels_per_degree: disp.pixels_per_degree(),
        fovea_radius_px: 0.0,
        middle_outer_radius_px: f64::INFINITY,
        s1: 1.0,
        s2: 1.0,
        fovea_area_fraction: 0.0,
        middle_area_px: disp.area_px(),
        outer_area_px: 0.0,
    };
    let bytes = periphery_bytes(&geom, &disp, ratio);
    assert_eq!(bytes, 2 * CALIBRATION_BACK_SIZE_BYTES as u64);
    assert_eq!(CALIBRATION_BACK_SIZE_BYTES, 530.0 * 1024.0);
}

//! Analytic latency predictors for the local fovea path and the remote periphery
//! path, the frame-rate rule, and the EWMA rate estimators the controller keeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.1;

/// Density grid resolution (columns x rows) over one eye buffer.
pub const DENSITY_COLS: usize = 64;
pub const DENSITY_ROWS: usize = 72;

/// Remote server throughput relative to the local GPU.
pub const REMOTE_RATE_MULTIPLIER: f64 = 8.0;

/// Screen-space share of rendering work, one cell per grid position, summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub cols: usize,
    pub rows: usize,
    cells: Vec<f64>,
    /// Cells are immutable, so the normalization check is done once.
    sum: f64,
    non_negative: bool,
}

impl DensityGrid {
    fn build(cols: usize, rows: usize, cells: Vec<f64>) -> Self {
        Self {
            cols,
            rows,
            sum: cells.iter().sum(),
            non_negative: cells.iter().all(|c| *c >= 0.0),
            cells,
        }
    }

    pub fn uniform(cols: usize, rows: usize) -> Self {
        let n = cols * rows;
        Self::build(cols, rows, vec![1.0 / n as f64; n])
    }

    /// Normalizes non-negative row-major weights.
    pub fn from_weights(cols: usize, rows: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != cols * rows || cols == 0 || rows == 0 {
            return Err(Error::Config(format!(
                "density grid {cols}x{rows} given {} weights",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("density weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::UnnormalizedDensity { sum: total });
        }
        Ok(Self::build(
            cols,
            rows,
            weights.into_iter().map(|w| w / total).collect(),
        ))
    }

    /// Unnormalized cells; callers must uphold the unit sum themselves.
    pub fn from_raw(cols: usize, rows: usize, cells: Vec<f64>) -> Self {
        assert_eq!(cells.len(), cols * rows, "cell count mismatch");
        Self::build(cols, rows, cells)
    }

    /// Work falling off as `(r + core)^-power` with angular distance `r` from a hotspot.
    pub fn radial(
        (width, height): (f64, f64),
        pixels_per_degree: f64,
        hotspot: (f64, f64),
        core_deg: f64,
        power: f64,
    ) -> Self {
        let (cols, rows) = (DENSITY_COLS, DENSITY_ROWS);
        let cell_w = width / cols as f64;
        let cell_h = height / rows as f64;
        let weights = (0..rows)
            .flat_map(|row| (0..cols).map(move |col| (col, row)))
            .map(|(col, row)| {
                let x = (col as f64 + 0.5) * cell_w - hotspot.0;
                let y = (row as f64 + 0.5) * cell_h - hotspot.1;
                (x.hypot(y) / pixels_per_degree + core_deg).powf(-power)
            })
            .collect();
        Self::from_weights(cols, rows, weights).expect("radial weights are positive")
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn check_normalized(&self) -> Result<()> {
        if (self.sum - 1.0).abs() > 1e-9 || !self.non_negative {
            return Err(Error::UnnormalizedDensity { sum: self.sum });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneFrame {
    pub frame_id: u64,
    pub triangles: u64,
    pub density: DensityGrid,
    /// Share of triangles the static collaborative baseline renders locally.
    pub interactive_fraction_f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateEstimates {
    pub gpu_rate_tri_per_s: f64,
    pub remote_gpu_rate_tri_per_s: f64,
    pub throughput_bps: f64,
    pub alpha: f64,
}

impl RateEstimates {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.gpu_rate_tri_per_s,
            self.remote_gpu_rate_tri_per_s,
            self.throughput_bps,
        ];
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("rates must be positive and finite".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        Ok(())
    }

    pub fn observe_gpu(mut self, measured_local_s: f64, triangles_rendered: u64) -> Result<Self> {
        if !(measured_local_s > 0.0) {
            return Err(Error::NonPositiveMeasurement("local latency"));
        }
        if triangles_rendered == 0 {
            return Err(Error::NonPositiveMeasurement("triangles rendered"));
        }
        let measured = triangles_rendered as f64 / measured_local_s;
        self.gpu_rate_tri_per_s = ewma(self.gpu_rate_tri_per_s, measured, self.alpha);
        Ok(self)
    }

    pub fn observe_network(mut self, measured_transmit_s: f64, bytes_sent: u64) -> Result<Self> {
        if !(measured_transmit_s > 0.0) {
            return Err(Error::NonPositiveMeasurement("transmit latency"));
        }
        if bytes_sent == 0 {
            return Err(Error::NonPositiveMeasurement("bytes sent"));
        }
        let measured = 8.0 * bytes_sent as f64 / measured_transmit_s;
        self.throughput_bps = ewma(self.throughput_bps, measured, self.alpha);
        Ok(self)
    }
}

fn ewma(old: f64, sample: f64, alpha: f64) -> f64 {
    let next = (1.0 - alpha) * old + alpha * sample;
    // Keep the result inside the hull of its inputs despite rounding.
    next.clamp(old.min(sample), old.max(sample))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyEstimate {
    pub t_local_s: f64,
    pub t_remote_s: f64,
    pub delta_s: f64,
}

impl LatencyEstimate {
    pub fn new(t_local_s: f64, t_remote_s: f64) -> Self {
        Self {
            t_local_s,
            t_remote_s,
            delta_s: t_remote_s - t_local_s,
        }
    }
}

pub fn predict_local_latency(scene: &SceneFrame, fovea_fraction: f64, rates: &RateEstimates) -> f64 {
    scene.triangles as f64 * fovea_fraction / rates.gpu_rate_tri_per_s
}

/// Transmit time of `bytes` plus the fixed per-frame protocol overhead.
pub fn predict_remote_latency(bytes: u64, rates: &RateEstimates, overhead_s: f64) -> f64 {
    overhead_s + 8.0 * bytes as f64 / rates.throughput_bps
}

pub fn fps(t_gpu_s: f64, t_network_s: f64) -> Result<f64> {
    for t in [t_gpu_s, t_network_s] {
        if !(t > 0.0) {
            return Err(Error::NonPositiveLatency(t));
        }
    }
    Ok((1.0 / t_gpu_s).min(1.0 / t_network_s))
}

pub fn update_estimates(
    rates: RateEstimates,
    measured_local_s: f64,
    measured_transmit_s: f64,
    triangles_rendered: u64,
    bytes_sent: u64,
) -> Result<RateEstimates> {
    rates
        .observe_gpu(measured_local_s, triangles_rendered)?
        .observe_network(measured_transmit_s, bytes_sent)
}

/// Least-squares per-frame overhead for measured `(bytes, latency_s)` pairs at a
/// fixed nominal throughput.
pub fn fit_overhead(pairs: &[(u64, f64)], throughput_bps: f64) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let residual: f64 = pairs
        .iter()
        .map(|&(bytes, latency)| latency - 8.0 * bytes as f64 / throughput_bps)
        .sum();
    (residual / pairs.len() as f64).max(0.0)
}

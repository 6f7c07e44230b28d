//! Motion codec: packs a per-frame head and gaze delta into a 10-bit table row address.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MOTION_CODE_BITS: u32 = 10;
pub const MOTION_CODES: usize = 1 << MOTION_CODE_BITS;

const DOF_BITS: u32 = 6;
const GAZE_DIRECTION_SHIFT: u32 = DOF_BITS;
const GAZE_MAGNITUDE_SHIFT: u32 = DOF_BITS + 2;

/// Magnitude bucket edges as multiples of the gaze threshold.
const GAZE_BUCKET_EDGES: [f64; 3] = [1.0, 4.0, 16.0];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MotionSample {
    /// Head pose change: dx, dy, dz (m), droll, dpitch, dyaw (deg).
    pub d6: [f64; 6],
    /// Fovea-centre movement in pixels.
    pub gaze_delta: (f64, f64),
}

impl MotionSample {
    pub const STILL: Self = Self {
        d6: [0.0; 6],
        gaze_delta: (0.0, 0.0),
    };

    pub fn is_finite(&self) -> bool {
        self.d6.iter().all(|v| v.is_finite()) && self.gaze_delta.0.is_finite() && self.gaze_delta.1.is_finite()
    }

    /// Largest head-motion component in units of its threshold.
    pub fn normalized_magnitude(&self, thresholds: &MotionThresholds) -> f64 {
        self.d6
            .iter()
            .zip(thresholds.dof)
            .map(|(d, t)| d.abs() / t)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionThresholds {
    /// Same order as `MotionSample::d6`.
    pub dof: [f64; 6],
    pub gaze_px: f64,
}

impl Default for MotionThresholds {
    fn default() -> Self {
        Self {
            dof: [0.01, 0.01, 0.01, 0.5, 0.5, 0.5],
            gaze_px: 4.0,
        }
    }
}

impl MotionThresholds {
    pub fn validate(&self) -> Result<()> {
        if self
            .dof
            .iter()
            .chain([&self.gaze_px])
            .any(|t| !(*t > 0.0 && t.is_finite()))
        {
            return Err(Error::Config("motion thresholds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MotionIndex(u16);

impl MotionIndex {
    pub fn new(code: u16) -> Result<Self> {
        if (code as usize) < MOTION_CODES {
            Ok(Self(code))
        } else {
            Err(Error::Config(format!(
                "motion code {code} exceeds {MOTION_CODE_BITS} bits"
            )))
        }
    }

    pub fn code(self) -> u16 {
        self.0
    }
}

/// Bits 0..6: one per head DoF, set when the change exceeds its threshold.
/// Bits 6..8: gaze direction quadrant (+x, +y, -x, -y by dominant axis).
/// Bits 8..10: gaze magnitude bucket. A gaze change within its threshold
/// encodes as bucket 0 with direction 0.
pub fn encode_motion(sample: &MotionSample, thresholds: &MotionThresholds) -> MotionIndex {
    let mut code = 0u16;
    for (bit, (d, t)) in sample.d6.iter().zip(thresholds.dof).enumerate() {
        if d.abs() > t {
            code |= 1 << bit;
        }
    }
    let (gx, gy) = sample.gaze_delta;
    let magnitude = gx.hypot(gy) / thresholds.gaze_px;
    // NaN compares false everywhere and lands in bucket 0.
    let bucket = GAZE_BUCKET_EDGES.iter().filter(|&&edge| magnitude > edge).count() as u16;
    if bucket > 0 {
        let quadrant = if gx.abs() >= gy.abs() {
            if gx > 0.0 {
                0
            } else {
                2
            }
        } else if gy > 0.0 {
            1
        } else {
            3
        };
        code |= quadrant << GAZE_DIRECTION_SHIFT;
        code |= bucket << GAZE_MAGNITUDE_SHIFT;
    }
    MotionIndex(code)
}

//! Lookup-table workload controller. Each frame it encodes the user's motion,
//! picks the eccentricity change whose learned latency offset best matches the
//! predicted remote/local imbalance, and afterwards folds the observed effect of
//! that change back into the table.

mod codec;
mod table;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use codec::{encode_motion, MotionIndex, MotionSample, MotionThresholds, MOTION_CODES};
pub use table::{DeltaTag, MappingTable, TableSidecar, MAX_DELTA_DEG, TABLE_DEPTH, TAG_COUNT};

use crate::error::{Error, Result};
use crate::perfmodel::{LatencyEstimate, RateEstimates};

pub const DEFAULT_E_BOUNDS: (f64, f64) = (5.0, 90.0);
pub const DEFAULT_E1_INIT: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerState {
    pub table: MappingTable,
    pub rates: RateEstimates,
    pub current_e1_deg: f64,
    pub e_bounds: (f64, f64),
    /// Measured remote-minus-local latency of the previous frame.
    pub last_measured_delta_s: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub e_min_deg: f64,
    pub e_max_deg: f64,
    pub e1_init_deg: f64,
    pub thresholds: MotionThresholds,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            e_min_deg: DEFAULT_E_BOUNDS.0,
            e_max_deg: DEFAULT_E_BOUNDS.1,
            e1_init_deg: DEFAULT_E1_INIT,
            thresholds: MotionThresholds::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        check_bounds((self.e_min_deg, self.e_max_deg), self.e1_init_deg)
    }
}

fn check_bounds((lo, hi): (f64, f64), e1: f64) -> Result<()> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::Config(format!("eccentricity bounds [{lo}, {hi}] invalid")));
    }
    if !(lo..=hi).contains(&e1) {
        return Err(Error::Config(format!("e1 {e1} outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl ControllerState {
    pub fn new(table: MappingTable, rates: RateEstimates, current_e1_deg: f64, e_bounds: (f64, f64)) -> Result<Self> {
        rates.validate()?;
        let state = Self {
            table,
            rates,
            current_e1_deg,
            e_bounds,
            last_measured_delta_s: None,
        };
        state.validate()?;
        Ok(state)
    }

    /// Linear-prior table whose slope is the initial local latency per degree of fovea.
    pub fn with_linear_prior(rates: RateEstimates, config: &ControllerConfig, initial_local_s: f64) -> Result<Self> {
        config.validate()?;
        let slope = initial_local_s / config.e1_init_deg;
        Self::new(
            MappingTable::linear_prior(slope),
            rates,
            config.e1_init_deg,
            (config.e_min_deg, config.e_max_deg),
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_bounds(self.e_bounds, self.current_e1_deg)
    }
}

/// Tag whose stored offset is closest to the predicted imbalance.
pub fn select_delta(state: &ControllerState, idx: MotionIndex, est: &LatencyEstimate) -> DeltaTag {
    let key = |tag: DeltaTag, offset: f64| ((offset - est.delta_s).abs(), tag.delta_deg().abs(), tag);
    state
        .table
        .row(idx)
        .map(|(tag, offset)| key(tag, offset))
        .min_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        })
        .map(|(_, _, tag)| tag)
        .unwrap_or(DeltaTag::ZERO)
}

pub fn apply_delta(mut state: ControllerState, tag: DeltaTag) -> ControllerState {
    let (lo, hi) = state.e_bounds;
    state.current_e1_deg = (state.current_e1_deg + tag.delta_deg() as f64).clamp(lo, hi);
    state
}

pub fn reward_update(
    mut state: ControllerState,
    idx: MotionIndex,
    tag: DeltaTag,
    measured_delta_s: f64,
) -> ControllerState {
    // A non-finite reward would poison the entry for good.
    if !measured_delta_s.is_finite() {
        return state;
    }
    let alpha = state.rates.alpha;
    let previous = state.table.get(idx, tag);
    state
        .table
        .set(idx, tag, (1.0 - alpha) * previous + alpha * measured_delta_s);
    state.table.record_visit(idx, tag);
    state
}

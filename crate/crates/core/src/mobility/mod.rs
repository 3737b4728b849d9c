//! Discrete-time system-level mobility simulation.
//!
//! Every tick the simulator moves the UEs, evaluates path loss, shadowing,
//! beamforming gain and fast fading for every UE–cell link, feeds the
//! resulting RSRP through L1 and L3 filtering, and advances the A3 handover
//! and T310 radio-link-failure state machines. Outage accrues whenever the
//! UE cannot receive data: SINR below `γ_out`, random access during a
//! handover, or re-establishment after a radio link failure.

mod engine;
mod handover;
mod kpi;
mod measurement;
mod motion;
mod propagation;
mod scenario;

pub use engine::{
    build_jakes_lut, build_simplified_lut, run_simulation, ChannelModel, FadingSource, Features, GainModel, LinkStats,
    SimConfig, SimOutput,
};
pub use handover::{A3Tracker, HandoverProcedure, HoFailurePhase, HoProgress, RlfEvent, RlfTracker, Thresholds};
pub use kpi::{
    analyze_event_log, outage_percent, read_event_log, write_event_log, CellKpi, Event, EventKind, KpiReport, UeKpi,
};
pub use measurement::{
    alpha_from_time_constant, l1_filter, l3_filter_update, measurement_error_sample, L1Filter,
};
pub use motion::{step_ue_motion, Heading, UeMotion};
pub use propagation::{
    compute_rsrp, compute_sinr, line_of_sight, PanelFrame, PathLossModel, ShadowingParams, ShadowingProcess,
    UmiStreetCanyon,
};
pub use scenario::{Cell, Rect, Region, Scenario, SimSettings, Site, StreetGrid, UeGroup};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamforming::BeamformingError;
use crate::channel_stats::ChannelStatsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("invalid configuration `{name}`: {reason}")]
    InvalidConfig { name: &'static str, reason: String },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    ChannelStats(#[from] ChannelStatsError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
    #[error("event log line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for MobilityError {
    fn from(e: std::io::Error) -> Self {
        MobilityError::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> MobilityError {
    MobilityError::InvalidConfig { name, reason: reason.into() }
}

/// Radio, measurement and timer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub tx_power_dbm_per_prb: f64,
    pub noise_dbm_per_prb: f64,
    pub a3_offset_db: f64,
    pub time_to_trigger_s: f64,
    pub t310_s: f64,
    pub t_ho_s: f64,
    pub reestablishment_s: f64,
    pub gamma_out_db: f64,
    pub gamma_in_db: f64,
    pub measurement_error_sigma_db: f64,
    pub l1_period_s: f64,
    pub l1_window_s: f64,
    pub shadowing: ShadowingParams,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            tx_power_dbm_per_prb: 12.0,
            noise_dbm_per_prb: -97.0,
            a3_offset_db: 3.0,
            time_to_trigger_s: 0.08,
            t310_s: 0.6,
            t_ho_s: 0.04,
            reestablishment_s: 0.2,
            gamma_out_db: -8.0,
            gamma_in_db: -6.0,
            measurement_error_sigma_db: 2.0,
            l1_period_s: 0.04,
            l1_window_s: 0.2,
            shadowing: ShadowingParams::default(),
        }
    }
}

/// Converts a duration to a whole number of ticks, rejecting non-multiples.
pub(crate) fn to_ticks(name: &'static str, duration_s: f64, tick_s: f64) -> Result<u32, MobilityError> {
    if !(duration_s.is_finite() && duration_s >= 0.0) {
        return Err(invalid(name, "must be non-negative"));
    }
    let n = (duration_s / tick_s).round();
    if (n * tick_s - duration_s).abs() > 1e-9 * duration_s.max(tick_s) {
        return Err(invalid(name, format!("{duration_s} s is not a multiple of the {tick_s} s tick")));
    }
    Ok(n as u32)
}

impl RadioParams {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds { gamma_out_db: self.gamma_out_db, gamma_in_db: self.gamma_in_db }
    }

    pub fn validate(&self, tick_s: f64) -> Result<(), MobilityError> {
        for (name, v) in [
            ("tx_power_dbm_per_prb", self.tx_power_dbm_per_prb),
            ("noise_dbm_per_prb", self.noise_dbm_per_prb),
            ("a3_offset_db", self.a3_offset_db),
            ("gamma_out_db", self.gamma_out_db),
            ("gamma_in_db", self.gamma_in_db),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.gamma_in_db < self.gamma_out_db {
            return Err(invalid("gamma_in_db", "must not be below gamma_out_db"));
        }
        if !(self.measurement_error_sigma_db.is_finite() && self.measurement_error_sigma_db >= 0.0) {
            return Err(invalid("measurement_error_sigma_db", "must be non-negative"));
        }
        to_ticks("time_to_trigger_s", self.time_to_trigger_s, tick_s)?;
        to_ticks("t_ho_s", self.t_ho_s, tick_s)?;
        to_ticks("reestablishment_s", self.reestablishment_s, tick_s)?;
        if to_ticks("t310_s", self.t310_s, tick_s)? == 0 {
            return Err(invalid("t310_s", "must be at least one tick"));
        }
        let period = to_ticks("l1_period_s", self.l1_period_s, tick_s)?;
        let window = to_ticks("l1_window_s", self.l1_window_s, tick_s)?;
        if period == 0 || window == 0 {
            return Err(invalid("l1_period_s", "L1 period and window must be at least one tick"));
        }
        self.shadowing.validate()
    }
}

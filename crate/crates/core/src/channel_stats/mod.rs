//! Per-beam channel statistics and the fast-fading look-up table.
//!
//! A [`TupleLibrary`] holds, for LOS and NLOS, `M` tuples of per-beam
//! `(coherence time, path diversity)` rows measured at a reference carrier
//! and speed. A [`FadingLut`] holds pre-generated Jakes envelopes on a grid of
//! path diversities and coherence times. Each simulated link draws one tuple
//! per condition, rescales its coherence times to the simulated carrier and
//! speed, and plays back the LUT envelope with the nearest smaller grid values.

mod assign;
mod lut;
mod synth;
mod tuples;

pub use assign::{
    assign_link_channel, sample_fading, select_nearest_below, BeamSelection, LinkChannelAssignment, LutCell,
};
pub use lut::{build_fading_lut, load_lut, save_lut, FadingLut, LutConfig};
pub use synth::{synthesize_tuple_library, RankDistribution, SyntheticTupleParams};
pub use tuples::{export_tuples, ingest_tuples, ChannelTuple, Provenance, TupleLibrary, TupleRow};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fading::FadingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelStatsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("tuple file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("lut manifest: {0}")]
    Manifest(String),
    #[error("beam rank {rank} is not assigned (tuples have {beams} rows)")]
    UnassignedBeam { rank: usize, beams: usize },
    #[error(transparent)]
    Fading(#[from] FadingError),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for ChannelStatsError {
    fn from(e: std::io::Error) -> Self {
        ChannelStatsError::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ChannelStatsError {
    ChannelStatsError::InvalidParameter { name, reason: reason.into() }
}

/// Propagation condition of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Los => "LOS",
            Condition::Nlos => "NLOS",
        })
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "LOS" | "los" => Ok(Condition::Los),
            "NLOS" | "nlos" => Ok(Condition::Nlos),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}

/// Rescales a coherence time measured at `(ref_carrier_hz, ref_speed_mps)` to
/// `(new_carrier_hz, new_speed_mps)`: `Tc' = Tc · f·v / (f'·v')`.
pub fn scale_coherence_time(
    tc_s: f64,
    ref_carrier_hz: f64,
    ref_speed_mps: f64,
    new_carrier_hz: f64,
    new_speed_mps: f64,
) -> Result<f64, ChannelStatsError> {
    for (name, v) in [
        ("tc_s", tc_s),
        ("ref_carrier_hz", ref_carrier_hz),
        ("ref_speed_mps", ref_speed_mps),
        ("new_carrier_hz", new_carrier_hz),
        ("new_speed_mps", new_speed_mps),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(name, "must be positive"));
        }
    }
    Ok(tc_s * (ref_carrier_hz * ref_speed_mps) / (new_carrier_hz * new_speed_mps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::kmh_to_mps;

    #[test]
    fn scaling_to_30_kmh() {
        let tc = scale_coherence_time(6.906e-3, 28e9, kmh_to_mps(1.0), 28e9, kmh_to_mps(30.0)).unwrap();
        assert!((tc - 0.2302e-3).abs() < 1e-15, "{tc}");
    }

    #[test]
    fn identity_and_inverse() {
        let v = kmh_to_mps(3.0);
        assert_eq!(scale_coherence_time(5e-3, 28e9, v, 28e9, v).unwrap(), 5e-3);
        let up = scale_coherence_time(5e-3, 28e9, v, 56e9, v).unwrap();
        let back = scale_coherence_time(up, 56e9, v, 28e9, v).unwrap();
        assert!((back - 5e-3).abs() < 1e-18);
    }

    #[test]
    fn scaling_rejects_non_positive() {
        assert!(scale_coherence_time(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(scale_coherence_time(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(scale_coherence_time(1.0, -1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn condition_text() {
        assert_eq!("NLOS".parse::<Condition>().unwrap(), Condition::Nlos);
        assert_eq!(Condition::Los.to_string(), "LOS");
        assert!("foo".parse::<Condition>().is_err());
    }
}

//! Jakes sum-of-sinusoids fading with configurable path diversity.
//!
//! The power envelope of an `L`-path channel is the normalized sum of `L`
//! independent Jakes processes, each the superposition of `K` unit sinusoids
//! with uniformly drawn arrival angles and phases:
//!
//! ```text
//! P_L(t) = 1/(K·L) · Σ_l | Σ_k exp(j(2π f_max cos θ_kl · t + φ_kl)) |²
//! ```
//!
//! For large `K` the envelope is chi-square distributed with `2L` degrees of
//! freedom, has unit mean and variance `1/L`, and its autocorrelation follows
//! `J0²(2π f_max Δt)` regardless of `L`. The estimators in this module invert
//! those relations: path diversity from the variance, coherence time from the
//! 50% crossing of the empirical autocorrelation.

mod estimate;
mod generator;
mod io;

pub use estimate::{empirical_autocorrelation, estimate_envelope_stats, EnvelopeStats, StatsQuality};
pub use generator::{generate_multipath_envelope, EnvelopeConfig};
pub use io::{read_envelope_csv, write_envelope_csv};

use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

/// Default number of sinusoids per path.
pub const DEFAULT_SINUSOIDS: u32 = 512;

/// Smallest accepted number of sinusoids per path.
pub const MIN_SINUSOIDS: u32 = 64;

/// First positive zero of the Bessel function `J0`.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FadingError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error(
        "sample period {sample_period_s} s is not below the Nyquist limit for a {max_doppler_hz} Hz Doppler spread"
    )]
    Nyquist { sample_period_s: f64, max_doppler_hz: f64 },
    #[error("envelope is empty")]
    Empty,
    #[error("envelope has zero variance, path diversity is undefined")]
    ZeroVariance,
    #[error("autocorrelation never drops to 0.5 within the record")]
    CoherenceUnresolved,
    #[error("envelope csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for FadingError {
    fn from(e: std::io::Error) -> Self {
        FadingError::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FadingError {
    FadingError::InvalidParameter { name, reason: reason.into() }
}

/// Carrier frequency and receiver speed, with the maximum Doppler shift they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerParams {
    carrier_frequency_hz: f64,
    speed_mps: f64,
    max_doppler_hz: f64,
}

impl DopplerParams {
    pub fn new(carrier_frequency_hz: f64, speed_mps: f64) -> Result<Self, FadingError> {
        if !(carrier_frequency_hz.is_finite() && carrier_frequency_hz > 0.0) {
            return Err(invalid("carrier_frequency_hz", "must be positive and finite"));
        }
        if !(speed_mps.is_finite() && speed_mps >= 0.0) {
            return Err(invalid("speed_mps", "must be non-negative and finite"));
        }
        Ok(Self {
            carrier_frequency_hz,
            speed_mps,
            max_doppler_hz: speed_mps / SPEED_OF_LIGHT_MPS * carrier_frequency_hz,
        })
    }

    pub fn from_kmh(carrier_frequency_hz: f64, speed_kmh: f64) -> Result<Self, FadingError> {
        Self::new(carrier_frequency_hz, kmh_to_mps(speed_kmh))
    }

    pub fn carrier_frequency_hz(&self) -> f64 {
        self.carrier_frequency_hz
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_mps
    }

    pub fn max_doppler_hz(&self) -> f64 {
        self.max_doppler_hz
    }
}

pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh / 3.6
}

/// Doppler shift of a wave arriving at `arrival_angle_rad` relative to the direction of motion.
pub fn doppler_shift(params: &DopplerParams, arrival_angle_rad: f64) -> f64 {
    params.max_doppler_hz * arrival_angle_rad.cos()
}

/// Normalized power-envelope autocorrelation of Jakes fading, `J0²(2π f_max Δt)`.
pub fn theoretical_autocorrelation(max_doppler_hz: f64, lag_s: f64) -> f64 {
    let j = libm::j0(2.0 * std::f64::consts::PI * max_doppler_hz * lag_s);
    j * j
}

/// 50%-correlation coherence time of Jakes fading, `9 / (16π f_max)`.
pub fn coherence_time_jakes(max_doppler_hz: f64) -> Result<f64, FadingError> {
    if !(max_doppler_hz.is_finite() && max_doppler_hz > 0.0) {
        return Err(invalid("max_doppler_hz", "must be positive"));
    }
    Ok(9.0 / (16.0 * std::f64::consts::PI * max_doppler_hz))
}

/// Maximum Doppler whose Jakes coherence time equals `coherence_time_s`.
pub fn max_doppler_for_coherence_time(coherence_time_s: f64) -> Result<f64, FadingError> {
    if !(coherence_time_s.is_finite() && coherence_time_s > 0.0) {
        return Err(invalid("coherence_time_s", "must be positive"));
    }
    Ok(9.0 / (16.0 * std::f64::consts::PI * coherence_time_s))
}

/// Default sampling period: 1 ms, or finer when needed to resolve the
/// autocorrelation main lobe (16 samples per `1/f_max`).
pub fn default_sample_period(max_doppler_hz: f64) -> f64 {
    if max_doppler_hz > 0.0 {
        (1.0 / (16.0 * max_doppler_hz)).min(1e-3)
    } else {
        1e-3
    }
}

/// Parameters an envelope was generated from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationParams {
    pub sinusoids: u32,
    pub path_diversity: u32,
    pub max_doppler_hz: f64,
    pub seed: u64,
}

/// A sampled, unit-mean power envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingProcess {
    samples: Vec<f64>,
    sample_period_s: f64,
    params: Option<GenerationParams>,
}

impl FadingProcess {
    /// Wraps externally produced samples. Samples must be finite and non-negative.
    pub fn from_samples(
        samples: Vec<f64>,
        sample_period_s: f64,
        params: Option<GenerationParams>,
    ) -> Result<Self, FadingError> {
        if !(sample_period_s.is_finite() && sample_period_s > 0.0) {
            return Err(invalid("sample_period_s", "must be positive"));
        }
        if let Some(bad) = samples.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("samples", format!("sample {bad} is negative or not finite")));
        }
        Ok(Self { samples, sample_period_s, params })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period_s(&self) -> f64 {
        self.sample_period_s
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period_s
    }

    pub fn params(&self) -> Option<&GenerationParams> {
        self.params.as_ref()
    }

    /// Sample at `index`, wrapping around the end of the record.
    pub fn wrapped(&self, index: u64) -> f64 {
        self.samples[(index % self.samples.len() as u64) as usize]
    }
}

use super::{coherence_time_jakes, FadingError, FadingProcess};

/// Whether the record was long enough for the estimates to be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsQuality {
    Ok,
    /// Fewer than 1000 samples, or fewer than 20 theoretical coherence times.
    ShortRecord,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeStats {
    /// Mean of the raw envelope.
    pub mean_power: f64,
    /// Variance of the mean-normalized envelope.
    pub variance: f64,
    pub estimated_path_diversity: u32,
    pub estimated_coherence_time_s: f64,
    pub quality: StatsQuality,
}

/// Estimates path diversity (`round(1/σ²)`, halves round up, at least 1) and
/// the 50% coherence time of a power envelope.
///
/// The coherence time is the first lag at which the biased, mean-removed
/// autocovariance normalized by its lag-0 value drops to 0.5, linearly
/// interpolated between sample lags.
pub fn estimate_envelope_stats(process: &FadingProcess) -> Result<EnvelopeStats, FadingError> {
    let x = process.samples();
    if x.is_empty() {
        return Err(FadingError::Empty);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(FadingError::ZeroVariance);
    }
    let var_raw = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let variance = var_raw / (mean * mean);
    if !(variance > 0.0) {
        return Err(FadingError::ZeroVariance);
    }
    let estimated_path_diversity = quantize_diversity(1.0 / variance);

    let lag = half_correlation_lag(x, mean, var_raw).ok_or(FadingError::CoherenceUnresolved)?;
    let estimated_coherence_time_s = lag * process.sample_period_s();

    let long_enough = match process.params().map(|p| p.max_doppler_hz) {
        Some(f) if f > 0.0 => {
            let tc = coherence_time_jakes(f)?;
            process.duration_s() >= 20.0 * tc
        }
        _ => process.duration_s() >= 20.0 * estimated_coherence_time_s,
    };
    let quality = if x.len() >= 1000 && long_enough { StatsQuality::Ok } else { StatsQuality::ShortRecord };

    Ok(EnvelopeStats {
        mean_power: mean,
        variance,
        estimated_path_diversity,
        estimated_coherence_time_s,
        quality,
    })
}

/// Nearest integer, halves rounding up, never below 1.
fn quantize_diversity(inverse_variance: f64) -> u32 {
    ((inverse_variance + 0.5).floor() as u32).max(1)
}

fn autocovariance(x: &[f64], mean: f64, lag: usize) -> f64 {
    x.iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum::<f64>()
        / x.len() as f64
}

/// Fractional lag, in samples, of the first downward crossing of 0.5.
fn half_correlation_lag(x: &[f64], mean: f64, c0: f64) -> Option<f64> {
    let mut prev = 1.0;
    for lag in 1..x.len() / 2 {
        let r = autocovariance(x, mean, lag) / c0;
        if r <= 0.5 {
            return Some((lag - 1) as f64 + (prev - 0.5) / (prev - r));
        }
        prev = r;
    }
    None
}

/// Biased normalized autocovariance for lags `0..=max_lag`.
pub fn empirical_autocorrelation(process: &FadingProcess, max_lag: usize) -> Result<Vec<f64>, FadingError> {
    let x = process.samples();
    if x.is_empty() {
        return Err(FadingError::Empty);
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let c0 = autocovariance(x, mean, 0);
    if !(c0 > 0.0) {
        return Err(FadingError::ZeroVariance);
    }
    Ok((0..=max_lag.min(x.len() - 1)).map(|k| autocovariance(x, mean, k) / c0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{generate_multipath_envelope, EnvelopeConfig};

    fn envelope(l: u32, f: f64, n: usize, seed: u64) -> FadingProcess {
        generate_multipath_envelope(&EnvelopeConfig {
            path_diversity: l,
            sinusoids: 512,
            max_doppler_hz: f,
            duration_s: n as f64 * 1e-3,
            sample_period_s: 1e-3,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn recovers_eight_paths() {
        let s = estimate_envelope_stats(&envelope(8, 25.93, 100_000, 3)).unwrap();
        assert_eq!(s.estimated_path_diversity, 8, "{s:?}");
        assert_eq!(s.quality, StatsQuality::Ok);
    }

    #[test]
    fn coherence_time_near_jakes() {
        let s = estimate_envelope_stats(&envelope(1, 25.93, 100_000, 5)).unwrap();
        let rel = (s.estimated_coherence_time_s - 6.906e-3).abs() / 6.906e-3;
        assert!(rel < 0.15, "{s:?}");
    }

    #[test]
    fn constant_and_empty_rejected() {
        let ones = FadingProcess::from_samples(vec![1.0; 5000], 1e-3, None).unwrap();
        assert_eq!(estimate_envelope_stats(&ones), Err(FadingError::ZeroVariance));
        let zeros = FadingProcess::from_samples(vec![0.0; 10], 1e-3, None).unwrap();
        assert_eq!(estimate_envelope_stats(&zeros), Err(FadingError::ZeroVariance));
        let empty = FadingProcess::from_samples(vec![], 1e-3, None).unwrap();
        assert_eq!(estimate_envelope_stats(&empty), Err(FadingError::Empty));
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize_diversity(2.5), 3);
        assert_eq!(quantize_diversity(2.499), 2);
        assert_eq!(quantize_diversity(0.3), 1);
        assert_eq!(quantize_diversity(7.6), 8);
    }

    #[test]
    fn two_level_envelope_diversity() {
        // Alternating 1±a has normalized variance a².
        let a = (1.0f64 / 3.0).sqrt();
        let x: Vec<f64> = (0..4000).map(|i| if i % 2 == 0 { 1.0 + a } else { 1.0 - a }).collect();
        let p = FadingProcess::from_samples(x, 1e-3, None).unwrap();
        let s = estimate_envelope_stats(&p).unwrap();
        assert!((1.0 / s.variance - 3.0).abs() < 1e-9);
        assert_eq!(s.estimated_path_diversity, 3);
    }

    #[test]
    fn short_record_is_flagged() {
        let s = estimate_envelope_stats(&envelope(1, 25.93, 400, 1)).unwrap();
        assert_eq!(s.quality, StatsQuality::ShortRecord);
    }

    #[test]
    fn interpolated_crossing() {
        // Autocorrelation drops from 1 to 0 at lag 1, crossing 0.5 halfway.
        let x = [0.0, 2.0, 4.0, 2.0, 0.0, 2.0, 4.0, 2.0];
        let mean = 2.0;
        let c0 = autocovariance(&x, mean, 0);
        let r1 = autocovariance(&x, mean, 1) / c0;
        assert_eq!(r1, 0.0);
        assert_eq!(half_correlation_lag(&x, mean, c0), Some(0.5));
    }
}

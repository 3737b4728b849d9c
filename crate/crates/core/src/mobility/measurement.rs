use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{invalid, MobilityError};

pub(crate) fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub(crate) fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Zero-mean Gaussian measurement error in dB. Always consumes one normal
/// draw, so streams stay aligned whether or not the error is enabled.
pub fn measurement_error_sample<R: Rng + ?Sized>(rng: &mut R, sigma_db: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma_db * z
}

/// Mean of the window's linear powers, in dB. An empty window yields `-∞`.
pub fn l1_filter(window_db: &[f64]) -> f64 {
    let sum: f64 = window_db.iter().map(|&x| db_to_lin(x)).sum();
    lin_to_db(sum / window_db.len() as f64)
}

/// `α = 1 − 2^(−T_L1 / T_α)`: a past measurement's weight halves after `T_α`.
pub fn alpha_from_time_constant(t_alpha_s: f64, l1_period_s: f64) -> Result<f64, MobilityError> {
    if !(t_alpha_s > 0.0) || t_alpha_s.is_nan() {
        return Err(invalid("t_alpha_s", "must be positive"));
    }
    if !(l1_period_s.is_finite() && l1_period_s > 0.0) {
        return Err(invalid("l1_period_s", "must be positive"));
    }
    Ok(1.0 - (-l1_period_s / t_alpha_s).exp2())
}

/// One step of the dB-domain IIR filter `α·q + (1−α)·prev`; the first sample
/// (`prev = None`) initializes the state.
pub fn l3_filter_update(prev_db: Option<f64>, q_db: f64, alpha: f64) -> Result<f64, MobilityError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", "must lie in (0, 1]"));
    }
    Ok(match prev_db {
        None => q_db,
        Some(p) => alpha * q_db + (1.0 - alpha) * p,
    })
}

/// Sliding window of linear RSRP samples for one link.
#[derive(Debug, Clone)]
pub struct L1Filter {
    window: VecDeque<f64>,
    capacity: usize,
}

impl L1Filter {
    pub fn new(capacity: usize) -> Self {
        Self { window: VecDeque::with_capacity(capacity), capacity: capacity.max(1) }
    }

    pub fn push_db(&mut self, rsrp_db: f64) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(db_to_lin(rsrp_db));
    }

    /// Linear-domain mean of the current window in dB, or `None` when empty.
    pub fn output_db(&self) -> Option<f64> {
        if self.window.is_empty() {
            return None;
        }
        Some(lin_to_db(self.window.iter().sum::<f64>() / self.window.len() as f64))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn measurement_error_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(measurement_error_sample(&mut rng, 0.0), 0.0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| measurement_error_sample(&mut rng, 2.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(mean.abs() < 0.03, "{mean}");
        assert!((sd / 2.0 - 1.0).abs() < 0.03, "{sd}");
    }

    #[test]
    fn l1_examples() {
        assert!((l1_filter(&[-80.0; 5]) + 80.0).abs() < 1e-12);
        assert!((l1_filter(&[-73.2]) + 73.2).abs() < 1e-12);
        let ripple = l1_filter(&[3.0, -3.0]);
        let oracle = 10.0 * ((10f64.powf(0.3) + 10f64.powf(-0.3)) / 2.0).log10();
        assert!((ripple - oracle).abs() < 1e-12);
        assert!((ripple - 0.963).abs() < 1e-3);
    }

    #[test]
    fn l1_window_slides() {
        let mut f = L1Filter::new(2);
        assert_eq!(f.output_db(), None);
        f.push_db(0.0);
        assert!(f.output_db().unwrap().abs() < 1e-12);
        f.push_db(10.0);
        f.push_db(10.0);
        assert!((f.output_db().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_examples() {
        assert!((alpha_from_time_constant(0.04, 0.04).unwrap() - 0.5).abs() < 1e-15);
        assert!((alpha_from_time_constant(0.1, 0.01).unwrap() - 0.06697).abs() < 1e-5);
        assert!(alpha_from_time_constant(1e12, 0.01).unwrap() < 1e-10);
        assert!(alpha_from_time_constant(0.0, 0.01).is_err());
        assert!(alpha_from_time_constant(0.1, -1.0).is_err());
    }

    #[test]
    fn l3_examples() {
        assert_eq!(l3_filter_update(Some(-90.0), -70.0, 1.0).unwrap(), -70.0);
        assert_eq!(l3_filter_update(None, -70.0, 0.2).unwrap(), -70.0);
        let mut y = -70.0;
        for _ in 0..50 {
            y = l3_filter_update(Some(y), -70.0, 0.3).unwrap();
        }
        assert_eq!(y, -70.0);
        // Unit step: the old value's weight halves after T_α / T_L1 = 10 updates.
        let alpha = alpha_from_time_constant(0.1, 0.01).unwrap();
        let mut y = 0.0;
        for _ in 0..10 {
            y = l3_filter_update(Some(y), 1.0, alpha).unwrap();
        }
        assert!((y - 0.5).abs() < 1e-12, "{y}");
        assert!(l3_filter_update(None, 0.0, 0.0).is_err());
        assert!(l3_filter_update(None, 0.0, 1.5).is_err());
    }
}

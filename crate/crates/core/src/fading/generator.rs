use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{invalid, FadingError, FadingProcess, GenerationParams, MIN_SINUSOIDS};

/// Accumulator width of the inner sinusoid loop.
const LANES: usize = 8;

/// Samples between exact phase resynchronizations of the phasor recursion.
const BLOCK: usize = 2048;

/// Request for one multipath power envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConfig {
    pub path_diversity: u32,
    pub sinusoids: u32,
    pub max_doppler_hz: f64,
    pub duration_s: f64,
    pub sample_period_s: f64,
    pub seed: u64,
}

impl EnvelopeConfig {
    pub fn sample_count(&self) -> usize {
        // Tolerate durations that are an exact multiple up to rounding.
        (self.duration_s / self.sample_period_s * (1.0 + 1e-12)).floor() as usize
    }

    fn validate(&self) -> Result<usize, FadingError> {
        if self.path_diversity == 0 {
            return Err(invalid("path_diversity", "must be at least 1"));
        }
        if self.sinusoids < MIN_SINUSOIDS {
            return Err(invalid("sinusoids", format!("must be at least {MIN_SINUSOIDS}")));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(invalid("duration_s", "must be positive"));
        }
        if !(self.sample_period_s.is_finite() && self.sample_period_s > 0.0) {
            return Err(invalid("sample_period_s", "must be positive"));
        }
        if !(self.max_doppler_hz.is_finite() && self.max_doppler_hz >= 0.0) {
            return Err(invalid("max_doppler_hz", "must be non-negative"));
        }
        if self.max_doppler_hz > 0.0 && self.sample_period_s >= 1.0 / (2.0 * self.max_doppler_hz) {
            return Err(FadingError::Nyquist {
                sample_period_s: self.sample_period_s,
                max_doppler_hz: self.max_doppler_hz,
            });
        }
        let n = self.sample_count();
        if n < 2 {
            return Err(invalid("duration_s", "must cover at least two samples"));
        }
        Ok(n)
    }
}

/// Generates `P_L(n·Ts)` for `n = 0..N` with `N = floor(duration / Ts)`.
///
/// Angles and phases are drawn path by path, sinusoid by sinusoid, as
/// `(θ, φ)` pairs uniform on `[-π, π)` from a ChaCha8 stream seeded with
/// `seed`, so the output is bit-identical for identical configs.
pub fn generate_multipath_envelope(cfg: &EnvelopeConfig) -> Result<FadingProcess, FadingError> {
    let n = cfg.validate()?;
    let k = cfg.sinusoids as usize;
    let padded = k.div_ceil(LANES) * LANES;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut out = vec![0.0f64; n];
    let mut omega = vec![0.0f64; padded];
    let mut phi = vec![0.0f64; padded];
    for _ in 0..cfg.path_diversity {
        for i in 0..k {
            let theta: f64 = rng.random_range(-PI..PI);
            phi[i] = rng.random_range(-PI..PI);
            omega[i] = 2.0 * PI * cfg.max_doppler_hz * theta.cos() * cfg.sample_period_s;
        }
        accumulate_path_power(&mut out, &omega[..], &phi[..], k);
    }

    let norm = 1.0 / (cfg.sinusoids as f64 * cfg.path_diversity as f64);
    for p in &mut out {
        *p *= norm;
    }
    FadingProcess::from_samples(
        out,
        cfg.sample_period_s,
        Some(GenerationParams {
            sinusoids: cfg.sinusoids,
            path_diversity: cfg.path_diversity,
            max_doppler_hz: cfg.max_doppler_hz,
            seed: cfg.seed,
        }),
    )
}

/// Adds `|Σ_k exp(j(ω_k n + φ_k))|²` to `out[n]`.
///
/// Phasors advance by complex rotation and are recomputed exactly every
/// `BLOCK` samples. Entries past `active` are padding and stay zero.
fn accumulate_path_power(out: &mut [f64], omega: &[f64], phi: &[f64], active: usize) {
    let chunks = omega.len() / LANES;
    let mut state = PhasorState {
        re: vec![[0.0; LANES]; chunks],
        im: vec![[0.0; LANES]; chunks],
        rot_re: vec![[1.0; LANES]; chunks],
        rot_im: vec![[0.0; LANES]; chunks],
    };
    for i in 0..active {
        state.rot_re[i / LANES][i % LANES] = omega[i].cos();
        state.rot_im[i / LANES][i % LANES] = omega[i].sin();
    }

    for (b, block) in out.chunks_mut(BLOCK).enumerate() {
        let n0 = (b * BLOCK) as f64;
        for i in 0..active {
            let (s, c) = (omega[i] * n0 + phi[i]).sin_cos();
            state.re[i / LANES][i % LANES] = c;
            state.im[i / LANES][i % LANES] = s;
        }
        rotate_block(&mut state, block);
    }
}

struct PhasorState {
    re: Vec<[f64; LANES]>,
    im: Vec<[f64; LANES]>,
    rot_re: Vec<[f64; LANES]>,
    rot_im: Vec<[f64; LANES]>,
}

// The wider-vector variants compile the same scalar operations in the same
// order (no fused multiply-add), so every variant yields identical bits.
fn rotate_block(state: &mut PhasorState, block: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the required CPU feature was detected at runtime.
            return unsafe { rotate_block_avx512(state, block) };
        }
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the required CPU feature was detected at runtime.
            return unsafe { rotate_block_avx2(state, block) };
        }
    }
    rotate_block_generic(state, block)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn rotate_block_avx512(state: &mut PhasorState, block: &mut [f64]) {
    rotate_block_generic(state, block)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn rotate_block_avx2(state: &mut PhasorState, block: &mut [f64]) {
    rotate_block_generic(state, block)
}

#[inline(always)]
fn rotate_block_generic(state: &mut PhasorState, block: &mut [f64]) {
    let PhasorState { re, im, rot_re, rot_im } = state;
    for slot in block.iter_mut() {
        let mut acc_re = [0.0f64; LANES];
        let mut acc_im = [0.0f64; LANES];
        for (x, y) in re.iter().zip(im.iter()) {
            for j in 0..LANES {
                acc_re[j] += x[j];
                acc_im[j] += y[j];
            }
        }
        let sr: f64 = acc_re.iter().sum();
        let si: f64 = acc_im.iter().sum();
        *slot += sr * sr + si * si;

        for (((r, q), cr), ci) in re
            .as_flattened_mut()
            .iter_mut()
            .zip(im.as_flattened_mut().iter_mut())
            .zip(rot_re.as_flattened())
            .zip(rot_im.as_flattened())
        {
            let (x, y) = (*r, *q);
            *r = x * cr - y * ci;
            *q = x * ci + y * cr;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(l: u32, seed: u64) -> EnvelopeConfig {
        EnvelopeConfig {
            path_diversity: l,
            sinusoids: 512,
            max_doppler_hz: 25.93,
            duration_s: 100.0,
            sample_period_s: 1e-3,
            seed,
        }
    }

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n)
    }

    /// Direct evaluation of the sum of sinusoids, one sample at a time.
    fn brute_force(c: &EnvelopeConfig, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let mut angles = Vec::new();
        for _ in 0..c.path_diversity {
            let mut path = Vec::new();
            for _ in 0..c.sinusoids {
                let theta: f64 = rng.random_range(-PI..PI);
                let phi: f64 = rng.random_range(-PI..PI);
                path.push((theta, phi));
            }
            angles.push(path);
        }
        (0..n)
            .map(|i| {
                let t = i as f64 * c.sample_period_s;
                let mut p = 0.0;
                for path in &angles {
                    let (mut sr, mut si) = (0.0, 0.0);
                    for (theta, phi) in path {
                        let arg = 2.0 * PI * c.max_doppler_hz * theta.cos() * t + phi;
                        sr += arg.cos();
                        si += arg.sin();
                    }
                    p += sr * sr + si * si;
                }
                p / (c.sinusoids as f64 * c.path_diversity as f64)
            })
            .collect()
    }

    #[test]
    fn recursion_matches_direct_evaluation() {
        let c = EnvelopeConfig { path_diversity: 3, sinusoids: 70, duration_s: 5.0, ..cfg(1, 11) };
        let fast = generate_multipath_envelope(&c).unwrap();
        let n = 2 * BLOCK + 17;
        let slow = brute_force(&c, n);
        for (i, (a, b)) in fast.samples()[..n].iter().zip(&slow).enumerate() {
            assert!((a - b).abs() < 1e-9, "sample {i}: {a} vs {b}");
        }
    }

    #[test]
    fn unit_mean_and_single_path_variance() {
        let p = generate_multipath_envelope(&cfg(1, 7)).unwrap();
        assert_eq!(p.len(), 100_000);
        let (m, v) = mean_var(p.samples());
        assert!((m - 1.0).abs() < 0.03, "mean {m}");
        assert!((v - 1.0).abs() < 0.08, "variance {v}");
    }

    #[test]
    fn four_paths_quarter_variance() {
        let p = generate_multipath_envelope(&cfg(4, 7)).unwrap();
        let (_, v) = mean_var(p.samples());
        assert!((v - 0.25).abs() < 0.02, "variance {v}");
    }

    #[test]
    fn two_sample_shape_contract() {
        let c = EnvelopeConfig { duration_s: 2e-3, ..cfg(1, 1) };
        let p = generate_multipath_envelope(&c).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.samples().iter().all(|x| x.is_finite() && *x >= 0.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let c = EnvelopeConfig { duration_s: 3.0, ..cfg(2, 99) };
        let a = generate_multipath_envelope(&c).unwrap();
        let b = generate_multipath_envelope(&c).unwrap();
        assert_eq!(a, b);
        let other = generate_multipath_envelope(&EnvelopeConfig { seed: 100, ..c }).unwrap();
        assert_ne!(a.samples(), other.samples());
    }

    #[test]
    fn static_channel_is_constant() {
        let c = EnvelopeConfig { max_doppler_hz: 0.0, duration_s: 0.1, ..cfg(2, 3) };
        let p = generate_multipath_envelope(&c).unwrap();
        assert!(p.samples().windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = cfg(1, 1);
        let bad = [
            EnvelopeConfig { path_diversity: 0, ..base },
            EnvelopeConfig { sinusoids: 0, ..base },
            EnvelopeConfig { sinusoids: 63, ..base },
            EnvelopeConfig { duration_s: 0.0, ..base },
            EnvelopeConfig { sample_period_s: -1e-3, ..base },
            EnvelopeConfig { duration_s: 1e-3, ..base },
            EnvelopeConfig { max_doppler_hz: -1.0, ..base },
        ];
        for c in bad {
            assert!(generate_multipath_envelope(&c).is_err(), "{c:?}");
        }
        let nyq = EnvelopeConfig { max_doppler_hz: 500.0, ..base };
        assert!(matches!(generate_multipath_envelope(&nyq), Err(FadingError::Nyquist { .. })));
    }
}

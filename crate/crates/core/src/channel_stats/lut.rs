use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{invalid, ChannelStatsError};
use crate::fading::{
    coherence_time_jakes, default_sample_period, generate_multipath_envelope, max_doppler_for_coherence_time,
    read_envelope_csv, write_envelope_csv, EnvelopeConfig, FadingProcess, GenerationParams, DEFAULT_SINUSOIDS,
};

const MANIFEST: &str = "manifest.toml";

/// Grid and generation settings of a [`FadingLut`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LutConfig {
    pub diversity_grid: Vec<u32>,
    pub coherence_grid_s: Vec<f64>,
    pub duration_s: f64,
    pub sample_period_s: f64,
    #[serde(default = "default_sinusoids")]
    pub sinusoids: u32,
    pub seed: u64,
}

fn default_sinusoids() -> u32 {
    DEFAULT_SINUSOIDS
}

impl LutConfig {
    /// Default grids: `L ∈ {1, 2, 4, 8, 16, 32}` and ten geometrically spaced
    /// coherence times over `[0.5, 16]×` the Jakes coherence time at the
    /// fastest UE, sampled finely enough for the shortest of them.
    pub fn default_for(
        carrier_hz: f64,
        fastest_speed_mps: f64,
        duration_s: f64,
        seed: u64,
    ) -> Result<Self, ChannelStatsError> {
        let dop = crate::fading::DopplerParams::new(carrier_hz, fastest_speed_mps)?;
        let tc = coherence_time_jakes(dop.max_doppler_hz())?;
        let coherence_grid_s = geometric_ladder(0.5 * tc, 16.0 * tc, 10);
        let fmax = max_doppler_for_coherence_time(coherence_grid_s[0])?;
        Ok(Self {
            diversity_grid: vec![1, 2, 4, 8, 16, 32],
            coherence_grid_s,
            duration_s,
            sample_period_s: default_sample_period(fmax),
            sinusoids: DEFAULT_SINUSOIDS,
            seed,
        })
    }

    fn validate(&self) -> Result<(), ChannelStatsError> {
        if self.diversity_grid.is_empty() {
            return Err(invalid("diversity_grid", "must not be empty"));
        }
        if self.diversity_grid[0] == 0 || self.diversity_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("diversity_grid", "must be positive and strictly ascending"));
        }
        if self.coherence_grid_s.is_empty() {
            return Err(invalid("coherence_grid_s", "must not be empty"));
        }
        if !self.coherence_grid_s.iter().all(|t| t.is_finite() && *t > 0.0)
            || self.coherence_grid_s.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid("coherence_grid_s", "must be positive and strictly ascending"));
        }
        Ok(())
    }

    fn cell_seed(&self, index: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(index as u64 + 1))
    }

    fn envelope_config(&self, i: usize, j: usize) -> Result<EnvelopeConfig, ChannelStatsError> {
        Ok(EnvelopeConfig {
            path_diversity: self.diversity_grid[i],
            sinusoids: self.sinusoids,
            max_doppler_hz: max_doppler_for_coherence_time(self.coherence_grid_s[j])?,
            duration_s: self.duration_s,
            sample_period_s: self.sample_period_s,
            seed: self.cell_seed(i * self.coherence_grid_s.len() + j),
        })
    }
}

/// `n` points from `lo` to `hi` inclusive with a constant ratio.
pub(crate) fn geometric_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|k| if k == n - 1 { hi } else { lo * r.powi(k as i32) }).collect()
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pre-generated power envelopes on a `(path diversity, coherence time)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingLut {
    config: LutConfig,
    // Row-major: cell (i, j) at i·J + j.
    envelopes: Vec<FadingProcess>,
}

impl FadingLut {
    pub fn config(&self) -> &LutConfig {
        &self.config
    }

    pub fn diversity_grid(&self) -> &[u32] {
        &self.config.diversity_grid
    }

    pub fn coherence_grid_s(&self) -> &[f64] {
        &self.config.coherence_grid_s
    }

    pub fn sample_period_s(&self) -> f64 {
        self.config.sample_period_s
    }

    /// Samples per envelope; identical for every cell.
    pub fn envelope_len(&self) -> usize {
        self.envelopes[0].len()
    }

    /// Envelope of cell `(i, j)`: `i` indexes the diversity grid, `j` the coherence grid.
    pub fn envelope(&self, i: usize, j: usize) -> &FadingProcess {
        &self.envelopes[i * self.config.coherence_grid_s.len() + j]
    }
}

/// Generates one envelope per grid cell, each with `f_max` chosen so that the
/// Jakes coherence time equals the cell's coherence time.
pub fn build_fading_lut(config: &LutConfig) -> Result<FadingLut, ChannelStatsError> {
    config.validate()?;
    let mut envelopes = Vec::with_capacity(config.diversity_grid.len() * config.coherence_grid_s.len());
    for i in 0..config.diversity_grid.len() {
        for j in 0..config.coherence_grid_s.len() {
            envelopes.push(generate_multipath_envelope(&config.envelope_config(i, j)?)?);
        }
    }
    Ok(FadingLut { config: config.clone(), envelopes })
}

fn cell_file(i: usize, j: usize) -> String {
    format!("envelope_L{i}_T{j}.csv")
}

/// Writes `manifest.toml` and one `t_s,power` CSV per cell into `dir`.
pub fn save_lut(lut: &FadingLut, dir: &Path) -> Result<(), ChannelStatsError> {
    fs::create_dir_all(dir)?;
    let manifest = toml::to_string(&lut.config).map_err(|e| ChannelStatsError::Manifest(e.to_string()))?;
    fs::write(dir.join(MANIFEST), manifest)?;
    for i in 0..lut.diversity_grid().len() {
        for j in 0..lut.coherence_grid_s().len() {
            let mut w = BufWriter::new(fs::File::create(dir.join(cell_file(i, j)))?);
            write_envelope_csv(lut.envelope(i, j), &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Loads a LUT written by [`save_lut`], checking every envelope against the manifest.
pub fn load_lut(dir: &Path) -> Result<FadingLut, ChannelStatsError> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let config: LutConfig = toml::from_str(&text).map_err(|e| ChannelStatsError::Manifest(e.to_string()))?;
    config.validate()?;
    let mut envelopes = Vec::new();
    let mut len = None;
    for i in 0..config.diversity_grid.len() {
        for j in 0..config.coherence_grid_s.len() {
            let name = cell_file(i, j);
            let raw = read_envelope_csv(BufReader::new(fs::File::open(dir.join(&name))?))?;
            let rel = (raw.sample_period_s() - config.sample_period_s).abs() / config.sample_period_s;
            if rel > 1e-6 {
                return Err(ChannelStatsError::Manifest(format!("{name}: sample period differs from manifest")));
            }
            if *len.get_or_insert(raw.len()) != raw.len() {
                return Err(ChannelStatsError::Manifest(format!("{name}: envelope length differs")));
            }
            let ec = config.envelope_config(i, j)?;
            let params = GenerationParams {
                sinusoids: ec.sinusoids,
                path_diversity: ec.path_diversity,
                max_doppler_hz: ec.max_doppler_hz,
                seed: ec.seed,
            };
            envelopes.push(FadingProcess::from_samples(raw.samples().to_vec(), config.sample_period_s, Some(params))?);
        }
    }
    Ok(FadingLut { config, envelopes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::estimate_envelope_stats;

    fn small(div: Vec<u32>, tcs: Vec<f64>) -> LutConfig {
        LutConfig {
            diversity_grid: div,
            coherence_grid_s: tcs,
            duration_s: 20.0,
            sample_period_s: 2.5e-4,
            sinusoids: 128,
            seed: 5,
        }
    }

    #[test]
    fn cells_match_their_coordinates() {
        let lut = build_fading_lut(&small(vec![1, 2], vec![5e-3, 10e-3])).unwrap();
        for (i, &l) in lut.diversity_grid().iter().enumerate() {
            for (j, &tc) in lut.coherence_grid_s().iter().enumerate() {
                let env = lut.envelope(i, j);
                let p = env.params().unwrap();
                assert_eq!(p.path_diversity, l);
                assert!((coherence_time_jakes(p.max_doppler_hz).unwrap() - tc).abs() < 1e-15);
                let st = estimate_envelope_stats(env).unwrap();
                assert_eq!(st.estimated_path_diversity, l);
                assert!((st.estimated_coherence_time_s / tc - 1.0).abs() < 0.15, "{st:?}");
            }
        }
    }

    #[test]
    fn variance_at_l4() {
        let lut = build_fading_lut(&small(vec![4], vec![5e-3])).unwrap();
        let st = estimate_envelope_stats(lut.envelope(0, 0)).unwrap();
        assert!((st.variance - 0.25).abs() < 0.03, "{}", st.variance);
    }

    #[test]
    fn cells_are_distinct_and_deterministic() {
        let cfg = small(vec![1, 2], vec![5e-3, 10e-3]);
        let a = build_fading_lut(&cfg).unwrap();
        assert_eq!(a, build_fading_lut(&cfg).unwrap());
        assert_ne!(a.envelope(0, 0).samples(), a.envelope(0, 1).samples());
        assert_ne!(a.envelope(0, 0).params().unwrap().seed, a.envelope(1, 0).params().unwrap().seed);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(build_fading_lut(&small(vec![], vec![1e-3])).is_err());
        assert!(build_fading_lut(&small(vec![2, 1], vec![1e-3])).is_err());
        assert!(build_fading_lut(&small(vec![0, 1], vec![1e-3])).is_err());
        assert!(build_fading_lut(&small(vec![1], vec![2e-3, 2e-3])).is_err());
        assert!(build_fading_lut(&small(vec![1], vec![-1e-3])).is_err());
        // Tc = 50 µs needs f_max ≈ 3.6 kHz, beyond Nyquist at 0.25 ms sampling.
        assert!(matches!(
            build_fading_lut(&small(vec![1], vec![5e-5])),
            Err(ChannelStatsError::Fading(crate::fading::FadingError::Nyquist { .. }))
        ));
    }

    #[test]
    fn default_grid_shape() {
        let cfg = LutConfig::default_for(28e9, 30.0 / 3.6, 1.0, 0).unwrap();
        assert_eq!(cfg.diversity_grid, vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(cfg.coherence_grid_s.len(), 10);
        let tc = coherence_time_jakes(crate::fading::DopplerParams::new(28e9, 30.0 / 3.6).unwrap().max_doppler_hz())
            .unwrap();
        assert!((cfg.coherence_grid_s[0] - 0.5 * tc).abs() < 1e-18);
        assert!((cfg.coherence_grid_s[9] - 16.0 * tc).abs() < 1e-18);
        let ratios: Vec<f64> = cfg.coherence_grid_s.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-12));
        cfg.validate().unwrap();
    }

    #[test]
    fn persistence_round_trip() {
        let mut cfg = small(vec![1, 4], vec![5e-3]);
        cfg.duration_s = 0.5;
        let lut = build_fading_lut(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_lut(&lut, dir.path()).unwrap();
        let back = load_lut(dir.path()).unwrap();
        assert_eq!(back, lut);
    }

    #[test]
    fn load_rejects_missing_and_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_lut(dir.path()).is_err());
        fs::write(dir.path().join(MANIFEST), "diversity_grid = [1]\n").unwrap();
        assert!(matches!(load_lut(dir.path()), Err(ChannelStatsError::Manifest(_))));
        let mut cfg = small(vec![1], vec![5e-3, 10e-3]);
        cfg.duration_s = 0.1;
        save_lut(&build_fading_lut(&cfg).unwrap(), dir.path()).unwrap();
        fs::write(dir.path().join(cell_file(0, 1)), "t_s,power\n0,1\n0.0005,1\n").unwrap();
        assert!(load_lut(dir.path()).is_err());
    }
}

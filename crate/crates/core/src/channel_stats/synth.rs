use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use super::{invalid, ChannelStatsError, ChannelTuple, Condition, Provenance, TupleLibrary, TupleRow};
use crate::fading::{coherence_time_jakes, kmh_to_mps, DopplerParams};

/// Distribution of per-beam statistics for one propagation condition.
///
/// Coherence times are log-normal around a multiple of the Jakes coherence
/// time at the reference carrier and speed, truncated from below. Path
/// diversities are discretized log-normals whose mode moves geometrically
/// from `strongest_diversity_mode` (rank 1) to `weakest_diversity_mode`
/// (rank B), so stronger beams see fewer effective paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankDistribution {
    pub tc_median_factor: f64,
    pub tc_log_sigma: f64,
    pub tc_floor_factor: f64,
    pub strongest_diversity_mode: f64,
    pub weakest_diversity_mode: f64,
    pub diversity_log_sigma: f64,
    pub max_diversity: u32,
    /// Mean power gap between consecutive beam ranks, dB.
    pub power_step_db: f64,
}

impl Default for RankDistribution {
    fn default() -> Self {
        Self {
            tc_median_factor: 4.0,
            tc_log_sigma: 0.6,
            tc_floor_factor: 1.0,
            strongest_diversity_mode: 6.0,
            weakest_diversity_mode: 20.0,
            diversity_log_sigma: 0.4,
            max_diversity: 64,
            power_step_db: 2.5,
        }
    }
}

impl RankDistribution {
    fn validate(&self) -> Result<(), ChannelStatsError> {
        let positive = [
            ("tc_median_factor", self.tc_median_factor),
            ("tc_log_sigma", self.tc_log_sigma),
            ("tc_floor_factor", self.tc_floor_factor),
            ("strongest_diversity_mode", self.strongest_diversity_mode),
            ("weakest_diversity_mode", self.weakest_diversity_mode),
            ("diversity_log_sigma", self.diversity_log_sigma),
            ("power_step_db", self.power_step_db),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if self.tc_floor_factor >= self.tc_median_factor * 20.0 {
            return Err(invalid("tc_floor_factor", "floor leaves no probability mass"));
        }
        if self.max_diversity == 0 {
            return Err(invalid("max_diversity", "must be at least 1"));
        }
        Ok(())
    }

    fn diversity_mode(&self, rank: usize, beams: usize) -> f64 {
        if beams <= 1 {
            return self.strongest_diversity_mode;
        }
        let x = (rank - 1) as f64 / (beams - 1) as f64;
        self.strongest_diversity_mode * (self.weakest_diversity_mode / self.strongest_diversity_mode).powf(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticTupleParams {
    pub ref_carrier_hz: f64,
    pub ref_speed_mps: f64,
    pub los: RankDistribution,
    pub nlos: RankDistribution,
}

impl Default for SyntheticTupleParams {
    fn default() -> Self {
        Self {
            ref_carrier_hz: 28e9,
            ref_speed_mps: kmh_to_mps(1.0),
            los: RankDistribution::default(),
            nlos: RankDistribution::default(),
        }
    }
}

impl SyntheticTupleParams {
    /// Jakes coherence time at the reference carrier and speed.
    pub fn reference_jakes_tc(&self) -> Result<f64, ChannelStatsError> {
        let d = DopplerParams::new(self.ref_carrier_hz, self.ref_speed_mps)?;
        Ok(coherence_time_jakes(d.max_doppler_hz())?)
    }
}

/// Draws `m` LOS and `m` NLOS tuples of `b` beams each.
pub fn synthesize_tuple_library(
    m: usize,
    b: usize,
    seed: u64,
    params: &SyntheticTupleParams,
) -> Result<TupleLibrary, ChannelStatsError> {
    if m == 0 {
        return Err(invalid("m", "must be at least 1"));
    }
    if b == 0 {
        return Err(invalid("b", "must be at least 1"));
    }
    if !(params.ref_speed_mps.is_finite() && params.ref_speed_mps > 0.0) {
        return Err(invalid("ref_speed_mps", "must be positive"));
    }
    params.los.validate()?;
    params.nlos.validate()?;
    let jakes_tc = params.reference_jakes_tc()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |cond: Condition, dist: &RankDistribution| -> Result<Vec<ChannelTuple>, ChannelStatsError> {
        let tc_dist = LogNormal::new((dist.tc_median_factor * jakes_tc).ln(), dist.tc_log_sigma)
            .map_err(|e| invalid("tc_log_sigma", e.to_string()))?;
        let floor = dist.tc_floor_factor * jakes_tc;
        let step = Exp::new(1.0 / dist.power_step_db).map_err(|e| invalid("power_step_db", e.to_string()))?;
        let mut tuples = Vec::with_capacity(m);
        for _ in 0..m {
            let mut rows = Vec::with_capacity(b);
            let mut power = 0.0;
            for rank in 1..=b {
                let tc = loop {
                    let x: f64 = tc_dist.sample(&mut rng);
                    if x > floor {
                        break x;
                    }
                };
                let mode = dist.diversity_mode(rank, b);
                let sigma = dist.diversity_log_sigma;
                let l_dist = LogNormal::new(mode.ln() + sigma * sigma, sigma)
                    .map_err(|e| invalid("diversity_log_sigma", e.to_string()))?;
                let l = (l_dist.sample(&mut rng).round() as u32).clamp(1, dist.max_diversity);
                if rank > 1 {
                    power -= step.sample(&mut rng);
                } else {
                    power = rng.random_range(-1.0..1.0);
                }
                rows.push(TupleRow { coherence_time_s: tc, path_diversity: l, mean_beam_power_db: power });
            }
            tuples.push(ChannelTuple::new(cond, params.ref_carrier_hz, params.ref_speed_mps, rows)?);
        }
        Ok(tuples)
    };
    let los = draw(Condition::Los, &params.los)?;
    let nlos = draw(Condition::Nlos, &params.nlos)?;
    TupleLibrary::new(los, nlos, Provenance::Synthetic)
}

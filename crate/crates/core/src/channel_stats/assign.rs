use rand::Rng;

use super::{scale_coherence_time, ChannelStatsError, ChannelTuple, Condition, FadingLut, TupleLibrary};

/// Selected LUT cell: `diversity_index` into the diversity grid,
/// `coherence_index` into the coherence grid. `fallback` is set when either
/// grid had no value strictly below the target and its minimum was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LutCell {
    pub diversity_index: usize,
    pub coherence_index: usize,
    pub fallback: bool,
}

/// LUT selection for one beam rank of one tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSelection {
    pub scaled_coherence_time_s: f64,
    pub path_diversity: u32,
    pub cell: LutCell,
}

/// Fading assignment of one link: a LOS and an NLOS tuple, the LUT cell of
/// every beam rank under both conditions, and a playback offset.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannelAssignment {
    link_id: u64,
    los_tuple_index: usize,
    nlos_tuple_index: usize,
    los: Vec<BeamSelection>,
    nlos: Vec<BeamSelection>,
    playback_offset: u64,
}

impl LinkChannelAssignment {
    pub fn link_id(&self) -> u64 {
        self.link_id
    }

    pub fn tuple_index(&self, condition: Condition) -> usize {
        match condition {
            Condition::Los => self.los_tuple_index,
            Condition::Nlos => self.nlos_tuple_index,
        }
    }

    pub fn playback_offset(&self) -> u64 {
        self.playback_offset
    }

    pub fn beams(&self) -> usize {
        self.los.len()
    }

    /// Selection for a 1-based beam rank.
    pub fn selection(&self, condition: Condition, beam_rank: usize) -> Result<&BeamSelection, ChannelStatsError> {
        let rows = match condition {
            Condition::Los => &self.los,
            Condition::Nlos => &self.nlos,
        };
        beam_rank
            .checked_sub(1)
            .and_then(|r| rows.get(r))
            .ok_or(ChannelStatsError::UnassignedBeam { rank: beam_rank, beams: rows.len() })
    }

    pub fn any_fallback(&self) -> bool {
        self.los.iter().chain(&self.nlos).any(|s| s.cell.fallback)
    }
}

/// Index of the largest grid value strictly below `target`. When none exists
/// the grid minimum (index 0) is returned with the fallback flag set.
/// `grid` must be ascending and non-empty.
pub fn select_nearest_below<T: PartialOrd + Copy>(grid: &[T], target: T) -> (usize, bool) {
    let below = grid.partition_point(|g| *g < target);
    if below == 0 {
        (0, true)
    } else {
        (below - 1, false)
    }
}

fn select_rows(
    tuple: &ChannelTuple,
    lut: &FadingLut,
    sim_carrier_hz: f64,
    ue_speed_mps: f64,
) -> Result<Vec<BeamSelection>, ChannelStatsError> {
    tuple
        .rows()
        .iter()
        .map(|row| {
            // A static UE has an unbounded coherence time: take the slowest cell.
            let tc = if ue_speed_mps == 0.0 {
                f64::INFINITY
            } else {
                scale_coherence_time(
                    row.coherence_time_s,
                    tuple.ref_carrier_hz(),
                    tuple.ref_speed_mps(),
                    sim_carrier_hz,
                    ue_speed_mps,
                )?
            };
            let (j, fb_t) = select_nearest_below(lut.coherence_grid_s(), tc);
            let (i, fb_l) = select_nearest_below(lut.diversity_grid(), row.path_diversity);
            Ok(BeamSelection {
                scaled_coherence_time_s: tc,
                path_diversity: row.path_diversity,
                cell: LutCell { diversity_index: i, coherence_index: j, fallback: fb_t || fb_l },
            })
        })
        .collect()
}

/// Draws a LOS and an NLOS tuple uniformly, maps every beam rank to its LUT
/// cell at the simulated carrier and speed, and draws a playback offset.
/// Consumes exactly three draws from `rng`.
pub fn assign_link_channel<R: Rng + ?Sized>(
    library: &TupleLibrary,
    lut: &FadingLut,
    link_id: u64,
    rng: &mut R,
    sim_carrier_hz: f64,
    ue_speed_mps: f64,
) -> Result<LinkChannelAssignment, ChannelStatsError> {
    if !(sim_carrier_hz.is_finite() && sim_carrier_hz > 0.0) {
        return Err(super::invalid("sim_carrier_hz", "must be positive"));
    }
    if !(ue_speed_mps.is_finite() && ue_speed_mps >= 0.0) {
        return Err(super::invalid("ue_speed_mps", "must be non-negative"));
    }
    let los_tuple_index = rng.random_range(0..library.tuples(Condition::Los).len());
    let nlos_tuple_index = rng.random_range(0..library.tuples(Condition::Nlos).len());
    let playback_offset = rng.random_range(0..lut.envelope_len() as u64);
    Ok(LinkChannelAssignment {
        link_id,
        los_tuple_index,
        nlos_tuple_index,
        los: select_rows(&library.tuples(Condition::Los)[los_tuple_index], lut, sim_carrier_hz, ue_speed_mps)?,
        nlos: select_rows(&library.tuples(Condition::Nlos)[nlos_tuple_index], lut, sim_carrier_hz, ue_speed_mps)?,
        playback_offset,
    })
}

/// Linear power multiplier of beam `beam_rank` (1-based) under `condition` at
/// time `t_s`: the selected envelope at `offset + round(t / Ts)`, wrapped.
pub fn sample_fading(
    assignment: &LinkChannelAssignment,
    lut: &FadingLut,
    beam_rank: usize,
    condition: Condition,
    t_s: f64,
) -> Result<f64, ChannelStatsError> {
    let cell = assignment.selection(condition, beam_rank)?.cell;
    let step = (t_s.max(0.0) / lut.sample_period_s()).round() as u64;
    Ok(lut.envelope(cell.diversity_index, cell.coherence_index).wrapped(assignment.playback_offset.wrapping_add(step)))
}

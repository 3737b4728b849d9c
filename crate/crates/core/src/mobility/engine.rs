use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::handover::{A3Tracker, HandoverProcedure, HoProgress, RlfEvent, RlfTracker};
use super::kpi::{analyze_event_log, Event, EventKind, KpiReport};
use super::measurement::{alpha_from_time_constant, db_to_lin, l3_filter_update, lin_to_db, measurement_error_sample, L1Filter};
use super::motion::{step_ue_motion, UeMotion};
use super::propagation::{line_of_sight, PanelFrame, PathLossModel, ShadowingProcess, UmiStreetCanyon};
use super::{invalid, to_ticks, MobilityError, Region, Scenario};
use crate::beamforming::{default_beam_set, BeamGainEvaluator, ElementPattern, GainFitModel};
use crate::channel_stats::{
    assign_link_channel, build_fading_lut, sample_fading, Condition, FadingLut, LinkChannelAssignment, LutConfig,
    TupleLibrary,
};
use crate::fading::{coherence_time_jakes, kmh_to_mps, max_doppler_for_coherence_time, DopplerParams};

/// Impairment toggles of one simulation case.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Features {
    pub fast_fading: bool,
    pub measurement_error: bool,
    /// L3 filter time constant; `None` disables L3 filtering (`α = 1`).
    pub l3_time_constant_s: Option<f64>,
}

/// Fast-fading channel model of a campaign column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ChannelModel {
    /// Per-beam tuples mapped onto a fading LUT.
    Simplified,
    /// Plain Jakes fading with a fixed path diversity on every link.
    Jakes { path_diversity: u32 },
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelModel::Simplified => f.write_str("simplified"),
            ChannelModel::Jakes { path_diversity } => write!(f, "jakes-{path_diversity}"),
        }
    }
}

impl FromStr for ChannelModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "simplified" {
            return Ok(ChannelModel::Simplified);
        }
        let l = s
            .strip_prefix("jakes-")
            .and_then(|l| l.parse::<u32>().ok())
            .ok_or_else(|| format!("unknown channel model `{s}` (expected `simplified` or `jakes-<L>`)"))?;
        if l == 0 {
            return Err("jakes path diversity must be at least 1".into());
        }
        Ok(ChannelModel::Jakes { path_diversity: l })
    }
}

impl TryFrom<String> for ChannelModel {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ChannelModel> for String {
    fn from(m: ChannelModel) -> Self {
        m.to_string()
    }
}

/// Beamforming gain applied on every link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainModel {
    Single,
    Fitting,
}

impl fmt::Display for GainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GainModel::Single => "single",
            GainModel::Fitting => "fitting",
        })
    }
}

/// Everything about a run that is not scenario geometry or fading data.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub features: Features,
    pub gain: GainModel,
    pub fit_los: GainFitModel,
    pub fit_nlos: GainFitModel,
    pub element_pattern: ElementPattern,
}

impl SimConfig {
    /// Default fit models and element pattern.
    pub fn new(features: Features, gain: GainModel) -> Self {
        Self {
            features,
            gain,
            fit_los: GainFitModel::default_for(Condition::Los),
            fit_nlos: GainFitModel::default_for(Condition::Nlos),
            element_pattern: ElementPattern::default(),
        }
    }
}

/// Fading data shared read-only by any number of runs.
#[derive(Debug, Clone, Copy)]
pub enum FadingSource<'a> {
    None,
    Simplified { library: &'a TupleLibrary, lut: &'a FadingLut },
    Jakes { lut: &'a FadingLut },
}

/// Link-level aggregates that are not part of the mobility KPIs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    /// Mean linear inter-cell interference at connected UEs, dBm.
    pub mean_interference_dbm: f64,
    /// Mean serving SINR of connected UEs, dB.
    pub mean_sinr_db: f64,
    /// Per-UE outage counted tick by tick, seconds.
    pub outage_s: Vec<f64>,
    /// Links whose LUT selection fell back to the smallest grid value.
    pub fallback_links: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub report: KpiReport,
    pub events: Vec<Event>,
    pub stats: LinkStats,
}

/// Envelope sampling for LUTs built for the simulator: four samples per
/// `1/f_max` of the fastest process is above the Nyquist rate, and the
/// simulator reads one sample per tick anyway.
fn simulator_sample_period(max_doppler_hz: f64) -> f64 {
    1.0 / (4.0 * max_doppler_hz)
}

fn distinct_speeds(scenario: &Scenario) -> Vec<f64> {
    let mut v: Vec<f64> = scenario.ue_groups.iter().map(|g| kmh_to_mps(g.speed_kmh)).filter(|v| *v > 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Jakes LUT for a scenario: one diversity `L` and one coherence time per
/// distinct non-zero UE speed, so every link plays back exact Jakes fading.
pub fn build_jakes_lut(
    scenario: &Scenario,
    path_diversity: u32,
    duration_s: f64,
    sinusoids: u32,
    seed: u64,
) -> Result<FadingLut, MobilityError> {
    let speeds = distinct_speeds(scenario);
    let Some(&fastest) = speeds.last() else {
        return Err(invalid("ue_groups", "fast fading needs at least one moving UE group"));
    };
    let mut coherence_grid_s = Vec::with_capacity(speeds.len());
    for &v in speeds.iter().rev() {
        let fd = DopplerParams::new(scenario.carrier_hz, v).map_err(crate::channel_stats::ChannelStatsError::from)?;
        coherence_grid_s.push(coherence_time_jakes(fd.max_doppler_hz()).map_err(crate::channel_stats::ChannelStatsError::from)?);
    }
    let fmax = DopplerParams::new(scenario.carrier_hz, fastest)
        .map_err(crate::channel_stats::ChannelStatsError::from)?
        .max_doppler_hz();
    let config = LutConfig {
        diversity_grid: vec![path_diversity],
        coherence_grid_s,
        duration_s,
        sample_period_s: simulator_sample_period(fmax),
        sinusoids,
        seed,
    };
    Ok(build_fading_lut(&config)?)
}

/// LUT for the simplified model: the default diversity and coherence grids
/// for the scenario's fastest UE, sampled at the simulator rate.
pub fn build_simplified_lut(
    scenario: &Scenario,
    duration_s: f64,
    sinusoids: u32,
    seed: u64,
) -> Result<FadingLut, MobilityError> {
    let speeds = distinct_speeds(scenario);
    let Some(&fastest) = speeds.last() else {
        return Err(invalid("ue_groups", "fast fading needs at least one moving UE group"));
    };
    let mut config = LutConfig::default_for(scenario.carrier_hz, fastest, duration_s, seed)?;
    let fmax = max_doppler_for_coherence_time(config.coherence_grid_s[0]).map_err(crate::channel_stats::ChannelStatsError::from)?;
    config.sample_period_s = simulator_sample_period(fmax);
    config.sinusoids = sinusoids;
    Ok(build_fading_lut(&config)?)
}

#[derive(Debug, Clone)]
enum LinkFading {
    Off,
    Simplified(LinkChannelAssignment),
    /// Coherence index of the UE's speed (`None` for a static UE) and one
    /// playback offset per beam rank.
    Jakes { coherence_index: Option<usize>, offsets: Vec<u64> },
}

/// Independent random stream per purpose and index, so that toggling one
/// feature never shifts the random numbers another one sees.
fn stream(seed: u64, purpose: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 48) | index as u64);
    rng
}

const STREAM_MOTION: u64 = 1;
const STREAM_SHADOWING: u64 = 2;
const STREAM_FADING: u64 = 3;
const STREAM_MEASUREMENT: u64 = 4;
const STREAM_SCHEDULER: u64 = 5;

#[derive(Debug, Clone, Copy)]
enum Mode {
    Connected,
    RandomAccess(HandoverProcedure),
    Reestablishing { remaining: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum OutageCause {
    Sinr,
    RandomAccess,
    Reestablishment,
}

impl OutageCause {
    fn as_str(self) -> &'static str {
        match self {
            OutageCause::Sinr => "sinr",
            OutageCause::RandomAccess => "random_access",
            OutageCause::Reestablishment => "reestablishment",
        }
    }
}

struct Ue {
    motion: UeMotion,
    motion_rng: ChaCha8Rng,
    me_rng: ChaCha8Rng,
    serving: usize,
    mode: Mode,
    a3: A3Tracker,
    rlf: RlfTracker,
    outage: Option<OutageCause>,
    outage_ticks: u64,
}

fn validate_source(scenario: &Scenario, config: &SimConfig, source: &FadingSource, beams: usize) -> Result<(), MobilityError> {
    match source {
        FadingSource::None if config.features.fast_fading => {
            Err(invalid("fading", "fast fading is enabled but no fading source was supplied"))
        }
        FadingSource::Simplified { library, .. } if library.beams() < beams => Err(invalid(
            "fading",
            format!("tuple library covers {} beam ranks, the beam set has {beams}", library.beams()),
        )),
        FadingSource::Jakes { lut } => {
            for v in distinct_speeds(scenario) {
                jakes_index(lut, scenario.carrier_hz, v)?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn jakes_index(lut: &FadingLut, carrier_hz: f64, speed_mps: f64) -> Result<usize, MobilityError> {
    let fd = DopplerParams::new(carrier_hz, speed_mps).map_err(crate::channel_stats::ChannelStatsError::from)?;
    let tc = coherence_time_jakes(fd.max_doppler_hz()).map_err(crate::channel_stats::ChannelStatsError::from)?;
    lut.coherence_grid_s()
        .iter()
        .position(|g| (g / tc - 1.0).abs() < 1e-9)
        .ok_or_else(|| invalid("fading", format!("Jakes LUT has no process for {speed_mps} m/s")))
}

/// Runs one seeded simulation of `scenario`.
///
/// Each tick moves the UEs, evaluates every UE–cell link (LOS by building
/// occlusion, path loss, correlated shadowing, single-ray or fitted beam gains
/// ranked per cell, fading of the rank's tuple row), draws one active beam per
/// cell, and then advances the per-UE measurement, handover and RLF state.
/// A cell's measured RSRP is that of its strongest beam. Output is
/// bit-identical for identical inputs.
pub fn run_simulation(
    scenario: &Scenario,
    config: &SimConfig,
    source: &FadingSource,
) -> Result<SimOutput, MobilityError> {
    scenario.validate()?;
    let radio = &scenario.radio;
    let tick_s = scenario.sim.tick_s;
    let seed = scenario.sim.seed;
    let beams = BeamGainEvaluator::new(default_beam_set(), config.element_pattern.clone());
    let nb = beams.len();
    validate_source(scenario, config, source, nb)?;
    let alpha = match config.features.l3_time_constant_s {
        Some(t) => alpha_from_time_constant(t, radio.l1_period_s)?,
        None => 1.0,
    };
    let l1_period = to_ticks("l1_period_s", radio.l1_period_s, tick_s)? as u64;
    let l1_window = to_ticks("l1_window_s", radio.l1_window_s, tick_s)? as usize;
    let reest_ticks = to_ticks("reestablishment_s", radio.reestablishment_s, tick_s)?;
    let thresholds = radio.thresholds();

    let cells = scenario.cells();
    let nc = cells.len();
    let ns = scenario.sites.len();
    let frames: Vec<PanelFrame> = cells.iter().map(|c| PanelFrame::new(c.azimuth_deg, scenario.downtilt_deg)).collect();
    let pl_model = UmiStreetCanyon {
        carrier_hz: scenario.carrier_hz,
        bs_height_m: scenario.bs_height_m,
        ue_height_m: scenario.ue_height_m,
    };
    let fast_fading = config.features.fast_fading;
    let me_sigma = if config.features.measurement_error { radio.measurement_error_sigma_db } else { 0.0 };

    // UEs, in group order.
    let mut ues = Vec::with_capacity(scenario.ue_count());
    let mut speeds = Vec::with_capacity(scenario.ue_count());
    for g in &scenario.ue_groups {
        let v = kmh_to_mps(g.speed_kmh);
        let region = scenario.region(&g.region).expect("validated region");
        for _ in 0..g.count {
            let u = ues.len();
            let mut motion_rng = stream(seed, STREAM_MOTION, u);
            let motion = match region {
                Region::Streets { .. } => {
                    UeMotion::on_streets(scenario.streets.as_ref().expect("validated grid"), v, &mut motion_rng)
                }
                Region::RandomWaypoint { rect, .. } => UeMotion::random_waypoint(*rect, v, &mut motion_rng),
            };
            ues.push(Ue {
                motion,
                motion_rng,
                me_rng: stream(seed, STREAM_MEASUREMENT, u),
                serving: 0,
                mode: Mode::Connected,
                a3: A3Tracker::new(nc, radio.a3_offset_db, radio.time_to_trigger_s, tick_s)?,
                rlf: RlfTracker::new(thresholds, radio.t310_s, tick_s)?,
                outage: None,
                outage_ticks: 0,
            });
            speeds.push(v);
        }
    }
    let nu = ues.len();

    // Per-link fading assignments.
    let mut fading = Vec::with_capacity(nu * nc);
    let mut fallback_links = 0;
    for (u, &v) in speeds.iter().enumerate() {
        for c in 0..nc {
            let mut rng = stream(seed, STREAM_FADING, u * nc + c);
            let lf = match (fast_fading, source) {
                (false, _) | (_, FadingSource::None) => LinkFading::Off,
                (true, FadingSource::Simplified { library, lut }) => {
                    let a = assign_link_channel(library, lut, (u * nc + c) as u64, &mut rng, scenario.carrier_hz, v)?;
                    fallback_links += a.any_fallback() as usize;
                    LinkFading::Simplified(a)
                }
                (true, FadingSource::Jakes { lut }) => LinkFading::Jakes {
                    coherence_index: if v > 0.0 { Some(jakes_index(lut, scenario.carrier_hz, v)?) } else { None },
                    offsets: (0..nb).map(|_| rng.random_range(0..lut.envelope_len() as u64)).collect(),
                },
            };
            fading.push(lf);
        }
    }
    let fade = |link: usize, rank: usize, los: bool, t: f64| -> Result<f64, MobilityError> {
        Ok(match (&fading[link], source) {
            (LinkFading::Off, _) => 1.0,
            (LinkFading::Simplified(a), FadingSource::Simplified { lut, .. }) => {
                sample_fading(a, lut, rank, if los { Condition::Los } else { Condition::Nlos }, t)?
            }
            (LinkFading::Jakes { coherence_index: Some(j), offsets }, FadingSource::Jakes { lut }) => {
                let step = (t / lut.sample_period_s()).round() as u64;
                lut.envelope(0, *j).wrapped(offsets[rank - 1].wrapping_add(step))
            }
            _ => 1.0,
        })
    };

    let mut shadowing: Vec<(ShadowingProcess, ChaCha8Rng)> = Vec::with_capacity(nu * ns);
    for (u, ue) in ues.iter().enumerate() {
        for s in 0..ns {
            let mut rng = stream(seed, STREAM_SHADOWING, u * ns + s);
            shadowing.push((ShadowingProcess::new(ue.motion.position(), &mut rng), rng));
        }
    }
    let mut sched_rngs: Vec<ChaCha8Rng> = (0..nc).map(|c| stream(seed, STREAM_SCHEDULER, c)).collect();

    let mut l1: Vec<L1Filter> = (0..nu * nc).map(|_| L1Filter::new(l1_window)).collect();
    let mut l3: Vec<Option<f64>> = vec![None; nu * nc];

    // Per-tick link scratch.
    let mut site_los = vec![false; nu * ns];
    let mut site_loss = vec![0.0f64; nu * ns];
    let mut gain = vec![0.0f64; nu * nc * nb];
    let mut rank_of = vec![0u8; nu * nc * nb];
    let mut best = vec![0usize; nu * nc];
    let mut rsrp = vec![0.0f64; nu * nc];
    let mut single = vec![0.0f64; nb];
    let mut order: Vec<usize> = (0..nb).collect();
    let mut active = vec![0usize; nc];
    let mut attached: Vec<Vec<usize>> = vec![Vec::new(); nc];
    let mut interference = vec![0.0f64; nc];

    let noise_mw = db_to_lin(radio.noise_dbm_per_prb);
    let mut events = Vec::new();
    let mut interference_sum = 0.0;
    let mut sinr_sum = 0.0;
    let mut connected_samples = 0u64;
    let ticks = scenario.tick_count();

    for k in 0..ticks {
        let t = k as f64 * tick_s;
        let push = |events: &mut Vec<Event>, u: usize, kind: EventKind, detail: String| {
            events.push(Event { t_s: t, ue_id: u, kind, detail });
        };

        // Phase 1: motion and link evaluation.
        for (u, ue) in ues.iter_mut().enumerate() {
            let p = if k > 0 { step_ue_motion(&mut ue.motion, tick_s, &mut ue.motion_rng) } else { ue.motion.position() };
            for (s, site) in scenario.sites.iter().enumerate() {
                let los = line_of_sight(&scenario.buildings, [site.x, site.y], p);
                let (proc_, rng) = &mut shadowing[u * ns + s];
                let sh = proc_.update(p, los, &radio.shadowing, rng);
                let d2d = (p[0] - site.x).hypot(p[1] - site.y);
                site_los[u * ns + s] = los;
                site_loss[u * ns + s] = pl_model.path_loss_db(d2d, los) + sh;
            }
            let ue_pos = [p[0], p[1], scenario.ue_height_m];
            for (c, cell) in cells.iter().enumerate() {
                let link = u * nc + c;
                let los = site_los[u * ns + cell.site];
                let bs = [cell.position[0], cell.position[1], scenario.bs_height_m];
                let dir = frames[c].local_direction(bs, ue_pos);
                beams.gains(dir, &mut single);
                order.sort_by(|&a, &b| single[b].total_cmp(&single[a]).then(a.cmp(&b)));
                let fit = if los { &config.fit_los } else { &config.fit_nlos };
                for (r, &b) in order.iter().enumerate() {
                    rank_of[link * nb + b] = (r + 1) as u8;
                }
                for b in 0..nb {
                    gain[link * nb + b] = match config.gain {
                        GainModel::Single => single[b],
                        GainModel::Fitting => fit.apply(single[b]),
                    };
                }
                best[link] = order[0];
                let f = fade(link, 1, los, t)?;
                rsrp[link] = radio.tx_power_dbm_per_prb + gain[link * nb + order[0]] - site_loss[u * ns + cell.site]
                    + lin_to_db(f);
            }
        }

        // Initial attach to the strongest cell.
        if k == 0 {
            for (u, ue) in ues.iter_mut().enumerate() {
                ue.serving = argmax((0..nc).map(|c| rsrp[u * nc + c]));
            }
        }

        // Phase 2: one active beam per cell, uniform over its attached UEs'
        // serving beams; a cell without UEs transmits on a uniformly drawn beam.
        attached.iter_mut().for_each(Vec::clear);
        for (u, ue) in ues.iter().enumerate() {
            if !matches!(ue.mode, Mode::Reestablishing { .. }) {
                attached[ue.serving].push(u);
            }
        }
        for c in 0..nc {
            let x: f64 = sched_rngs[c].random();
            active[c] = if attached[c].is_empty() {
                ((x * nb as f64) as usize).min(nb - 1)
            } else {
                let n = attached[c].len();
                best[attached[c][((x * n as f64) as usize).min(n - 1)] * nc + c]
            };
        }

        // Phase 3: measurements and per-UE state machines.
        let l1_output = (k + 1) % l1_period == 0;
        for (u, ue) in ues.iter_mut().enumerate() {
            for c in 0..nc {
                let link = u * nc + c;
                let me = measurement_error_sample(&mut ue.me_rng, 1.0) * me_sigma;
                l1[link].push_db(rsrp[link] + me);
                if l1_output {
                    let q = l1[link].output_db().expect("window filled this tick");
                    l3[link] = Some(l3_filter_update(l3[link], q, alpha)?);
                }
            }

            let mut total_i = 0.0;
            for c in 0..nc {
                let link = u * nc + c;
                let a = active[c];
                let los = site_los[u * ns + cells[c].site];
                let f = fade(link, rank_of[link * nb + a] as usize, los, t)?;
                let p_dbm = radio.tx_power_dbm_per_prb + gain[link * nb + a] - site_loss[u * ns + cells[c].site];
                interference[c] = db_to_lin(p_dbm) * f;
                total_i += interference[c];
            }
            let sinr_to = |c: usize| rsrp[u * nc + c] - lin_to_db(noise_mw + total_i - interference[c]);

            let s = ue.serving;
            let mut cause = None;
            match ue.mode {
                Mode::Reestablishing { remaining } => {
                    cause = Some(OutageCause::Reestablishment);
                    let remaining = remaining - 1;
                    if remaining == 0 {
                        reestablish(ue, u, &l3, &rsrp, nc, &mut events, t);
                    } else {
                        ue.mode = Mode::Reestablishing { remaining };
                    }
                }
                Mode::RandomAccess(mut ho) => {
                    cause = Some(OutageCause::RandomAccess);
                    match ho.step(sinr_to(ho.target)) {
                        HoProgress::InProgress => ue.mode = Mode::RandomAccess(ho),
                        HoProgress::Succeeded => {
                            push(&mut events, u, EventKind::HoSuccess, format!("from={s};to={}", ho.target));
                            ue.serving = ho.target;
                            ue.mode = Mode::Connected;
                            ue.a3.reset();
                            ue.rlf.reset();
                        }
                        HoProgress::Failed => {
                            push(
                                &mut events,
                                u,
                                EventKind::HoCmdFail,
                                format!("from={s};to={};phase=random_access", ho.target),
                            );
                            ue.mode = Mode::Connected;
                        }
                    }
                }
                Mode::Connected => {
                    let sinr = sinr_to(s);
                    interference_sum += total_i - interference[s];
                    sinr_sum += sinr;
                    connected_samples += 1;
                    if sinr < thresholds.gamma_out_db {
                        cause = Some(OutageCause::Sinr);
                    }
                    match ue.rlf.update(sinr) {
                        RlfEvent::Started => push(&mut events, u, EventKind::T310Start, format!("cell={s}")),
                        RlfEvent::Stopped => push(&mut events, u, EventKind::T310Stop, format!("cell={s}")),
                        RlfEvent::Expired => {
                            push(&mut events, u, EventKind::Rlf, format!("cell={s}"));
                            ue.a3.reset();
                            if reest_ticks == 0 {
                                reestablish(ue, u, &l3, &rsrp, nc, &mut events, t);
                            } else {
                                ue.mode = Mode::Reestablishing { remaining: reest_ticks };
                            }
                        }
                        RlfEvent::None => {}
                    }
                    let l3_row = &l3[u * nc..(u + 1) * nc];
                    if matches!(ue.mode, Mode::Connected) && l3_row.iter().all(Option::is_some) {
                        let q: Vec<f64> = l3_row.iter().map(|v| v.expect("checked")).collect();
                        if let Some(target) = ue.a3.check(s, &q) {
                            push(&mut events, u, EventKind::A3Report, format!("from={s};to={target}"));
                            match HandoverProcedure::command(target, sinr, &thresholds, radio.t_ho_s, tick_s) {
                                Ok(ho) => {
                                    ue.rlf.reset();
                                    ue.mode = Mode::RandomAccess(ho);
                                }
                                Err(_) => push(
                                    &mut events,
                                    u,
                                    EventKind::HoCmdFail,
                                    format!("from={s};to={target};phase=command"),
                                ),
                            }
                        }
                    }
                }
            }

            if cause.is_some() {
                ue.outage_ticks += 1;
            }
            match (ue.outage, cause) {
                (None, Some(c)) => push(&mut events, u, EventKind::OutageEnter, format!("cause={}", c.as_str())),
                (Some(_), None) => push(&mut events, u, EventKind::OutageExit, String::new()),
                _ => {}
            }
            ue.outage = cause;
        }
    }

    let duration_s = ticks as f64 * tick_s;
    let report = analyze_event_log(&events, nu, duration_s)?;
    let n = connected_samples.max(1) as f64;
    Ok(SimOutput {
        report,
        events,
        stats: LinkStats {
            mean_interference_dbm: lin_to_db(interference_sum / n),
            mean_sinr_db: sinr_sum / n,
            outage_s: ues.iter().map(|u| u.outage_ticks as f64 * tick_s).collect(),
            fallback_links,
        },
    })
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Attaches a UE after radio link failure to the cell with the strongest
/// filtered RSRP (the old serving cell included), falling back to the
/// instantaneous RSRP before the first filter output.
fn reestablish(ue: &mut Ue, u: usize, l3: &[Option<f64>], rsrp: &[f64], nc: usize, events: &mut Vec<Event>, t: f64) {
    let row = &l3[u * nc..(u + 1) * nc];
    let target = if row.iter().all(Option::is_some) {
        argmax(row.iter().map(|v| v.expect("checked")))
    } else {
        argmax(rsrp[u * nc..(u + 1) * nc].iter().copied())
    };
    ue.serving = target;
    ue.mode = Mode::Connected;
    ue.a3.reset();
    ue.rlf.reset();
    events.push(Event { t_s: t, ue_id: u, kind: EventKind::Reestablish, detail: format!("cell={target}") });
}

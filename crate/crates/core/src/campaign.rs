//! Simulation campaigns: every (case × variant × seed) cell of a study,
//! aggregated into KPI tables and bar-chart data.
//!
//! A campaign is described by a TOML file:
//!
//! ```toml
//! scenario = "desk"          # "desk", "full" or a scenario file
//! seeds = [1, 2, 3]
//! duration_s = 60.0          # optional override of the scenario duration
//!
//! [tuples]                   # optional, default: synthetic, m = 100, seed = 1
//! source = "synthetic"
//! m = 100
//! seed = 1
//!
//! [[case]]                   # optional, default: the ten standard cases
//! name = "FF"
//! fast_fading = true
//!
//! [[variant]]                # optional, default: simplified (fitting and
//! model = "jakes-16"         # single) plus jakes-2/4/8/16 with single gain
//! gain = "single"
//! ```
//!
//! Cells are independent runs executed on a bounded worker pool; all output
//! files are byte-identical for identical configuration and seeds.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamforming::read_gain_models;
use crate::channel_stats::{
    ingest_tuples, load_lut, synthesize_tuple_library, Condition, FadingLut, SyntheticTupleParams, TupleLibrary,
};
use crate::mobility::{
    build_jakes_lut, build_simplified_lut, run_simulation, write_event_log, ChannelModel, FadingSource, Features,
    GainModel, KpiReport, MobilityError, Scenario, SimConfig,
};

#[derive(Debug, Error)]
pub enum CampaignError {
    /// The configuration is inconsistent or refers to missing files.
    #[error("campaign configuration: {0}")]
    Config(String),
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    /// A single cell failed; `cell` names it as `case/variant/seed`.
    #[error("run {cell}: {source}")]
    Run { cell: String, source: MobilityError },
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    ChannelStats(#[from] crate::channel_stats::ChannelStatsError),
}

impl CampaignError {
    /// True for errors caused by the inputs rather than by the run itself.
    pub fn is_validation(&self) -> bool {
        match self {
            CampaignError::Config(_) | CampaignError::ChannelStats(_) => true,
            CampaignError::Mobility(e) => !matches!(e, MobilityError::Io(_)),
            CampaignError::Io { .. } | CampaignError::Run { .. } => false,
        }
    }
}

fn config_err(reason: impl Into<String>) -> CampaignError {
    CampaignError::Config(reason.into())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CampaignError {
    CampaignError::Io { path: path.to_path_buf(), reason: e.to_string() }
}

/// One simulation case: a named set of impairment toggles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub name: String,
    #[serde(flatten)]
    pub features: Features,
}

impl CaseSpec {
    pub fn new(name: &str, fast_fading: bool, measurement_error: bool, l3_time_constant_s: Option<f64>) -> Self {
        Self { name: name.into(), features: Features { fast_fading, measurement_error, l3_time_constant_s } }
    }
}

/// The ten standard cases: Reference, ME, FF, ME+FF, L3 (100 ms) and
/// ME+FF+L3 with `T_α ∈ {100, 50, 20, 10, 5}` ms.
pub fn standard_cases() -> Vec<CaseSpec> {
    let mut cases = vec![
        CaseSpec::new("Reference", false, false, None),
        CaseSpec::new("ME", false, true, None),
        CaseSpec::new("FF", true, false, None),
        CaseSpec::new("ME+FF", true, true, None),
        CaseSpec::new("L3", false, false, Some(0.1)),
    ];
    for ms in [100, 50, 20, 10, 5] {
        cases.push(CaseSpec::new(&format!("ME+FF+L3 {ms} ms"), true, true, Some(ms as f64 / 1000.0)));
    }
    cases
}

/// One column of the bar charts: a channel model with a gain model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub model: ChannelModel,
    pub gain: GainModel,
}

impl Variant {
    pub fn new(model: ChannelModel, gain: GainModel) -> Self {
        Self { model, gain }
    }

    /// Column name, e.g. `jakes-16_single`.
    pub fn name(&self) -> String {
        format!("{}_{}", self.model, self.gain)
    }
}

/// Simplified model with both gain models, then Jakes `L ∈ {2, 4, 8, 16}`
/// with the single-ray gain.
pub fn standard_variants() -> Vec<Variant> {
    let mut v = vec![
        Variant::new(ChannelModel::Simplified, GainModel::Fitting),
        Variant::new(ChannelModel::Simplified, GainModel::Single),
    ];
    for l in [2, 4, 8, 16] {
        v.push(Variant::new(ChannelModel::Jakes { path_diversity: l }, GainModel::Single));
    }
    v
}

/// Where the simplified model's tuple library comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum TupleSource {
    Synthetic { m: usize, seed: u64 },
    File { path: PathBuf },
}

impl Default for TupleSource {
    fn default() -> Self {
        TupleSource::Synthetic { m: 100, seed: 1 }
    }
}

/// Fading LUT generation for the campaign. `simplified_dir` loads a saved
/// simplified-model LUT instead of building one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LutSettings {
    pub duration_s: f64,
    pub sinusoids: u32,
    pub seed: u64,
    pub simplified_dir: Option<PathBuf>,
}

impl Default for LutSettings {
    fn default() -> Self {
        Self { duration_s: 10.0, sinusoids: 64, seed: 1, simplified_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// `desk`, `full`, or a path to a scenario TOML file.
    pub scenario: String,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default = "standard_cases", rename = "case")]
    pub cases: Vec<CaseSpec>,
    #[serde(default = "standard_variants", rename = "variant")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub tuples: TupleSource,
    #[serde(default)]
    pub lut: LutSettings,
    /// Fitted LOS/NLOS gain models (as written by the gain fitter); the
    /// calibration defaults are used when absent.
    #[serde(default)]
    pub gain_models: Option<PathBuf>,
    /// Worker threads; `0` uses the available parallelism.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_true")]
    pub write_events: bool,
}

fn default_true() -> bool {
    true
}

/// File-name-safe form of a case name: alphanumerics kept, runs of anything
/// else collapsed to `-`.
pub fn slug(name: &str) -> String {
    let mut s = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c);
        } else if !s.ends_with('-') {
            s.push('-');
        }
    }
    s.trim_matches('-').to_string()
}

impl CampaignConfig {
    /// Standard cases and variants on a built-in or file scenario.
    pub fn new(scenario: &str, seeds: Vec<u64>) -> Self {
        Self {
            scenario: scenario.into(),
            seeds,
            duration_s: None,
            cases: standard_cases(),
            variants: standard_variants(),
            tuples: TupleSource::default(),
            lut: LutSettings::default(),
            gain_models: None,
            workers: 0,
            write_events: true,
        }
    }

    /// Parses a configuration; relative paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CampaignError> {
        let mut c: CampaignConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        if !matches!(c.scenario.as_str(), "desk" | "full") {
            let mut p = PathBuf::from(&c.scenario);
            resolve(&mut p);
            c.scenario = p.to_string_lossy().into_owned();
        }
        if let TupleSource::File { path } = &mut c.tuples {
            resolve(path);
        }
        if let Some(p) = &mut c.lut.simplified_dir {
            resolve(p);
        }
        if let Some(p) = &mut c.gain_models {
            resolve(p);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.seeds.is_empty() {
            return Err(config_err("at least one seed is required"));
        }
        if self.cases.is_empty() || self.variants.is_empty() {
            return Err(config_err("at least one case and one variant are required"));
        }
        let mut names = HashSet::new();
        for c in &self.cases {
            let s = slug(&c.name);
            if s.is_empty() {
                return Err(config_err(format!("case name `{}` has no usable characters", c.name)));
            }
            if !names.insert(s) {
                return Err(config_err(format!("duplicate case name `{}`", c.name)));
            }
            if let Some(t) = c.features.l3_time_constant_s {
                if !(t.is_finite() && t > 0.0) {
                    return Err(config_err(format!("case `{}`: l3_time_constant_s must be positive", c.name)));
                }
            }
        }
        let mut seen = HashSet::new();
        for v in &self.variants {
            if !seen.insert(*v) {
                return Err(config_err(format!("duplicate variant `{}`", v.name())));
            }
        }
        let mut seeds = HashSet::new();
        if !self.seeds.iter().all(|s| seeds.insert(*s)) {
            return Err(config_err("duplicate seed"));
        }
        if let Some(d) = self.duration_s {
            if !(d.is_finite() && d > 0.0) {
                return Err(config_err("duration_s must be positive"));
            }
        }
        if !(self.lut.duration_s.is_finite() && self.lut.duration_s > 0.0) {
            return Err(config_err("lut.duration_s must be positive"));
        }
        let mut files: Vec<&Path> = Vec::new();
        if !matches!(self.scenario.as_str(), "desk" | "full") {
            files.push(Path::new(&self.scenario));
        }
        if let TupleSource::File { path } = &self.tuples {
            files.push(path);
        }
        if let Some(p) = &self.lut.simplified_dir {
            files.push(p);
        }
        if let Some(p) = &self.gain_models {
            files.push(p);
        }
        for f in files {
            if !f.exists() {
                return Err(config_err(format!("`{}` does not exist", f.display())));
            }
        }
        Ok(())
    }

    /// The scenario with the campaign's duration override applied.
    pub fn load_scenario(&self) -> Result<Scenario, CampaignError> {
        let mut s = match self.scenario.as_str() {
            "desk" => Scenario::desk(),
            "full" => Scenario::full(),
            path => {
                let path = Path::new(path);
                let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                Scenario::from_toml(&text)?
            }
        };
        if let Some(d) = self.duration_s {
            s.sim.duration_s = d;
        }
        s.validate()?;
        Ok(s)
    }

    fn sim_config(&self, features: Features, gain: GainModel) -> Result<SimConfig, CampaignError> {
        let mut config = SimConfig::new(features, gain);
        if let Some(path) = &self.gain_models {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let models = read_gain_models(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            for m in models {
                match m.condition {
                    Condition::Los => config.fit_los = m,
                    Condition::Nlos => config.fit_nlos = m,
                }
            }
        }
        Ok(config)
    }
}

/// KPIs of one (case, variant, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub case: String,
    pub variant: Variant,
    pub seed: u64,
    pub report: KpiReport,
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub case: String,
    pub variant: Variant,
    pub runs: usize,
    pub n_ho: Stat,
    pub n_rlf: Stat,
    pub outage_percent: Stat,
    pub ho_rate: Stat,
    pub rlf_rate: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    /// One record per cell, ordered by case, variant, seed.
    pub runs: Vec<RunRecord>,
    /// One row per (case, variant), same order.
    pub summary: Vec<SummaryRow>,
}

impl CampaignResult {
    pub fn summary_row(&self, case: &str, variant: &Variant) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.case == case && r.variant == *variant)
    }

    pub fn runs_of<'a>(&'a self, case: &'a str, variant: &'a Variant) -> impl Iterator<Item = &'a RunRecord> {
        self.runs.iter().filter(move |r| r.case == case && r.variant == *variant)
    }
}

/// Fading inputs shared by all runs of a campaign.
struct FadingData {
    library: Option<TupleLibrary>,
    simplified: Option<FadingLut>,
    jakes: BTreeMap<u32, FadingLut>,
}

impl FadingData {
    fn prepare(config: &CampaignConfig, scenario: &Scenario) -> Result<Self, CampaignError> {
        let ff_cases = config.cases.iter().any(|c| c.features.fast_fading);
        let mut data = FadingData { library: None, simplified: None, jakes: BTreeMap::new() };
        if !ff_cases {
            return Ok(data);
        }
        for v in &config.variants {
            match v.model {
                ChannelModel::Simplified if data.library.is_none() => {
                    data.library = Some(match &config.tuples {
                        TupleSource::Synthetic { m, seed } => {
                            synthesize_tuple_library(*m, 12, *seed, &SyntheticTupleParams::default())?
                        }
                        TupleSource::File { path } => {
                            let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
                            ingest_tuples(BufReader::new(f))?
                        }
                    });
                    data.simplified = Some(match &config.lut.simplified_dir {
                        Some(dir) => load_lut(dir)?,
                        None => build_simplified_lut(scenario, config.lut.duration_s, config.lut.sinusoids, config.lut.seed)?,
                    });
                }
                ChannelModel::Jakes { path_diversity } if !data.jakes.contains_key(&path_diversity) => {
                    let lut =
                        build_jakes_lut(scenario, path_diversity, config.lut.duration_s, config.lut.sinusoids, config.lut.seed)?;
                    data.jakes.insert(path_diversity, lut);
                }
                _ => {}
            }
        }
        Ok(data)
    }

    fn source(&self, features: &Features, model: ChannelModel) -> FadingSource<'_> {
        if !features.fast_fading {
            return FadingSource::None;
        }
        match model {
            ChannelModel::Simplified => FadingSource::Simplified {
                library: self.library.as_ref().expect("prepared"),
                lut: self.simplified.as_ref().expect("prepared"),
            },
            ChannelModel::Jakes { path_diversity } => FadingSource::Jakes { lut: &self.jakes[&path_diversity] },
        }
    }
}

/// A distinct simulation. Cases without fast fading do not depend on the
/// channel model, so their variants that differ only in model share one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct RunKey {
    case: usize,
    model: Option<ChannelModel>,
    gain: GainModel,
    seed: u64,
}

/// Runs every cell of the campaign. `progress` is called with a short line
/// after each distinct simulation completes.
pub fn run_campaign(
    config: &CampaignConfig,
    out_dir: Option<&Path>,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<CampaignResult, CampaignError> {
    config.validate()?;
    let scenario = config.load_scenario()?;
    let data = FadingData::prepare(config, &scenario)?;
    let sim_configs: Vec<(SimConfig, SimConfig)> = config
        .cases
        .iter()
        .map(|c| Ok((config.sim_config(c.features, GainModel::Single)?, config.sim_config(c.features, GainModel::Fitting)?)))
        .collect::<Result<_, CampaignError>>()?;

    // Cells in output order, and the distinct runs behind them.
    let mut cells: Vec<(usize, Variant, u64, usize)> = Vec::new();
    let mut keys: Vec<RunKey> = Vec::new();
    for (ci, case) in config.cases.iter().enumerate() {
        for v in &config.variants {
            for &seed in &config.seeds {
                let key = RunKey { case: ci, model: case.features.fast_fading.then_some(v.model), gain: v.gain, seed };
                let k = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
                    keys.push(key);
                    keys.len() - 1
                });
                cells.push((ci, *v, seed, k));
            }
        }
    }

    let events_dir = out_dir.filter(|_| config.write_events).map(|d| d.join("events"));
    if let Some(dir) = &events_dir {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }

    let workers = match config.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(keys.len())
    .max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<(KpiReport, Vec<u8>), CampaignError>>>> =
        Mutex::new((0..keys.len()).map(|_| None).collect());
    let done = AtomicUsize::new(0);

    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(key) = keys.get(k) else { break };
                let case = &config.cases[key.case];
                let label = format!(
                    "{}/{}/{}/seed{}",
                    case.name,
                    key.model.map_or_else(|| "no-fading".to_string(), |m| m.to_string()),
                    key.gain,
                    key.seed
                );
                let (single, fitting) = &sim_configs[key.case];
                let sim_config = match key.gain {
                    GainModel::Single => single,
                    GainModel::Fitting => fitting,
                };
                let mut sc = scenario.clone();
                sc.sim.seed = key.seed;
                let source = data.source(&case.features, key.model.unwrap_or(ChannelModel::Simplified));
                let outcome = run_simulation(&sc, sim_config, &source)
                    .map_err(|source| CampaignError::Run { cell: label.clone(), source })
                    .and_then(|out| {
                        let mut log = Vec::new();
                        if events_dir.is_some() {
                            write_event_log(&out.events, &mut log)
                                .map_err(|source| CampaignError::Run { cell: label.clone(), source })?;
                        }
                        Ok((out.report, log))
                    });
                let failed = outcome.is_err();
                results.lock().expect("no worker panicked")[k] = Some(outcome);
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                progress(&format!("[{n}/{}] {label}", keys.len()));
                if failed {
                    // Abort: stop handing out work.
                    next.store(keys.len(), Ordering::Relaxed);
                }
            });
        }
    });

    let mut results = results.into_inner().expect("no worker panicked");
    // Report the first failure in cell order.
    if let Some(pos) = results.iter().position(|r| matches!(r, Some(Err(_)))) {
        return Err(results[pos].take().expect("present").expect_err("is an error"));
    }
    let results: Vec<(KpiReport, Vec<u8>)> =
        results.into_iter().map(|r| r.expect("every run completed").expect("checked above")).collect();

    let mut runs = Vec::with_capacity(cells.len());
    for &(ci, variant, seed, k) in &cells {
        let case = &config.cases[ci];
        if let Some(dir) = &events_dir {
            let path = dir.join(format!("{}__{}__seed{seed}.csv", slug(&case.name), variant.name()));
            write_atomic(&path, &results[k].1)?;
        }
        runs.push(RunRecord { case: case.name.clone(), variant, seed, report: results[k].0.clone() });
    }
    let summary = summarize(config, &runs);
    let result = CampaignResult { runs, summary };
    if let Some(dir) = out_dir {
        write_outputs(&result, config, dir)?;
    }
    Ok(result)
}

fn summarize(config: &CampaignConfig, runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for case in &config.cases {
        for v in &config.variants {
            let rs: Vec<&RunRecord> = runs.iter().filter(|r| r.case == case.name && r.variant == *v).collect();
            let stat = |f: &dyn Fn(&KpiReport) -> f64| Stat::of(&rs.iter().map(|r| f(&r.report)).collect::<Vec<_>>());
            rows.push(SummaryRow {
                case: case.name.clone(),
                variant: *v,
                runs: rs.len(),
                n_ho: stat(&|r| r.n_ho as f64),
                n_rlf: stat(&|r| r.n_rlf as f64),
                outage_percent: stat(&|r| r.outage_percent),
                ho_rate: stat(&|r| r.ho_rate()),
                rlf_rate: stat(&|r| r.rlf_rate()),
            });
        }
    }
    rows
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CampaignError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Quotes a CSV field when needed.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-run KPI table.
pub fn runs_csv(runs: &[RunRecord]) -> String {
    let mut s = String::from("case,variant,model,gain,seed,n_ho,n_rlf,outage_percent,ho_per_ue_min,rlf_per_ue_min\n");
    for r in runs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{:.6},{:.6},{:.6}",
            field(&r.case),
            r.variant.name(),
            r.variant.model,
            r.variant.gain,
            r.seed,
            r.report.n_ho,
            r.report.n_rlf,
            r.report.outage_percent,
            r.report.ho_rate(),
            r.report.rlf_rate()
        );
    }
    s
}

/// Mean and standard deviation per (case, variant).
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(
        "case,variant,runs,n_ho_mean,n_ho_std,n_rlf_mean,n_rlf_std,outage_percent_mean,outage_percent_std,\
         ho_per_ue_min_mean,ho_per_ue_min_std,rlf_per_ue_min_mean,rlf_per_ue_min_std\n",
    );
    for r in rows {
        let _ = write!(s, "{},{},{}", field(&r.case), r.variant.name(), r.runs);
        for st in [r.n_ho, r.n_rlf, r.outage_percent, r.ho_rate, r.rlf_rate] {
            let _ = write!(s, ",{:.6},{:.6}", st.mean, st.std);
        }
        s.push('\n');
    }
    s
}

/// Bar-chart table for one KPI: rows are cases, columns are variants (mean,
/// then standard deviation).
pub fn bars_csv(result: &CampaignResult, config: &CampaignConfig, kpi: fn(&SummaryRow) -> Stat) -> String {
    let mut s = String::from("case");
    for v in &config.variants {
        let _ = write!(s, ",{0},{0}_std", v.name());
    }
    s.push('\n');
    for case in &config.cases {
        s.push_str(&field(&case.name));
        for v in &config.variants {
            let st = result.summary_row(&case.name, v).map(kpi).unwrap_or_default();
            let _ = write!(s, ",{:.6},{:.6}", st.mean, st.std);
        }
        s.push('\n');
    }
    s
}

/// Writes `kpi_runs.csv`, `kpi_summary.csv` and `bars_{n_ho,n_rlf,outage_percent}.csv`.
pub fn write_outputs(result: &CampaignResult, config: &CampaignConfig, dir: &Path) -> Result<(), CampaignError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_atomic(&dir.join("kpi_runs.csv"), runs_csv(&result.runs).as_bytes())?;
    write_atomic(&dir.join("kpi_summary.csv"), summary_csv(&result.summary).as_bytes())?;
    let bars: [(&str, fn(&SummaryRow) -> Stat); 3] =
        [("n_ho", |r| r.n_ho), ("n_rlf", |r| r.n_rlf), ("outage_percent", |r| r.outage_percent)];
    for (name, kpi) in bars {
        write_atomic(&dir.join(format!("bars_{name}.csv")), bars_csv(result, config, kpi).as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(cases: Vec<CaseSpec>, variants: Vec<Variant>, seeds: Vec<u64>) -> CampaignConfig {
        let mut c = CampaignConfig::new("desk", seeds);
        c.duration_s = Some(2.0);
        c.cases = cases;
        c.variants = variants;
        c.tuples = TupleSource::Synthetic { m: 10, seed: 3 };
        c.lut.duration_s = 2.0;
        c.workers = 2;
        c
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("ME+FF+L3 100 ms"), "ME-FF-L3-100-ms");
        assert_eq!(slug("Reference"), "Reference");
        assert_eq!(slug("++"), "");
    }

    #[test]
    fn stats() {
        let s = Stat::of(&[1.0, 2.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
        assert_eq!(Stat::of(&[4.0]).std, 0.0);
    }

    #[test]
    fn standard_tables() {
        let cases = standard_cases();
        assert_eq!(cases.len(), 10);
        assert_eq!(cases[5].name, "ME+FF+L3 100 ms");
        assert_eq!(cases[5].features.l3_time_constant_s, Some(0.1));
        assert!(!cases[0].features.fast_fading && cases[2].features.fast_fading);
        let names: Vec<String> = standard_variants().iter().map(Variant::name).collect();
        assert_eq!(names[0], "simplified_fitting");
        assert_eq!(names[5], "jakes-16_single");
    }

    #[test]
    fn parses_config() {
        let text = r#"
            scenario = "desk"
            seeds = [1, 2]
            duration_s = 5.0
            [tuples]
            source = "synthetic"
            m = 20
            seed = 4
            [[case]]
            name = "Reference"
            [[case]]
            name = "FF"
            fast_fading = true
            [[variant]]
            model = "jakes-16"
            gain = "single"
        "#;
        let c = CampaignConfig::from_toml(text, Path::new(".")).unwrap();
        assert_eq!(c.cases.len(), 2);
        assert!(c.cases[1].features.fast_fading);
        assert_eq!(c.variants, vec![Variant::new(ChannelModel::Jakes { path_diversity: 16 }, GainModel::Single)]);
        assert_eq!(c.tuples, TupleSource::Synthetic { m: 20, seed: 4 });
        let defaults = CampaignConfig::from_toml("scenario = \"desk\"\nseeds = [1]\n", Path::new(".")).unwrap();
        assert_eq!(defaults.cases.len(), 10);
        assert_eq!(defaults.variants.len(), 6);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "scenario = \"desk\"\nseeds = [1]\n";
        let bad = [
            "scenario = \"desk\"\nseeds = []\n".to_string(),
            format!("{base}[[case]]\nname = \"A\"\n[[case]]\nname = \"A\"\n"),
            format!("{base}[[variant]]\nmodel = \"jakes-0\"\ngain = \"single\"\n"),
            format!("{base}[[variant]]\nmodel = \"rayleigh\"\ngain = \"single\"\n"),
            format!("{base}[tuples]\nsource = \"file\"\npath = \"/nonexistent/tuples.csv\"\n"),
            "scenario = \"/nonexistent/scenario.toml\"\nseeds = [1]\n".to_string(),
            format!("{base}bogus = 1\n"),
        ];
        for text in bad {
            let e = CampaignConfig::from_toml(&text, Path::new(".")).unwrap_err();
            assert!(e.is_validation(), "{text}: {e}");
        }
    }

    #[test]
    fn cross_product_and_sharing() {
        let cases = vec![CaseSpec::new("Reference", false, false, None), CaseSpec::new("FF", true, false, None)];
        let variants = vec![
            Variant::new(ChannelModel::Simplified, GainModel::Single),
            Variant::new(ChannelModel::Jakes { path_diversity: 16 }, GainModel::Single),
        ];
        let c = tiny(cases, variants.clone(), vec![1, 2]);
        let r = run_campaign(&c, None, &|_| {}).unwrap();
        assert_eq!(r.runs.len(), 8);
        assert_eq!(r.summary.len(), 4);
        // Without fast fading the channel model is irrelevant.
        let a: Vec<_> = r.runs_of("Reference", &variants[0]).map(|x| &x.report).collect();
        let b: Vec<_> = r.runs_of("Reference", &variants[1]).map(|x| &x.report).collect();
        assert_eq!(a, b);
        assert!(runs_csv(&r.runs).lines().count() == 9);
    }
}

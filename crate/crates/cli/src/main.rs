//! `mmwmob`: tuple synthesis, LUT generation, gain-model fitting, simulation
//! campaigns and event-log analysis.
//!
//! Exit status: 0 on success, 1 for invalid arguments or inputs, 2 when a
//! run or an I/O operation fails.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use mmwmob::beamforming::{fit_gain_model, read_gain_samples, write_gain_models, GainFitModel};
use mmwmob::campaign::{run_campaign, CampaignConfig, CampaignError};
use mmwmob::channel_stats::{
    export_tuples, ingest_tuples, save_lut, synthesize_tuple_library, Condition, SyntheticTupleParams, TupleLibrary,
};
use mmwmob::fading::{coherence_time_jakes, DopplerParams};
use mmwmob::mobility::{analyze_event_log, build_jakes_lut, build_simplified_lut, read_event_log, ChannelModel, Scenario};

#[derive(Parser, Debug)]
#[command(name = "mmwmob", version, about = "mmWave fast-fading channel model and mobility simulator")]
struct Cli {
    /// Campaign configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; for `run` it replaces the configured seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Progress and extra tables on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize or re-ingest a per-beam tuple library and print its medians.
    GenTuples(GenTuples),
    /// Build a fast-fading LUT for a scenario and save it.
    BuildLut(BuildLut),
    /// Fit the LOS/NLOS gain models to sampled beamforming gains.
    FitGain(FitGain),
    /// Run a simulation campaign.
    Run(RunArgs),
    /// Recompute KPIs from an event log.
    Analyze(Analyze),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["synthetic", "input"]))]
struct GenTuples {
    /// Draw tuples from the built-in synthetic distributions.
    #[arg(long)]
    synthetic: bool,
    /// Existing tuple file to validate and re-export.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Tuples per condition.
    #[arg(long, requires = "synthetic")]
    m: Option<usize>,
    /// Beams per tuple.
    #[arg(long, default_value_t = 12)]
    b: usize,
    /// Output file; defaults to `<out>/tuples.csv`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildLut {
    /// `desk`, `full`, or a scenario file.
    #[arg(long, default_value = "desk")]
    scenario: String,
    /// `simplified` or `jakes-<L>`.
    #[arg(long, default_value = "simplified")]
    model: ChannelModel,
    /// Envelope length per LUT cell, seconds.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    #[arg(long, default_value_t = 64)]
    sinusoids: u32,
    /// LUT directory; defaults to `<out>/lut`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitGain {
    /// CSV with `condition,g_single_db,g_multipath_db` rows.
    samples: PathBuf,
    /// Saturation floor for the LOS model, dB.
    #[arg(long)]
    floor_los: Option<f64>,
    /// Saturation floor for the NLOS model, dB.
    #[arg(long)]
    floor_nlos: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario used when no `--config` is given.
    #[arg(long, default_value = "desk")]
    scenario: String,
    /// Override the simulated duration, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Worker threads (0 = available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Skip writing per-run event logs.
    #[arg(long)]
    no_events: bool,
}

#[derive(Args, Debug)]
struct Analyze {
    /// Event log CSV (`t_s,ue_id,event,detail`).
    events: PathBuf,
    /// Number of UEs in the run.
    #[arg(long)]
    ues: usize,
    /// Simulated duration, seconds.
    #[arg(long)]
    duration: f64,
}

/// An error with its exit status.
enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

trait Classify<T> {
    fn invalid(self, what: &str) -> Result<T, Failure>;
    fn runtime(self, what: &str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self, what: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::Invalid(e.into().context(what.to_string())))
    }

    fn runtime(self, what: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into().context(what.to_string())))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::GenTuples(a) => gen_tuples(cli, a),
        Command::BuildLut(a) => build_lut(cli, a),
        Command::FitGain(a) => fit_gain(cli, a),
        Command::Run(a) => run(cli, a),
        Command::Analyze(a) => analyze(a),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).runtime(&format!("creating {}", dir.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, bytes).runtime(&format!("writing {}", path.display()))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-rank median coherence time and path diversity, per condition.
fn print_tuple_summary(lib: &TupleLibrary) -> Result<(), Failure> {
    let jakes = DopplerParams::new(lib.ref_carrier_hz(), lib.ref_speed_mps())
        .and_then(|d| coherence_time_jakes(d.max_doppler_hz()))
        .invalid("reference Doppler")?;
    println!(
        "reference: {:.3} GHz, {:.3} m/s, Jakes Tc {:.4} ms",
        lib.ref_carrier_hz() / 1e9,
        lib.ref_speed_mps(),
        jakes * 1e3
    );
    println!("condition,rank,median_tc_ms,median_tc_over_jakes,median_l");
    for cond in [Condition::Los, Condition::Nlos] {
        let tuples = lib.tuples(cond);
        for rank in 1..=lib.beams() {
            let rows: Vec<_> = tuples.iter().filter_map(|t| t.row(rank)).collect();
            if rows.is_empty() {
                continue;
            }
            let tc = median(rows.iter().map(|r| r.coherence_time_s).collect());
            let l = median(rows.iter().map(|r| r.path_diversity as f64).collect());
            println!("{cond},{rank},{:.4},{:.3},{l}", tc * 1e3, tc / jakes);
        }
    }
    Ok(())
}

fn gen_tuples(cli: &Cli, a: &GenTuples) -> Result<(), Failure> {
    let lib = if let Some(input) = &a.input {
        let f = fs::File::open(input).runtime(&format!("opening {}", input.display()))?;
        ingest_tuples(BufReader::new(f)).invalid(&format!("reading {}", input.display()))?
    } else {
        let m = a.m.ok_or_else(|| Failure::Invalid(anyhow!("--synthetic needs --m <tuples per condition>")))?;
        synthesize_tuple_library(m, a.b, cli.seed.unwrap_or(1), &SyntheticTupleParams::default())
            .invalid("synthesizing tuples")?
    };
    let path = a.output.clone().unwrap_or_else(|| cli.out.join("tuples.csv"));
    let mut buf = Vec::new();
    export_tuples(&lib, &mut buf).runtime("encoding tuples")?;
    write_file(&path, &buf)?;
    if cli.verbose {
        eprintln!("wrote {}", path.display());
    }
    print_tuple_summary(&lib)
}

fn load_scenario(spec: &str) -> Result<Scenario, Failure> {
    let c = CampaignConfig::new(spec, vec![1]);
    c.validate().map_err(|e| Failure::Invalid(e.into()))?;
    c.load_scenario().map_err(campaign_failure)
}

fn campaign_failure(e: CampaignError) -> Failure {
    if e.is_validation() {
        Failure::Invalid(e.into())
    } else {
        Failure::Runtime(e.into())
    }
}

fn build_lut(cli: &Cli, a: &BuildLut) -> Result<(), Failure> {
    let scenario = load_scenario(&a.scenario)?;
    let seed = cli.seed.unwrap_or(1);
    let lut = match a.model {
        ChannelModel::Simplified => build_simplified_lut(&scenario, a.duration, a.sinusoids, seed),
        ChannelModel::Jakes { path_diversity } => {
            build_jakes_lut(&scenario, path_diversity, a.duration, a.sinusoids, seed)
        }
    }
    .invalid("building LUT")?;
    let dir = a.output.clone().unwrap_or_else(|| cli.out.join("lut"));
    create_dir(&dir)?;
    save_lut(&lut, &dir).runtime(&format!("saving LUT to {}", dir.display()))?;
    println!(
        "{} LUT: L {:?}, Tc {:?} ms, {} samples at {:.4} ms per cell -> {}",
        a.model,
        lut.diversity_grid(),
        lut.coherence_grid_s().iter().map(|t| (t * 1e6).round() / 1e3).collect::<Vec<_>>(),
        lut.envelope_len(),
        lut.sample_period_s() * 1e3,
        dir.display()
    );
    Ok(())
}

fn fit_gain(cli: &Cli, a: &FitGain) -> Result<(), Failure> {
    let f = fs::File::open(&a.samples).runtime(&format!("opening {}", a.samples.display()))?;
    let samples = read_gain_samples(BufReader::new(f)).invalid(&format!("reading {}", a.samples.display()))?;
    if samples.is_empty() {
        return Err(Failure::Invalid(anyhow!("{} contains no samples", a.samples.display())));
    }
    let mut models: Vec<GainFitModel> = Vec::new();
    for (cond, floor) in [(Condition::Los, a.floor_los), (Condition::Nlos, a.floor_nlos)] {
        let mut pts: Vec<(f64, f64)> =
            samples.iter().filter(|s| s.condition == cond).map(|s| (s.g_single_db, s.g_multipath_db)).collect();
        if pts.is_empty() {
            continue;
        }
        let model = fit_gain_model(&pts, cond, floor).invalid(&format!("fitting {cond}"))?;
        pts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut plot = String::from("g_single,g_multipath,g_fit\n");
        for (x, y) in &pts {
            plot.push_str(&format!("{x:.6},{y:.6},{:.6}\n", model.apply(*x)));
        }
        let name = format!("gain_fit_{}.csv", cond.to_string().to_lowercase());
        write_file(&cli.out.join(name), plot.as_bytes())?;
        println!(
            "{cond}: slope {:.6}, intercept {:.6} dB, floor {:.1} dB ({} samples)",
            model.slope,
            model.intercept_db,
            model.floor_db,
            pts.len()
        );
        models.push(model);
    }
    let mut buf = Vec::new();
    write_gain_models(&models, &mut buf).runtime("encoding models")?;
    write_file(&cli.out.join("gain_models.toml"), &buf)
}

fn run(cli: &Cli, a: &RunArgs) -> Result<(), Failure> {
    let mut config = match &cli.config {
        Some(path) => CampaignConfig::load(path).map_err(campaign_failure)?,
        None => CampaignConfig::new(&a.scenario, vec![1]),
    };
    if let Some(seed) = cli.seed {
        config.seeds = vec![seed];
    }
    if let Some(d) = a.duration {
        config.duration_s = Some(d);
    }
    if let Some(w) = a.workers {
        config.workers = w;
    }
    if a.no_events {
        config.write_events = false;
    }
    config.validate().map_err(campaign_failure)?;
    let verbose = cli.verbose;
    let progress = move |line: &str| {
        if verbose {
            eprintln!("{line}");
        }
    };
    let result = run_campaign(&config, Some(&cli.out), &progress).map_err(campaign_failure)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "case,variant,n_ho_mean,n_rlf_mean,outage_percent_mean");
    for r in &result.summary {
        let _ = writeln!(
            out,
            "{},{},{:.2},{:.2},{:.3}",
            r.case,
            r.variant.name(),
            r.n_ho.mean,
            r.n_rlf.mean,
            r.outage_percent.mean
        );
    }
    if verbose {
        eprintln!("{} runs written to {}", result.runs.len(), cli.out.display());
    }
    Ok(())
}

fn analyze(a: &Analyze) -> Result<(), Failure> {
    let f = fs::File::open(&a.events).runtime(&format!("opening {}", a.events.display()))?;
    let events = read_event_log(BufReader::new(f)).invalid(&format!("reading {}", a.events.display()))?;
    let report = analyze_event_log(&events, a.ues, a.duration).invalid("analyzing events")?;
    println!("n_ho,n_rlf,outage_percent,ho_per_ue_min,rlf_per_ue_min");
    println!(
        "{},{},{:.6},{:.6},{:.6}",
        report.n_ho,
        report.n_rlf,
        report.outage_percent,
        report.ho_rate(),
        report.rlf_rate()
    );
    println!("cell,n_ho_out,n_ho_in,n_rlf");
    for (c, k) in report.per_cell.iter().enumerate() {
        println!("{c},{},{},{}", k.n_ho_out, k.n_ho_in, k.n_rlf);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

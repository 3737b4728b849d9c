use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mmwmob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmwmob")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn out_arg(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

#[test]
fn gen_tuples_round_trips_and_beats_jakes() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = mmwmob(&["gen-tuples", "--synthetic", "--m", "100", "--b", "12", "--seed", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    // Every rank's median coherence time exceeds the Jakes value.
    let ratios: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("LOS,") || l.starts_with("NLOS,"))
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 24);
    assert!(ratios.iter().all(|r| *r > 1.0), "{ratios:?}");

    let file = dir.path().join("tuples.csv");
    let again = dir.path().join("again.csv");
    let o = mmwmob(&["gen-tuples", "--input", &file.to_string_lossy(), "--output", &again.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&file).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mmwmob(&["gen-tuples"]).status.code(), Some(1));
    assert_eq!(mmwmob(&["analyze"]).status.code(), Some(1));
    assert_eq!(mmwmob(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(mmwmob(&["gen-tuples", "--synthetic", "--m", "0"]).status.code(), Some(1));
    assert_eq!(mmwmob(&["--help"]).status.code(), Some(0));
}

#[test]
fn fit_gain_recovers_line_and_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    let mut csv = String::from("condition,g_single_db,g_multipath_db\n");
    for k in 0..30 {
        let g = -40.0 + 2.0 * k as f64;
        csv.push_str(&format!("LOS,{g},{}\n", 0.9 * g - 1.0));
        csv.push_str(&format!("NLOS,{g},{}\n", 0.5 * g - 2.0));
    }
    fs::write(&samples, csv).unwrap();
    let out = out_arg(dir.path());
    let o = mmwmob(&["fit-gain", &samples.to_string_lossy(), "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let models = mmwmob::beamforming::read_gain_models(&fs::read_to_string(dir.path().join("gain_models.toml")).unwrap())
        .unwrap();
    assert_eq!(models.len(), 2);
    assert!((models[0].slope - 0.9).abs() < 1e-6 && (models[0].intercept_db + 1.0).abs() < 1e-6);
    assert!((models[1].slope - 0.5).abs() < 1e-6 && (models[1].intercept_db + 2.0).abs() < 1e-6);
    for name in ["gain_fit_los.csv", "gain_fit_nlos.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("g_single,g_multipath,g_fit"));
        let fit: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
        assert_eq!(fit.len(), 30);
        assert!(fit.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn fit_gain_rejects_empty_and_degenerate_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(mmwmob(&["fit-gain", &empty.to_string_lossy(), "--out", &out]).status.code(), Some(1));
    let header_only = dir.path().join("header.csv");
    fs::write(&header_only, "condition,g_single_db,g_multipath_db\n").unwrap();
    assert_eq!(mmwmob(&["fit-gain", &header_only.to_string_lossy(), "--out", &out]).status.code(), Some(1));
    let flat = dir.path().join("flat.csv");
    let rows: String = (0..20).map(|k| format!("LOS,3.0,{k}\n")).collect();
    fs::write(&flat, format!("condition,g_single_db,g_multipath_db\n{rows}")).unwrap();
    let o = mmwmob(&["fit-gain", &flat.to_string_lossy(), "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
    let missing = dir.path().join("missing.csv");
    assert_eq!(mmwmob(&["fit-gain", &missing.to_string_lossy(), "--out", &out]).status.code(), Some(2));
}

#[test]
fn build_lut_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = mmwmob(&["build-lut", "--model", "jakes-4", "--duration", "1", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lut = mmwmob::channel_stats::load_lut(&dir.path().join("lut")).unwrap();
    assert_eq!(lut.diversity_grid(), &[4]);
    assert_eq!(mmwmob(&["build-lut", "--model", "jakes-0", "--out", &out]).status.code(), Some(1));
}

const CAMPAIGN: &str = r#"
scenario = "desk"
seeds = [1, 2]
duration_s = 4.0

[tuples]
source = "synthetic"
m = 20
seed = 3

[lut]
duration_s = 2.0

[[case]]
name = "Reference"

[[case]]
name = "FF"
fast_fading = true

[[variant]]
model = "simplified"
gain = "single"

[[variant]]
model = "jakes-16"
gain = "single"
"#;

#[test]
fn run_campaign_is_a_cross_product_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("campaign.toml");
    fs::write(&config, CAMPAIGN).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = mmwmob(&["run", "--config", &config.to_string_lossy(), "--out", &out.to_string_lossy()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let runs = fs::read_to_string(a.join("kpi_runs.csv")).unwrap();
    // 2 cases × 2 models × 2 seeds.
    assert_eq!(runs.lines().count(), 1 + 8);
    let bars = fs::read_to_string(a.join("bars_n_ho.csv")).unwrap();
    assert_eq!(bars.lines().next(), Some("case,simplified_single,simplified_single_std,jakes-16_single,jakes-16_single_std"));
    assert_eq!(bars.lines().count(), 3);
    for name in ["kpi_runs.csv", "kpi_summary.csv", "bars_n_ho.csv", "bars_n_rlf.csv", "bars_outage_percent.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let log = a.join("events/FF__jakes-16_single__seed2.csv");
    assert_eq!(fs::read(&log).unwrap(), fs::read(b.join("events/FF__jakes-16_single__seed2.csv")).unwrap());

    // The analyzer recomputes the run's KPIs from its event log.
    let o = mmwmob(&["analyze", &log.to_string_lossy(), "--ues", "18", "--duration", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let analyzed = stdout(&o);
    let kpis: Vec<&str> = analyzed.lines().nth(1).unwrap().split(',').collect();
    let cols: Vec<&str> = runs
        .lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|c| c[0] == "FF" && c[1] == "jakes-16_single" && c[4] == "2")
        .unwrap();
    assert_eq!((kpis[0], kpis[1], kpis[2]), (cols[5], cols[6], cols[7]));
}

#[test]
fn run_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "scenario = \"desk\"\nseeds = [1]\n[[case]]\nname = \"A\"\n[[case]]\nname = \"A\"\n").unwrap();
    let o = mmwmob(&["run", "--config", &config.to_string_lossy(), "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate case"));
}

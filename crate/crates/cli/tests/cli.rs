use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SHORT: &str = "[run]\nduration_s = 4\nseed = 3\n\n[output]\npsd = true\npsd_block_len = 4096\npsd_blocks = 8\n";

fn dualsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualsync")).args(args).output().unwrap()
}

fn setup(config: &str) -> (TempDir, String) {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("scenario.ini");
    fs::write(&path, config).unwrap();
    let p = path.display().to_string();
    (tmp, p)
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

#[test]
fn simulate_writes_config_timeseries_and_psd() {
    let (tmp, cfg) = setup(SHORT);
    let out = tmp.path().join("sim");
    let o = dualsync(&["--config", &cfg, "--out", out.to_str().unwrap(), "--quiet", "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let rows = data_rows(&out.join("timeseries.csv"));
    assert!(rows[0].starts_with("tick,t_s,theta_bf_minus_theta0_rad"));
    assert_eq!(rows.len() - 1, (4.0f64 * 8e6 / 956.0).round() as usize);
    let psd = data_rows(&out.join("psd.csv"));
    assert_eq!(psd[0], "freq_hz,theta_bf_minus_theta0_dbc_hz");
    // Bins 1 to n/2 - 1; DC is left out.
    assert_eq!(psd.len() - 1, 2047);

    let echoed = fs::read_to_string(out.join("config.ini")).unwrap();
    assert!(echoed.contains("seed = 3"));
    let first = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert!(first.starts_with("# config_hash="));
}

#[test]
fn seed_flag_overrides_config() {
    let (tmp, cfg) = setup(SHORT);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, seed) in [(&a, "3"), (&b, "4")] {
        let o = dualsync(&["--config", &cfg, "--out", dir.to_str().unwrap(), "--seed", seed, "--quiet", "simulate"]);
        assert!(o.status.success());
    }
    let ta = fs::read_to_string(a.join("timeseries.csv")).unwrap();
    let tb = fs::read_to_string(b.join("timeseries.csv")).unwrap();
    assert!(ta.lines().next().unwrap().ends_with("seed=3"));
    assert!(tb.lines().next().unwrap().ends_with("seed=4"));
    assert_ne!(ta, tb);
}

#[test]
fn spectrum_of_a_written_column() {
    let (tmp, cfg) = setup(SHORT);
    let sim = tmp.path().join("sim");
    assert!(dualsync(&["--config", &cfg, "--out", sim.to_str().unwrap(), "--quiet", "simulate"]).status.success());
    let psd_dir = tmp.path().join("psd_dir");
    let input = sim.join("timeseries.csv");
    let o = dualsync(&[
        "--config",
        &cfg,
        "--out",
        psd_dir.to_str().unwrap(),
        "--quiet",
        "spectrum",
        "--input",
        input.to_str().unwrap(),
        "--column",
        "alpha_rad",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&psd_dir.join("spectrum.csv"));
    assert_eq!(rows[0], "freq_hz,alpha_dbc_hz");
    let f1: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
    assert!((f1 - 8e6 / 956.0 / 4096.0).abs() < 1e-6, "{f1}");

    let o = dualsync(&["--out", psd_dir.to_str().unwrap(), "spectrum", "--input", input.to_str().unwrap(), "--column", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "input");
}

#[test]
fn bode_and_delay_margin_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = dualsync(&["--out", out, "--quiet", "bode", "--points", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_rows(&tmp.path().join("bode.csv")).len(), 51);
    assert!(tmp.path().join("bode_single.csv").exists());

    let o = dualsync(&["--out", out, "--quiet", "delay-margin", "--points", "11"]);
    assert!(o.status.success());
    let rows = data_rows(&tmp.path().join("delay_margin.csv"));
    assert_eq!(rows.len(), 12);
    let last = rows.last().unwrap();
    let margin: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((margin / 0.23e-6 - 1.0).abs() < 0.25, "{last}");
}

#[test]
fn sweep_writes_one_directory_per_point_and_a_manifest() {
    let config = format!("{SHORT}\n[sweep]\nchannel.snr_db = [0, 20]\nmaster.zeta_m = [0.7, 1]\n");
    let (tmp, cfg) = setup(&config);
    let out = tmp.path().join("sweep");
    let o = dualsync(&["--config", &cfg, "--out", out.to_str().unwrap(), "--quiet", "sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out.join("manifest.csv"));
    assert_eq!(rows[0], "label,directory,config_hash,seed,status,steady_error_rad");
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[4], "ok", "{row}");
        assert!(out.join(fields[1]).join("timeseries.csv").exists(), "{row}");
    }
}

#[test]
fn reproduce_window_figure() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dualsync(&["--out", tmp.path().to_str().unwrap(), "--quiet", "reproduce", "fig14"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&tmp.path().join("fig14").join("window.csv"));
    assert_eq!(rows[0], "offset_bins,response_db");
    let peak: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(peak, 0.0);
    let far: Vec<f64> = rows[200..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(far.iter().all(|&db| db <= -280.0));
}

#[test]
fn config_errors_are_json_with_exit_code_two() {
    let (_tmp, cfg) = setup("[master]\nzeta_m = -2\nbogus = 1\n\n[run]\nduration_s = 4\n");
    let o = dualsync(&["--config", &cfg, "--quiet", "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stderr_json(&o);
    assert_eq!(v["error"], "config");
    assert_eq!(v["path"], cfg.as_str());
    let issues = v["issues"].as_array().unwrap();
    assert!(issues.iter().any(|i| i["key"] == "master.zeta_m" && i["line"] == 2));
    assert!(issues.iter().any(|i| i["key"] == "master.bogus"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = dualsync(&["--config", "/nonexistent/dir/none.ini", "simulate"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "io");
}

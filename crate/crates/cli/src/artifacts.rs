//! Atomic file emission and the shared "run one scenario into a directory"
//! step used by `simulate`, `sweep` and `reproduce`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dualsync::config::ScenarioConfig;
use dualsync::nodes::{run_scenario, tail_mean, ScenarioResult};
use dualsync::output::{write_psd, write_timeseries, CsvMeta};
use dualsync::spectral::psd_estimate;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

pub const CONFIG_FILE: &str = "config.ini";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const PSD_FILE: &str = "psd.csv";

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic<F>(path: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(|e| CliError::io(path, e))?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    // Temporary files are created owner-only; published artifacts are not.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))
            .map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_config(dir: &Path, cfg: &ScenarioConfig) -> CliResult<()> {
    let text = cfg.to_text();
    write_atomic(&dir.join(CONFIG_FILE), |w| w.write_all(text.as_bytes()))
}

pub fn meta_for(cfg: &ScenarioConfig) -> CsvMeta {
    CsvMeta::new(cfg.hash_hex(), cfg.run.seed)
}

pub fn warn_undersampled(cfg: &ScenarioConfig, quiet: bool) {
    if quiet {
        return;
    }
    for name in cfg.undersampled_loops() {
        eprintln!("warning: {name} loop bandwidth is coarse for the tick rate (omega*T > 0.1)");
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub ticks: usize,
    pub steady_error_rad: f64,
}

/// Runs `cfg` with its own seed and writes config, timeseries and PSD into `dir`.
pub fn simulate_into(dir: &Path, cfg: &ScenarioConfig) -> CliResult<(RunSummary, ScenarioResult)> {
    ensure_dir(dir)?;
    write_config(dir, cfg)?;
    let res = run_scenario(cfg, cfg.run.seed)?;
    let meta = meta_for(cfg);
    if cfg.output.timeseries {
        write_atomic(&dir.join(TIMESERIES_FILE), |w| {
            write_timeseries(w, &meta, &res, cfg.output.timeseries_stride)
        })?;
    }
    if cfg.output.psd {
        let est = psd_estimate(&res.phase_error_unwrapped(), res.tick_rate_hz, &cfg.psd_config())?;
        write_atomic(&dir.join(PSD_FILE), |w| {
            write_psd(w, &meta, &[("theta_bf_minus_theta0", &est)])
        })?;
    }
    let summary = RunSummary {
        dir: dir.to_path_buf(),
        ticks: res.len(),
        steady_error_rad: tail_mean(&res.theta_bf_minus_theta0, 0.1),
    };
    Ok((summary, res))
}

/// Directory-safe form of a sweep or recipe label.
pub fn sanitize_label(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-=+".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() {
        "point".to_string()
    } else {
        s
    }
}

use std::fs;
use std::path::Path;

use dualsync::analysis::{
    bode, delay_margin, dual_loop_tfs, log_grid, single_loop_tfs, MarginPoint, RationalDelayTF,
    TransferFunction,
};
use dualsync::config::ScenarioConfig;
use dualsync::oscillator::{fit_power_law, rf_gain_db, synthesize, NoiseMask, TwoStateParams};
use dualsync::output::{write_bode, write_columns, write_delay_margin, write_labeled_rows, write_psd, CsvMeta};
use dualsync::pll::{closed_tf, LoopConfig};
use dualsync::spectral::{psd_estimate, PsdEstimate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::artifacts::{ensure_dir, meta_for, sanitize_label, simulate_into, warn_undersampled, write_atomic, write_config};
use crate::error::{CliError, CliResult};

pub struct Context {
    pub cfg: ScenarioConfig,
    pub out: std::path::PathBuf,
    pub quiet: bool,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

pub fn simulate(ctx: &Context) -> CliResult<()> {
    warn_undersampled(&ctx.cfg, ctx.quiet);
    let (summary, _) = simulate_into(&ctx.out, &ctx.cfg)?;
    ctx.say(format!(
        "simulated {} ticks into {}; mean theta_bf - theta_0 over the last 10%: {:.3e} rad",
        summary.ticks,
        summary.dir.display(),
        summary.steady_error_rad
    ));
    Ok(())
}

fn loop_blocks(cfg: &ScenarioConfig) -> CliResult<(TransferFunction, TransferFunction, TransferFunction)> {
    let t = cfg.tick_period_s();
    let units = cfg.run.omega_units;
    let gm = closed_tf(&LoopConfig::from_hz(cfg.master.zeta_m, cfg.master.omega_m_hz, units, t)?);
    let gs = closed_tf(&LoopConfig::from_hz(cfg.follower.zeta_s, cfg.follower.omega_s_hz, units, t)?);
    let h = RationalDelayTF::delay(cfg.channel.tau_s);
    Ok((gm.into(), gs.into(), h.into()))
}

pub fn bode_cmd(ctx: &Context, start_hz: f64, stop_hz: f64, points: usize) -> CliResult<()> {
    if !(start_hz > 0.0 && stop_hz > start_hz && points >= 2) {
        return Err(CliError::Input(format!(
            "bode grid needs 0 < start < stop and at least 2 points, got {start_hz}..{stop_hz} with {points}"
        )));
    }
    let (gm, gs, h) = loop_blocks(&ctx.cfg)?;
    let grid = log_grid(start_hz, stop_hz, points);
    let dual = dual_loop_tfs(&gm, &gs, &h)?;
    let mut responses = Vec::new();
    for (name, tf) in dual.named() {
        responses.push((name, bode(tf, &grid)?));
    }
    let single = single_loop_tfs(&gm, &gs, &h)?;
    let mut single_responses = Vec::new();
    for (name, tf) in [
        ("f01", &single.f01),
        ("fx1", &single.fx1),
        ("fm1", &single.fm1),
        ("f02", &single.f02),
        ("fx2", &single.fx2),
        ("fm2", &single.fm2),
    ] {
        single_responses.push((name, bode(tf, &grid)?));
    }

    ensure_dir(&ctx.out)?;
    write_config(&ctx.out, &ctx.cfg)?;
    let meta = meta_for(&ctx.cfg);
    write_atomic(&ctx.out.join("bode.csv"), |w| write_bode(w, &meta, &responses))?;
    write_atomic(&ctx.out.join("bode_single.csv"), |w| write_bode(w, &meta, &single_responses))?;
    ctx.say(format!("wrote {} frequencies to {}", grid.len(), ctx.out.join("bode.csv").display()));
    Ok(())
}

pub fn delay_margin_cmd(ctx: &Context, start_hz: f64, stop_hz: f64, points: usize) -> CliResult<()> {
    if !(start_hz > 0.0 && stop_hz >= start_hz && points >= 1) {
        return Err(CliError::Input(format!(
            "delay-margin grid needs 0 < start <= stop and at least 1 point, got {start_hz}..{stop_hz} with {points}"
        )));
    }
    let cfg = &ctx.cfg;
    let units = cfg.run.omega_units;
    let grid = log_grid(start_hz, stop_hz, points);
    let rows = grid
        .iter()
        .map(|&f| {
            let w = units.to_rad_per_s(f);
            Ok(MarginPoint {
                omega_n_hz: f,
                margin: delay_margin(cfg.master.zeta_m, w, cfg.follower.zeta_s, w)?,
            })
        })
        .collect::<dualsync::Result<Vec<_>>>()?;

    ensure_dir(&ctx.out)?;
    write_config(&ctx.out, cfg)?;
    let meta = meta_for(cfg);
    write_atomic(&ctx.out.join("delay_margin.csv"), |w| write_delay_margin(w, &meta, &rows))?;
    if let Some(last) = rows.last() {
        ctx.say(format!(
            "delay margin at {} Hz: {:.4e} s ({:.1} m one way)",
            last.omega_n_hz,
            last.margin.seconds(),
            last.margin.one_way_distance_m()
        ));
    }
    Ok(())
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// RF phase-noise PSD of a clock synthesized from `params` at the symbol
/// rate and sampled every `substeps` symbols.
fn clock_psd(
    params: TwoStateParams,
    substeps: u64,
    rate_hz: f64,
    cfg: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> CliResult<PsdEstimate> {
    let psd_cfg = cfg.psd_config();
    let series: Vec<f64> = synthesize(params, psd_cfg.required_samples(), substeps, rng)
        .into_iter()
        .map(|x| x * cfg.run.rf_ratio)
        .collect();
    Ok(psd_estimate(&series, rate_hz, &psd_cfg)?)
}

pub fn fit_noise_into(dir: &Path, cfg: &ScenarioConfig, quiet: bool) -> CliResult<()> {
    let layout = cfg.layout()?;
    let baud = layout.baud_hz;
    let tick_rate = layout.tick_rate_hz();
    let nodes: [(&str, &NoiseMask); 2] = [("master", &cfg.master.mask), ("follower", &cfg.follower.mask)];

    let mut fit_rows = Vec::new();
    let mut mask_rows = Vec::new();
    let mut models = Vec::new();
    let mut params = Vec::new();
    for (name, mask) in nodes {
        let coeffs = fit_power_law(mask)?;
        for rate in [baud, tick_rate] {
            let p = TwoStateParams::from_coeffs(&coeffs, rate)?;
            fit_rows.push((
                name.to_string(),
                vec![rate, coeffs.a0, coeffs.a2, coeffs.a4, p.sigma0, p.sigma1, p.sigma2],
            ));
        }
        for &(f, level) in &mask.points {
            mask_rows.push((
                name.to_string(),
                vec![f, level, coeffs.level_dbc_hz(f), level + rf_gain_db(cfg.run.rf_ratio)],
            ));
        }
        models.push(coeffs.scaled(cfg.run.rf_ratio));
        params.push(TwoStateParams::from_coeffs(&coeffs, baud)?);
    }

    let decimation = layout.inter_pilot_period as u64;
    let seed = cfg.run.seed;
    let jobs: Vec<(usize, u64, f64, u64)> = vec![
        (0, decimation, tick_rate, 0),
        (1, decimation, tick_rate, 1),
        (0, 1, baud, 2),
        (1, 1, baud, 3),
    ];
    let estimates = jobs
        .par_iter()
        .map(|&(node, substeps, rate, stream)| {
            clock_psd(params[node], substeps, rate, cfg, &mut stream_rng(seed, stream))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let model_grid = log_grid(0.1, 0.5 * baud, 400);
    let model_m: Vec<f64> = model_grid.iter().map(|&f| models[0].level_dbc_hz(f)).collect();
    let model_f: Vec<f64> = model_grid.iter().map(|&f| models[1].level_dbc_hz(f)).collect();

    ensure_dir(dir)?;
    write_config(dir, cfg)?;
    let meta = meta_for(cfg);
    write_atomic(&dir.join("noise_fit.csv"), |w| {
        write_labeled_rows(
            w,
            &meta,
            &["node", "rate_hz", "a0", "a2", "a4", "sigma0", "sigma1", "sigma2"],
            &fit_rows,
        )
    })?;
    write_atomic(&dir.join("mask_fit.csv"), |w| {
        write_labeled_rows(
            w,
            &meta,
            &["node", "offset_hz", "mask_dbc_hz", "model_dbc_hz", "rf_mask_dbc_hz"],
            &mask_rows,
        )
    })?;
    write_atomic(&dir.join("noise_model.csv"), |w| {
        write_columns(
            w,
            &meta,
            &["freq_hz", "master_dbc_hz", "follower_dbc_hz"],
            &[&model_grid, &model_m, &model_f],
        )
    })?;
    write_atomic(&dir.join("noise_psd_decimated.csv"), |w| {
        write_psd(w, &meta, &[("master", &estimates[0]), ("follower", &estimates[1])])
    })?;
    write_atomic(&dir.join("noise_psd_full_rate.csv"), |w| {
        write_psd(w, &meta, &[("master", &estimates[2]), ("follower", &estimates[3])])
    })?;

    if !quiet {
        for (row, name) in fit_rows.iter().step_by(2).zip(["master", "follower"]) {
            let v = &row.1;
            println!(
                "{name}: a0={:.3e} a2={:.3e} a4={:.3e} /Hz; per-symbol sigma0={:.3e} sigma1={:.3e} sigma2={:.3e}",
                v[1], v[2], v[3], v[4], v[5], v[6]
            );
        }
    }
    Ok(())
}

pub fn fit_noise(ctx: &Context) -> CliResult<()> {
    fit_noise_into(&ctx.out, &ctx.cfg, ctx.quiet)?;
    ctx.say(format!("wrote noise fit and verification spectra to {}", ctx.out.display()));
    Ok(())
}

/// Reads one numeric column of a CSV written by this tool (comment lines
/// start with `#`). Also returns the `t_s` spacing when present.
fn read_column(path: &Path, column: &str) -> CliResult<(Vec<f64>, Option<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{}: no header row", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let idx = names.iter().position(|n| *n == column).ok_or_else(|| {
        CliError::Input(format!("{}: no column `{column}` (have {})", path.display(), names.join(", ")))
    })?;
    let t_idx = names.iter().position(|n| *n == "t_s");
    let mut values = Vec::new();
    let mut times = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> CliResult<f64> {
            fields
                .get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::Input(format!("{}: line {}: bad value in column {}", path.display(), lineno + 1, i + 1)))
        };
        values.push(parse(idx)?);
        if let Some(t) = t_idx {
            if times.len() < 2 {
                times.push(parse(t)?);
            }
        }
    }
    let spacing = (times.len() == 2).then(|| times[1] - times[0]).filter(|d| *d > 0.0);
    Ok((values, spacing))
}

pub fn spectrum(ctx: &Context, input: &Path, column: &str, rate_hz: Option<f64>) -> CliResult<()> {
    let (values, spacing) = read_column(input, column)?;
    let rate = match (rate_hz, spacing) {
        (Some(r), _) => r,
        (None, Some(dt)) => 1.0 / dt,
        (None, None) => ctx.cfg.layout()?.tick_rate_hz(),
    };
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(CliError::Input(format!("sample rate must be positive, got {rate}")));
    }
    let est = psd_estimate(&values, rate, &ctx.cfg.psd_config())?;
    ensure_dir(&ctx.out)?;
    let meta = CsvMeta::new(ctx.cfg.hash_hex(), ctx.cfg.run.seed);
    let name = column.strip_suffix("_rad").unwrap_or(column);
    let path = ctx.out.join("spectrum.csv");
    write_atomic(&path, |w| write_psd(w, &meta, &[(name, &est)]))?;
    ctx.say(format!(
        "estimated {} blocks of {} samples at {rate} Hz into {}",
        est.n_blocks,
        est.block_len,
        path.display()
    ));
    Ok(())
}

pub fn sweep(ctx: &Context) -> CliResult<()> {
    let points = ctx.cfg.sweep_points().map_err(|e| CliError::config(None, e))?;
    for (_, c) in &points {
        warn_undersampled(c, ctx.quiet);
    }
    ensure_dir(&ctx.out)?;
    write_config(&ctx.out, &ctx.cfg)?;

    let outcomes: Vec<_> = points
        .par_iter()
        .map(|(label, c)| {
            let dir = ctx.out.join(sanitize_label(label));
            (label, c, simulate_into(&dir, c).map(|(s, _)| s))
        })
        .collect();

    let mut manifest = String::new();
    manifest.push_str(&format!("# config_hash={} seed={}\n", ctx.cfg.hash_hex(), ctx.cfg.run.seed));
    manifest.push_str("label,directory,config_hash,seed,status,steady_error_rad\n");
    let mut failed = 0;
    for (label, c, outcome) in &outcomes {
        let dir = sanitize_label(label);
        let (status, steady) = match outcome {
            Ok(s) => ("ok".to_string(), s.steady_error_rad.to_string()),
            Err(e) => {
                failed += 1;
                if !ctx.quiet {
                    eprintln!("sweep point {label}: {e}");
                }
                (format!("error: {}", e.kind()), String::new())
            }
        };
        manifest.push_str(&format!("{label},{dir},{},{},{status},{steady}\n", c.hash_hex(), c.run.seed));
    }
    write_atomic(&ctx.out.join("manifest.csv"), |w| w.write_all(manifest.as_bytes()))?;
    if failed > 0 {
        return Err(CliError::Sweep {
            failed,
            total: outcomes.len(),
        });
    }
    ctx.say(format!("ran {} sweep points into {}", outcomes.len(), ctx.out.display()));
    Ok(())
}

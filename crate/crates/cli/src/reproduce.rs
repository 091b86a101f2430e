//! Figure recipes. Each figure gets its own directory; every run inside it
//! gets a subdirectory with the exact config used, so any single run can be
//! replayed with `simulate --config <dir>/config.ini`.

use std::f64::consts::PI;
use std::path::Path;

use clap::ValueEnum;
use dualsync::config::ScenarioConfig;
use dualsync::nodes::{detect_ambiguity_jumps, jump_lag_ticks};
use dualsync::output::write_columns;
use dualsync::spectral::{cheb_window, window_response_db};
use rayon::prelude::*;

use crate::artifacts::{ensure_dir, meta_for, simulate_into, warn_undersampled, write_atomic, write_config};
use crate::commands::{fit_noise_into, Context};
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig13,
    Fig14,
    Fig15,
    Fig16,
    Fig17,
    Fig18,
    Fig19,
    Fig20,
    Fig21,
    Fig22,
    All,
}

impl Figure {
    const EACH: [Figure; 10] = [
        Figure::Fig13,
        Figure::Fig14,
        Figure::Fig15,
        Figure::Fig16,
        Figure::Fig17,
        Figure::Fig18,
        Figure::Fig19,
        Figure::Fig20,
        Figure::Fig21,
        Figure::Fig22,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig13 => "fig13",
            Figure::Fig14 => "fig14",
            Figure::Fig15 => "fig15",
            Figure::Fig16 => "fig16",
            Figure::Fig17 => "fig17",
            Figure::Fig18 => "fig18",
            Figure::Fig19 => "fig19",
            Figure::Fig20 => "fig20",
            Figure::Fig21 => "fig21",
            Figure::Fig22 => "fig22",
            Figure::All => "all",
        }
    }
}

/// Loop bandwidths shown side by side in the time-response figures.
const BANDWIDTHS_HZ: [f64; 2] = [10.0, 100.0];
/// Row thinning for the long time-response runs (about 1 kHz of output).
const TIME_STRIDE: usize = 8;

fn with_bandwidth(base: &ScenarioConfig, hz: f64) -> ScenarioConfig {
    let mut c = base.clone();
    c.master.omega_m_hz = hz;
    c.follower.omega_s_hz = hz;
    c.master.zeta_m = 1.0;
    c.follower.zeta_s = 1.0;
    c
}

fn time_response(base: &ScenarioConfig) -> ScenarioConfig {
    let mut c = base.clone();
    c.run.duration_s = 120.0;
    c.output.timeseries = true;
    c.output.timeseries_stride = TIME_STRIDE;
    c.output.psd = false;
    c
}

fn noiseless(base: &ScenarioConfig) -> ScenarioConfig {
    let mut c = base.clone();
    c.channel.snr_db = f64::INFINITY;
    c.master.clock_noise = false;
    c.follower.clock_noise = false;
    c
}

fn snr_label(snr: f64) -> String {
    if snr.is_infinite() {
        "snr_db=inf".to_string()
    } else {
        format!("snr_db={snr}")
    }
}

/// Runs of one figure as `(subdirectory, config)`.
pub fn recipe(fig: Figure, base: &ScenarioConfig) -> Vec<(String, ScenarioConfig)> {
    let mut runs = Vec::new();
    match fig {
        Figure::Fig15 => {
            for snr in [0.0, 10.0, 20.0] {
                for hz in BANDWIDTHS_HZ {
                    let mut c = with_bandwidth(base, hz);
                    c.channel.snr_db = snr;
                    c.output.psd = true;
                    c.output.timeseries = false;
                    let need = c.psd_config().required_samples() as f64;
                    c.run.duration_s = (need * c.tick_period_s()).ceil();
                    runs.push((format!("{}_omega_hz={hz}", snr_label(snr)), c));
                }
            }
        }
        Figure::Fig16 | Figure::Fig17 | Figure::Fig18 => {
            let snr = match fig {
                Figure::Fig16 => 0.0,
                Figure::Fig17 => 10.0,
                _ => 20.0,
            };
            for hz in BANDWIDTHS_HZ {
                let mut c = time_response(&with_bandwidth(base, hz));
                c.channel.snr_db = snr;
                runs.push((format!("omega_hz={hz}"), c));
            }
        }
        Figure::Fig19 | Figure::Fig20 => {
            for hz in BANDWIDTHS_HZ {
                let mut c = noiseless(&time_response(&with_bandwidth(base, hz)));
                if fig == Figure::Fig19 {
                    c.follower.initial_phase_rad = PI;
                } else {
                    c.follower.freq_offset_hz = 50.0;
                }
                runs.push((format!("omega_hz={hz}"), c));
            }
        }
        Figure::Fig21 | Figure::Fig22 => {
            for snr in [10.0, f64::INFINITY] {
                let mut c = noiseless(&time_response(&with_bandwidth(base, 100.0)));
                c.channel.snr_db = snr;
                c.channel.doppler_hz = 1.0;
                if fig == Figure::Fig21 {
                    c.master.unwrap_rx = true;
                    c.channel.tau_s = 0.0;
                } else {
                    // Puts the return pair half a turn apart, which keeps
                    // each wrap of the accumulated drift a single step.
                    c.master.unwrap_rx = false;
                    c.channel.tau_s = 1.03125e-6;
                }
                runs.push((snr_label(snr), c));
            }
        }
        Figure::Fig13 | Figure::Fig14 | Figure::All => {}
    }
    runs
}

fn window_figure(dir: &Path, cfg: &ScenarioConfig) -> CliResult<()> {
    let n = cfg.output.psd_block_len;
    let w = cheb_window(n, cfg.output.psd_window_db)?;
    let oversample = 8;
    // Main lobe and the first few hundred sidelobes.
    let keep = 256 * oversample;
    let resp = window_response_db(&w, oversample);
    let bins: Vec<f64> = resp.iter().take(keep).map(|p| p.0 * n as f64).collect();
    let db: Vec<f64> = resp.iter().take(keep).map(|p| p.1).collect();
    ensure_dir(dir)?;
    write_config(dir, cfg)?;
    let meta = meta_for(cfg);
    write_atomic(&dir.join("window.csv"), |wr| {
        write_columns(wr, &meta, &["offset_bins", "response_db"], &[&bins, &db])
    })?;
    let ws: Vec<f64> = (0..n).map(|i| i as f64).collect();
    write_atomic(&dir.join("window_samples.csv"), |wr| {
        write_columns(wr, &meta, &["index", "weight"], &[&ws, &w])
    })
}

fn run_figure(ctx: &Context, fig: Figure) -> CliResult<()> {
    let dir = ctx.out.join(fig.name());
    match fig {
        Figure::Fig13 => return fit_noise_into(&dir, &ctx.cfg, true),
        Figure::Fig14 => return window_figure(&dir, &ctx.cfg),
        _ => {}
    }
    let runs = recipe(fig, &ctx.cfg);
    for (_, c) in &runs {
        warn_undersampled(c, ctx.quiet);
    }
    let results = runs
        .par_iter()
        .map(|(label, c)| simulate_into(&dir.join(label), c).map(|r| (label, c, r)))
        .collect::<CliResult<Vec<_>>>()?;

    if fig == Figure::Fig22 {
        for (label, c, (_, res)) in &results {
            let lag = jump_lag_ticks(res.tick_rate_hz, c.master.omega_m_hz);
            // The first second is acquisition.
            let skip = (res.tick_rate_hz.round() as usize).min(res.len());
            let jumps = detect_ambiguity_jumps(&res.theta_bf_minus_theta0[skip..], lag);
            let ticks: Vec<f64> = jumps.iter().map(|j| (j.tick + skip) as f64).collect();
            let times: Vec<f64> = ticks.iter().map(|t| t / res.tick_rate_hz).collect();
            let raw: Vec<f64> = jumps.iter().map(|j| j.raw).collect();
            let quarters: Vec<f64> = jumps.iter().map(|j| f64::from(j.quarter_turns)).collect();
            let meta = meta_for(c);
            write_atomic(&dir.join(label).join("jumps.csv"), |w| {
                write_columns(w, &meta, &["tick", "t_s", "jump_rad", "quarter_turns"], &[&ticks, &times, &raw, &quarters])
            })?;
        }
    }
    if !ctx.quiet {
        for (label, _, (s, _)) in &results {
            println!(
                "{}/{label}: {} ticks, mean theta_bf - theta_0 over the last 10%: {:.3e} rad",
                fig.name(),
                s.ticks,
                s.steady_error_rad
            );
        }
    }
    Ok(())
}

pub fn reproduce(ctx: &Context, fig: Figure) -> CliResult<()> {
    let figs: Vec<Figure> = if fig == Figure::All { Figure::EACH.to_vec() } else { vec![fig] };
    for f in figs {
        run_figure(ctx, f)?;
        if !ctx.quiet {
            println!("{} written to {}", f.name(), ctx.out.join(f.name()).display());
        }
    }
    Ok(())
}

use std::f64::consts::FRAC_PI_2;

use dualsync::config::ScenarioConfig;
use dualsync::nodes::{run_scenario, tail_mean, ScenarioResult};
use dualsync::pll::wrap_phase;

fn quiet(duration_s: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.master.clock_noise = false;
    cfg.follower.clock_noise = false;
    cfg.channel.snr_db = f64::INFINITY;
    cfg.run.duration_s = duration_s;
    cfg
}

/// Distance of `x` from the nearest equilibrium `target + k·π/2`.
fn off_lattice(x: f64, target: f64) -> f64 {
    let d = x - target;
    (d - FRAC_PI_2 * (d / FRAC_PI_2).round()).abs()
}

fn worst_tail(res: &ScenarioResult, target: f64) -> f64 {
    let n = res.len();
    res.theta_bf_minus_theta0[n - n / 10..]
        .iter()
        .map(|&x| off_lattice(x, target))
        .fold(0.0, f64::max)
}

#[test]
fn same_seed_same_run() {
    let mut cfg = ScenarioConfig::default();
    cfg.run.duration_s = 2.0;
    let a = run_scenario(&cfg, 9).unwrap();
    let b = run_scenario(&cfg, 9).unwrap();
    let c = run_scenario(&cfg, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.theta_bf_minus_theta0, c.theta_bf_minus_theta0);
}

#[test]
fn noiseless_static_channel_converges() {
    let res = run_scenario(&quiet(5.0), 1).unwrap();
    assert_eq!(res.len(), (5.0 * res.tick_rate_hz).round() as usize);
    assert!(worst_tail(&res, 0.0) < 1e-3);
    assert!(tail_mean(&res.theta_bf_minus_theta0, 0.1).abs() < 1e-3);
}

#[test]
fn small_propagation_delay_is_cancelled() {
    for tau in [2e-11, 5e-11, 3e-10] {
        let mut cfg = quiet(5.0);
        cfg.channel.tau_s = tau;
        let res = run_scenario(&cfg, 1).unwrap();
        let w = worst_tail(&res, 0.0);
        assert!(w < 1e-3, "tau {tau}: {w}");
    }
}

#[test]
fn master_offset_moves_equilibrium_by_half() {
    for offset in [0.3, -0.8, 1.4] {
        let mut cfg = quiet(5.0);
        cfg.master.theta_offset_rad = offset;
        let res = run_scenario(&cfg, 1).unwrap();
        let w = worst_tail(&res, offset / 2.0);
        assert!(w < 1e-3, "offset {offset}: {w}");
    }
}

#[test]
fn follower_clock_phase_does_not_matter() {
    for phase in [0.5, -2.0, 3.0] {
        let mut cfg = quiet(5.0);
        cfg.follower.initial_phase_rad = phase;
        let res = run_scenario(&cfg, 1).unwrap();
        assert!(worst_tail(&res, 0.0) < 1e-3, "phase {phase}");
    }
}

#[test]
fn follower_nco_tracks_its_input() {
    // With the loop locked, the follower NCO equals the averaged receive phase.
    let mut cfg = quiet(5.0);
    cfg.follower.initial_phase_rad = 0.7;
    cfg.master.theta_offset_rad = 0.4;
    let res = run_scenario(&cfg, 1).unwrap();
    let n = res.len();
    for k in n - 100..n {
        let avg = wrap_phase(res.r[0][k] + wrap_phase(res.r[1][k] - res.r[0][k]) / 2.0);
        let d = wrap_phase(avg - res.theta_out[k]).abs();
        assert!(d < 1e-6, "tick {k}: {d}");
    }
}

#[test]
fn noisy_run_stays_near_equilibrium() {
    let mut cfg = ScenarioConfig::default();
    cfg.run.duration_s = 10.0;
    let res = run_scenario(&cfg, 3).unwrap();
    let rms = {
        let tail = &res.theta_bf_minus_theta0[res.len() / 2..];
        (tail.iter().map(|x| off_lattice(*x, 0.0).powi(2)).sum::<f64>() / tail.len() as f64).sqrt()
    };
    assert!(rms < 0.1, "rms {rms}");
}

//! Master and follower state machines and the closed dual-carrier loop.
//!
//! Wiring per decimated tick:
//!
//! ```text
//! master   tx1 = tx2 = e^{i(θ0 + α/2)}
//! follower error = ((∠ rx1·e^{-iθx} − θout) + (∠ rx2·e^{-iθx} − θout))/2, wrapped
//!          θbf = θout + θx,  tx3 = tx4 = e^{iθbf}
//! master   θr3, θr4 = ∠ rx3·e^{-iθ0}, ∠ rx4·e^{-iθ0}
//!          x = θoffset − (θr3 + θr4 − α)/2,  error = wrap(x − α)
//! ```
//!
//! `α` is the unwrapped output of the master loop. At equilibrium it equals
//! `θoffset` minus the round-trip propagation phase, so `θbf − θ0 → θoffset/2`.
//! Because `θr3 + θr4` is only known modulo 2π, `α` is ambiguous modulo π and
//! `θbf` modulo π/2; under Doppler drift each receive-phase wrap moves the
//! loop to a neighbouring equilibrium unless the master unwraps its receive
//! phases over time (`unwrap_rx`).

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{sigma_from_snr, CarrierPlan, ChannelLeg};
use crate::config::{ClockRate, ScenarioConfig};
use crate::error::{Error, Result};
use crate::oscillator::{fit_two_state, TwoStateClock, TwoStateParams};
use crate::pll::{discriminate, wrap_phase, LoopConfig, LoopUnit};

/// Magnitude above which a loop state counts as diverged.
pub const DIVERGENCE_LIMIT_RAD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterState {
    /// Compensation phase, unwrapped.
    pub alpha: f64,
    pub loop_unit: LoopUnit,
    pub loop_cfg: LoopConfig,
    /// Current master LO phase θ0 at RF.
    pub theta0: f64,
    pub theta_offset: f64,
    pub unwrap_rx: bool,
    rx_unwrapped: [Option<f64>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOutput {
    pub alpha: f64,
    pub error: f64,
    pub r3: f64,
    pub r4: f64,
    pub tx1: Complex64,
    pub tx2: Complex64,
}

impl MasterState {
    pub fn new(loop_cfg: LoopConfig, theta_offset: f64, unwrap_rx: bool) -> Self {
        Self {
            alpha: 0.0,
            loop_unit: LoopUnit::new(),
            loop_cfg,
            theta0: 0.0,
            theta_offset,
            unwrap_rx,
            rx_unwrapped: [None; 2],
        }
    }

    /// Forward carrier phasor, pre-compensated by `α/2`.
    pub fn transmit(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta0 + 0.5 * self.alpha)
    }

    fn receive(&mut self, which: usize, rx: Complex64) -> Result<f64> {
        let r = discriminate(rx, Complex64::from_polar(1.0, self.theta0))?;
        if !self.unwrap_rx {
            return Ok(r);
        }
        let u = match self.rx_unwrapped[which] {
            Some(prev) => prev + wrap_phase(r - prev),
            None => r,
        };
        self.rx_unwrapped[which] = Some(u);
        Ok(u)
    }
}

/// One master update from the two return carriers (`rx4 = None` in
/// single-carrier mode, where `θr3` stands in for both).
pub fn master_step(
    rx3: Complex64,
    rx4: Option<Complex64>,
    state: &mut MasterState,
) -> Result<MasterOutput> {
    let r3 = state.receive(0, rx3)?;
    let r4 = match rx4 {
        Some(rx) => state.receive(1, rx)?,
        None => r3,
    };
    let alpha_prev = state.alpha;
    let x = state.theta_offset - 0.5 * (r3 + r4 - alpha_prev);
    let error = wrap_phase(x - alpha_prev);
    let control = state.loop_unit.controller_step(error, &state.loop_cfg);
    state.loop_unit.nco_step(control);
    state.alpha = state.loop_unit.acc_outer;
    let tx = state.transmit();
    Ok(MasterOutput {
        alpha: state.alpha,
        error,
        r3,
        r4,
        tx1: tx,
        tx2: tx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerState {
    pub loop_unit: LoopUnit,
    pub loop_cfg: LoopConfig,
    /// Current follower LO phase θx at RF.
    pub theta_x: f64,
    /// NCO phase the next pilot will be compared against, wrapped.
    pub theta_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerOutput {
    pub theta_out: f64,
    /// `θout + θx`, not wrapped.
    pub theta_bf: f64,
    pub error: f64,
    pub r1: f64,
    pub r2: f64,
    pub tx3: Complex64,
    pub tx4: Complex64,
}

impl FollowerState {
    pub fn new(loop_cfg: LoopConfig) -> Self {
        Self {
            loop_unit: LoopUnit::new(),
            loop_cfg,
            theta_x: 0.0,
            theta_out: 0.0,
        }
    }

    /// `θout` without wrapping.
    pub fn theta_out_unwrapped(&self) -> f64 {
        self.loop_unit.acc_outer
    }
}

/// One follower update from the two forward carriers (`rx2 = None` in
/// single-carrier mode).
pub fn follower_step(
    rx1: Complex64,
    rx2: Option<Complex64>,
    state: &mut FollowerState,
) -> Result<FollowerOutput> {
    let lo = Complex64::from_polar(1.0, state.theta_x);
    let b1 = rx1 * lo.conj();
    let nco = state.loop_unit.nco_phasor();
    let d1 = discriminate(b1, nco)?;
    let r1 = discriminate(b1, Complex64::new(1.0, 0.0))?;
    let (error, r2) = match rx2 {
        Some(rx) => {
            let b2 = rx * lo.conj();
            let d2 = discriminate(b2, nco)?;
            (wrap_phase(0.5 * (d1 + d2)), discriminate(b2, Complex64::new(1.0, 0.0))?)
        }
        None => (d1, r1),
    };
    // The NCO phase compared against this pilot is the loop's estimate for
    // this tick; the update below prepares the next one.
    let theta_out = state.loop_unit.nco_phase;
    let theta_bf = state.loop_unit.acc_outer + state.theta_x;
    state.loop_unit.step(error, &state.loop_cfg);
    state.theta_out = state.loop_unit.nco_phase;
    let tx = Complex64::from_polar(1.0, theta_bf);
    Ok(FollowerOutput {
        theta_out,
        theta_bf,
        error,
        r1,
        r2,
        tx3: tx,
        tx4: tx,
    })
}

/// Fixed transport delay in whole ticks.
#[derive(Debug, Clone)]
struct DelayLine {
    buf: VecDeque<Complex64>,
}

impl DelayLine {
    fn new(ticks: usize) -> Self {
        Self {
            buf: std::iter::repeat_n(Complex64::new(1.0, 0.0), ticks).collect(),
        }
    }

    fn push(&mut self, x: Complex64) -> Complex64 {
        self.buf.push_back(x);
        self.buf.pop_front().expect("delay line holds at least the pushed value")
    }
}

/// A node's LO phase generator: two-state noise scaled to RF, plus an
/// initial phase and a constant frequency offset.
#[derive(Debug, Clone)]
struct LocalOscillator {
    clock: TwoStateClock,
    substeps: u64,
    rf_ratio: f64,
    initial_phase: f64,
    freq_offset_hz: f64,
    tick_period_s: f64,
    rng: ChaCha8Rng,
}

impl LocalOscillator {
    fn phase_at(&mut self, tick: u64) -> f64 {
        let noise = if self.clock.params.is_ideal() {
            0.0
        } else {
            self.clock.advance(self.substeps, &mut self.rng)
        };
        let cycles = self.freq_offset_hz * tick as f64 * self.tick_period_s;
        self.rf_ratio * noise + self.initial_phase + TAU * cycles.fract()
    }
}

/// Per-tick records of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub tick_rate_hz: f64,
    pub seed: u64,
    pub config: ScenarioConfig,
    /// `θbf − θ0`, wrapped to (−π, π].
    pub theta_bf_minus_theta0: Vec<f64>,
    /// Follower NCO phase, wrapped.
    pub theta_out: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Baseband receive phases θr1..θr4 as seen by the discriminators.
    pub r: [Vec<f64>; 4],
    /// Master LO phase, unwrapped.
    pub theta0: Vec<f64>,
    /// Beamforming phase, unwrapped.
    pub theta_bf: Vec<f64>,
}

impl ScenarioResult {
    pub fn len(&self) -> usize {
        self.theta_bf_minus_theta0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_bf_minus_theta0.is_empty()
    }

    /// `θbf − θ0` without wrapping, for spectral estimation.
    pub fn phase_error_unwrapped(&self) -> Vec<f64> {
        self.theta_bf.iter().zip(&self.theta0).map(|(b, a)| b - a).collect()
    }
}

/// Seeds a generator for one of the scenario's independent noise streams.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn clock_params(
    enabled: bool,
    mask: &crate::oscillator::NoiseMask,
    rate_hz: f64,
) -> Result<TwoStateParams> {
    if enabled {
        fit_two_state(mask, rate_hz)
    } else {
        Ok(TwoStateParams::ideal(rate_hz))
    }
}

/// Runs the closed loop for `duration_s · tick_rate` ticks.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<ScenarioResult> {
    let layout = cfg.layout()?;
    let tick_period = layout.tick_period_s();
    let tick_rate = layout.tick_rate_hz();
    let n_ticks = (cfg.run.duration_s * tick_rate).round() as usize;
    let units = cfg.run.omega_units;

    let master_loop = LoopConfig::from_hz(cfg.master.zeta_m, cfg.master.omega_m_hz, units, tick_period)?;
    let follower_loop =
        LoopConfig::from_hz(cfg.follower.zeta_s, cfg.follower.omega_s_hz, units, tick_period)?;

    let (synth_rate, substeps) = match cfg.run.clock_rate {
        ClockRate::Symbol => (layout.baud_hz, layout.inter_pilot_period as u64),
        ClockRate::Decimated => (tick_rate, 1),
    };
    let mut master_lo = LocalOscillator {
        clock: TwoStateClock::new(clock_params(cfg.master.clock_noise, &cfg.master.mask, synth_rate)?),
        substeps,
        rf_ratio: cfg.run.rf_ratio,
        initial_phase: 0.0,
        freq_offset_hz: 0.0,
        tick_period_s: tick_period,
        rng: stream_rng(seed, 0),
    };
    let mut follower_lo = LocalOscillator {
        clock: TwoStateClock::new(clock_params(
            cfg.follower.clock_noise,
            &cfg.follower.mask,
            synth_rate,
        )?),
        substeps,
        rf_ratio: cfg.run.rf_ratio,
        initial_phase: cfg.follower.initial_phase_rad,
        freq_offset_hz: cfg.follower.freq_offset_hz,
        tick_period_s: tick_period,
        rng: stream_rng(seed, 1),
    };

    let plan = CarrierPlan::new(cfg.channel.fc_hz, cfg.channel.fm_hz, cfg.channel.fs_hz)?;
    let sigma = sigma_from_snr(cfg.channel.snr_db, layout.compression_gain_db());
    let carriers = plan.carriers();
    let mut legs = Vec::with_capacity(4);
    for (i, &f) in carriers.iter().enumerate() {
        legs.push((
            ChannelLeg::new(f, cfg.channel.tau_s, cfg.channel.doppler_hz, sigma, tick_period)?,
            DelayLine::new(cfg.channel.loop_latency_ticks),
            stream_rng(seed, 2 + i as u64),
        ));
    }
    let dual = !cfg.channel.single_carrier;

    let mut master = MasterState::new(master_loop, cfg.master.theta_offset_rad, cfg.master.unwrap_rx);
    let mut follower = FollowerState::new(follower_loop);

    let mut res = ScenarioResult {
        tick_rate_hz: tick_rate,
        seed,
        config: cfg.clone(),
        theta_bf_minus_theta0: Vec::with_capacity(n_ticks),
        theta_out: Vec::with_capacity(n_ticks),
        alpha: Vec::with_capacity(n_ticks),
        r: std::array::from_fn(|_| Vec::with_capacity(n_ticks)),
        theta0: Vec::with_capacity(n_ticks),
        theta_bf: Vec::with_capacity(n_ticks),
    };

    for tick in 0..n_ticks as u64 {
        master.theta0 = master_lo.phase_at(tick);
        follower.theta_x = follower_lo.phase_at(tick);

        let tx_m = master.transmit();
        let mut through = |k: usize, tx: Complex64| {
            let (leg, line, rng) = &mut legs[k];
            let delayed = line.push(tx);
            leg.step(delayed, tick, rng)
        };
        let rx1 = through(0, tx_m);
        let rx2 = if dual { Some(through(1, tx_m)) } else { None };
        let f = follower_step(rx1, rx2, &mut follower)?;

        let mut through = |k: usize, tx: Complex64| {
            let (leg, line, rng) = &mut legs[k];
            let delayed = line.push(tx);
            leg.step(delayed, tick, rng)
        };
        let rx3 = through(2, f.tx3);
        let rx4 = if dual { Some(through(3, f.tx4)) } else { None };
        let m = master_step(rx3, rx4, &mut master)?;

        for (quantity, value) in [
            ("alpha", m.alpha),
            ("theta_out", follower.theta_out_unwrapped()),
        ] {
            if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT_RAD {
                return Err(Error::Diverged {
                    tick: tick as usize,
                    quantity,
                    value,
                });
            }
        }

        res.theta_bf_minus_theta0.push(wrap_phase(f.theta_bf - master.theta0));
        res.theta_out.push(f.theta_out);
        res.alpha.push(m.alpha);
        res.r[0].push(f.r1);
        res.r[1].push(f.r2);
        res.r[2].push(m.r3);
        res.r[3].push(m.r4);
        res.theta0.push(master.theta0);
        res.theta_bf.push(f.theta_bf);
    }
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbiguityJump {
    /// First tick at which the jump is visible.
    pub tick: usize,
    /// Net level change across the jump (rad).
    pub raw: f64,
    /// `raw` rounded to the nearest multiple of π/2, as a multiple.
    pub quarter_turns: i32,
}

impl AmbiguityJump {
    /// Snapped magnitude in radians.
    pub fn snapped(&self) -> f64 {
        f64::from(self.quarter_turns) * FRAC_PI_2
    }
}

/// Threshold on the lagged phase change that flags a jump.
pub const JUMP_THRESHOLD_RAD: f64 = PI / 8.0;

/// Finds level jumps in a wrapped phase series.
///
/// Ticks where `|wrap(s[n] − s[n−lag])|` exceeds π/8 are flagged. With
/// `lag = 1` this is the plain between-tick test; a larger lag catches steps
/// the loop spreads over several ticks. Flagged runs closer than `lag`
/// apart form one cluster (a ringing transient is one event). The reported
/// change is `wrap(s[end + lag] − s[start − lag])` across the cluster;
/// clusters whose net change is below the threshold (excursions that return
/// to the same level) are not jumps and are skipped.
pub fn detect_ambiguity_jumps(series: &[f64], lag: usize) -> Vec<AmbiguityJump> {
    let lag = lag.max(1);
    let mut jumps = Vec::new();
    if series.len() <= lag {
        return jumps;
    }
    let last = series.len() - 1;
    let flagged: Vec<usize> = (lag..series.len())
        .filter(|&n| wrap_phase(series[n] - series[n - lag]).abs() > JUMP_THRESHOLD_RAD)
        .collect();
    let mut i = 0;
    while i < flagged.len() {
        let start = flagged[i];
        let mut end = start;
        while i + 1 < flagged.len() && flagged[i + 1] - end <= lag {
            i += 1;
            end = flagged[i];
        }
        i += 1;
        let raw = wrap_phase(series[(end + lag).min(last)] - series[start - lag]);
        if raw.abs() > JUMP_THRESHOLD_RAD {
            jumps.push(AmbiguityJump {
                tick: start,
                raw,
                quarter_turns: (raw / FRAC_PI_2).round() as i32,
            });
        }
    }
    jumps
}

/// Lag for [`detect_ambiguity_jumps`] spanning a loop transient: five
/// natural periods at `omega_hz`, in ticks.
pub fn jump_lag_ticks(tick_rate_hz: f64, omega_hz: f64) -> usize {
    ((5.0 * tick_rate_hz / omega_hz).round() as usize).max(1)
}

/// Index after which `|series|` stays below `threshold`, if it ever does.
pub fn settling_tick(series: &[f64], threshold: f64) -> Option<usize> {
    match series.iter().rposition(|x| x.abs() >= threshold) {
        None => Some(0),
        Some(i) if i + 1 < series.len() => Some(i + 1),
        Some(_) => None,
    }
}

/// Mean of the last `fraction` of a series; NaN when empty.
pub fn tail_mean(series: &[f64], fraction: f64) -> f64 {
    if series.is_empty() {
        return f64::NAN;
    }
    let n = ((series.len() as f64 * fraction).ceil() as usize).clamp(1, series.len().max(1));
    let tail = &series[series.len() - n..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(hz: f64) -> LoopConfig {
        LoopConfig::new(1.0, TAU * hz, 956.0 / 8e6).unwrap()
    }

    #[test]
    fn master_fixed_point() {
        let mut m = MasterState::new(cfg(100.0), 0.0, false);
        m.alpha = 0.4;
        m.loop_unit = LoopUnit::with_phase(0.4);
        // Equilibrium: x = −(θr3 + θr4 − α)/2 equals α.
        let rx = Complex64::from_polar(1.0, -0.2);
        let out = master_step(rx, Some(rx), &mut m).unwrap();
        assert!(out.error.abs() < 1e-15);
        assert!((out.alpha - 0.4).abs() < 1e-15);
    }

    #[test]
    fn follower_symmetric_average() {
        let mut a = FollowerState::new(cfg(100.0));
        let mut b = FollowerState::new(cfg(100.0));
        for _ in 0..2000 {
            follower_step(
                Complex64::from_polar(1.0, 0.7),
                Some(Complex64::from_polar(1.0, 0.7)),
                &mut a,
            )
            .unwrap();
            follower_step(
                Complex64::from_polar(1.0, 0.9),
                Some(Complex64::from_polar(1.0, 0.5)),
                &mut b,
            )
            .unwrap();
        }
        assert!((a.theta_out - 0.7).abs() < 1e-3);
        assert!((a.theta_out - b.theta_out).abs() < 1e-9);
    }

    #[test]
    fn zero_phasor_rejected() {
        let mut f = FollowerState::new(cfg(10.0));
        assert!(follower_step(Complex64::new(0.0, 0.0), None, &mut f).is_err());
        let mut m = MasterState::new(cfg(10.0), 0.0, false);
        assert!(master_step(Complex64::new(0.0, 0.0), None, &mut m).is_err());
    }

    #[test]
    fn jump_detector_synthetic() {
        assert!(detect_ambiguity_jumps(&[0.3; 100], 1).is_empty());
        let mut s = vec![0.1; 100];
        s[40..].iter_mut().for_each(|x| *x += FRAC_PI_2);
        let j = detect_ambiguity_jumps(&s, 1);
        assert_eq!(j.len(), 1);
        assert_eq!((j[0].tick, j[0].quarter_turns), (40, 1));
        // A ramped step is found with a lag covering the ramp.
        let ramp: Vec<f64> = (0..200)
            .map(|n| -FRAC_PI_2 * ((n as f64 - 80.0) / 20.0).clamp(0.0, 1.0))
            .collect();
        assert!(detect_ambiguity_jumps(&ramp, 1).is_empty());
        let j = detect_ambiguity_jumps(&ramp, 40);
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].quarter_turns, -1);
        assert!((j[0].raw + FRAC_PI_2).abs() < 1e-12);
        // Excursion that returns is not a jump.
        let mut blip = vec![0.0; 100];
        blip[50] = 1.0;
        assert!(detect_ambiguity_jumps(&blip, 1).is_empty());
        // Ringing around a step is a single event.
        let mut ring = vec![0.0; 400];
        for (n, x) in ring.iter_mut().enumerate().skip(100) {
            let t = (n - 100) as f64;
            *x = FRAC_PI_2 * (1.0 + 0.6 * (-t / 15.0).exp() * (t / 4.0).sin());
        }
        let j = detect_ambiguity_jumps(&ring, 30);
        assert_eq!(j.len(), 1, "{j:?}");
        assert_eq!(j[0].quarter_turns, 1);
        assert_eq!(jump_lag_ticks(8368.2, 100.0), 418);
    }

    #[test]
    fn settling_and_tail() {
        assert_eq!(settling_tick(&[1.0, 0.5, 0.01, 0.0], 0.1), Some(2));
        assert_eq!(settling_tick(&[0.0, 1.0], 0.1), None);
        assert_eq!(settling_tick(&[0.0; 3], 0.1), Some(0));
        assert_eq!(tail_mean(&[0.0, 0.0, 2.0, 4.0], 0.5), 3.0);
    }
}

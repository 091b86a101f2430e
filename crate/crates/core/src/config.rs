//! Scenario configuration: a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! [master]
//! omega_m_hz = 100
//! mask = [(1, -85), (10, -125), (10000, -160)]
//!
//! [sweep]
//! channel.snr_db = [0, 10, 20]
//! ```
//!
//! Parsing never stops at the first problem: every syntax error, unknown or
//! duplicate key and invalid value is collected and reported together.
//! [`ScenarioConfig::to_text`] writes the canonical form, which parses back
//! to an identical config and is what the config hash is computed over.

use std::collections::HashMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::channel::CarrierPlan;
use crate::error::Result;
use crate::framing::SuperframeLayout;
use crate::oscillator::{fit_two_state, NoiseMask};
use crate::pll::{LoopConfig, OmegaUnits};
use crate::spectral::{PsdConfig, MAX_CHEB_ATTEN_DB, MIN_CHEB_ATTEN_DB, MIN_CHEB_LEN};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    /// `section.key`, or the section name for section-level problems.
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s)", self.0.len())?;
        for issue in &self.0 {
            write!(f, "\n  {issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockRate {
    /// Synthesize at the symbol rate and sample every decimation period.
    #[default]
    Symbol,
    /// Synthesize directly at the decimated rate with rescaled intensities.
    Decimated,
}

impl ClockRate {
    pub fn name(self) -> &'static str {
        match self {
            ClockRate::Symbol => "symbol",
            ClockRate::Decimated => "decimated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterConfig {
    pub zeta_m: f64,
    pub omega_m_hz: f64,
    pub mask: NoiseMask,
    pub clock_noise: bool,
    pub theta_offset_rad: f64,
    pub unwrap_rx: bool,
    pub code_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowerConfig {
    pub zeta_s: f64,
    pub omega_s_hz: f64,
    pub mask: NoiseMask,
    pub clock_noise: bool,
    pub initial_phase_rad: f64,
    pub freq_offset_hz: f64,
    pub code_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Raw per-symbol SNR; `inf` disables noise.
    pub snr_db: f64,
    pub doppler_hz: f64,
    pub tau_s: f64,
    pub fc_hz: f64,
    pub fm_hz: f64,
    pub fs_hz: f64,
    pub single_carrier: bool,
    /// Transport delay of every leg in decimated ticks.
    pub loop_latency_ticks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub duration_s: f64,
    pub seed: u64,
    pub baud_hz: f64,
    /// Inter-pilot period in symbols; also the decimation factor.
    pub decimation: usize,
    pub pilot_len: usize,
    pub superframe_len: usize,
    pub omega_units: OmegaUnits,
    pub clock_rate: ClockRate,
    pub rf_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
    pub timeseries: bool,
    /// Keep every `stride`-th tick in the timeseries file.
    pub timeseries_stride: usize,
    pub psd: bool,
    pub psd_block_len: usize,
    pub psd_blocks: usize,
    pub psd_window_db: f64,
    pub psd_remove_mean: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub section: String,
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub master: MasterConfig,
    pub follower: FollowerConfig,
    pub channel: ChannelConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
    pub sweep: Vec<SweepAxis>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let layout = SuperframeLayout::default();
        let plan = CarrierPlan::default();
        let psd = PsdConfig::default();
        Self {
            master: MasterConfig {
                zeta_m: 1.0,
                omega_m_hz: 100.0,
                mask: NoiseMask::master_default(),
                clock_noise: true,
                theta_offset_rad: 0.0,
                unwrap_rx: false,
                code_index: 0,
            },
            follower: FollowerConfig {
                zeta_s: 1.0,
                omega_s_hz: 100.0,
                mask: NoiseMask::follower_default(),
                clock_noise: true,
                initial_phase_rad: 0.0,
                freq_offset_hz: 0.0,
                code_index: 1,
            },
            channel: ChannelConfig {
                snr_db: 10.0,
                doppler_hz: 0.0,
                tau_s: 0.0,
                fc_hz: plan.fc_hz,
                fm_hz: plan.fm_hz,
                fs_hz: plan.fs_hz,
                single_carrier: false,
                loop_latency_ticks: 1,
            },
            run: RunConfig {
                duration_s: 120.0,
                seed: 1,
                baud_hz: layout.baud_hz,
                decimation: layout.inter_pilot_period,
                pilot_len: layout.pilot_len_used,
                superframe_len: layout.superframe_len,
                omega_units: OmegaUnits::default(),
                clock_rate: ClockRate::default(),
                rf_ratio: 220.0,
            },
            output: OutputConfig {
                directory: "out".to_string(),
                timeseries: true,
                timeseries_stride: 1,
                psd: false,
                psd_block_len: psd.block_len,
                psd_blocks: psd.n_blocks,
                psd_window_db: psd.window_atten_db,
                psd_remove_mean: psd.remove_mean,
            },
            sweep: Vec::new(),
        }
    }
}

const SECTIONS: [&str; 6] = ["master", "follower", "channel", "run", "output", "sweep"];

fn keys_of(section: &str) -> &'static [&'static str] {
    match section {
        "master" => &[
            "zeta_m",
            "omega_m_hz",
            "mask",
            "mask_ref_hz",
            "clock_noise",
            "theta_offset_rad",
            "unwrap_rx",
            "code_index_master",
        ],
        "follower" => &[
            "zeta_s",
            "omega_s_hz",
            "mask",
            "mask_ref_hz",
            "clock_noise",
            "initial_phase_rad",
            "freq_offset_hz",
            "code_index_follower",
        ],
        "channel" => &[
            "snr_db",
            "doppler_hz",
            "tau_s",
            "fc_hz",
            "fm_hz",
            "fs_hz",
            "single_carrier",
            "loop_latency_ticks",
        ],
        "run" => &[
            "duration_s",
            "seed",
            "baud_hz",
            "decimation",
            "pilot_len",
            "superframe_len",
            "omega_units",
            "clock_rate",
            "rf_ratio",
        ],
        "output" => &[
            "directory",
            "timeseries",
            "timeseries_stride",
            "psd",
            "psd_block_len",
            "psd_blocks",
            "psd_window_db",
            "psd_remove_mean",
        ],
        _ => &[],
    }
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if x.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(x)
}

fn parse_finite(v: &str) -> std::result::Result<f64, String> {
    let x = parse_f64(v)?;
    if !x.is_finite() {
        return Err(format!("must be finite, got `{v}`"));
    }
    Ok(x)
}

fn parse_usize(v: &str) -> std::result::Result<usize, String> {
    v.parse().map_err(|_| format!("expected a nonnegative integer, got `{v}`"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

/// Splits `a, (b, c), [d]` on top-level commas.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last);
    }
    parts
}

fn strip_brackets(v: &str, open: char, close: char) -> Option<&str> {
    v.trim().strip_prefix(open)?.strip_suffix(close).map(str::trim)
}

/// `[(offset_hz, dbc_hz), ...]`
pub fn parse_mask_points(v: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let inner = strip_brackets(v, '[', ']').ok_or("mask must be a bracketed list of (offset_hz, dbc_hz) pairs")?;
    split_top_level(inner)
        .into_iter()
        .map(|item| {
            let pair = strip_brackets(item, '(', ')').ok_or(format!("malformed mask point `{item}`"))?;
            match split_top_level(pair).as_slice() {
                [a, b] => Ok((parse_finite(a)?, parse_finite(b)?)),
                _ => Err(format!("mask point `{item}` must have two entries")),
            }
        })
        .collect()
}

fn format_mask_points(points: &[(f64, f64)]) -> String {
    let items: Vec<String> = points.iter().map(|(f, l)| format!("({f}, {l})")).collect();
    format!("[{}]", items.join(", "))
}

/// Sweep values: `[v1, v2, ...]`.
fn parse_list(v: &str) -> std::result::Result<Vec<String>, String> {
    let inner = strip_brackets(v, '[', ']').ok_or("sweep values must be a bracketed list")?;
    let items: Vec<String> = split_top_level(inner).into_iter().map(String::from).collect();
    if items.is_empty() || items.iter().any(String::is_empty) {
        return Err("sweep list must hold at least one nonempty value".into());
    }
    Ok(items)
}

/// Key/value entry with its source line, before interpretation.
#[derive(Debug, Clone)]
struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

fn tokenize(text: &str, issues: &mut Vec<ConfigIssue>) -> Vec<Entry> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = strip_brackets(content, '[', ']').filter(|_| !content.contains('=')) {
            if SECTIONS.contains(&name) {
                section = Some(name.to_string());
            } else {
                issues.push(ConfigIssue {
                    line: Some(line),
                    key: name.to_string(),
                    message: format!("unknown section; expected one of {}", SECTIONS.join(", ")),
                });
                section = None;
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            issues.push(ConfigIssue {
                line: Some(line),
                key: "syntax".into(),
                message: format!("expected `key = value` or `[section]`, got `{content}`"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(sec) = section.clone() else {
            issues.push(ConfigIssue {
                line: Some(line),
                key: key.to_string(),
                message: "key outside of a known section".into(),
            });
            continue;
        };
        if key.is_empty() {
            issues.push(ConfigIssue {
                line: Some(line),
                key: "syntax".into(),
                message: "empty key".into(),
            });
            continue;
        }
        if let Some(&first) = seen.get(&(sec.clone(), key.to_string())) {
            issues.push(ConfigIssue {
                line: Some(line),
                key: format!("{sec}.{key}"),
                message: format!("duplicate key, first defined on line {first} and again on line {line}"),
            });
            continue;
        }
        seen.insert((sec.clone(), key.to_string()), line);
        entries.push(Entry {
            section: sec,
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    entries
}

impl ScenarioConfig {
    /// Sets one key from its text value.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        let m = &mut self.master;
        let f = &mut self.follower;
        let c = &mut self.channel;
        let r = &mut self.run;
        let o = &mut self.output;
        match (section, key) {
            ("master", "zeta_m") => m.zeta_m = parse_f64(value)?,
            ("master", "omega_m_hz") => m.omega_m_hz = parse_f64(value)?,
            ("master", "mask") => m.mask.points = parse_mask_points(value)?,
            ("master", "mask_ref_hz") => m.mask.reference_freq_hz = parse_f64(value)?,
            ("master", "clock_noise") => m.clock_noise = parse_bool(value)?,
            ("master", "theta_offset_rad") => m.theta_offset_rad = parse_finite(value)?,
            ("master", "unwrap_rx") => m.unwrap_rx = parse_bool(value)?,
            ("master", "code_index_master") => m.code_index = parse_usize(value)?,
            ("follower", "zeta_s") => f.zeta_s = parse_f64(value)?,
            ("follower", "omega_s_hz") => f.omega_s_hz = parse_f64(value)?,
            ("follower", "mask") => f.mask.points = parse_mask_points(value)?,
            ("follower", "mask_ref_hz") => f.mask.reference_freq_hz = parse_f64(value)?,
            ("follower", "clock_noise") => f.clock_noise = parse_bool(value)?,
            ("follower", "initial_phase_rad") => f.initial_phase_rad = parse_finite(value)?,
            ("follower", "freq_offset_hz") => f.freq_offset_hz = parse_finite(value)?,
            ("follower", "code_index_follower") => f.code_index = parse_usize(value)?,
            ("channel", "snr_db") => c.snr_db = parse_f64(value)?,
            ("channel", "doppler_hz") => c.doppler_hz = parse_finite(value)?,
            ("channel", "tau_s") => c.tau_s = parse_f64(value)?,
            ("channel", "fc_hz") => c.fc_hz = parse_f64(value)?,
            ("channel", "fm_hz") => c.fm_hz = parse_f64(value)?,
            ("channel", "fs_hz") => c.fs_hz = parse_f64(value)?,
            ("channel", "single_carrier") => c.single_carrier = parse_bool(value)?,
            ("channel", "loop_latency_ticks") => c.loop_latency_ticks = parse_usize(value)?,
            ("run", "duration_s") => r.duration_s = parse_f64(value)?,
            ("run", "seed") => {
                r.seed = value
                    .parse()
                    .map_err(|_| format!("expected an unsigned 64-bit integer, got `{value}`"))?
            }
            ("run", "baud_hz") => r.baud_hz = parse_f64(value)?,
            ("run", "decimation") => r.decimation = parse_usize(value)?,
            ("run", "pilot_len") => r.pilot_len = parse_usize(value)?,
            ("run", "superframe_len") => r.superframe_len = parse_usize(value)?,
            ("run", "omega_units") => {
                r.omega_units = match value {
                    "hz_times_2pi" => OmegaUnits::HzTimes2Pi,
                    "hz_as_rad" => OmegaUnits::HzAsRad,
                    _ => return Err(format!("expected hz_times_2pi or hz_as_rad, got `{value}`")),
                }
            }
            ("run", "clock_rate") => {
                r.clock_rate = match value {
                    "symbol" => ClockRate::Symbol,
                    "decimated" => ClockRate::Decimated,
                    _ => return Err(format!("expected symbol or decimated, got `{value}`")),
                }
            }
            ("run", "rf_ratio") => r.rf_ratio = parse_f64(value)?,
            ("output", "directory") => {
                if value.is_empty() {
                    return Err("must not be empty".into());
                }
                o.directory = value.to_string()
            }
            ("output", "timeseries") => o.timeseries = parse_bool(value)?,
            ("output", "timeseries_stride") => o.timeseries_stride = parse_usize(value)?,
            ("output", "psd") => o.psd = parse_bool(value)?,
            ("output", "psd_block_len") => o.psd_block_len = parse_usize(value)?,
            ("output", "psd_blocks") => o.psd_blocks = parse_usize(value)?,
            ("output", "psd_window_db") => o.psd_window_db = parse_f64(value)?,
            ("output", "psd_remove_mean") => o.psd_remove_mean = parse_bool(value)?,
            ("sweep", target) => {
                let (sec, k) = target
                    .split_once('.')
                    .ok_or("sweep keys must be written as section.key")?;
                if sec == "sweep" || !keys_of(sec).contains(&k) {
                    return Err(format!("`{target}` is not a sweepable key"));
                }
                let values = parse_list(value)?;
                for v in &values {
                    self.clone().set(sec, k, v).map_err(|e| format!("value `{v}`: {e}"))?;
                }
                self.sweep.push(SweepAxis {
                    section: sec.to_string(),
                    key: k.to_string(),
                    values,
                });
            }
            _ => {
                return Err(format!(
                    "unknown key; valid keys are {}",
                    keys_of(section).join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Semantic checks across all sections. Issues are named `section.key`.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut bad = |key: &str, message: String| {
            issues.push(ConfigIssue {
                line: None,
                key: key.to_string(),
                message,
            })
        };
        let positive = |x: f64| x > 0.0 && x.is_finite();

        for (key, v) in [
            ("master.zeta_m", self.master.zeta_m),
            ("master.omega_m_hz", self.master.omega_m_hz),
            ("follower.zeta_s", self.follower.zeta_s),
            ("follower.omega_s_hz", self.follower.omega_s_hz),
            ("master.mask_ref_hz", self.master.mask.reference_freq_hz),
            ("follower.mask_ref_hz", self.follower.mask.reference_freq_hz),
            ("run.duration_s", self.run.duration_s),
            ("run.baud_hz", self.run.baud_hz),
            ("run.rf_ratio", self.run.rf_ratio),
        ] {
            if !positive(v) {
                bad(key, format!("must be finite and > 0, got {v}"));
            }
        }

        for (key, mask, enabled) in [
            ("master.mask", &self.master.mask, self.master.clock_noise),
            ("follower.mask", &self.follower.mask, self.follower.clock_noise),
        ] {
            match NoiseMask::new(mask.reference_freq_hz, mask.points.clone()) {
                Err(e) => bad(key, e.to_string()),
                Ok(m) if enabled && positive(self.run.baud_hz) => {
                    if let Err(e) = fit_two_state(&m, self.run.baud_hz) {
                        bad(key, e.to_string());
                    }
                }
                Ok(_) => {}
            }
        }

        if self.channel.snr_db == f64::NEG_INFINITY {
            bad("channel.snr_db", "must be finite or inf".into());
        }
        if !(self.channel.tau_s >= 0.0 && self.channel.tau_s.is_finite()) {
            bad("channel.tau_s", format!("must be finite and >= 0, got {}", self.channel.tau_s));
        }
        if let Err(e) = CarrierPlan::new(self.channel.fc_hz, self.channel.fm_hz, self.channel.fs_hz) {
            bad("channel.fc_hz", e.to_string());
        }
        if self.channel.loop_latency_ticks > 1_000_000 {
            bad("channel.loop_latency_ticks", "must be <= 1000000".into());
        }

        let layout = self.layout_unchecked();
        if let Err(e) = layout.validate() {
            let key = match &e {
                crate::Error::InvalidParameter { name: "pilot_len", .. } => "run.pilot_len",
                crate::Error::InvalidParameter { name: "inter_pilot", .. } => "run.decimation",
                crate::Error::InvalidParameter { name: "superframe_len", .. } => "run.superframe_len",
                _ => "run.baud_hz",
            };
            bad(key, e.to_string());
        }
        if !self.run.pilot_len.is_power_of_two() {
            bad(
                "run.pilot_len",
                format!("Walsh-Hadamard codes need a power of two, got {}", self.run.pilot_len),
            );
        }
        for (key, idx) in [
            ("master.code_index_master", self.master.code_index),
            ("follower.code_index_follower", self.follower.code_index),
        ] {
            if idx >= self.run.pilot_len {
                bad(key, format!("must be < pilot_len ({}), got {idx}", self.run.pilot_len));
            }
        }
        if self.master.code_index == self.follower.code_index {
            bad(
                "follower.code_index_follower",
                "must differ from master.code_index_master".into(),
            );
        }

        let o = &self.output;
        if o.timeseries_stride == 0 {
            bad("output.timeseries_stride", "must be >= 1".into());
        }
        if o.psd_block_len < MIN_CHEB_LEN {
            bad("output.psd_block_len", format!("must be >= {MIN_CHEB_LEN}"));
        }
        if o.psd_blocks == 0 {
            bad("output.psd_blocks", "must be >= 1".into());
        }
        if !(MIN_CHEB_ATTEN_DB..=MAX_CHEB_ATTEN_DB).contains(&o.psd_window_db) {
            bad(
                "output.psd_window_db",
                format!("must lie in [{MIN_CHEB_ATTEN_DB}, {MAX_CHEB_ATTEN_DB}]"),
            );
        }
        if o.psd && positive(self.run.duration_s) && layout.validate().is_ok() {
            let ticks = self.n_ticks();
            let need = o.psd_block_len.saturating_mul(o.psd_blocks);
            if ticks < need {
                bad(
                    "output.psd_blocks",
                    format!("PSD needs {need} samples but the run yields {ticks} ticks"),
                );
            }
        }
        issues
    }

    fn layout_unchecked(&self) -> SuperframeLayout {
        SuperframeLayout {
            baud_hz: self.run.baud_hz,
            pilot_len_used: self.run.pilot_len,
            inter_pilot_period: self.run.decimation,
            superframe_len: self.run.superframe_len,
        }
    }

    pub fn layout(&self) -> Result<SuperframeLayout> {
        let layout = self.layout_unchecked();
        layout.validate()?;
        Ok(layout)
    }

    pub fn tick_period_s(&self) -> f64 {
        self.run.decimation as f64 / self.run.baud_hz
    }

    pub fn n_ticks(&self) -> usize {
        (self.run.duration_s / self.tick_period_s()).round() as usize
    }

    pub fn psd_config(&self) -> PsdConfig {
        PsdConfig {
            block_len: self.output.psd_block_len,
            n_blocks: self.output.psd_blocks,
            window_atten_db: self.output.psd_window_db,
            remove_mean: self.output.psd_remove_mean,
        }
    }

    /// Loop settings whose discretization is coarse (`ω·T > 0.1`).
    pub fn undersampled_loops(&self) -> Vec<&'static str> {
        let t = self.tick_period_s();
        let mut out = Vec::new();
        for (name, zeta, hz) in [
            ("master", self.master.zeta_m, self.master.omega_m_hz),
            ("follower", self.follower.zeta_s, self.follower.omega_s_hz),
        ] {
            if let Ok(cfg) = LoopConfig::from_hz(zeta, hz, self.run.omega_units, t) {
                if cfg.is_undersampled() {
                    out.push(name);
                }
            }
        }
        out
    }

    /// Copy with one key replaced, fully revalidated.
    pub fn with_override(
        &self,
        section: &str,
        key: &str,
        value: &str,
    ) -> std::result::Result<ScenarioConfig, ConfigErrors> {
        let mut cfg = self.clone();
        cfg.set(section, key, value).map_err(|message| {
            ConfigErrors(vec![ConfigIssue {
                line: None,
                key: format!("{section}.{key}"),
                message,
            }])
        })?;
        let issues = cfg.validate();
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigErrors(issues))
        }
    }

    /// Cartesian product of the sweep axes, each point as `(label, config)`.
    /// The sweep section itself is cleared in the returned configs.
    pub fn sweep_points(&self) -> std::result::Result<Vec<(String, ScenarioConfig)>, ConfigErrors> {
        let mut base = self.clone();
        base.sweep.clear();
        let mut points = vec![(String::new(), base)];
        for axis in &self.sweep {
            let mut next = Vec::with_capacity(points.len() * axis.values.len());
            for (label, cfg) in &points {
                for v in &axis.values {
                    let c = cfg.with_override(&axis.section, &axis.key, v)?;
                    let part = format!("{}={}", axis.key, v);
                    let l = if label.is_empty() { part } else { format!("{label}_{part}") };
                    next.push((l, c));
                }
            }
            points = next;
        }
        Ok(points)
    }

    /// Canonical text form; parses back to an identical config.
    pub fn to_text(&self) -> String {
        let m = &self.master;
        let f = &self.follower;
        let c = &self.channel;
        let r = &self.run;
        let o = &self.output;
        let mut s = String::new();
        s.push_str("[master]\n");
        s.push_str(&format!("zeta_m = {}\n", m.zeta_m));
        s.push_str(&format!("omega_m_hz = {}\n", m.omega_m_hz));
        s.push_str(&format!("mask = {}\n", format_mask_points(&m.mask.points)));
        s.push_str(&format!("mask_ref_hz = {}\n", m.mask.reference_freq_hz));
        s.push_str(&format!("clock_noise = {}\n", m.clock_noise));
        s.push_str(&format!("theta_offset_rad = {}\n", m.theta_offset_rad));
        s.push_str(&format!("unwrap_rx = {}\n", m.unwrap_rx));
        s.push_str(&format!("code_index_master = {}\n", m.code_index));
        s.push_str("\n[follower]\n");
        s.push_str(&format!("zeta_s = {}\n", f.zeta_s));
        s.push_str(&format!("omega_s_hz = {}\n", f.omega_s_hz));
        s.push_str(&format!("mask = {}\n", format_mask_points(&f.mask.points)));
        s.push_str(&format!("mask_ref_hz = {}\n", f.mask.reference_freq_hz));
        s.push_str(&format!("clock_noise = {}\n", f.clock_noise));
        s.push_str(&format!("initial_phase_rad = {}\n", f.initial_phase_rad));
        s.push_str(&format!("freq_offset_hz = {}\n", f.freq_offset_hz));
        s.push_str(&format!("code_index_follower = {}\n", f.code_index));
        s.push_str("\n[channel]\n");
        s.push_str(&format!("snr_db = {}\n", c.snr_db));
        s.push_str(&format!("doppler_hz = {}\n", c.doppler_hz));
        s.push_str(&format!("tau_s = {}\n", c.tau_s));
        s.push_str(&format!("fc_hz = {}\n", c.fc_hz));
        s.push_str(&format!("fm_hz = {}\n", c.fm_hz));
        s.push_str(&format!("fs_hz = {}\n", c.fs_hz));
        s.push_str(&format!("single_carrier = {}\n", c.single_carrier));
        s.push_str(&format!("loop_latency_ticks = {}\n", c.loop_latency_ticks));
        s.push_str("\n[run]\n");
        s.push_str(&format!("duration_s = {}\n", r.duration_s));
        s.push_str(&format!("seed = {}\n", r.seed));
        s.push_str(&format!("baud_hz = {}\n", r.baud_hz));
        s.push_str(&format!("decimation = {}\n", r.decimation));
        s.push_str(&format!("pilot_len = {}\n", r.pilot_len));
        s.push_str(&format!("superframe_len = {}\n", r.superframe_len));
        s.push_str(&format!("omega_units = {}\n", r.omega_units.name()));
        s.push_str(&format!("clock_rate = {}\n", r.clock_rate.name()));
        s.push_str(&format!("rf_ratio = {}\n", r.rf_ratio));
        s.push_str("\n[output]\n");
        s.push_str(&format!("directory = {}\n", o.directory));
        s.push_str(&format!("timeseries = {}\n", o.timeseries));
        s.push_str(&format!("timeseries_stride = {}\n", o.timeseries_stride));
        s.push_str(&format!("psd = {}\n", o.psd));
        s.push_str(&format!("psd_block_len = {}\n", o.psd_block_len));
        s.push_str(&format!("psd_blocks = {}\n", o.psd_blocks));
        s.push_str(&format!("psd_window_db = {}\n", o.psd_window_db));
        s.push_str(&format!("psd_remove_mean = {}\n", o.psd_remove_mean));
        if !self.sweep.is_empty() {
            s.push_str("\n[sweep]\n");
            for axis in &self.sweep {
                s.push_str(&format!("{}.{} = [{}]\n", axis.section, axis.key, axis.values.join(", ")));
            }
        }
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash_hex(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parses and validates a config. Missing keys take their defaults.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, ConfigErrors> {
    let mut issues = Vec::new();
    let entries = tokenize(text, &mut issues);
    let mut cfg = ScenarioConfig::default();
    for e in &entries {
        if let Err(message) = cfg.set(&e.section, &e.key, &e.value) {
            issues.push(ConfigIssue {
                line: Some(e.line),
                key: format!("{}.{}", e.section, e.key),
                message,
            });
        }
    }
    // Keys that failed to parse kept their defaults, so range checks still
    // apply to everything else and both kinds are reported together.
    for mut issue in cfg.validate() {
        issue.line = entries
            .iter()
            .rev()
            .find(|e| format!("{}.{}", e.section, e.key) == issue.key)
            .map(|e| e.line);
        issues.push(issue);
    }
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(issues))
    }
}

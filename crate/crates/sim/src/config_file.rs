//! Flat `key = value` scenario files.
//!
//! One assignment per line, `#` starts a comment, lists are comma separated
//! (optionally wrapped in brackets). Units are part of the key name. Keys
//! that are absent keep their defaults, and `noise_power_w` is derived from
//! the cell-edge SNR unless it is given explicitly.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nrtsave_core::math::db_to_linear;
use nrtsave_core::{PolicyKind, ScenarioConfig};
use serde::Serialize;

use crate::error::SimError;

pub const DEFAULT_T_SWEEP: [usize; 5] = [100, 150, 200, 250, 300];

/// Every accepted key, in the order used when echoing a configuration.
pub const KEYS: &[&str] = &[
    "antennas",
    "pmax_w",
    "wmax_hz",
    "slot_s",
    "horizon_slots",
    "bits",
    "bits_per_slot",
    "snr_gap_db",
    "cell_edge_snr_db",
    "noise_power_w",
    "pa_efficiency",
    "p_active_w",
    "p_sleep_w",
    "epsilon",
    "bs_positions_m",
    "cell_radius_m",
    "min_distance_m",
    "start_position_m",
    "v_max_mps",
    "arrival_rate_per_slot",
    "mean_service_slots",
    "bg_capacity",
    "bg_power_w",
    "bg_bandwidth_hz",
    "ee_min_power_w",
    "trials",
    "base_seed",
    "t_sweep",
    "policies",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFileError {
    /// 1-based line, when the problem can be tied to one.
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigFileError {
    fn at(line: usize, key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: key.map(str::to_owned),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigFileError {}

/// A scenario plus the sweep it is run over.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub t_sweep: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    /// When set, the payload is `bits_per_slot · T` for every swept `T`.
    pub bits_per_slot: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            t_sweep: DEFAULT_T_SWEEP.to_vec(),
            policies: PolicyKind::ALL.to_vec(),
            bits_per_slot: None,
        }
    }
}

impl RunConfig {
    /// Checks the scenario and the sweep; `lines` maps keys to the line that
    /// set them so messages point at the offending assignment.
    pub fn validate_with_lines(&self, lines: &BTreeMap<String, usize>) -> Result<(), ConfigFileError> {
        let locate = |key: &str, message: String| ConfigFileError {
            line: lines.get(key).copied(),
            key: Some(key.to_owned()),
            message,
        };
        self.scenario
            .validate()
            .map_err(|e| locate(e.field, e.reason.to_owned()))?;
        if self.t_sweep.is_empty() || self.t_sweep.contains(&0) {
            return Err(locate("t_sweep", "needs at least one positive deadline".into()));
        }
        if self.policies.is_empty() {
            return Err(locate("policies", "needs at least one policy".into()));
        }
        for (i, p) in self.policies.iter().enumerate() {
            if self.policies[..i].contains(p) {
                return Err(locate("policies", format!("`{p}` listed twice")));
            }
        }
        if let Some(b) = self.bits_per_slot {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(locate("bits_per_slot", "must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigFileError> {
        self.validate_with_lines(&BTreeMap::new())
    }

    /// The payload used at deadline `horizon`.
    pub fn bits_for(&self, horizon: usize) -> f64 {
        self.bits_per_slot
            .map_or(self.scenario.bits, |b| b * horizon as f64)
    }

    /// Scenario instantiated for one swept deadline.
    pub fn scenario_for(&self, horizon: usize) -> ScenarioConfig {
        ScenarioConfig {
            horizon_slots: horizon,
            bits: self.bits_for(horizon),
            ..self.scenario.clone()
        }
    }
}

fn parse_scalar<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigFileError> {
    raw.parse()
        .map_err(|_| ConfigFileError::at(line, Some(key), format!("cannot parse `{raw}`")))
}

fn parse_list<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<Vec<T>, ConfigFileError> {
    let inner = raw
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .unwrap_or(raw);
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(line, key, s))
        .collect()
}

/// Parses configuration text on top of the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigFileError> {
    let mut run = RunConfig::default();
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut explicit_noise = None;
    let mut rates: Option<(usize, Vec<f64>)> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigFileError::at(line, None, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigFileError::at(line, Some(key), "unknown key"));
        }
        if let Some(first) = lines.insert(key.to_owned(), line) {
            return Err(ConfigFileError::at(
                line,
                Some(key),
                format!("already set on line {first}"),
            ));
        }
        if value.is_empty() {
            return Err(ConfigFileError::at(line, Some(key), "missing value"));
        }
        let s = &mut run.scenario;
        match key {
            "antennas" => s.antennas = parse_scalar(line, key, value)?,
            "pmax_w" => s.power.p_max_w = parse_scalar(line, key, value)?,
            "wmax_hz" => s.w_max_hz = parse_scalar(line, key, value)?,
            "slot_s" => s.slot_s = parse_scalar(line, key, value)?,
            "horizon_slots" => s.horizon_slots = parse_scalar(line, key, value)?,
            "bits" => s.bits = parse_scalar(line, key, value)?,
            "bits_per_slot" => run.bits_per_slot = Some(parse_scalar(line, key, value)?),
            "snr_gap_db" => s.snr_gap = db_to_linear(parse_scalar(line, key, value)?),
            "cell_edge_snr_db" => s.cell_edge_snr_db = parse_scalar(line, key, value)?,
            "noise_power_w" => explicit_noise = Some(parse_scalar(line, key, value)?),
            "pa_efficiency" => s.power.pa_efficiency = parse_scalar(line, key, value)?,
            "p_active_w" => s.power.p_active_w = parse_scalar(line, key, value)?,
            "p_sleep_w" => s.power.p_sleep_w = parse_scalar(line, key, value)?,
            "epsilon" => s.epsilon = parse_scalar(line, key, value)?,
            "bs_positions_m" => s.geometry.bs_positions_m = parse_list(line, key, value)?,
            "cell_radius_m" => s.geometry.cell_radius_m = parse_scalar(line, key, value)?,
            "min_distance_m" => s.geometry.min_distance_m = parse_scalar(line, key, value)?,
            "start_position_m" => s.geometry.start_position_m = parse_scalar(line, key, value)?,
            "v_max_mps" => s.v_max_mps = parse_scalar(line, key, value)?,
            "arrival_rate_per_slot" => rates = Some((line, parse_list(line, key, value)?)),
            "mean_service_slots" => s.background.mean_service_slots = parse_scalar(line, key, value)?,
            "bg_capacity" => s.background.capacity = parse_scalar(line, key, value)?,
            "bg_power_w" => s.background.request_power_w = parse_scalar(line, key, value)?,
            "bg_bandwidth_hz" => s.background.request_bandwidth_hz = parse_scalar(line, key, value)?,
            "ee_min_power_w" => s.ee_min_power_w = parse_scalar(line, key, value)?,
            "trials" => s.trials = parse_scalar(line, key, value)?,
            "base_seed" => s.base_seed = parse_scalar(line, key, value)?,
            "t_sweep" => run.t_sweep = parse_list(line, key, value)?,
            "policies" => {
                run.policies = value
                    .trim_start_matches('[')
                    .trim_end_matches(']')
                    .split(',')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(|p| {
                        p.parse()
                            .map_err(|e| ConfigFileError::at(line, Some(key), format!("`{p}`: {e}")))
                    })
                    .collect::<Result<_, _>>()?
            }
            _ => unreachable!("key list and match arms agree"),
        }
    }

    let bs_count = run.scenario.geometry.bs_count();
    match rates {
        Some((_, r)) if r.len() == 1 => run.scenario.background.arrival_rates = vec![r[0]; bs_count],
        Some((line, r)) if r.len() != bs_count => {
            return Err(ConfigFileError::at(
                line,
                Some("arrival_rate_per_slot"),
                format!("{} rates for {bs_count} BS positions", r.len()),
            ))
        }
        Some((_, r)) => run.scenario.background.arrival_rates = r,
        None => {
            let rate = run.scenario.background.arrival_rates.first().copied().unwrap_or(0.0);
            run.scenario.background.arrival_rates = vec![rate; bs_count];
        }
    }
    match explicit_noise {
        Some(n) => run.scenario.noise_power_w = n,
        None => run.scenario.recalibrate_noise(),
    }
    run.validate_with_lines(&lines)?;
    Ok(run)
}

pub fn load_config(path: &Path) -> Result<RunConfig, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_config(&text).map_err(SimError::from)
}

/// Resolved configuration, keyed like the file format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub antennas: u32,
    pub pmax_w: f64,
    pub wmax_hz: f64,
    pub slot_s: f64,
    pub horizon_slots: usize,
    pub bits: f64,
    pub bits_per_slot: Option<f64>,
    pub snr_gap_db: f64,
    pub cell_edge_snr_db: f64,
    pub noise_power_w: f64,
    pub pa_efficiency: f64,
    pub p_active_w: f64,
    pub p_sleep_w: f64,
    pub epsilon: f64,
    pub bs_positions_m: Vec<f64>,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub start_position_m: f64,
    pub v_max_mps: f64,
    pub arrival_rate_per_slot: Vec<f64>,
    pub mean_service_slots: f64,
    pub bg_capacity: usize,
    pub bg_power_w: f64,
    pub bg_bandwidth_hz: f64,
    pub ee_min_power_w: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub t_sweep: Vec<usize>,
    pub policies: Vec<String>,
}

impl From<&RunConfig> for ConfigEcho {
    fn from(run: &RunConfig) -> Self {
        let s = &run.scenario;
        Self {
            antennas: s.antennas,
            pmax_w: s.power.p_max_w,
            wmax_hz: s.w_max_hz,
            slot_s: s.slot_s,
            horizon_slots: s.horizon_slots,
            bits: s.bits,
            bits_per_slot: run.bits_per_slot,
            snr_gap_db: 10.0 * s.snr_gap.log10(),
            cell_edge_snr_db: s.cell_edge_snr_db,
            noise_power_w: s.noise_power_w,
            pa_efficiency: s.power.pa_efficiency,
            p_active_w: s.power.p_active_w,
            p_sleep_w: s.power.p_sleep_w,
            epsilon: s.epsilon,
            bs_positions_m: s.geometry.bs_positions_m.clone(),
            cell_radius_m: s.geometry.cell_radius_m,
            min_distance_m: s.geometry.min_distance_m,
            start_position_m: s.geometry.start_position_m,
            v_max_mps: s.v_max_mps,
            arrival_rate_per_slot: s.background.arrival_rates.clone(),
            mean_service_slots: s.background.mean_service_slots,
            bg_capacity: s.background.capacity,
            bg_power_w: s.background.request_power_w,
            bg_bandwidth_hz: s.background.request_bandwidth_hz,
            ee_min_power_w: s.ee_min_power_w,
            trials: s.trials,
            base_seed: s.base_seed,
            t_sweep: run.t_sweep.clone(),
            policies: run.policies.iter().map(|p| p.name().to_owned()).collect(),
        }
    }
}

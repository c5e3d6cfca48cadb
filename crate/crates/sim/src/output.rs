//! Result files. CSV is the default; JSON mirrors the same rows.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nrtsave_core::estimation::ThresholdWarning;
use nrtsave_core::policy::BsMode;
use nrtsave_core::trial::{PolicyRun, Realization};
use serde::Serialize;

use crate::config_file::{ConfigEcho, RunConfig};
use crate::error::SimError;
use crate::experiment::{AggregateRow, ExperimentResult, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

fn warning_name(w: Option<ThresholdWarning>) -> &'static str {
    match w {
        None => "",
        Some(ThresholdWarning::Unreachable) => "unreachable",
        Some(ThresholdWarning::NothingRequired) => "nothing_required",
        Some(ThresholdWarning::NoIdleGuess) => "no_idle_guess",
    }
}

#[derive(Debug, Serialize)]
pub struct ResultRow {
    pub policy: &'static str,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub trial: usize,
    pub nrt_energy_j: f64,
    pub outage: bool,
    pub delivered_bits: f64,
    pub nu: Option<f64>,
    pub g_th: Option<f64>,
    pub n_sched: usize,
    pub transmit_energy_j: f64,
    pub circuit_energy_j: f64,
    pub q: Option<f64>,
    pub warning: &'static str,
}

impl From<&TrialRecord> for ResultRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            policy: r.policy.name(),
            horizon: r.horizon,
            trial: r.trial,
            nrt_energy_j: r.report.nrt_energy_j,
            outage: r.report.outage,
            delivered_bits: r.report.delivered_bits,
            nu: finite(r.nu),
            g_th: finite(r.g_th),
            n_sched: r.n_sched,
            transmit_energy_j: r.report.transmit_energy_j,
            circuit_energy_j: r.report.circuit_energy_j,
            q: r.q,
            warning: warning_name(r.warning),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AggregateOut {
    pub policy: &'static str,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub trials: usize,
    pub outage_trials: usize,
    pub outage_fraction: f64,
    pub mean_nrt_energy_j: Option<f64>,
    pub mean_transmit_energy_j: Option<f64>,
    pub mean_circuit_energy_j: Option<f64>,
}

impl From<&AggregateRow> for AggregateOut {
    fn from(a: &AggregateRow) -> Self {
        Self {
            policy: a.policy.name(),
            horizon: a.horizon,
            trials: a.trials,
            outage_trials: a.outage_trials,
            outage_fraction: a.outage_fraction,
            mean_nrt_energy_j: a.mean_nrt_energy_j,
            mean_transmit_energy_j: a.mean_transmit_energy_j,
            mean_circuit_energy_j: a.mean_circuit_energy_j,
        }
    }
}

/// Modelling choices that are not fixed by the physical parameters.
#[derive(Debug, Serialize)]
pub struct DecisionFlags {
    pub stop_at_payload: bool,
    pub throttle_final_slot: bool,
    pub idle_estimate: &'static str,
    pub ee_denominator: &'static str,
    pub ee_deadline_guard: bool,
    pub ee_min_power_w: f64,
    pub offline_scan_includes_zero: bool,
    pub holding_time: &'static str,
    pub traffic_start: &'static str,
    pub mean_energy_excludes_outage: bool,
    pub epsilon: f64,
}

#[derive(Debug, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ConfigEcho,
    pub decisions: DecisionFlags,
}

impl RunMetadata {
    pub fn new(run: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: ConfigEcho::from(run),
            decisions: DecisionFlags {
                stop_at_payload: true,
                throttle_final_slot: true,
                idle_estimate: "real_valued",
                ee_denominator: "incremental",
                ee_deadline_guard: true,
                ee_min_power_w: run.scenario.ee_min_power_w,
                offline_scan_includes_zero: true,
                holding_time: "geometric",
                traffic_start: "stationary",
                mean_energy_excludes_outage: true,
                epsilon: run.scenario.epsilon,
            },
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, SimError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SimError::io(path, e))
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T], format: Format) -> Result<(), SimError> {
    let file = create(path)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(file);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush().map_err(|e| SimError::io(path, e))?;
        }
        Format::Json => {
            let mut file = file;
            serde_json::to_writer_pretty(&mut file, rows)?;
            file.write_all(b"\n").map_err(|e| SimError::io(path, e))?;
            file.flush().map_err(|e| SimError::io(path, e))?;
        }
    }
    Ok(())
}

/// Writes `results.*`, `aggregate.*` and `run-metadata.json` into `dir`.
pub fn write_experiment(
    dir: &Path,
    run: &RunConfig,
    result: &ExperimentResult,
    format: Format,
) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let results = dir.join(format!("results.{}", format.ext()));
    let rows: Vec<ResultRow> = result.records.iter().map(ResultRow::from).collect();
    write_rows(&results, &rows, format)?;
    let aggregate = dir.join(format!("aggregate.{}", format.ext()));
    let rows: Vec<AggregateOut> = result.aggregates.iter().map(AggregateOut::from).collect();
    write_rows(&aggregate, &rows, format)?;
    let meta = dir.join("run-metadata.json");
    let mut file = create(&meta)?;
    serde_json::to_writer_pretty(&mut file, &RunMetadata::new(run))?;
    file.write_all(b"\n").map_err(|e| SimError::io(&meta, e))?;
    file.flush().map_err(|e| SimError::io(&meta, e))?;
    Ok(vec![results, aggregate, meta])
}

#[derive(Debug, Serialize)]
struct ChannelRow {
    t: usize,
    position_m: f64,
    serving_bs: usize,
    alpha: f64,
    fading_power: f64,
    g: f64,
}

#[derive(Debug, Serialize)]
struct OccupancyRow {
    t: usize,
    bs: usize,
    active_count: usize,
    p_rt: f64,
    w_rt: f64,
}

#[derive(Debug, Serialize)]
struct DecisionRow {
    t: usize,
    policy: &'static str,
    m: u8,
    p: f64,
    rate_bits: f64,
    bs_mode: &'static str,
}

/// Dumps the channel, occupancy and per-slot decisions of one realization.
pub fn write_traces(
    dir: &Path,
    realization: &Realization,
    runs: &[PolicyRun],
    trial: usize,
    format: Format,
) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let tag = format!("T{}_trial{}", realization.horizon(), trial);
    let ext = format.ext();

    let mob = &realization.mobility;
    let ch = &realization.channel;
    let channel: Vec<ChannelRow> = (0..realization.horizon())
        .map(|t| ChannelRow {
            t,
            position_m: mob.positions_m[t],
            serving_bs: mob.serving_bs[t],
            alpha: ch.alpha[t],
            fading_power: ch.fading_power[t],
            g: ch.gain[t],
        })
        .collect();
    let occ = &realization.occupancy;
    let occupancy: Vec<OccupancyRow> = (0..occ.len())
        .flat_map(|t| {
            occ.active[t].iter().enumerate().map(move |(bs, &n)| OccupancyRow {
                t,
                bs,
                active_count: n,
                p_rt: occ.p_rt(t, bs),
                w_rt: occ.w_rt(t, bs),
            })
        })
        .collect();
    let decisions: Vec<DecisionRow> = runs
        .iter()
        .flat_map(|run| {
            run.decisions.iter().map(move |d| DecisionRow {
                t: d.t,
                policy: run.kind.name(),
                m: u8::from(d.scheduled),
                p: d.power_w,
                rate_bits: d.rate_bits,
                bs_mode: match d.bs_mode {
                    BsMode::Active => "active",
                    BsMode::Sleep => "sleep",
                },
            })
        })
        .collect();

    let paths = [
        dir.join(format!("channel_{tag}.{ext}")),
        dir.join(format!("occupancy_{tag}.{ext}")),
        dir.join(format!("decisions_{tag}.{ext}")),
    ];
    write_rows(&paths[0], &channel, format)?;
    write_rows(&paths[1], &occupancy, format)?;
    write_rows(&paths[2], &decisions, format)?;
    Ok(paths.to_vec())
}

//! Monte Carlo sweep over deadlines and trials. Each `(T, trial)` pair draws
//! one realization that every policy is evaluated on.

use nrtsave_core::energy::EnergyReport;
use nrtsave_core::estimation::ThresholdWarning;
use nrtsave_core::trial::{run_policy, Realization};
use nrtsave_core::PolicyKind;
use rayon::prelude::*;

use crate::config_file::RunConfig;
use crate::error::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub policy: PolicyKind,
    pub horizon: usize,
    pub trial: usize,
    pub report: EnergyReport,
    pub nu: f64,
    pub g_th: f64,
    pub n_sched: usize,
    pub q: Option<f64>,
    pub warning: Option<ThresholdWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub policy: PolicyKind,
    pub horizon: usize,
    pub trials: usize,
    pub outage_trials: usize,
    pub outage_fraction: f64,
    /// Mean over trials without outage; `None` when every trial failed.
    pub mean_nrt_energy_j: Option<f64>,
    pub mean_transmit_energy_j: Option<f64>,
    pub mean_circuit_energy_j: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Sorted by `(policy, T, trial)`.
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentResult {
    pub fn aggregate(&self, policy: PolicyKind, horizon: usize) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.policy == policy && a.horizon == horizon)
    }

    pub fn records_for(&self, policy: PolicyKind, horizon: usize) -> impl Iterator<Item = &TrialRecord> {
        self.records
            .iter()
            .filter(move |r| r.policy == policy && r.horizon == horizon)
    }
}

fn evaluate_pair(run: &RunConfig, horizon: usize, trial: usize) -> Result<Vec<TrialRecord>, SimError> {
    let scenario = run.scenario_for(horizon);
    let realization = Realization::generate(&scenario, horizon, trial);
    run.policies
        .iter()
        .map(|&kind| {
            let out = run_policy(kind, &realization, &scenario, trial)?;
            Ok(TrialRecord {
                policy: kind,
                horizon,
                trial,
                report: out.report,
                nu: out.nu,
                g_th: out.g_th,
                n_sched: out.n_sched,
                q: out.q,
                warning: out.warning,
            })
        })
        .collect()
}

/// Runs the sweep on `threads` workers (all cores when `None`). The result is
/// independent of the thread count.
pub fn run_experiment(run: &RunConfig, threads: Option<usize>) -> Result<ExperimentResult, SimError> {
    run.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let jobs: Vec<(usize, usize)> = run
        .t_sweep
        .iter()
        .flat_map(|&h| (0..run.scenario.trials).map(move |k| (h, k)))
        .collect();
    let batches: Vec<Vec<TrialRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(h, k)| evaluate_pair(run, h, k))
            .collect::<Result<_, _>>()
    })?;
    let mut records: Vec<TrialRecord> = batches.into_iter().flatten().collect();
    records.sort_by_key(|r| (r.policy, r.horizon, r.trial));
    let aggregates = aggregate(&records);
    Ok(ExperimentResult { records, aggregates })
}

/// Groups sorted records by `(policy, T)`.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for group in records.chunk_by(|a, b| a.policy == b.policy && a.horizon == b.horizon) {
        let ok: Vec<&EnergyReport> = group.iter().map(|r| &r.report).filter(|r| !r.outage).collect();
        let mean = |f: fn(&EnergyReport) -> f64| {
            (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64)
        };
        let outage_trials = group.len() - ok.len();
        rows.push(AggregateRow {
            policy: group[0].policy,
            horizon: group[0].horizon,
            trials: group.len(),
            outage_trials,
            outage_fraction: outage_trials as f64 / group.len() as f64,
            mean_nrt_energy_j: mean(|r| r.nrt_energy_j),
            mean_transmit_energy_j: mean(|r| r.transmit_energy_j),
            mean_circuit_energy_j: mean(|r| r.circuit_energy_j),
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        let mut run = RunConfig {
            t_sweep: vec![30, 40],
            bits_per_slot: Some(2e7),
            ..RunConfig::default()
        };
        run.scenario.trials = 3;
        run
    }

    #[test]
    fn records_are_sorted_and_complete() {
        let res = run_experiment(&tiny(), Some(2)).unwrap();
        assert_eq!(res.records.len(), 5 * 2 * 3);
        assert!(res
            .records
            .windows(2)
            .all(|w| (w[0].policy, w[0].horizon, w[0].trial) < (w[1].policy, w[1].horizon, w[1].trial)));
        assert_eq!(res.aggregates.len(), 10);
        for r in &res.records {
            assert_eq!(r.report.required_bits, 2e7 * r.horizon as f64);
        }
    }

    #[test]
    fn aggregate_skips_outage_trials() {
        let rec = |trial, nrt, outage| TrialRecord {
            policy: PolicyKind::SeMax,
            horizon: 10,
            trial,
            report: EnergyReport {
                nrt_energy_j: nrt,
                outage,
                ..EnergyReport::default()
            },
            nu: f64::NAN,
            g_th: f64::NAN,
            n_sched: 0,
            q: None,
            warning: None,
        };
        let rows = aggregate(&[rec(0, 10.0, false), rec(1, 1e6, true), rec(2, 20.0, false)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_nrt_energy_j, Some(15.0));
        assert!((rows[0].outage_fraction - 1.0 / 3.0).abs() < 1e-15);
        let all_out = aggregate(&[rec(0, 1.0, true)]);
        assert_eq!(all_out[0].mean_nrt_energy_j, None);
    }
}

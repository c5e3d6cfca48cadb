//! One Monte Carlo trial: a shared realization of mobility, fading and
//! background traffic, evaluated under each requested policy.

use alloc::vec::Vec;

use crate::channel::{generate_channel, generate_mobility, ChannelTrace, MobilityTrace};
use crate::config::ScenarioConfig;
use crate::energy::{accumulate_energy, EnergyReport};
use crate::error::Error;
use crate::estimation::{estimate_params, predict_trajectory, ContextInfo, ThresholdWarning};
use crate::offline::{optimize_offline, residual_resources};
use crate::policy::{run_allocation, AllocationDecision, AllocationRule, PolicyKind, SlotView};
use crate::seed::{self, stream_rng};
use crate::traffic::{estimate_idle_count, simulate_background, OccupancyTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub mobility: MobilityTrace,
    pub channel: ChannelTrace,
    pub occupancy: OccupancyTrace,
}

impl Realization {
    /// Draws every random stream for `(config.base_seed, horizon, trial)`.
    pub fn generate(config: &ScenarioConfig, horizon: usize, trial: usize) -> Self {
        let base = config.base_seed;
        let mut rng = stream_rng(base, horizon, trial, seed::MOBILITY);
        let mobility = generate_mobility(
            &config.geometry,
            horizon,
            config.v_max_mps,
            config.slot_s,
            &mut rng,
        );
        let mut rng = stream_rng(base, horizon, trial, seed::FADING);
        let channel = generate_channel(&mobility, config, &mut rng);
        let mut rng = stream_rng(base, horizon, trial, seed::TRAFFIC);
        let occupancy = simulate_background(&config.background, horizon, &mut rng);
        Self {
            mobility,
            channel,
            occupancy,
        }
    }

    pub fn horizon(&self) -> usize {
        self.channel.len()
    }

    /// The first `horizon` slots of this realization.
    pub fn prefix(&self, horizon: usize) -> Self {
        let n = horizon.min(self.horizon());
        let m = &self.mobility;
        let c = &self.channel;
        Self {
            mobility: MobilityTrace {
                positions_m: m.positions_m[..n].to_vec(),
                speeds_mps: m.speeds_mps[..n].to_vec(),
                serving_bs: m.serving_bs[..n].to_vec(),
                distances_m: m.distances_m[..n].to_vec(),
            },
            channel: ChannelTrace {
                alpha: c.alpha[..n].to_vec(),
                fading_power: c.fading_power[..n].to_vec(),
                gain: c.gain[..n].to_vec(),
            },
            occupancy: OccupancyTrace {
                active: self.occupancy.active[..n].to_vec(),
                ..self.occupancy.clone()
            },
        }
    }

    pub fn view(&self, t: usize, config: &ScenarioConfig) -> SlotView {
        let bs = self.mobility.serving_bs[t];
        let (bandwidth_hz, cap_w) = residual_resources(&self.occupancy, t, bs, config);
        SlotView {
            t,
            gain: self.channel.gain[t],
            bandwidth_hz,
            cap_w,
            idle: self.occupancy.is_idle(t, bs),
            slots_left: self.horizon() - t,
        }
    }

    pub fn views<'a>(&'a self, config: &'a ScenarioConfig) -> impl Iterator<Item = SlotView> + 'a {
        (0..self.horizon()).map(move |t| self.view(t, config))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub kind: PolicyKind,
    pub decisions: Vec<AllocationDecision>,
    pub report: EnergyReport,
    /// Multiplier used by threshold policies; NaN otherwise.
    pub nu: f64,
    /// Idle-slot gain threshold; NaN for non-threshold policies.
    pub g_th: f64,
    /// Planned idle wake-ups (`N*` or `N̂`); zero for baselines.
    pub n_sched: usize,
    /// Estimated per-slot exceedance probability, when estimated.
    pub q: Option<f64>,
    pub warning: Option<ThresholdWarning>,
}

fn apply_rule(
    rule: &AllocationRule,
    realization: &Realization,
    config: &ScenarioConfig,
) -> (Vec<AllocationDecision>, EnergyReport) {
    let decisions = run_allocation(
        rule,
        realization.views(config),
        config.bits,
        &config.power,
        config.slot_s,
    );
    let report = accumulate_energy(
        &decisions,
        &realization.occupancy,
        &realization.mobility.serving_bs,
        &config.power,
        config.slot_s,
        config.bits,
    );
    (decisions, report)
}

/// Context handed to an estimator: `with_network` selects whether the
/// expected busy-slot count is known or taken as zero.
pub fn context_for(config: &ScenarioConfig, horizon: usize, with_network: bool) -> ContextInfo {
    let predicted = predict_trajectory(&config.geometry, horizon, config.v_max_mps / 2.0, config.slot_s);
    let avg_busy = if with_network {
        horizon as f64 - estimate_idle_count(&config.background, &predicted)
    } else {
        0.0
    };
    ContextInfo {
        bits: config.bits,
        horizon,
        predicted_alpha: predicted.large_scale_gains(&config.geometry),
        avg_busy,
        epsilon: config.epsilon,
    }
}

/// Runs `kind` on `realization`. `trial` feeds the idle-set guess stream.
pub fn run_policy(
    kind: PolicyKind,
    realization: &Realization,
    config: &ScenarioConfig,
    trial: usize,
) -> Result<PolicyRun, Error> {
    let horizon = realization.horizon();
    let (rule, n_sched, q, warning) = match kind {
        PolicyKind::UpperBound => {
            let plan = optimize_offline(
                &realization.channel,
                &realization.occupancy,
                &realization.mobility.serving_bs,
                config,
            );
            let rule = AllocationRule::Threshold {
                nu: plan.params.nu,
                g_th: plan.params.g_th,
            };
            (rule, plan.params.n_sched, None, None)
        }
        PolicyKind::AllContext | PolicyKind::UaContext => {
            let context = context_for(config, horizon, kind == PolicyKind::AllContext);
            let mut rng = stream_rng(config.base_seed, horizon, trial, seed::IDLE_GUESS);
            let est = estimate_params(&context, config, &mut rng)?;
            let rule = AllocationRule::Threshold {
                nu: est.nu_hat,
                g_th: est.g_th_hat,
            };
            (rule, est.n_hat, Some(est.q), est.warning)
        }
        PolicyKind::SeMax => (AllocationRule::SeMax, 0, None, None),
        PolicyKind::EeMax => (
            AllocationRule::EeMax {
                min_power_w: config.ee_min_power_w,
            },
            0,
            None,
            None,
        ),
    };
    let (decisions, report) = apply_rule(&rule, realization, config);
    let (nu, g_th) = match rule {
        AllocationRule::Threshold { nu, g_th } => (nu, g_th),
        _ => (f64::NAN, f64::NAN),
    };
    Ok(PolicyRun {
        kind,
        decisions,
        report,
        nu,
        g_th,
        n_sched,
        q,
        warning,
    })
}

/// Generates one realization and evaluates every policy in `kinds` on it.
pub fn evaluate_trial(
    config: &ScenarioConfig,
    horizon: usize,
    trial: usize,
    kinds: &[PolicyKind],
) -> Result<Vec<PolicyRun>, Error> {
    config.validate()?;
    let realization = Realization::generate(config, horizon, trial);
    kinds
        .iter()
        .map(|&k| run_policy(k, &realization, config, trial))
        .collect()
}

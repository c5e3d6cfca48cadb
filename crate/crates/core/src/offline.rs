//! Perfect-information optimum: pick how many idle slots to wake, which ones
//! (the strongest), and the shared water level.
//!
//! Busy slots are always available at no circuit cost. For each candidate
//! count `N` of woken idle slots the best `N` by gain join the busy slots in
//! one capped water-filling instance; the objective
//! `Σ p/ξ·Δ + N·(P_act − P_sle)·Δ` is minimised over `N`.

use alloc::vec::Vec;

use crate::channel::ChannelTrace;
use crate::config::ScenarioConfig;
use crate::energy::{accumulate_energy, EnergyReport};
use crate::error::Error;
use crate::math::slot_bits;
use crate::policy::{AllocationDecision, BsMode};
use crate::traffic::OccupancyTrace;
use crate::waterfill::{solve_waterfill, WaterfillInstance, WaterfillSlot, WaterfillSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub nu: f64,
    /// Gain threshold for waking an idle slot; `+∞` when none is woken.
    pub g_th: f64,
    pub n_sched: usize,
    pub busy_slots: Vec<usize>,
    pub idle_slots: Vec<usize>,
    pub scheduled_idle: Vec<usize>,
    pub feasible: bool,
}

/// Ranks idle gains (descending, earlier index first on ties) and returns the
/// `n`-th largest gain with the positions of the top `n`, in slot order.
pub fn threshold_from_selection(idle_gains: &[f64], n: usize) -> Result<(f64, Vec<usize>), Error> {
    if n == 0 || n > idle_gains.len() {
        return Err(Error::SelectionOutOfRange {
            n,
            available: idle_gains.len(),
        });
    }
    let order = rank_by_gain(idle_gains);
    let mut selected = order[..n].to_vec();
    selected.sort_unstable();
    Ok((idle_gains[order[n - 1]], selected))
}

pub(crate) fn rank_by_gain(gains: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    order
}

/// Outcome of scanning the number of woken idle slots.
#[derive(Debug, Clone, PartialEq)]
pub struct IdleScan {
    pub n: usize,
    /// Solution over `fixed ++ ranked[..n]`; `None` when that set is empty.
    pub solution: Option<WaterfillSolution>,
    pub objective_j: f64,
    pub feasible: bool,
}

/// Evaluates every `n` in `0..=ranked.len()` (skipping empty instances) and
/// keeps the cheapest feasible one; ties go to the smaller `n`. If no count
/// is feasible the full set is returned with `feasible = false`.
pub fn scan_idle_counts(
    fixed: &[WaterfillSlot],
    ranked: &[WaterfillSlot],
    bits: f64,
    slot_s: f64,
    pa_efficiency: f64,
    circuit_w: f64,
) -> IdleScan {
    let mut slots: Vec<WaterfillSlot> = fixed.to_vec();
    let mut best: Option<IdleScan> = None;
    let mut last: Option<WaterfillSolution> = None;
    for n in 0..=ranked.len() {
        if n > 0 {
            slots.push(ranked[n - 1]);
        }
        if slots.is_empty() {
            continue;
        }
        let instance = WaterfillInstance {
            slots: slots.clone(),
            bits,
            slot_s,
            pa_efficiency,
        };
        let sol = solve_waterfill(&instance).expect("non-empty instance with positive bits");
        if sol.feasible {
            let objective_j =
                sol.transmit_power(pa_efficiency) * slot_s + n as f64 * circuit_w * slot_s;
            if best.as_ref().is_none_or(|b| objective_j < b.objective_j) {
                best = Some(IdleScan {
                    n,
                    solution: Some(sol.clone()),
                    objective_j,
                    feasible: true,
                });
            }
        }
        last = Some(sol);
    }
    best.unwrap_or_else(|| {
        let objective_j = last
            .as_ref()
            .map_or(0.0, |s| s.transmit_power(pa_efficiency) * slot_s)
            + ranked.len() as f64 * circuit_w * slot_s;
        IdleScan {
            n: ranked.len(),
            solution: last,
            objective_j,
            feasible: false,
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflinePlan {
    pub params: PolicyParams,
    pub decisions: Vec<AllocationDecision>,
    pub report: EnergyReport,
    /// Minimised objective (transmit plus nominal circuit energy).
    pub objective_j: f64,
}

/// Per-slot resources left for the NRT user: `(W, cap)`.
pub fn residual_resources(
    occupancy: &OccupancyTrace,
    t: usize,
    bs: usize,
    config: &ScenarioConfig,
) -> (f64, f64) {
    (
        (config.w_max_hz - occupancy.w_rt(t, bs)).max(0.0),
        (config.power.p_max_w - occupancy.p_rt(t, bs)).max(0.0),
    )
}

pub fn optimize_offline(
    channel: &ChannelTrace,
    occupancy: &OccupancyTrace,
    serving_bs: &[usize],
    config: &ScenarioConfig,
) -> OfflinePlan {
    let horizon = channel.len();
    let xi = config.power.pa_efficiency;
    let bits = config.bits;

    let (mut busy_slots, mut idle_slots) = (Vec::new(), Vec::new());
    for (t, &bs) in serving_bs.iter().enumerate().take(horizon) {
        if occupancy.is_idle(t, bs) {
            idle_slots.push(t);
        } else {
            busy_slots.push(t);
        }
    }

    let mut fixed = Vec::new();
    let mut fixed_t = Vec::new();
    for &t in &busy_slots {
        let (w, cap) = residual_resources(occupancy, t, serving_bs[t], config);
        if w > 0.0 && cap > 0.0 {
            fixed.push(WaterfillSlot {
                gain: channel.gain[t],
                bandwidth_hz: w,
                cap_w: cap,
            });
            fixed_t.push(t);
        }
    }
    let idle_gains: Vec<f64> = idle_slots.iter().map(|&t| channel.gain[t]).collect();
    let order = rank_by_gain(&idle_gains);
    let ranked: Vec<WaterfillSlot> = order
        .iter()
        .map(|&k| WaterfillSlot {
            gain: idle_gains[k],
            bandwidth_hz: config.w_max_hz,
            cap_w: config.power.p_max_w,
        })
        .collect();

    let mut powers = alloc::vec![0.0; horizon];
    let (scan, nu) = if bits > 0.0 {
        let scan = scan_idle_counts(
            &fixed,
            &ranked,
            bits,
            config.slot_s,
            xi,
            config.power.circuit_increment_w(),
        );
        if let Some(sol) = &scan.solution {
            for (k, &t) in fixed_t.iter().enumerate() {
                powers[t] = sol.powers[k];
            }
            for (j, &k) in order[..scan.n].iter().enumerate() {
                powers[idle_slots[k]] = sol.powers[fixed.len() + j];
            }
        }
        let nu = scan.solution.as_ref().map_or(0.0, |s| s.nu);
        (scan, nu)
    } else {
        let scan = IdleScan {
            n: 0,
            solution: None,
            objective_j: 0.0,
            feasible: true,
        };
        (scan, 0.0)
    };

    let n = scan.n;
    let g_th = if n > 0 {
        idle_gains[order[n - 1]]
    } else {
        f64::INFINITY
    };
    let mut scheduled_idle: Vec<usize> = order[..n].iter().map(|&k| idle_slots[k]).collect();
    scheduled_idle.sort_unstable();

    let decisions: Vec<AllocationDecision> = (0..horizon)
        .map(|t| {
            let bs = serving_bs[t];
            let (w, _) = residual_resources(occupancy, t, bs, config);
            let p = powers[t];
            let scheduled = p > 0.0;
            AllocationDecision {
                t,
                scheduled,
                power_w: p,
                rate_bits: if scheduled {
                    slot_bits(channel.gain[t], w, p, config.slot_s)
                } else {
                    0.0
                },
                bs_mode: if scheduled || !occupancy.is_idle(t, bs) {
                    BsMode::Active
                } else {
                    BsMode::Sleep
                },
            }
        })
        .collect();
    let report = accumulate_energy(
        &decisions,
        occupancy,
        serving_bs,
        &config.power,
        config.slot_s,
        bits,
    );
    OfflinePlan {
        params: PolicyParams {
            nu,
            g_th,
            n_sched: n,
            busy_slots,
            idle_slots,
            scheduled_idle,
            feasible: scan.feasible,
        },
        decisions,
        report,
        objective_j: scan.objective_j,
    }
}

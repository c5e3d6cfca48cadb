//! Reference solvers for small instances, written without the production
//! solver's structure: a dual golden-section search for water-filling and
//! exhaustive subset enumeration for the idle-slot choice.

use nrtsave_core::channel::ChannelTrace;
use nrtsave_core::config::{BackgroundConfig, Geometry};
use nrtsave_core::offline::optimize_offline;
use nrtsave_core::traffic::OccupancyTrace;
use nrtsave_core::waterfill::{
    multiplier_closed_form, solve_waterfill, Regime, WaterfillInstance, WaterfillSlot,
    WaterfillSolution,
};
use nrtsave_core::{Error, ScenarioConfig};
use rand::Rng;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn bits(slot: &WaterfillSlot, p: f64, slot_s: f64) -> f64 {
    slot.bandwidth_hz * slot_s * (slot.gain * p).ln_1p() / std::f64::consts::LN_2
}

/// Minimises a unimodal function on `[a, b]`; returns `(argmin, min)`.
fn golden_min(mut a: f64, mut b: f64, iters: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    [(a, f(a)), (b, f(b)), (x1, f1), (x2, f2)]
        .into_iter()
        .min_by(|l, r| l.1.total_cmp(&r.1))
        .expect("four candidates")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOracle {
    /// Optimal transmit energy `Σ p/ξ·Δ`, taken as the dual optimum.
    pub objective_j: f64,
    pub multiplier: f64,
    pub feasible: bool,
}

/// Lagrangian dual maximised over the multiplier by golden section, with
/// each per-slot minimisation also done by golden section.
pub fn dual_waterfill(inst: &WaterfillInstance) -> DualOracle {
    let d = inst.slot_s;
    let xi = inst.pa_efficiency;
    let max_bits: f64 = inst.slots.iter().map(|s| bits(s, s.cap_w, d)).sum();
    if max_bits < inst.bits {
        return DualOracle {
            objective_j: inst.slots.iter().map(|s| s.cap_w / xi * d).sum(),
            multiplier: f64::INFINITY,
            feasible: false,
        };
    }
    let inner = |s: &WaterfillSlot, nu: f64| {
        golden_min(0.0, s.cap_w, 120, |p| p / xi * d - nu * bits(s, p, d))
    };
    let delivered = |nu: f64| -> f64 {
        inst.slots
            .iter()
            .map(|s| bits(s, inner(s, nu).0, d))
            .sum()
    };
    let mut hi = 1e-15;
    while delivered(hi) < inst.bits && hi < 1e300 {
        hi *= 2.0;
    }
    let dual = |nu: f64| -> f64 {
        inst.slots.iter().map(|s| inner(s, nu).1).sum::<f64>() + nu * inst.bits
    };
    let (nu, neg) = golden_min(0.0, hi, 200, |nu| -dual(nu));
    DualOracle {
        objective_j: -neg,
        multiplier: nu,
        feasible: true,
    }
}

/// Log-uniform draw on `[a, b)`.
fn log_uniform<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    (rng.random_range(a.ln()..b.ln())).exp()
}

/// Up to `max_slots` slots with random gains, bandwidths and caps (some
/// zero). About one instance in ten asks for more than the caps allow.
pub fn random_waterfill_instance<R: Rng + ?Sized>(rng: &mut R, max_slots: usize) -> WaterfillInstance {
    let n = rng.random_range(1..=max_slots);
    let slots: Vec<WaterfillSlot> = (0..n)
        .map(|_| WaterfillSlot {
            gain: log_uniform(rng, 1e-2, 1e3),
            bandwidth_hz: rng.random_range(1e6..1e7),
            cap_w: if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(0.1..40.0)
            },
        })
        .collect();
    let max_bits: f64 = slots.iter().map(|s| bits(s, s.cap_w, 1.0)).sum();
    let frac = if rng.random_bool(0.1) {
        rng.random_range(1.03..1.5)
    } else {
        rng.random_range(0.01..0.97)
    };
    WaterfillInstance {
        slots,
        bits: (frac * max_bits).max(1.0),
        slot_s: 1.0,
        pa_efficiency: 0.213,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillCheck {
    pub feasible: bool,
    pub feasible_agrees: bool,
    /// `|solver − oracle| / oracle` on transmit energy (feasible only).
    pub objective_rel_err: f64,
    /// `|delivered − B| / B` (feasible only).
    pub bits_rel_err: f64,
    /// Worst normalised violation of the optimality conditions.
    pub kkt_residual: f64,
    /// Relative gap between closed-form and bisection multipliers, when the
    /// closed form is defined.
    pub closed_form_rel_err: Option<f64>,
    pub solution: WaterfillSolution,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

/// Normalised KKT violation of a solution.
pub fn kkt_residual(inst: &WaterfillInstance, sol: &WaterfillSolution) -> f64 {
    let xi = inst.pa_efficiency;
    let log2e = std::f64::consts::LOG2_E;
    let mut worst = 0.0f64;
    for ((s, &p), r) in inst.slots.iter().zip(&sol.powers).zip(&sol.regimes) {
        if s.cap_w <= 0.0 {
            worst = worst.max(p.abs());
            continue;
        }
        let demand = xi * sol.nu * s.bandwidth_hz * log2e - 1.0 / s.gain;
        let v = match r {
            Regime::Interior => {
                let level = (p + 1.0 / s.gain) / (xi * s.bandwidth_hz * log2e);
                let mut v = rel(level, sol.nu);
                if p <= 0.0 || p >= s.cap_w {
                    v = v.max(1.0);
                }
                v
            }
            Regime::AtCap => ((s.cap_w - demand) / s.cap_w).max(0.0) + rel(p, s.cap_w),
            Regime::Off => (demand / s.cap_w).max(0.0) + p.abs() / s.cap_w,
        };
        worst = worst.max(v);
    }
    worst
}

pub fn check_waterfill(inst: &WaterfillInstance) -> Result<WaterfillCheck, Error> {
    let sol = solve_waterfill(inst)?;
    let oracle = dual_waterfill(inst);
    let mut check = WaterfillCheck {
        feasible: oracle.feasible,
        feasible_agrees: oracle.feasible == sol.feasible,
        objective_rel_err: 0.0,
        bits_rel_err: 0.0,
        kkt_residual: 0.0,
        closed_form_rel_err: None,
        solution: sol.clone(),
    };
    if !sol.feasible {
        let at_caps = sol.powers.iter().zip(&inst.slots).all(|(p, s)| *p == s.cap_w);
        check.feasible_agrees &= at_caps;
        return Ok(check);
    }
    let transmit: f64 = sol.powers.iter().map(|p| p / inst.pa_efficiency * inst.slot_s).sum();
    let delivered: f64 = inst
        .slots
        .iter()
        .zip(&sol.powers)
        .map(|(s, &p)| bits(s, p, inst.slot_s))
        .sum();
    check.objective_rel_err = rel(transmit, oracle.objective_j);
    check.bits_rel_err = (delivered - inst.bits).abs() / inst.bits;
    check.kkt_residual = kkt_residual(inst, &sol);
    check.closed_form_rel_err = match multiplier_closed_form(&sol, inst) {
        Ok(nu) => Some(rel(nu, sol.nu)),
        Err(Error::NoInteriorSlots) => None,
        Err(e) => return Err(e),
    };
    Ok(check)
}

/// A single-BS offline instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineInstance {
    pub channel: ChannelTrace,
    pub occupancy: OccupancyTrace,
    pub serving_bs: Vec<usize>,
    pub config: ScenarioConfig,
}

pub fn random_offline_instance<R: Rng + ?Sized>(rng: &mut R, max_horizon: usize) -> OfflineInstance {
    let horizon = rng.random_range(1..=max_horizon);
    let mut config = ScenarioConfig {
        geometry: Geometry {
            bs_positions_m: vec![0.0],
            ..Geometry::default()
        },
        background: BackgroundConfig::none(1),
        ..ScenarioConfig::default()
    };
    if rng.random_bool(0.15) {
        config.power.p_active_w = config.power.p_sleep_w;
    }
    let gains: Vec<f64> = (0..horizon).map(|_| log_uniform(rng, 1e-2, 1e2)).collect();
    let bg = BackgroundConfig::default();
    let active: Vec<Vec<usize>> = (0..horizon)
        .map(|_| {
            let n = if rng.random_bool(0.5) {
                0
            } else {
                rng.random_range(1..=bg.capacity)
            };
            vec![n]
        })
        .collect();
    let occupancy = OccupancyTrace {
        active,
        request_power_w: bg.request_power_w,
        request_bandwidth_hz: bg.request_bandwidth_hz,
    };
    let max_bits: f64 = (0..horizon)
        .map(|t| {
            let w = config.w_max_hz - occupancy.w_rt(t, 0);
            let cap = config.power.p_max_w - occupancy.p_rt(t, 0);
            w * config.slot_s * (gains[t] * cap).ln_1p() / std::f64::consts::LN_2
        })
        .sum();
    let frac = if rng.random_bool(0.1) {
        rng.random_range(1.03..1.5)
    } else {
        rng.random_range(0.02..0.95)
    };
    config.bits = frac * max_bits;
    OfflineInstance {
        channel: ChannelTrace::from_parts(gains, vec![1.0; horizon], 1.0),
        occupancy,
        serving_bs: vec![0; horizon],
        config,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetOptimum {
    pub objective_j: f64,
    pub feasible: bool,
    pub subset_size: usize,
}

/// Minimum over every subset of idle slots of transmit plus circuit energy.
pub fn brute_force_offline(inst: &OfflineInstance) -> SubsetOptimum {
    let cfg = &inst.config;
    let horizon = inst.channel.len();
    let circuit = cfg.power.circuit_increment_w() * cfg.slot_s;
    let mut fixed = Vec::new();
    let mut idle = Vec::new();
    for t in 0..horizon {
        let g = inst.channel.gain[t];
        if inst.occupancy.is_idle(t, 0) {
            idle.push(WaterfillSlot {
                gain: g,
                bandwidth_hz: cfg.w_max_hz,
                cap_w: cfg.power.p_max_w,
            });
        } else {
            let w = cfg.w_max_hz - inst.occupancy.w_rt(t, 0);
            let cap = cfg.power.p_max_w - inst.occupancy.p_rt(t, 0);
            if w > 0.0 && cap > 0.0 {
                fixed.push(WaterfillSlot {
                    gain: g,
                    bandwidth_hz: w,
                    cap_w: cap,
                });
            }
        }
    }
    if cfg.bits <= 0.0 {
        return SubsetOptimum {
            objective_j: 0.0,
            feasible: true,
            subset_size: 0,
        };
    }
    let mut best = SubsetOptimum {
        objective_j: f64::INFINITY,
        feasible: false,
        subset_size: 0,
    };
    for mask in 0u32..(1 << idle.len()) {
        let mut slots = fixed.clone();
        slots.extend((0..idle.len()).filter(|i| mask >> i & 1 == 1).map(|i| idle[i]));
        if slots.is_empty() {
            continue;
        }
        let inst = WaterfillInstance {
            slots,
            bits: cfg.bits,
            slot_s: cfg.slot_s,
            pa_efficiency: cfg.power.pa_efficiency,
        };
        let sol = solve_waterfill(&inst).expect("valid subset instance");
        if !sol.feasible {
            continue;
        }
        let n = mask.count_ones() as usize;
        let objective_j = sol.transmit_power(cfg.power.pa_efficiency) * cfg.slot_s + n as f64 * circuit;
        if objective_j < best.objective_j {
            best = SubsetOptimum {
                objective_j,
                feasible: true,
                subset_size: n,
            };
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfflineCheck {
    pub feasible: bool,
    pub feasible_agrees: bool,
    pub scan_objective_j: f64,
    pub brute_objective_j: f64,
    pub rel_err: f64,
}

pub fn check_offline(inst: &OfflineInstance) -> OfflineCheck {
    let plan = optimize_offline(&inst.channel, &inst.occupancy, &inst.serving_bs, &inst.config);
    let brute = brute_force_offline(inst);
    let feasible = plan.params.feasible;
    OfflineCheck {
        feasible,
        feasible_agrees: feasible == brute.feasible,
        scan_objective_j: plan.objective_j,
        brute_objective_j: brute.objective_j,
        rel_err: if feasible && brute.feasible {
            rel(plan.objective_j, brute.objective_j)
        } else {
            0.0
        },
    }
}

//! Causal per-slot allocation. A policy only sees the current slot through a
//! [`SlotView`] and the bits still owed; everything about the future is
//! folded into parameters fixed when the request arrives.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::config::PowerConfig;
use crate::energy::DELIVERY_TOLERANCE;
use crate::math::{power_for_bits, slot_bits, LN_2};
use crate::waterfill::evaluate_policy_power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    /// Perfect future information.
    UpperBound,
    /// Application, user and network context.
    AllContext,
    /// Application and user context only: every slot presumed idle.
    UaContext,
    /// Full residual power every slot until done.
    SeMax,
    /// Per-slot energy-efficiency maximisation.
    EeMax,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::UpperBound,
        PolicyKind::AllContext,
        PolicyKind::UaContext,
        PolicyKind::SeMax,
        PolicyKind::EeMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::UpperBound => "upper_bound",
            PolicyKind::AllContext => "all_context",
            PolicyKind::UaContext => "ua_context",
            PolicyKind::SeMax => "se_max",
            PolicyKind::EeMax => "ee_max",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPolicy;

impl fmt::Display for UnknownPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected one of upper_bound, all_context, ua_context, se_max, ee_max")
    }
}

impl core::error::Error for UnknownPolicy {}

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or(UnknownPolicy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsMode {
    Active,
    Sleep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationDecision {
    pub t: usize,
    /// Scheduling indicator `m^t`.
    pub scheduled: bool,
    pub power_w: f64,
    pub rate_bits: f64,
    /// Mode of the serving BS.
    pub bs_mode: BsMode,
}

/// What the serving BS knows at the start of slot `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotView {
    pub t: usize,
    pub gain: f64,
    /// Bandwidth not used by background traffic.
    pub bandwidth_hz: f64,
    /// Power not used by background traffic.
    pub cap_w: f64,
    pub idle: bool,
    /// Slots left before the deadline, this one included.
    pub slots_left: usize,
}

/// Full residual power, throttled so the last slot finishes exactly.
pub fn se_max_step(gain: f64, bandwidth_hz: f64, cap_w: f64, residual_bits: f64, slot_s: f64) -> f64 {
    if cap_w <= 0.0 || bandwidth_hz <= 0.0 || residual_bits <= 0.0 {
        return 0.0;
    }
    cap_w.min(power_for_bits(gain, bandwidth_hz, residual_bits, slot_s))
}

/// `argmax_{0<p≤cap} W·Δ·log2(1+g·p) / (p/ξ + c)` by Dinkelbach iteration.
///
/// With `c = 0` the ratio decreases in `p` and the supremum sits at `p → 0⁺`;
/// zero is returned and the caller decides the floor.
pub fn ee_max_step(
    gain: f64,
    bandwidth_hz: f64,
    cap_w: f64,
    circuit_w: f64,
    pa_efficiency: f64,
    slot_s: f64,
) -> f64 {
    if cap_w <= 0.0 || bandwidth_hz <= 0.0 || !(circuit_w > 0.0) {
        return 0.0;
    }
    let rate = |p: f64| slot_bits(gain, bandwidth_hz, p, slot_s);
    let cost = |p: f64| p / pa_efficiency + circuit_w;
    let mut p = cap_w;
    let mut ratio = rate(p) / cost(p);
    for _ in 0..100 {
        // argmax_p rate(p) − ratio·cost(p) is a water-filling step.
        let next = (pa_efficiency * bandwidth_hz * slot_s / (ratio * LN_2) - 1.0 / gain).clamp(0.0, cap_w);
        let gap = rate(next) - ratio * cost(next);
        p = next;
        if gap <= 1e-12 * rate(next).max(f64::MIN_POSITIVE) {
            break;
        }
        ratio = rate(p) / cost(p);
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllocationRule {
    /// Shared-multiplier water-filling with an idle-slot gain threshold.
    Threshold { nu: f64, g_th: f64 },
    SeMax,
    EeMax { min_power_w: f64 },
}

impl AllocationRule {
    fn power(&self, view: &SlotView, residual_bits: f64, power: &PowerConfig, slot_s: f64) -> f64 {
        match *self {
            AllocationRule::Threshold { nu, g_th } => evaluate_policy_power(
                view.gain,
                view.bandwidth_hz,
                view.cap_w,
                nu,
                g_th,
                view.idle,
                power.pa_efficiency,
            ),
            AllocationRule::SeMax => {
                se_max_step(view.gain, view.bandwidth_hz, view.cap_w, residual_bits, slot_s)
            }
            AllocationRule::EeMax { min_power_w } => {
                let full = slot_bits(view.gain, view.bandwidth_hz, view.cap_w, slot_s);
                // Remaining slots are assumed to look like this one.
                if residual_bits >= full * view.slots_left as f64 {
                    return view.cap_w;
                }
                let circuit = if view.idle { power.circuit_increment_w() } else { 0.0 };
                if circuit > 0.0 {
                    ee_max_step(
                        view.gain,
                        view.bandwidth_hz,
                        view.cap_w,
                        circuit,
                        power.pa_efficiency,
                        slot_s,
                    )
                } else {
                    min_power_w.min(view.cap_w)
                }
            }
        }
    }
}

/// Applies `rule` slot by slot, throttling the slot that completes the
/// payload and idling once it is delivered.
pub fn run_allocation<I>(
    rule: &AllocationRule,
    views: I,
    bits: f64,
    power: &PowerConfig,
    slot_s: f64,
) -> Vec<AllocationDecision>
where
    I: IntoIterator<Item = SlotView>,
{
    let mut residual = bits;
    let done_below = bits * DELIVERY_TOLERANCE;
    views
        .into_iter()
        .map(|view| {
            let mut p = 0.0;
            if residual > done_below && view.bandwidth_hz > 0.0 {
                p = rule.power(&view, residual, power, slot_s).clamp(0.0, view.cap_w);
                if p > 0.0 && slot_bits(view.gain, view.bandwidth_hz, p, slot_s) >= residual {
                    p = power_for_bits(view.gain, view.bandwidth_hz, residual, slot_s).min(p);
                }
            }
            let scheduled = p > 0.0;
            let rate_bits = if scheduled {
                slot_bits(view.gain, view.bandwidth_hz, p, slot_s)
            } else {
                0.0
            };
            residual -= rate_bits;
            AllocationDecision {
                t: view.t,
                scheduled,
                power_w: p,
                rate_bits,
                bs_mode: if scheduled || !view.idle {
                    BsMode::Active
                } else {
                    BsMode::Sleep
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rel_diff;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn view(t: usize, gain: f64, cap_w: f64, idle: bool, slots_left: usize) -> SlotView {
        SlotView {
            t,
            gain,
            bandwidth_hz: 1e7,
            cap_w,
            idle,
            slots_left,
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!("EE-Max".parse::<PolicyKind>().unwrap(), PolicyKind::EeMax);
        assert!("greedy".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn se_max_cases() {
        assert_eq!(se_max_step(1.0, 1e7, 40.0, 1e12, 1.0), 40.0);
        let half = slot_bits(1.0, 1e7, 40.0, 1.0) / 2.0;
        let p = se_max_step(1.0, 1e7, 40.0, half, 1.0);
        assert!(rel_diff(slot_bits(1.0, 1e7, p, 1.0), half) < 1e-12);
        assert_eq!(se_max_step(1.0, 1e7, 0.0, 1e9, 1.0), 0.0);
    }

    #[test]
    fn ee_max_zero_circuit_goes_to_zero() {
        assert_eq!(ee_max_step(1.0, 1e7, 40.0, 0.0, 0.213, 1.0), 0.0);
    }

    #[test]
    fn ee_max_matches_grid_search() {
        let (xi, c) = (0.213, 83.2);
        for &g in &[0.05, 0.8, 3.0, 25.0, 400.0] {
            let p = ee_max_step(g, 1e7, 40.0, c, xi, 1.0);
            let ratio = |p: f64| slot_bits(g, 1e7, p, 1.0) / (p / xi + c);
            let (mut best_p, mut best) = (0.0, 0.0);
            for i in 1..=400_000 {
                let q = 40.0 * i as f64 / 400_000.0;
                if ratio(q) > best {
                    best = ratio(q);
                    best_p = q;
                }
            }
            assert!(rel_diff(ratio(p), best) < 1e-9, "g={g}");
            assert!((p - best_p).abs() < 1e-3 * 40.0, "g={g}: {p} vs {best_p}");
            if p < 40.0 {
                // First-order condition r'(p)(p/ξ + c) = r(p)/ξ.
                let dr = 1e7 * g / ((1.0 + g * p) * LN_2);
                assert!(rel_diff(dr * (p / xi + c), slot_bits(g, 1e7, p, 1.0) / xi) < 1e-6);
            }
        }
    }

    #[test]
    fn ee_max_binding_cap() {
        let unconstrained = ee_max_step(30.0, 1e7, 40.0, 83.2, 0.213, 1.0);
        let capped = ee_max_step(30.0, 1e7, unconstrained / 2.0, 83.2, 0.213, 1.0);
        assert_eq!(capped, unconstrained / 2.0);
    }

    #[test]
    fn threshold_rule_never_wakes_with_infinite_threshold() {
        let rule = AllocationRule::Threshold {
            nu: 1e-3,
            g_th: f64::INFINITY,
        };
        let views = (0..5).map(|t| view(t, 10.0, 40.0, t % 2 == 0, 5 - t));
        let ds = run_allocation(&rule, views, 1e12, &PowerConfig::default(), 1.0);
        for d in &ds {
            assert_eq!(d.scheduled, d.t % 2 == 1);
        }
        assert_eq!(ds[0].bs_mode, BsMode::Sleep);
    }

    #[test]
    fn zero_payload_schedules_nothing() {
        for rule in [
            AllocationRule::SeMax,
            AllocationRule::EeMax { min_power_w: 1.0 },
            AllocationRule::Threshold { nu: 1.0, g_th: 0.0 },
        ] {
            let views = (0..4).map(|t| view(t, 10.0, 40.0, true, 4 - t));
            let ds = run_allocation(&rule, views, 0.0, &PowerConfig::default(), 1.0);
            assert!(ds.iter().all(|d| !d.scheduled && d.power_w == 0.0));
        }
    }

    #[test]
    fn ee_deadline_guard_switches_to_full_power() {
        let pc = PowerConfig::default();
        let full = slot_bits(2.0, 1e7, 40.0, 1.0);
        let rule = AllocationRule::EeMax { min_power_w: 1.0 };
        let ds = run_allocation(&rule, [view(0, 2.0, 40.0, false, 2)], 2.0 * full, &pc, 1.0);
        assert_eq!(ds[0].power_w, 40.0);
        let ds = run_allocation(&rule, [view(0, 2.0, 40.0, false, 3)], 2.0 * full, &pc, 1.0);
        assert_eq!(ds[0].power_w, 1.0);
    }

    proptest! {
        #[test]
        fn decisions_respect_budget_and_stop_at_payload(
            gains in prop::collection::vec(0.01f64..100.0, 1..40),
            caps in prop::collection::vec(0.0f64..40.0, 40),
            idle in prop::collection::vec(any::<bool>(), 40),
            bits in 0.0f64..3e9,
            which in 0usize..3,
        ) {
            let rule = [
                AllocationRule::SeMax,
                AllocationRule::EeMax { min_power_w: 1.0 },
                AllocationRule::Threshold { nu: 3e-6, g_th: 1.0 },
            ][which];
            let n = gains.len();
            let views: Vec<_> = (0..n).map(|t| view(t, gains[t], caps[t], idle[t], n - t)).collect();
            let ds = run_allocation(&rule, views.clone(), bits, &PowerConfig::default(), 1.0);
            let mut delivered = 0.0;
            for (d, v) in ds.iter().zip(&views) {
                prop_assert!(d.power_w <= v.cap_w && d.power_w >= 0.0);
                prop_assert_eq!(d.scheduled, d.power_w > 0.0);
                delivered += d.rate_bits;
            }
            prop_assert!(delivered <= bits * (1.0 + 1e-9) + 1e-6);
        }
    }
}

//! Capped water-filling: minimise `Σ p_t / ξ` subject to
//! `Σ W_t·Δ·log2(1 + g_t·p_t) = B` and `0 ≤ p_t ≤ cap_t`.
//!
//! The optimum has the form `p_t = clamp(ξ·ν·W_t·log2 e − 1/g_t, 0, cap_t)`
//! for one multiplier `ν` shared by every slot. Delivered bits are continuous
//! and non-decreasing in `ν`, so `ν` is found by bracketing (doubling) and
//! bisection.

use alloc::vec::Vec;

use crate::error::Error;
use crate::math::{self, slot_bits, LN_2, LOG2_E};

const NU_REL_TOL: f64 = 1e-12;
const BITS_REL_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;
const MAX_DOUBLINGS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterfillSlot {
    /// Equivalent channel gain, 1/W.
    pub gain: f64,
    pub bandwidth_hz: f64,
    /// Largest power the slot may carry, `P_max − p_RT`.
    pub cap_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillInstance {
    pub slots: Vec<WaterfillSlot>,
    pub bits: f64,
    pub slot_s: f64,
    pub pa_efficiency: f64,
}

/// Where a slot's power sits relative to its box constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Off,
    Interior,
    AtCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillSolution {
    pub powers: Vec<f64>,
    pub regimes: Vec<Regime>,
    pub nu: f64,
    pub delivered_bits: f64,
    /// False when every slot is at its cap and the bits still fall short.
    pub feasible: bool,
}

impl WaterfillSolution {
    /// `Σ p_t / ξ`, the radiated-power part of the objective (per second).
    pub fn transmit_power(&self, pa_efficiency: f64) -> f64 {
        self.powers.iter().sum::<f64>() / pa_efficiency
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices(Regime::Interior)
    }

    pub fn at_cap(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices(Regime::AtCap)
    }

    fn indices(&self, regime: Regime) -> impl Iterator<Item = usize> + '_ {
        self.regimes
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r == regime)
            .map(|(i, _)| i)
    }
}

/// Unclipped water-level power `ξ·ν·W·log2 e − 1/g`.
#[inline]
pub fn water_level(gain: f64, bandwidth_hz: f64, nu: f64, pa_efficiency: f64) -> f64 {
    pa_efficiency * nu * bandwidth_hz * LOG2_E - 1.0 / gain
}

fn clipped(slot: &WaterfillSlot, nu: f64, pa_efficiency: f64) -> (f64, Regime) {
    let raw = water_level(slot.gain, slot.bandwidth_hz, nu, pa_efficiency);
    if raw <= 0.0 {
        (0.0, Regime::Off)
    } else if raw >= slot.cap_w {
        (slot.cap_w, Regime::AtCap)
    } else {
        (raw, Regime::Interior)
    }
}

/// `clamp(ξ·ν·W·log2 e − 1/g, 0, cap)`.
pub fn policy_power(gain: f64, bandwidth_hz: f64, cap_w: f64, nu: f64, pa_efficiency: f64) -> f64 {
    if bandwidth_hz <= 0.0 || cap_w <= 0.0 {
        return 0.0;
    }
    water_level(gain, bandwidth_hz, nu, pa_efficiency).clamp(0.0, cap_w)
}

/// Per-slot allocation rule shared by the perfect-information and the
/// context-driven policies. Busy slots always water-fill against their
/// residual resources; idle slots (where the caller passes `W_max`, `P_max`)
/// only transmit when the gain reaches `g_th`.
pub fn evaluate_policy_power(
    gain: f64,
    bandwidth_hz: f64,
    cap_w: f64,
    nu: f64,
    g_th: f64,
    is_idle: bool,
    pa_efficiency: f64,
) -> f64 {
    if is_idle && !(gain >= g_th) {
        return 0.0;
    }
    policy_power(gain, bandwidth_hz, cap_w, nu, pa_efficiency)
}

fn bits_at(instance: &WaterfillInstance, nu: f64) -> f64 {
    instance
        .slots
        .iter()
        .map(|s| {
            let (p, _) = clipped(s, nu, instance.pa_efficiency);
            slot_bits(s.gain, s.bandwidth_hz, p, instance.slot_s)
        })
        .sum()
}

fn solution_at(instance: &WaterfillInstance, nu: f64, feasible: bool) -> WaterfillSolution {
    let (powers, regimes): (Vec<f64>, Vec<Regime>) = instance
        .slots
        .iter()
        .map(|s| clipped(s, nu, instance.pa_efficiency))
        .unzip();
    let delivered_bits = instance
        .slots
        .iter()
        .zip(&powers)
        .map(|(s, &p)| slot_bits(s.gain, s.bandwidth_hz, p, instance.slot_s))
        .sum();
    WaterfillSolution {
        powers,
        regimes,
        nu,
        delivered_bits,
        feasible,
    }
}

/// Smallest `ν` at which every slot sits at its cap.
fn saturation_level(instance: &WaterfillInstance) -> f64 {
    instance
        .slots
        .iter()
        .map(|s| (s.cap_w + 1.0 / s.gain) / (instance.pa_efficiency * s.bandwidth_hz * LOG2_E))
        .fold(0.0, f64::max)
}

pub fn solve_waterfill(instance: &WaterfillInstance) -> Result<WaterfillSolution, Error> {
    if instance.slots.is_empty() {
        return Err(Error::EmptyInstance);
    }
    if !(instance.bits > 0.0) {
        return Err(Error::NonPositiveBits(instance.bits));
    }
    for (i, s) in instance.slots.iter().enumerate() {
        if !(s.gain > 0.0 && s.bandwidth_hz > 0.0 && s.cap_w >= 0.0) {
            return Err(Error::InvalidSlot(i));
        }
    }
    let xi = instance.pa_efficiency;
    let target = instance.bits;

    let max_bits: f64 = instance
        .slots
        .iter()
        .map(|s| slot_bits(s.gain, s.bandwidth_hz, s.cap_w, instance.slot_s))
        .sum();
    if max_bits < target {
        let nu = saturation_level(instance);
        let mut sol = solution_at(instance, nu, false);
        // At ν_sat every raw level equals or exceeds its cap.
        sol.powers = instance.slots.iter().map(|s| s.cap_w).collect();
        sol.regimes = alloc::vec![Regime::AtCap; instance.slots.len()];
        return Ok(sol);
    }

    // Below the first turn-on level nothing is transmitted.
    let mut hi = instance
        .slots
        .iter()
        .map(|s| 1.0 / (s.gain * xi * s.bandwidth_hz * LOG2_E))
        .fold(f64::INFINITY, f64::min);
    let mut bits_hi = 0.0;
    for _ in 0..MAX_DOUBLINGS {
        hi *= 2.0;
        bits_hi = bits_at(instance, hi);
        if bits_hi >= target {
            break;
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let bits_mid = bits_at(instance, mid);
        if bits_mid >= target {
            hi = mid;
            bits_hi = bits_mid;
        } else {
            lo = mid;
        }
        if hi - lo <= NU_REL_TOL * hi && bits_hi <= target * (1.0 + BITS_REL_TOL) {
            break;
        }
    }
    Ok(solution_at(instance, hi, true))
}

/// Closed-form multiplier from the at-cap and interior sets of a solved
/// instance:
/// `ν = 2^{(B − B_cap)/(Σ_int W·Δ)}·ln 2 / (ξ·Π_int (W·g)^{W/Σ_int W})`.
pub fn multiplier_closed_form(
    solution: &WaterfillSolution,
    instance: &WaterfillInstance,
) -> Result<f64, Error> {
    let interior: Vec<&WaterfillSlot> = solution.interior().map(|i| &instance.slots[i]).collect();
    if interior.is_empty() {
        return Err(Error::NoInteriorSlots);
    }
    let capped_bits: f64 = solution
        .at_cap()
        .map(|i| {
            let s = &instance.slots[i];
            slot_bits(s.gain, s.bandwidth_hz, solution.powers[i], instance.slot_s)
        })
        .sum();
    let sum_w: f64 = interior.iter().map(|s| s.bandwidth_hz).sum();
    let exponent = (instance.bits - capped_bits) / (sum_w * instance.slot_s);
    let ln_weighted_mean: f64 = interior
        .iter()
        .map(|s| s.bandwidth_hz / sum_w * math::ln(s.bandwidth_hz * s.gain))
        .sum();
    Ok(math::exp(exponent * LN_2 - ln_weighted_mean) * LN_2 / instance.pa_efficiency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rel_diff;
    use proptest::prelude::*;
    use std::vec;

    fn slot(gain: f64, bandwidth_hz: f64, cap_w: f64) -> WaterfillSlot {
        WaterfillSlot {
            gain,
            bandwidth_hz,
            cap_w,
        }
    }

    fn instance(slots: Vec<WaterfillSlot>, bits: f64) -> WaterfillInstance {
        WaterfillInstance {
            slots,
            bits,
            slot_s: 1.0,
            pa_efficiency: 0.213,
        }
    }

    #[test]
    fn single_uncapped_slot() {
        let inst = instance(vec![slot(1.0, 1e7, f64::INFINITY)], 1e7);
        let sol = solve_waterfill(&inst).unwrap();
        assert!(sol.feasible);
        assert!(rel_diff(sol.powers[0], 1.0) < 1e-9);
        let nu = multiplier_closed_form(&sol, &inst).unwrap();
        let expected = 2.0 * LN_2 / (0.213 * 1e7);
        assert!(rel_diff(nu, expected) < 1e-12);
        assert!(rel_diff(nu, sol.nu) < 1e-10);
        assert!(rel_diff(water_level(1.0, 1e7, nu, 0.213), 1.0) < 1e-12);
    }

    #[test]
    fn identical_slots_get_equal_power() {
        let inst = instance(vec![slot(2.0, 1e7, 40.0), slot(2.0, 1e7, 40.0)], 3e7);
        let sol = solve_waterfill(&inst).unwrap();
        assert_eq!(sol.powers[0], sol.powers[1]);
    }

    #[test]
    fn binding_cap_is_infeasible() {
        let inst = instance(vec![slot(1.0, 1e7, 0.5)], 1e7);
        let sol = solve_waterfill(&inst).unwrap();
        assert!(!sol.feasible);
        assert_eq!(sol.powers, vec![0.5]);
        assert_eq!(
            multiplier_closed_form(&sol, &inst),
            Err(Error::NoInteriorSlots)
        );
    }

    #[test]
    fn geometric_mean_multiplier() {
        let (g1, g2, w, b) = (0.7, 5.3, 4e6, 2e7);
        let inst = instance(vec![slot(g1, w, 1e3), slot(g2, w, 1e3)], b);
        let sol = solve_waterfill(&inst).unwrap();
        assert_eq!(sol.interior().count(), 2);
        let symbolic = 2f64.powf(b / (2.0 * w)) * LN_2 / (0.213 * w * (g1 * g2).sqrt());
        assert!(rel_diff(sol.nu, symbolic) < 1e-10);
        assert!(rel_diff(multiplier_closed_form(&sol, &inst).unwrap(), symbolic) < 1e-12);
    }

    #[test]
    fn invalid_instances() {
        assert_eq!(solve_waterfill(&instance(vec![], 1.0)), Err(Error::EmptyInstance));
        assert_eq!(
            solve_waterfill(&instance(vec![slot(1.0, 1.0, 1.0)], 0.0)),
            Err(Error::NonPositiveBits(0.0))
        );
        assert_eq!(
            solve_waterfill(&instance(vec![slot(1.0, 0.0, 1.0)], 1.0)),
            Err(Error::InvalidSlot(0))
        );
    }

    #[test]
    fn policy_power_cases() {
        let xi = 0.213;
        let (g, w) = (0.5, 1e7);
        // ν chosen so the raw level is exactly 3 W.
        let nu = (3.0 + 1.0 / g) / (xi * w * LOG2_E);
        assert_eq!(evaluate_policy_power(g, w, 40.0, nu, 1.0, true, xi), 0.0);
        assert!((evaluate_policy_power(g, w, 40.0, nu, 0.5, true, xi) - 3.0).abs() < 1e-12);
        assert_eq!(evaluate_policy_power(g, 0.0, 0.0, nu, 0.0, false, xi), 0.0);
        assert!((evaluate_policy_power(g, w, 2.0, nu, f64::INFINITY, false, xi) - 2.0).abs() < 1e-12);
        assert_eq!(evaluate_policy_power(g, w, 40.0, nu, f64::INFINITY, true, xi), 0.0);
    }

    fn arb_instance() -> impl Strategy<Value = WaterfillInstance> {
        prop::collection::vec((-1.0f64..3.0, 1e6f64..1e7, 0.0f64..40.0), 1..10).prop_flat_map(
            |raw| {
                let slots: Vec<_> = raw
                    .iter()
                    .map(|&(lg, w, c)| slot(10f64.powf(lg), w, c))
                    .collect();
                let max_bits: f64 = slots
                    .iter()
                    .map(|s| slot_bits(s.gain, s.bandwidth_hz, s.cap_w, 1.0))
                    .sum();
                (Just(slots), 0.02f64..1.2).prop_map(move |(slots, frac)| {
                    instance(slots, (frac * max_bits).max(1.0))
                })
            },
        )
    }

    proptest! {
        #[test]
        fn kkt_conditions_hold(inst in arb_instance()) {
            let sol = solve_waterfill(&inst).unwrap();
            let xi = inst.pa_efficiency;
            for (i, s) in inst.slots.iter().enumerate() {
                let p = sol.powers[i];
                prop_assert!(p >= 0.0 && p <= s.cap_w);
                if !sol.feasible {
                    prop_assert_eq!(p, s.cap_w);
                    continue;
                }
                let raw = water_level(s.gain, s.bandwidth_hz, sol.nu, xi);
                match sol.regimes[i] {
                    Regime::Interior => {
                        // Interior slots share the water level ξν: (p + 1/g)/(W log2 e) = ξν.
                        let level = (p + 1.0 / s.gain) / (s.bandwidth_hz * LOG2_E);
                        prop_assert!(rel_diff(level, xi * sol.nu) < 1e-9);
                    }
                    Regime::AtCap => prop_assert!(raw >= s.cap_w),
                    Regime::Off => prop_assert!(raw <= 0.0),
                }
            }
            if sol.feasible {
                prop_assert!(rel_diff(sol.delivered_bits, inst.bits) < 1e-9);
            }
        }

        #[test]
        fn bits_monotone_in_nu(inst in arb_instance(), a in 1e-9f64..1e-3, b in 1e-9f64..1e-3) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(bits_at(&inst, lo) <= bits_at(&inst, hi));
        }

        #[test]
        fn no_feasible_point_is_cheaper(
            inst in arb_instance(),
            fracs in prop::collection::vec(0.0f64..1.0, 10),
        ) {
            let sol = solve_waterfill(&inst).unwrap();
            prop_assume!(sol.feasible);
            let alt: Vec<f64> = inst.slots.iter().zip(&fracs).map(|(s, f)| s.cap_w * f).collect();
            let alt_bits: f64 = inst.slots.iter().zip(&alt)
                .map(|(s, &p)| slot_bits(s.gain, s.bandwidth_hz, p, 1.0)).sum();
            prop_assume!(alt_bits >= inst.bits);
            let alt_cost: f64 = alt.iter().sum();
            prop_assert!(sol.powers.iter().sum::<f64>() <= alt_cost * (1.0 + 1e-12));
        }

        #[test]
        fn closed_form_matches_bisection(inst in arb_instance()) {
            let sol = solve_waterfill(&inst).unwrap();
            prop_assume!(sol.feasible && sol.interior().count() > 0);
            let nu = multiplier_closed_form(&sol, &inst).unwrap();
            prop_assert!(rel_diff(nu, sol.nu) < 1e-9, "{} vs {}", nu, sol.nu);
        }
    }
}

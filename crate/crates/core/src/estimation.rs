//! Online parameter estimation from context: the payload and deadline
//! (application), a predicted trajectory (user) and the average number of busy
//! slots (network).
//!
//! The multiplier comes from the perfect-information scan run on predicted
//! mean gains over a randomly guessed idle set, assuming busy slots leave
//! nothing for the NRT user. The threshold is set conservatively so that at
//! least `N̂` idle slots clear it with probability `1 − ε`, using a binomial
//! approximation of the count of slots whose Gamma-faded gain exceeds it.

use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{constant_speed_trajectory, MobilityTrace};
use crate::config::{Geometry, ScenarioConfig};
use crate::error::Error;
use crate::math;
use crate::offline::{rank_by_gain, scan_idle_counts};
use crate::waterfill::WaterfillSlot;

#[derive(Debug, Clone, PartialEq)]
pub struct ContextInfo {
    pub bits: f64,
    pub horizon: usize,
    /// Predicted large-scale gains `α̂^t`.
    pub predicted_alpha: Vec<f64>,
    /// Expected number of busy slots `T̂_oc`.
    pub avg_busy: f64,
    pub epsilon: f64,
}

/// Large-scale gains along a constant-speed rollout.
pub fn predict_trajectory(
    geometry: &Geometry,
    horizon: usize,
    avg_speed_mps: f64,
    slot_s: f64,
) -> MobilityTrace {
    constant_speed_trajectory(geometry, horizon, avg_speed_mps, slot_s)
}

/// `ĝ^t = N_t·α̂^t / (G·σ²)`.
pub fn predict_gains(predicted_alpha: &[f64], config: &ScenarioConfig) -> Vec<f64> {
    let nt = f64::from(config.antennas);
    predicted_alpha
        .iter()
        .map(|a| nt * a / config.noise_scale())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdleGuess {
    pub busy: Vec<usize>,
    pub idle: Vec<usize>,
}

/// Uniformly random `busy_count`-subset of the horizon taken as busy.
pub fn guess_idle_set<R: Rng + ?Sized>(horizon: usize, busy_count: usize, rng: &mut R) -> IdleGuess {
    let busy_count = busy_count.min(horizon);
    let mut busy = rand::seq::index::sample(rng, horizon, busy_count).into_vec();
    busy.sort_unstable();
    let mut is_busy = alloc::vec![false; horizon];
    for &t in &busy {
        is_busy[t] = true;
    }
    let idle = (0..horizon).filter(|&t| !is_busy[t]).collect();
    IdleGuess { busy, idle }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuEstimate {
    pub n_hat: usize,
    pub nu_hat: f64,
    pub objective_j: f64,
    pub feasible: bool,
}

/// Solves the estimated scheduling problem over the guessed idle slots with
/// full bandwidth and power and the predicted gains.
pub fn estimate_n_and_nu(
    predicted_gains: &[f64],
    idle: &[usize],
    bits: f64,
    config: &ScenarioConfig,
) -> Result<NuEstimate, Error> {
    if idle.is_empty() {
        return Err(Error::NoIdleSlots);
    }
    if !(bits > 0.0) {
        return Ok(NuEstimate {
            n_hat: 0,
            nu_hat: 0.0,
            objective_j: 0.0,
            feasible: true,
        });
    }
    let gains: Vec<f64> = idle.iter().map(|&t| predicted_gains[t]).collect();
    let ranked: Vec<WaterfillSlot> = rank_by_gain(&gains)
        .into_iter()
        .map(|k| WaterfillSlot {
            gain: gains[k],
            bandwidth_hz: config.w_max_hz,
            cap_w: config.power.p_max_w,
        })
        .collect();
    let scan = scan_idle_counts(
        &[],
        &ranked,
        bits,
        config.slot_s,
        config.power.pa_efficiency,
        config.power.circuit_increment_w(),
    );
    Ok(NuEstimate {
        n_hat: scan.n,
        nu_hat: scan.solution.as_ref().map_or(0.0, |s| s.nu),
        objective_j: scan.objective_j,
        feasible: scan.feasible,
    })
}

/// `Σ_{i<N} x^i/i! · e^{−x}`: probability that a Gamma(N, 1) variable is at
/// least `x`, for integer shape.
pub fn gamma_tail_integer(shape: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if !x.is_finite() {
        return 0.0;
    }
    let mut term = math::exp(-x);
    let mut sum = term;
    for i in 1..shape {
        term *= x / f64::from(i);
        sum += term;
    }
    sum.min(1.0)
}

/// Probability `q` that a slot's faded gain exceeds `g_th`, averaged over the
/// predicted large-scale gains.
pub fn exceed_probability(g_th: f64, predicted_alpha: &[f64], config: &ScenarioConfig) -> f64 {
    if predicted_alpha.is_empty() {
        return 0.0;
    }
    let scale = config.noise_scale() * g_th;
    predicted_alpha
        .iter()
        .map(|&a| gamma_tail_integer(config.antennas, if g_th == 0.0 { 0.0 } else { scale / a }))
        .sum::<f64>()
        / predicted_alpha.len() as f64
}

/// `P(X ≥ k)` for `X ~ Binomial(n, q)`, summed in log space.
pub fn binomial_tail(n: usize, k: usize, q: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let ln_q = math::ln(q);
    let ln_1mq = math::ln_1p(-q);
    let ln_n_fact = math::ln_gamma(n as f64 + 1.0);
    let log_term = |j: usize| {
        ln_n_fact - math::ln_gamma(j as f64 + 1.0) - math::ln_gamma((n - j) as f64 + 1.0)
            + j as f64 * ln_q
            + (n - j) as f64 * ln_1mq
    };
    let max = (k..=n).map(log_term).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = (k..=n).map(|j| math::exp(log_term(j) - max)).sum();
    (math::exp(max) * sum).min(1.0)
}

/// `⌈N̂·T / T̂_id⌉`, with the real-valued idle estimate.
pub fn required_count(n_hat: usize, horizon: usize, idle_estimate: f64) -> usize {
    let r = math::ceil(n_hat as f64 * horizon as f64 / idle_estimate);
    if r.is_finite() {
        r as usize
    } else {
        usize::MAX
    }
}

/// Approximate probability that at least `n_hat` idle slots are scheduled,
/// given the per-slot exceed probability `q`.
pub fn schedule_probability_from_q(
    n_hat: usize,
    idle_estimate: f64,
    horizon: usize,
    q: f64,
) -> Result<f64, Error> {
    if !(idle_estimate > 0.0) {
        return Err(Error::NoIdleSlots);
    }
    if n_hat == 0 {
        return Ok(1.0);
    }
    Ok(binomial_tail(horizon, required_count(n_hat, horizon, idle_estimate), q))
}

pub fn schedule_probability(
    n_hat: usize,
    idle_estimate: f64,
    horizon: usize,
    g_th: f64,
    predicted_alpha: &[f64],
    config: &ScenarioConfig,
) -> Result<f64, Error> {
    let q = exceed_probability(g_th, predicted_alpha, config);
    schedule_probability_from_q(n_hat, idle_estimate, horizon, q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdWarning {
    /// Even a zero threshold cannot reach `1 − ε`; the threshold is zero.
    Unreachable,
    /// Nothing has to be scheduled; the threshold is `+∞`.
    NothingRequired,
    /// No idle slot was guessed; the policy falls back to full power.
    NoIdleGuess,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdEstimate {
    pub g_th: f64,
    pub q: f64,
    pub probability: f64,
    pub warning: Option<ThresholdWarning>,
}

const BISECTIONS: usize = 200;

/// Threshold such that the approximate scheduling probability equals
/// `1 − ε`. Two monotone bisections: first on `q` through the binomial tail,
/// then on the threshold through the exceed probability. The returned
/// threshold errs on the side of a probability at or above the target.
pub fn estimate_threshold(
    n_hat: usize,
    idle_estimate: f64,
    horizon: usize,
    predicted_alpha: &[f64],
    epsilon: f64,
    config: &ScenarioConfig,
) -> Result<ThresholdEstimate, Error> {
    if !(idle_estimate > 0.0) {
        return Err(Error::NoIdleSlots);
    }
    if n_hat == 0 {
        return Ok(ThresholdEstimate {
            g_th: f64::INFINITY,
            q: 0.0,
            probability: 1.0,
            warning: Some(ThresholdWarning::NothingRequired),
        });
    }
    let target = 1.0 - epsilon;
    let k = required_count(n_hat, horizon, idle_estimate);
    if k > horizon {
        return Ok(ThresholdEstimate {
            g_th: 0.0,
            q: 1.0,
            probability: 0.0,
            warning: Some(ThresholdWarning::Unreachable),
        });
    }

    // binomial_tail(k, ·) rises from 0 at q = 0 to 1 at q = 1.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if binomial_tail(horizon, k, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let q_target = hi;

    // The exceed probability falls from 1 at zero threshold towards 0.
    let q_at = |g: f64| exceed_probability(g, predicted_alpha, config);
    let mut g_hi = predict_gains(predicted_alpha, config)
        .into_iter()
        .fold(f64::MIN_POSITIVE, f64::max);
    let mut guard = 0;
    while q_at(g_hi) >= q_target && guard < 2048 {
        g_hi *= 2.0;
        guard += 1;
    }
    let mut g_lo = 0.0f64;
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (g_lo + g_hi);
        if mid <= g_lo || mid >= g_hi {
            break;
        }
        if q_at(mid) >= q_target {
            g_lo = mid;
        } else {
            g_hi = mid;
        }
    }
    let q = q_at(g_lo);
    Ok(ThresholdEstimate {
        g_th: g_lo,
        q,
        probability: binomial_tail(horizon, k, q),
        warning: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedParams {
    pub nu_hat: f64,
    pub g_th_hat: f64,
    pub n_hat: usize,
    pub q: f64,
    /// Guessed idle slots.
    pub idle_guess: Vec<usize>,
    /// Real-valued expected idle count `T̂_id`.
    pub idle_estimate: f64,
    /// Whether the estimated problem could deliver the payload.
    pub feasible: bool,
    pub warning: Option<ThresholdWarning>,
}

/// Full estimation pipeline for one NRT request.
pub fn estimate_params<R: Rng + ?Sized>(
    context: &ContextInfo,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<EstimatedParams, Error> {
    let horizon = context.horizon;
    let avg_busy = context.avg_busy.clamp(0.0, horizon as f64);
    let idle_estimate = horizon as f64 - avg_busy;
    let guess = guess_idle_set(horizon, math::round(avg_busy) as usize, rng);
    if guess.idle.is_empty() || !(idle_estimate > 0.0) {
        return Ok(EstimatedParams {
            nu_hat: f64::INFINITY,
            g_th_hat: 0.0,
            n_hat: 0,
            q: 1.0,
            idle_guess: guess.idle,
            idle_estimate,
            feasible: false,
            warning: Some(ThresholdWarning::NoIdleGuess),
        });
    }
    let gains = predict_gains(&context.predicted_alpha, config);
    let nu = estimate_n_and_nu(&gains, &guess.idle, context.bits, config)?;
    if nu.n_hat == 0 {
        return Ok(EstimatedParams {
            nu_hat: nu.nu_hat,
            g_th_hat: f64::INFINITY,
            n_hat: 0,
            q: 0.0,
            idle_guess: guess.idle,
            idle_estimate,
            feasible: nu.feasible,
            warning: Some(ThresholdWarning::NothingRequired),
        });
    }
    let th = estimate_threshold(
        nu.n_hat,
        idle_estimate,
        horizon,
        &context.predicted_alpha,
        context.epsilon,
        config,
    )?;
    Ok(EstimatedParams {
        nu_hat: nu.nu_hat,
        g_th_hat: th.g_th,
        n_hat: nu.n_hat,
        q: th.q,
        idle_guess: guess.idle,
        idle_estimate,
        feasible: nu.feasible,
        warning: th.warning,
    })
}

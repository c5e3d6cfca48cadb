//! Slotted Erlang-loss simulation of real-time background requests.
//!
//! At the start of every slot the requests that finished in the previous slot
//! leave, new Poisson arrivals are admitted up to the capacity, and the
//! resulting count is held for the whole slot. Each active request finishes at
//! the end of a slot with probability `1/V`, a geometric holding time with
//! mean `V` slots.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::MobilityTrace;
use crate::config::BackgroundConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyTrace {
    /// `active[t][bs]`: requests in service during slot `t`.
    pub active: Vec<Vec<usize>>,
    pub request_power_w: f64,
    pub request_bandwidth_hz: f64,
}

impl OccupancyTrace {
    /// Trace with no background load at all.
    pub fn empty(horizon: usize, bs_count: usize) -> Self {
        Self {
            active: alloc::vec![alloc::vec![0; bs_count]; horizon],
            request_power_w: 0.0,
            request_bandwidth_hz: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn p_rt(&self, t: usize, bs: usize) -> f64 {
        self.active[t][bs] as f64 * self.request_power_w
    }

    pub fn w_rt(&self, t: usize, bs: usize) -> f64 {
        self.active[t][bs] as f64 * self.request_bandwidth_hz
    }

    /// Occupied power of every BS in slot `t`.
    pub fn p_rt_row(&self, t: usize) -> Vec<f64> {
        (0..self.active[t].len()).map(|i| self.p_rt(t, i)).collect()
    }

    /// A slot is idle for a BS when the background occupies no power there.
    pub fn is_idle(&self, t: usize, bs: usize) -> bool {
        self.p_rt(t, bs) <= 0.0
    }

    /// Fraction of idle slots seen by one BS.
    pub fn idle_fraction(&self, bs: usize) -> f64 {
        let idle = (0..self.len()).filter(|&t| self.is_idle(t, bs)).count();
        idle as f64 / self.len() as f64
    }
}

/// Stationary probability that a BS carries no background request:
/// `1 / Σ_{n=0}^{N_C} (λV)^n / n!`.
pub fn idle_probability(arrival_rate: f64, mean_service_slots: f64, capacity: usize) -> f64 {
    let load = arrival_rate * mean_service_slots;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=capacity {
        term *= load / n as f64;
        sum += term;
    }
    1.0 / sum
}

/// Expected number of idle slots along a trajectory, `Σ_i Pr_id(i)·T_i`.
pub fn estimate_idle_count(config: &BackgroundConfig, mobility: &MobilityTrace) -> f64 {
    mobility
        .slots_per_cell(config.arrival_rates.len())
        .iter()
        .zip(&config.arrival_rates)
        .map(|(&slots, &rate)| {
            idle_probability(rate, config.mean_service_slots, config.capacity) * slots as f64
        })
        .sum()
}

/// Draws from the truncated-Poisson (Erlang) occupancy distribution so the
/// trace starts in steady state.
fn stationary_count<R: Rng + ?Sized>(load: f64, capacity: usize, rng: &mut R) -> usize {
    let mut weights = Vec::with_capacity(capacity + 1);
    let mut term = 1.0;
    weights.push(term);
    for n in 1..=capacity {
        term *= load / n as f64;
        weights.push(term);
    }
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (n, w) in weights.iter().enumerate() {
        if u < *w {
            return n;
        }
        u -= w;
    }
    capacity
}

pub fn simulate_background<R: Rng + ?Sized>(
    config: &BackgroundConfig,
    horizon: usize,
    rng: &mut R,
) -> OccupancyTrace {
    let bs_count = config.arrival_rates.len();
    let leave_p = 1.0 / config.mean_service_slots;
    let arrivals: Vec<Option<Poisson<f64>>> = config
        .arrival_rates
        .iter()
        .map(|&l| (l > 0.0).then(|| Poisson::new(l).expect("finite positive rate")))
        .collect();

    let mut current: Vec<usize> = config
        .arrival_rates
        .iter()
        .map(|&l| stationary_count(l * config.mean_service_slots, config.capacity, rng))
        .collect();
    let mut active = Vec::with_capacity(horizon);
    for t in 0..horizon {
        if t > 0 {
            for (bs, count) in current.iter_mut().enumerate() {
                let stay = (0..*count).filter(|_| rng.random::<f64>() >= leave_p).count();
                let new = arrivals[bs].as_ref().map_or(0, |d| d.sample(rng) as usize);
                *count = (stay + new).min(config.capacity);
            }
        }
        active.push(current.clone());
    }
    debug_assert_eq!(active.first().map_or(bs_count, Vec::len), bs_count);
    OccupancyTrace {
        active,
        request_power_w: config.request_power_w,
        request_bandwidth_hz: config.request_bandwidth_hz,
    }
}

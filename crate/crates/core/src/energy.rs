//! BS power model and the basic / transmit / circuit energy split.

use crate::config::PowerConfig;
use crate::error::Error;
use crate::math::sign;
use crate::policy::AllocationDecision;
use crate::traffic::OccupancyTrace;

/// Relative slack of the bit-delivery check.
pub const DELIVERY_TOLERANCE: f64 = 1e-9;

/// Power drawn by one BS carrying `load_w` of radiated power.
fn bs_power(load_w: f64, config: &PowerConfig) -> f64 {
    load_w / config.pa_efficiency + sign(load_w) * config.circuit_increment_w() + config.p_sleep_w
}

/// Power spent on background traffic alone, summed over all BSs.
pub fn basic_power(p_rt: &[f64], config: &PowerConfig) -> f64 {
    p_rt.iter().map(|&p| bs_power(p, config)).sum()
}

/// Total power of all BSs in one slot when the serving BS adds `power_w` for
/// the NRT user (only if `scheduled`).
pub fn slot_power(
    p_rt: &[f64],
    serving_bs: usize,
    scheduled: bool,
    power_w: f64,
    config: &PowerConfig,
) -> Result<f64, Error> {
    let nrt = if scheduled { power_w.max(0.0) } else { 0.0 };
    let mut total = 0.0;
    for (i, &rt) in p_rt.iter().enumerate() {
        let load = if i == serving_bs { rt + nrt } else { rt };
        if load > config.p_max_w * (1.0 + 1e-12) {
            return Err(Error::PowerBudget {
                bs: i,
                total_w: load,
                p_max_w: config.p_max_w,
            });
        }
        total += bs_power(load, config);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub basic_energy_j: f64,
    pub transmit_energy_j: f64,
    pub circuit_energy_j: f64,
    /// Transmit plus circuit energy attributable to the NRT user.
    pub nrt_energy_j: f64,
    pub delivered_bits: f64,
    pub required_bits: f64,
    pub outage: bool,
}

impl EnergyReport {
    pub fn total_energy_j(&self) -> f64 {
        self.basic_energy_j + self.nrt_energy_j
    }
}

pub fn is_outage(delivered_bits: f64, required_bits: f64) -> bool {
    delivered_bits < required_bits * (1.0 - DELIVERY_TOLERANCE)
}

/// Sums a full-horizon decision vector into an [`EnergyReport`].
pub fn accumulate_energy(
    decisions: &[AllocationDecision],
    occupancy: &OccupancyTrace,
    serving_bs: &[usize],
    config: &PowerConfig,
    slot_s: f64,
    required_bits: f64,
) -> EnergyReport {
    let mut r = EnergyReport {
        required_bits,
        ..EnergyReport::default()
    };
    for t in 0..occupancy.len() {
        r.basic_energy_j += basic_power(&occupancy.p_rt_row(t), config) * slot_s;
    }
    for d in decisions {
        if !d.scheduled {
            continue;
        }
        r.transmit_energy_j += d.power_w / config.pa_efficiency * slot_s;
        if occupancy.is_idle(d.t, serving_bs[d.t]) {
            r.circuit_energy_j += config.circuit_increment_w() * slot_s;
        }
        r.delivered_bits += d.rate_bits;
    }
    r.nrt_energy_j = r.transmit_energy_j + r.circuit_energy_j;
    r.outage = is_outage(r.delivered_bits, required_bits);
    r
}

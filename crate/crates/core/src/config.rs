//! Scenario parameters. Defaults reproduce the two-cell setup: 250 m cells,
//! 4 antennas, 40 W / 10 MHz per BS, 1 s slots, 5 dB cell-edge SNR,
//! `P_act = 233.2 W`, `P_sle = 150 W`, 21.3 % PA efficiency, 5 Gbit payload.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel;
use crate::error::ConfigError;

/// BS placement on a line and the cell radius used for noise calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs_positions_m: Vec<f64>,
    pub cell_radius_m: f64,
    /// Distances below this are clamped before evaluating path loss.
    pub min_distance_m: f64,
    pub start_position_m: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            bs_positions_m: vec![0.0, 500.0],
            cell_radius_m: 250.0,
            min_distance_m: 10.0,
            start_position_m: 0.0,
        }
    }
}

impl Geometry {
    pub fn bs_count(&self) -> usize {
        self.bs_positions_m.len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field, reason| Err(ConfigError { field, reason });
        if self.bs_positions_m.is_empty() {
            return err("bs_positions_m", "at least one BS is required");
        }
        if self.bs_positions_m.windows(2).any(|w| !(w[0] < w[1])) {
            return err("bs_positions_m", "positions must be strictly increasing");
        }
        if !(self.cell_radius_m > 0.0) {
            return err("cell_radius_m", "must be positive");
        }
        if !(self.min_distance_m > 0.0) {
            return err("min_distance_m", "must be positive");
        }
        if !self.start_position_m.is_finite() {
            return err("start_position_m", "must be finite");
        }
        Ok(())
    }
}

/// Two-state BS power model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    /// Power-amplifier efficiency `ξ`.
    pub pa_efficiency: f64,
    pub p_active_w: f64,
    pub p_sleep_w: f64,
    pub p_max_w: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            pa_efficiency: 0.213,
            p_active_w: 233.2,
            p_sleep_w: 150.0,
            p_max_w: 40.0,
        }
    }
}

impl PowerConfig {
    /// Extra circuit power of waking a sleeping BS.
    pub fn circuit_increment_w(&self) -> f64 {
        self.p_active_w - self.p_sleep_w
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field, reason| Err(ConfigError { field, reason });
        if !(self.pa_efficiency > 0.0 && self.pa_efficiency <= 1.0) {
            return err("pa_efficiency", "must lie in (0, 1]");
        }
        if !(self.p_sleep_w >= 0.0) {
            return err("p_sleep_w", "must be non-negative");
        }
        // Equal active and sleep power is accepted: it is the degenerate
        // no-circuit-penalty case.
        if !(self.p_active_w >= self.p_sleep_w) {
            return err("p_active_w", "must not be below p_sleep_w");
        }
        if !(self.p_max_w > 0.0) {
            return err("pmax_w", "must be positive");
        }
        Ok(())
    }
}

/// Real-time background requests: Poisson arrivals per slot, mean holding
/// time in slots, blocking once `capacity` requests are active.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundConfig {
    /// Arrival rate per slot for each BS.
    pub arrival_rates: Vec<f64>,
    pub mean_service_slots: f64,
    pub capacity: usize,
    pub request_power_w: f64,
    pub request_bandwidth_hz: f64,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self {
            arrival_rates: vec![0.2, 0.2],
            mean_service_slots: 2.0,
            capacity: 5,
            request_power_w: 8.0,
            request_bandwidth_hz: 2e6,
        }
    }
}

impl BackgroundConfig {
    pub fn none(bs_count: usize) -> Self {
        Self {
            arrival_rates: vec![0.0; bs_count],
            ..Self::default()
        }
    }

    pub fn validate(&self, p_max_w: f64, w_max_hz: f64) -> Result<(), ConfigError> {
        let err = |field, reason| Err(ConfigError { field, reason });
        if self.arrival_rates.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return err("arrival_rate_per_slot", "rates must be finite and non-negative");
        }
        if !(self.mean_service_slots >= 1.0) {
            return err("mean_service_slots", "must be at least one slot");
        }
        if self.capacity == 0 {
            return err("bg_capacity", "must be at least 1");
        }
        if !(self.request_power_w >= 0.0) {
            return err("bg_power_w", "must be non-negative");
        }
        if !(self.request_bandwidth_hz >= 0.0) {
            return err("bg_bandwidth_hz", "must be non-negative");
        }
        let n = self.capacity as f64;
        if n * self.request_power_w > p_max_w * (1.0 + 1e-12) {
            return err("bg_power_w", "capacity times per-request power exceeds p_max_w");
        }
        if n * self.request_bandwidth_hz > w_max_hz * (1.0 + 1e-12) {
            return err("bg_bandwidth_hz", "capacity times per-request bandwidth exceeds w_max_hz");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: Geometry,
    pub power: PowerConfig,
    pub background: BackgroundConfig,
    /// Transmit antennas per BS (`N_t`); also the Gamma shape of `‖h‖²`.
    pub antennas: u32,
    pub w_max_hz: f64,
    pub slot_s: f64,
    pub horizon_slots: usize,
    pub bits: f64,
    /// SNR gap `G`, linear.
    pub snr_gap: f64,
    pub cell_edge_snr_db: f64,
    /// Noise-plus-interference power `σ²`; see [`channel::calibrate_noise`].
    pub noise_power_w: f64,
    /// Outage control `ε` of the online threshold.
    pub epsilon: f64,
    pub v_max_mps: f64,
    /// Power used by the EE-max baseline when waking costs nothing.
    pub ee_min_power_w: f64,
    pub trials: usize,
    pub base_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut cfg = Self {
            geometry: Geometry::default(),
            power: PowerConfig::default(),
            background: BackgroundConfig::default(),
            antennas: 4,
            w_max_hz: 10e6,
            slot_s: 1.0,
            horizon_slots: 200,
            bits: 5e9,
            snr_gap: 1.0,
            cell_edge_snr_db: 5.0,
            noise_power_w: 0.0,
            epsilon: 0.05,
            v_max_mps: 5.0,
            ee_min_power_w: 1.0,
            trials: 100,
            base_seed: 0,
        };
        cfg.noise_power_w = channel::calibrate_noise(&cfg);
        cfg
    }
}

impl ScenarioConfig {
    /// Same scenario without background traffic.
    pub fn without_background(mut self) -> Self {
        self.background = BackgroundConfig::none(self.geometry.bs_count());
        self
    }

    /// Re-derives `σ²` from the cell-edge SNR.
    pub fn recalibrate_noise(&mut self) {
        self.noise_power_w = channel::calibrate_noise(self);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field, reason| Err(ConfigError { field, reason });
        self.geometry.validate()?;
        self.power.validate()?;
        self.background.validate(self.power.p_max_w, self.w_max_hz)?;
        if self.background.arrival_rates.len() != self.geometry.bs_count() {
            return err("arrival_rate_per_slot", "need one rate per BS position");
        }
        if self.antennas == 0 {
            return err("antennas", "must be at least 1");
        }
        if !(self.w_max_hz > 0.0) {
            return err("wmax_hz", "must be positive");
        }
        if !(self.slot_s > 0.0) {
            return err("slot_s", "must be positive");
        }
        if self.horizon_slots == 0 {
            return err("horizon_slots", "must be at least 1");
        }
        if !(self.bits >= 0.0 && self.bits.is_finite()) {
            return err("bits", "must be finite and non-negative");
        }
        if !(self.snr_gap > 0.0) {
            return err("snr_gap_db", "must give a positive linear gap");
        }
        if !(self.noise_power_w > 0.0 && self.noise_power_w.is_finite()) {
            return err("noise_power_w", "must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return err("epsilon", "must lie in (0, 1)");
        }
        if !(self.v_max_mps >= 0.0) {
            return err("v_max_mps", "must be non-negative");
        }
        if !(self.ee_min_power_w >= 0.0) {
            return err("ee_min_power_w", "must be non-negative");
        }
        if self.trials == 0 {
            return err("trials", "must be at least 1");
        }
        Ok(())
    }

    /// `G·σ²`, the denominator of the equivalent channel gain.
    pub fn noise_scale(&self) -> f64 {
        self.snr_gap * self.noise_power_w
    }
}

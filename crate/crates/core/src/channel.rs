//! User mobility along the BS line, large-scale path loss, Rayleigh block
//! fading and the equivalent channel gain `g = α·‖h‖² / (G·σ²)`.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::config::{Geometry, ScenarioConfig};
use crate::math;

/// Path loss in dB at distance `d` metres (no clamping).
pub fn path_loss_db(distance_m: f64) -> f64 {
    15.3 + 37.6 * math::log10(distance_m)
}

/// Linear large-scale gain at `distance_m`, clamped below at the geometry's
/// minimum coupling distance.
pub fn path_loss_gain(distance_m: f64, geometry: &Geometry) -> f64 {
    let d = distance_m.max(geometry.min_distance_m);
    math::db_to_linear(-path_loss_db(d))
}

/// Noise power giving the configured SNR at the cell edge under full power.
pub fn calibrate_noise(config: &ScenarioConfig) -> f64 {
    let edge_gain = path_loss_gain(config.geometry.cell_radius_m, &config.geometry);
    config.power.p_max_w * edge_gain / math::db_to_linear(config.cell_edge_snr_db)
}

/// Index and distance of the closest BS; ties go to the lower index.
pub fn nearest_bs(geometry: &Geometry, position_m: f64) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &x) in geometry.bs_positions_m.iter().enumerate() {
        let d = (position_m - x).abs();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    /// User coordinate during each slot.
    pub positions_m: Vec<f64>,
    /// Speed held during each slot.
    pub speeds_mps: Vec<f64>,
    pub serving_bs: Vec<usize>,
    pub distances_m: Vec<f64>,
}

impl MobilityTrace {
    fn from_speeds(geometry: &Geometry, speeds_mps: Vec<f64>, slot_s: f64) -> Self {
        let mut positions_m = Vec::with_capacity(speeds_mps.len());
        let mut x = geometry.start_position_m;
        for &v in &speeds_mps {
            positions_m.push(x);
            x += v * slot_s;
        }
        let (serving_bs, distances_m) = positions_m
            .iter()
            .map(|&x| nearest_bs(geometry, x))
            .unzip();
        Self {
            positions_m,
            speeds_mps,
            serving_bs,
            distances_m,
        }
    }

    pub fn len(&self) -> usize {
        self.positions_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions_m.is_empty()
    }

    /// Number of slots spent in each cell.
    pub fn slots_per_cell(&self, bs_count: usize) -> Vec<usize> {
        let mut counts = alloc::vec![0; bs_count];
        for &i in &self.serving_bs {
            counts[i] += 1;
        }
        counts
    }

    pub fn large_scale_gains(&self, geometry: &Geometry) -> Vec<f64> {
        self.distances_m
            .iter()
            .map(|&d| path_loss_gain(d, geometry))
            .collect()
    }
}

/// Random walk in `+x` with per-slot speed uniform in `[0, v_max)`.
pub fn generate_mobility<R: Rng + ?Sized>(
    geometry: &Geometry,
    horizon: usize,
    v_max_mps: f64,
    slot_s: f64,
    rng: &mut R,
) -> MobilityTrace {
    let speeds = (0..horizon)
        .map(|_| rng.random::<f64>() * v_max_mps)
        .collect();
    MobilityTrace::from_speeds(geometry, speeds, slot_s)
}

/// Constant-speed rollout from the start position.
pub fn constant_speed_trajectory(
    geometry: &Geometry,
    horizon: usize,
    speed_mps: f64,
    slot_s: f64,
) -> MobilityTrace {
    MobilityTrace::from_speeds(geometry, alloc::vec![speed_mps; horizon], slot_s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    /// Large-scale gain `α^t`.
    pub alpha: Vec<f64>,
    /// Small-scale power `‖h^t‖²`, Gamma(N_t, 1).
    pub fading_power: Vec<f64>,
    /// Equivalent gain `g^t` in 1/W.
    pub gain: Vec<f64>,
}

impl ChannelTrace {
    pub fn from_parts(alpha: Vec<f64>, fading_power: Vec<f64>, noise_scale: f64) -> Self {
        let gain = alpha
            .iter()
            .zip(&fading_power)
            .map(|(a, h)| a * h / noise_scale)
            .collect();
        Self {
            alpha,
            fading_power,
            gain,
        }
    }

    pub fn len(&self) -> usize {
        self.gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gain.is_empty()
    }
}

/// Draws i.i.d. block fading for each slot of `trace`.
pub fn generate_channel<R: Rng + ?Sized>(
    trace: &MobilityTrace,
    config: &ScenarioConfig,
    rng: &mut R,
) -> ChannelTrace {
    let alpha = trace.large_scale_gains(&config.geometry);
    let fading = Gamma::new(f64::from(config.antennas), 1.0).expect("antennas >= 1");
    let fading_power = (0..trace.len()).map(|_| fading.sample(rng)).collect();
    ChannelTrace::from_parts(alpha, fading_power, config.noise_scale())
}

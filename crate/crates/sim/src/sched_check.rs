//! Monte Carlo check of the binomial approximation behind the threshold
//! estimate: how often at least `N̂` slots of a random idle set of size
//! `T̂_id` have a faded gain above the threshold.

use nrtsave_core::estimation::{estimate_threshold, predict_trajectory, schedule_probability};
use nrtsave_core::seed::stream_rng;
use nrtsave_core::ScenarioConfig;
use rand::seq::index::sample;
use rand_distr::{Distribution, Gamma, Normal};
use serde::Serialize;

use crate::error::SimError;

const DRAW_STREAM: &str = "schedule-check-draws";
const ERROR_STREAM: &str = "schedule-check-alpha-error";

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleCheckSetup {
    pub horizon: usize,
    pub idle_count: usize,
    pub n_hat: usize,
    pub draws: usize,
    pub points: usize,
    /// Standard deviation of the large-scale gain estimate error, in dB.
    pub alpha_error_db: f64,
    pub seed: u64,
}

impl ScheduleCheckSetup {
    pub fn desk() -> Self {
        Self {
            horizon: 200,
            idle_count: 100,
            n_hat: 20,
            draws: 10_000,
            points: 10,
            alpha_error_db: 2.0,
            seed: 0,
        }
    }

    pub fn full() -> Self {
        Self {
            horizon: 1000,
            idle_count: 500,
            n_hat: 100,
            ..Self::desk()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleCheckRow {
    pub g_th: f64,
    /// Approximation evaluated on the true large-scale gains.
    pub analytic_perfect: f64,
    /// Approximation evaluated on erroneous large-scale gain estimates.
    pub analytic_error: f64,
    pub simulated: f64,
}

impl ScheduleCheckRow {
    pub fn gap_perfect(&self) -> f64 {
        (self.analytic_perfect - self.simulated).abs()
    }

    pub fn gap_error(&self) -> f64 {
        (self.analytic_error - self.simulated).abs()
    }
}

/// Large-scale gains along the average-speed trajectory.
pub fn true_alpha(config: &ScenarioConfig, horizon: usize) -> Vec<f64> {
    predict_trajectory(&config.geometry, horizon, config.v_max_mps / 2.0, config.slot_s)
        .large_scale_gains(&config.geometry)
}

/// Thresholds spaced geometrically between analytic probabilities 0.999
/// and 0.001.
pub fn transition_grid(config: &ScenarioConfig, setup: &ScheduleCheckSetup, alpha: &[f64]) -> Result<Vec<f64>, SimError> {
    let at = |eps: f64| {
        estimate_threshold(setup.n_hat, setup.idle_count as f64, setup.horizon, alpha, eps, config)
            .map(|t| t.g_th)
    };
    let (lo, hi) = (at(0.001)?, at(0.999)?);
    let n = setup.points.max(2);
    Ok((0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect())
}

/// Per draw, the `N̂`-th largest faded gain over a random idle set; a
/// threshold is met in that draw iff it does not exceed this value.
fn nth_largest_gains(config: &ScenarioConfig, setup: &ScheduleCheckSetup, alpha: &[f64]) -> Vec<f64> {
    let mut rng = stream_rng(setup.seed, setup.horizon, 0, DRAW_STREAM);
    let fading = Gamma::new(f64::from(config.antennas), 1.0).expect("antennas >= 1");
    let scale = config.noise_scale();
    let mut gains = Vec::with_capacity(setup.idle_count);
    (0..setup.draws)
        .map(|_| {
            gains.clear();
            for t in sample(&mut rng, setup.horizon, setup.idle_count) {
                gains.push(alpha[t] * fading.sample(&mut rng) / scale);
            }
            if setup.n_hat == 0 {
                return f64::INFINITY;
            }
            if setup.n_hat > gains.len() {
                return f64::NEG_INFINITY;
            }
            let k = setup.n_hat - 1;
            let (_, nth, _) = gains.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
            *nth
        })
        .collect()
}

pub fn validate_schedule_probability(
    config: &ScenarioConfig,
    setup: &ScheduleCheckSetup,
    grid: Option<&[f64]>,
) -> Result<Vec<ScheduleCheckRow>, SimError> {
    let alpha = true_alpha(config, setup.horizon);
    let mut rng = stream_rng(setup.seed, setup.horizon, 0, ERROR_STREAM);
    let noise = Normal::new(0.0, setup.alpha_error_db).expect("finite error spread");
    let alpha_est: Vec<f64> = alpha
        .iter()
        .map(|a| a * 10f64.powf(noise.sample(&mut rng) / 10.0))
        .collect();
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => transition_grid(config, setup, &alpha)?,
    };
    let nth = nth_largest_gains(config, setup, &alpha);
    let idle = setup.idle_count as f64;
    grid.iter()
        .map(|&g| {
            let hits = nth.iter().filter(|&&v| v >= g).count();
            Ok(ScheduleCheckRow {
                g_th: g,
                analytic_perfect: schedule_probability(setup.n_hat, idle, setup.horizon, g, &alpha, config)?,
                analytic_error: schedule_probability(setup.n_hat, idle, setup.horizon, g, &alpha_est, config)?,
                simulated: hits as f64 / setup.draws as f64,
            })
        })
        .collect()
}

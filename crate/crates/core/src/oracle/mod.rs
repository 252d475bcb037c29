//! Stochastic time-domain reference.
//!
//! Each trajectory integrates the Bloch equations with both detunings
//! offset by the common white frequency noise φ̇. A step applies half the
//! noise phase rotation, the exact deterministic affine flow over dt, then
//! the other half. This symmetric split converges to the Stratonovich
//! solution, which is the physical one for a laser phase that is a
//! continuous random walk. Output intensities are |1 + iκᵢpᵢ|².

mod estimate;
mod simulate;

pub use estimate::{
    estimate_g2_zero, estimate_spectra, resolution_bandwidth, EstimatorConfig, FrequencyEstimate,
    SpectralEstimate, UnitSums, Window,
};
pub use simulate::{simulate_ensemble, simulate_trajectory, Trajectory, TrajectoryConfig, TrajectoryEnsemble};

use rayon::prelude::*;
use thiserror::Error;

use crate::bloch::{ModelError, State, SystemParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("integration unstable at step {step} (t = {t} µs); reduce dt")]
    Unstable { step: usize, t: f64 },
    #[error("insufficient data: {segments} segments (need at least 8)")]
    InsufficientData { segments: usize },
    #[error("zero variance in an intensity channel")]
    ZeroVariance,
    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub n_traj: usize,
    pub base_seed: u64,
    pub trajectory: TrajectoryConfig,
}

impl OracleSettings {
    /// 200 trajectories of 2 ms, dt at the stability bound, samples
    /// every ~20 ns, 20 µs transient.
    pub fn standard(params: &SystemParams, omega_max: f64, base_seed: u64) -> Self {
        let dt = TrajectoryConfig::max_dt(params, omega_max);
        let sample_every = ((0.02 / dt).round() as usize).max(1);
        OracleSettings {
            n_traj: 200,
            base_seed,
            trajectory: TrajectoryConfig {
                dt,
                duration: 2000.0_f64.max(TrajectoryConfig::min_duration(params)),
                transient: 20.0,
                sample_every,
                omega_max,
                noise_substeps: 1,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub spectra: SpectralEstimate,
    /// `None` when a channel has zero variance.
    pub g2: Option<f64>,
    /// Time-averaged state of each trajectory, in seed order.
    pub trajectory_means: Vec<State>,
}

impl OracleResult {
    /// Ensemble mean of a state component and its standard error.
    pub fn mean_component(&self, k: usize) -> (crate::bloch::C64, f64) {
        let n = self.trajectory_means.len() as f64;
        let m = self.trajectory_means.iter().map(|s| s[k]).sum::<crate::bloch::C64>() / n;
        let var = self
            .trajectory_means
            .iter()
            .map(|s| (s[k] - m).norm_sqr())
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        (m, (var / n).sqrt())
    }
}

/// Simulates and reduces trajectory by trajectory, so memory stays at one
/// series per worker.
pub fn run_oracle(
    params: &SystemParams,
    settings: &OracleSettings,
    cfg: &EstimatorConfig,
) -> Result<OracleResult, OracleError> {
    let tc = &settings.trajectory;
    tc.check(params)?;
    let plan = estimate::Plan::new(cfg, tc.dt, tc.sample_every)?;
    let reduce = settings.n_traj >= 8;
    let per_traj = (0..settings.n_traj as u64)
        .into_par_iter()
        .map(|k| {
            let t = simulate_trajectory(params, tc, settings.base_seed.wrapping_add(k))?;
            let segs = plan.segments(&t.i1, &t.i2);
            let segs = if reduce {
                vec![estimate::merge(&segs, plan.n_freq())]
            } else {
                segs
            };
            Ok((segs, estimate::covariance_sums(&t.i1, &t.i2), t.mean_state))
        })
        .collect::<Result<Vec<_>, OracleError>>()?;

    let mut cov = [0.0; 3];
    let mut means = Vec::with_capacity(per_traj.len());
    let mut units = Vec::with_capacity(per_traj.len());
    for (segs, c, m) in per_traj {
        for k in 0..3 {
            cov[k] += c[k];
        }
        means.push(m);
        units.push(segs);
    }
    let units = estimate::group_units(units, plan.n_freq());
    let spectra = estimate::finish(&units, &plan, &cfg.frequencies)?;
    Ok(OracleResult {
        spectra,
        g2: estimate::g2_from_sums(cov).ok(),
        trajectory_means: means,
    })
}

#[cfg(test)]
mod tests;

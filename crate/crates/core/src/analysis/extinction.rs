//! Monte Carlo extinction statistics over independent diffusion runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{simulate_hybrid, DiffusionConfig};
use crate::error::{invalid, Result};
use crate::model::{ModelParams, State};
use crate::rng::{member_seed, RngStream};
use crate::trajectory::Termination;

pub const DEFAULT_HORIZON: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub init: State,
    pub horizon: f64,
    pub diffusion: DiffusionConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            init: State::new(0.0, 2.0, 0.5),
            horizon: DEFAULT_HORIZON,
            diffusion: DiffusionConfig::default(),
        }
    }
}

/// Outcome of one ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub index: u64,
    pub seed: u64,
    pub termination: Termination,
    /// Predator extinction time, if before the horizon.
    pub extinction_time: Option<f64>,
    /// Time the prey was absorbed at zero, if it was.
    pub absorption_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionStats {
    pub omega: f64,
    pub n_runs: u64,
    pub n_extinct: u64,
    pub p_ext: f64,
    /// Mean extinction time over extinct runs; `None` without any.
    pub mean_t: Option<f64>,
    /// Sample standard deviation (n - 1) over extinct runs; `None` below two.
    pub std_t: Option<f64>,
    pub horizon: f64,
}

impl ExtinctionStats {
    pub fn from_outcomes(omega: f64, horizon: f64, runs: &[RunOutcome]) -> Self {
        let times: Vec<f64> = runs.iter().filter_map(|r| r.extinction_time).collect();
        let n = times.len();
        let mean = (n > 0).then(|| times.iter().sum::<f64>() / n as f64);
        let std = mean.filter(|_| n > 1).map(|mu| {
            let ss: f64 = times.iter().map(|t| (t - mu).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        ExtinctionStats {
            omega,
            n_runs: runs.len() as u64,
            n_extinct: n as u64,
            p_ext: if runs.is_empty() { 0.0 } else { n as f64 / runs.len() as f64 },
            mean_t: mean,
            std_t: std,
            horizon,
        }
    }
}

/// Runs member `index` of the ensemble seeded by `master_seed`.
pub fn run_member(params: &ModelParams, cfg: &EnsembleConfig, master_seed: u64, index: u64) -> Result<RunOutcome> {
    let seed = member_seed(master_seed, index);
    let mut rng = RngStream::new(seed);
    // Only the end state matters, so sample once per horizon.
    let stride = cfg.horizon.max(f64::MIN_POSITIVE);
    let traj = simulate_hybrid(params, &cfg.diffusion, cfg.init, cfg.horizon, stride, &mut rng)?;
    Ok(RunOutcome {
        index,
        seed,
        termination: traj.termination,
        extinction_time: traj.extinction_time(),
        absorption_time: traj.absorption.map(|s| s.t),
    })
}

/// All members, in index order regardless of scheduling.
pub fn run_ensemble(
    params: &ModelParams,
    cfg: &EnsembleConfig,
    n_runs: u64,
    master_seed: u64,
) -> Result<Vec<RunOutcome>> {
    params.validate()?;
    cfg.diffusion.validate()?;
    if !(cfg.horizon >= 0.0 && cfg.horizon.is_finite()) {
        return Err(invalid("horizon", "must be finite and nonnegative"));
    }
    (0..n_runs)
        .into_par_iter()
        .map(|i| run_member(params, cfg, master_seed, i))
        .collect()
}

/// Extinction probability and time statistics over `n_runs` members.
pub fn ensemble_extinction(
    params: &ModelParams,
    cfg: &EnsembleConfig,
    n_runs: u64,
    master_seed: u64,
) -> Result<ExtinctionStats> {
    if n_runs == 0 {
        return Err(invalid("n_runs", "must be at least 1"));
    }
    let runs = run_ensemble(params, cfg, n_runs, master_seed)?;
    Ok(ExtinctionStats::from_outcomes(params.omega, cfg.horizon, &runs))
}

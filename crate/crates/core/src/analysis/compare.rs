//! Jump process against its diffusion approximation at fixed checkpoints.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{simulate_diffusion, DiffusionConfig};
use crate::error::{invalid, Result};
use crate::jump::simulate_jump;
use crate::model::{ModelParams, State};
use crate::rng::{member_seed, RngStream};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub init: State,
    pub horizon: f64,
    pub checkpoints: Vec<f64>,
    pub diffusion: DiffusionConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            init: State::new(0.0, 0.2, 0.6),
            horizon: 20.0,
            checkpoints: vec![1.0, 5.0, 10.0],
            diffusion: DiffusionConfig::default(),
        }
    }
}

/// Sample mean and standard deviation (n - 1) of both coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub sd_x: f64,
    pub mean_y: f64,
    pub sd_y: f64,
}

impl Moments {
    pub fn of(states: &[State]) -> Self {
        let (mean_x, sd_x) = mean_sd(states.iter().map(|s| s.x));
        let (mean_y, sd_y) = mean_sd(states.iter().map(|s| s.y));
        Moments {
            mean_x,
            sd_x,
            mean_y,
            sd_y,
        }
    }
}

fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    let sd = if n > 1.0 {
        (v.map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub omega: f64,
    pub t: f64,
    pub n_runs: u64,
    pub jump: Moments,
    pub diffusion: Moments,
    /// Mean difference over its combined standard error; 0 when both spreads vanish.
    pub z_x: f64,
    pub z_y: f64,
}

fn standardized(a: f64, sa: f64, b: f64, sb: f64, n: f64) -> f64 {
    let se = (sa * sa / n + sb * sb / n).sqrt();
    if se > 0.0 {
        (a - b) / se
    } else if a == b {
        0.0
    } else {
        f64::INFINITY
    }
}

/// State at `t`, or the final state of a run that stopped earlier.
fn state_at_or_last(traj: &Trajectory, t: f64) -> State {
    traj.state_at(t).unwrap_or_else(|| traj.final_state())
}

/// Runs `n_runs` jump and diffusion members for each parameter set and tabulates
/// their moments at every checkpoint. Members `2i` and `2i + 1` of each
/// parameter set's seed stream drive the jump and diffusion runs.
pub fn compare_processes(
    params_list: &[ModelParams],
    n_runs: u64,
    cfg: &CompareConfig,
    master_seed: u64,
) -> Result<Vec<ComparisonRow>> {
    if n_runs == 0 {
        return Ok(Vec::new());
    }
    if cfg.checkpoints.iter().any(|&t| !(t >= cfg.init.t && t <= cfg.init.t + cfg.horizon)) {
        return Err(invalid("checkpoints", "must lie within the simulated span"));
    }
    cfg.diffusion.validate()?;
    let stride = cfg.diffusion.dt.max(1e-2);
    let mut rows = Vec::new();
    for (j, params) in params_list.iter().enumerate() {
        params.validate()?;
        let stream = member_seed(master_seed, j as u64);
        let runs: Vec<(Trajectory, Trajectory)> = (0..n_runs)
            .into_par_iter()
            .map(|i| {
                let mut r = RngStream::member(stream, 2 * i);
                let jump = simulate_jump(params, &cfg.diffusion.jump, cfg.init, cfg.horizon, stride, &mut r)?;
                let mut r = RngStream::member(stream, 2 * i + 1);
                let diff = simulate_diffusion(params, &cfg.diffusion, cfg.init, cfg.horizon, stride, &mut r)?;
                Ok((jump, diff))
            })
            .collect::<Result<_>>()?;
        for &t in &cfg.checkpoints {
            let js: Vec<State> = runs.iter().map(|(a, _)| state_at_or_last(a, t)).collect();
            let ds: Vec<State> = runs.iter().map(|(_, b)| state_at_or_last(b, t)).collect();
            let (jm, dm) = (Moments::of(&js), Moments::of(&ds));
            let n = n_runs as f64;
            rows.push(ComparisonRow {
                omega: params.omega,
                t,
                n_runs,
                jump: jm,
                diffusion: dm,
                z_x: standardized(jm.mean_x, jm.sd_x, dm.mean_x, dm.sd_x, n),
                z_y: standardized(jm.mean_y, jm.sd_y, dm.mean_y, dm.sd_y, n),
            });
        }
    }
    Ok(rows)
}

//! Euler-Maruyama integration of the degenerate diffusion approximation.
//!
//! A single standard normal `W` drives both coordinates each step:
//!
//! ```text
//! x' = x + (dt/eps)(f(x) - mu(x) y) - sigma_x W
//! y' = y + dt (mu(x) - m(t)) y      + sigma_y W
//! ```
//!
//! so a capture-heavy step lowers prey and raises predator together. Prey at
//! or below one individual (`x <= 1/omega`) is absorbed at zero for good, and
//! the predator then decays in closed form. A run is declared
//! predator-extinct at the first step ending with `y <= 1/omega`.
//!
//! The hybrid mode hands the prey over to the exact jump process when it
//! falls to `hybrid_threshold` individuals, and back once it has doubled.

use crate::error::{invalid, Result};
use crate::jump::{self, JumpConfig, JumpState, RunLog, SegmentEnd};
use crate::model::{ModelParams, State};
use crate::ode::euler_increment;
use crate::rng::RngStream;
use crate::trajectory::{step_count, Diagnostics, Sampler, Termination, Trajectory};

pub const DEFAULT_DT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionConfig {
    pub dt: f64,
    /// Prey count at or below which the jump process takes over.
    pub hybrid_threshold: Option<u64>,
    /// Forces `sigma_x = sigma_y = 0` (the infinite-population limit).
    pub noiseless: bool,
    pub jump: JumpConfig,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig {
            dt: DEFAULT_DT,
            hybrid_threshold: None,
            noiseless: false,
            jump: JumpConfig::default(),
        }
    }
}

impl DiffusionConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.hybrid_threshold == Some(0) {
            return Err(invalid("hybrid_threshold", "must be at least 1 individual"));
        }
        Ok(())
    }
}

/// Outcome of one step with a given noise variate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    /// The predator update went negative and was set to zero.
    pub clamped: bool,
}

/// One step driven by the standard normal `w`. The time of the result is
/// `s.t + dt`.
#[inline]
pub fn step_with_noise(params: &ModelParams, dt: f64, s: &State, w: f64) -> StepOutcome {
    let t = s.t + dt;
    if s.x <= params.unit() {
        let y = s.y * (-params.mortality.integral(s.t, t)).exp();
        return StepOutcome {
            state: State::new(t, 0.0, y),
            clamped: false,
        };
    }
    let (dx, dy) = euler_increment(params, s, dt);
    let (sx, sy) = params.noise_amplitudes(s, dt);
    let x = (s.x + dx) - sx * w;
    let y = (s.y + dy) + sy * w;
    StepOutcome {
        state: State::new(t, x.max(0.0), y.max(0.0)),
        clamped: y < 0.0,
    }
}

/// One Euler-Maruyama step, drawing `W` from `rng`.
pub fn step_diffusion(
    params: &ModelParams,
    cfg: &DiffusionConfig,
    s: &State,
    rng: &mut RngStream,
) -> Result<State> {
    let out = advance(params, cfg, s, rng);
    out.state.check_finite()?;
    Ok(out.state)
}

#[inline]
fn advance(params: &ModelParams, cfg: &DiffusionConfig, s: &State, rng: &mut RngStream) -> StepOutcome {
    if cfg.noiseless || s.x <= params.unit() {
        if s.x <= params.unit() {
            return step_with_noise(params, cfg.dt, s, 0.0);
        }
        let (dx, dy) = euler_increment(params, s, cfg.dt);
        let y = s.y + dy;
        return StepOutcome {
            state: State::new(s.t + cfg.dt, (s.x + dx).max(0.0), y.max(0.0)),
            clamped: y < 0.0,
        };
    }
    step_with_noise(params, cfg.dt, s, rng.standard_normal())
}

enum DiffusionEnd {
    Horizon,
    PredatorExtinct,
    /// Prey count fell to the hybrid threshold.
    BelowThreshold,
}

/// Fixed-step integration from `s` until `t_end` (last step may overshoot
/// by less than `dt`), predator extinction, or `omega x <= switch_below`.
fn run_diffusion_segment(
    params: &ModelParams,
    cfg: &DiffusionConfig,
    s: &mut State,
    t_end: f64,
    switch_below: Option<f64>,
    log: &mut RunLog,
    rng: &mut RngStream,
) -> Result<DiffusionEnd> {
    let unit = params.unit();
    let t0 = s.t;
    let n = step_count(t_end - t0, cfg.dt);
    for k in 0..n {
        if switch_below.is_some_and(|c| s.x * params.omega <= c) {
            return Ok(DiffusionEnd::BelowThreshold);
        }
        if s.x <= unit && log.absorption.is_none() {
            log.absorption = Some(*s);
        }
        let mut out = advance(params, cfg, s, rng);
        out.state.t = t0 + (k + 1) as f64 * cfg.dt;
        out.state.check_finite()?;
        if out.clamped {
            log.diagnostics.y_clamps += 1;
        }
        *s = out.state;
        log.sampler.offer(*s);
        if s.y <= unit {
            return Ok(DiffusionEnd::PredatorExtinct);
        }
    }
    if switch_below.is_some_and(|c| s.x * params.omega <= c) {
        return Ok(DiffusionEnd::BelowThreshold);
    }
    Ok(DiffusionEnd::Horizon)
}

fn check_inputs(params: &ModelParams, cfg: &DiffusionConfig, init: &State, stride: f64) -> Result<()> {
    params.validate()?;
    cfg.validate()?;
    if !(init.x >= 0.0 && init.y >= 0.0) {
        return Err(invalid("init", format!("state must be nonnegative, got ({}, {})", init.x, init.y)));
    }
    init.check_finite()?;
    if !(stride > 0.0) {
        return Err(invalid("sample_stride", "must be positive"));
    }
    Ok(())
}

fn finish(log: RunLog, last: State, extinct: bool) -> Trajectory {
    let termination = if extinct {
        Termination::PredatorExtinct
    } else if log.absorption.is_some() {
        Termination::PreyAbsorbed
    } else {
        Termination::RanToHorizon
    };
    Trajectory {
        samples: log.sampler.finish(last),
        termination,
        absorption: log.absorption,
        diagnostics: log.diagnostics,
    }
}

/// Integrates the diffusion from `init` for `horizon` time units.
pub fn simulate_diffusion(
    params: &ModelParams,
    cfg: &DiffusionConfig,
    init: State,
    horizon: f64,
    sample_stride: f64,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    check_inputs(params, cfg, &init, sample_stride)?;
    let mut log = RunLog {
        sampler: Sampler::new(init, sample_stride),
        diagnostics: Diagnostics::default(),
        absorption: None,
    };
    let mut s = init;
    if s.y <= params.unit() {
        return Ok(finish(log, s, true));
    }
    let end = run_diffusion_segment(params, cfg, &mut s, init.t + horizon, None, &mut log, rng)?;
    Ok(finish(log, s, matches!(end, DiffusionEnd::PredatorExtinct)))
}

/// Diffusion while the prey count exceeds the threshold, exact jumps below
/// it. Without a threshold this is [`simulate_diffusion`].
pub fn simulate_hybrid(
    params: &ModelParams,
    cfg: &DiffusionConfig,
    init: State,
    horizon: f64,
    sample_stride: f64,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    let Some(threshold) = cfg.hybrid_threshold else {
        return simulate_diffusion(params, cfg, init, horizon, sample_stride, rng);
    };
    check_inputs(params, cfg, &init, sample_stride)?;
    let t_end = init.t + horizon;
    let mut log = RunLog {
        sampler: Sampler::new(init, sample_stride),
        diagnostics: Diagnostics::default(),
        absorption: None,
    };
    let mut s = init;
    if s.y <= params.unit() {
        return Ok(finish(log, s, true));
    }
    let lower = threshold as f64;
    let upper = threshold.saturating_mul(2);
    let mut extinct = false;
    while s.t < t_end {
        if s.x * params.omega > lower {
            match run_diffusion_segment(params, cfg, &mut s, t_end, Some(lower), &mut log, rng)? {
                DiffusionEnd::Horizon => break,
                DiffusionEnd::PredatorExtinct => {
                    extinct = true;
                    break;
                }
                DiffusionEnd::BelowThreshold => {}
            }
        }
        if s.t >= t_end {
            break;
        }
        let mut js = JumpState::from_state(params, &s);
        log.diagnostics.mode_switches += 1;
        let end = jump::run_segment(params, &cfg.jump, &mut js, t_end, Some(upper), &mut log, rng)?;
        s = js.to_state(params);
        match end {
            SegmentEnd::Horizon => break,
            SegmentEnd::PredatorExtinct => {
                extinct = true;
                break;
            }
            SegmentEnd::ReachedUpper => log.diagnostics.mode_switches += 1,
        }
    }
    Ok(finish(log, s, extinct))
}

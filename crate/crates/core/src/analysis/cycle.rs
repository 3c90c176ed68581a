//! Limit-cycle detection by a Poincare section through the equilibrium.
//!
//! After a settling phase the trajectory is followed through successive
//! leftward crossings of the half-line `{x = x*, y > y*}` (the top of the
//! counter-clockwise orbit). When two consecutive crossing heights agree to
//! `tol`, one more revolution is recorded as the cycle.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, State};
use crate::ode::{step_log_euler, LogState};

/// Prey level separating large cycles (which run along the predator axis)
/// from small ones. Across the canard explosion the cycle minimum jumps from
/// below `1e-3` to above `0.2`; this level sits inside that jump.
pub const LARGE_CYCLE_THRESHOLD: f64 = 1e-2;

/// Coordinates the Euler scheme runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// `(x, y)`: the production scheme, identical to `ode::simulate_ode`.
    #[default]
    Linear,
    /// `(eps ln x, y)`: resolves exponentially small prey.
    Log,
}

/// Euler integrator in either chart, reporting `(t, x, y)` states.
#[derive(Debug, Clone)]
pub(crate) struct Stepper<'a> {
    params: &'a ModelParams,
    dt: f64,
    chart: Chart,
    t0: f64,
    steps: u64,
    lin: State,
    log: LogState,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(params: &'a ModelParams, chart: Chart, dt: f64, init: State) -> Result<Self> {
        let log = match chart {
            Chart::Log => LogState::from_state(params, &init)
                .ok_or_else(|| invalid("init", "log chart needs x > 0"))?,
            Chart::Linear => LogState {
                t: init.t,
                xi: 0.0,
                y: init.y,
            },
        };
        Ok(Stepper {
            params,
            dt,
            chart,
            t0: init.t,
            steps: 0,
            lin: init,
            log,
        })
    }

    /// Current state; `xi` is exact in the log chart and derived otherwise.
    pub(crate) fn xi(&self) -> f64 {
        match self.chart {
            Chart::Linear => self.params.eps * self.lin.x.ln(),
            Chart::Log => self.log.xi,
        }
    }

    pub(crate) fn state(&self) -> State {
        match self.chart {
            Chart::Linear => self.lin,
            Chart::Log => self.log.to_state(self.params),
        }
    }

    #[inline]
    pub(crate) fn step(&mut self) -> Result<State> {
        self.steps += 1;
        let t = self.t0 + self.steps as f64 * self.dt;
        match self.chart {
            Chart::Linear => {
                let (dx, dy) = crate::ode::euler_increment(self.params, &self.lin, self.dt);
                self.lin = State::new(t, self.lin.x + dx, self.lin.y + dy);
                self.lin.check_finite()?;
            }
            Chart::Log => {
                self.log = step_log_euler(self.params, &self.log, self.dt);
                self.log.t = t;
                if !(self.log.xi.is_finite() && self.log.y.is_finite()) {
                    return Err(Error::NonFinite {
                        t,
                        x: self.log.xi,
                        y: self.log.y,
                    });
                }
            }
        }
        Ok(self.state())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleSize {
    /// Reaches prey below [`LARGE_CYCLE_THRESHOLD`] along the predator axis.
    Large,
    Small,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// One revolution, from a section crossing to the next.
    pub points: Vec<State>,
    pub period: f64,
    pub min_x: f64,
    pub max_x: f64,
    pub size: CycleSize,
    /// Section crossings used before convergence.
    pub returns: usize,
    /// Last difference between consecutive crossing heights.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSearch {
    pub dt: f64,
    pub settle_time: f64,
    pub tol: f64,
    pub max_returns: usize,
    /// Give up when the section is not crossed for this long.
    pub max_gap: f64,
    /// Crossing heights closer than this to `y*` mean the orbit is
    /// collapsing onto the equilibrium.
    pub min_amplitude: f64,
    pub chart: Chart,
}

impl Default for CycleSearch {
    fn default() -> Self {
        CycleSearch {
            dt: 1e-4,
            settle_time: 200.0,
            tol: 1e-8,
            max_returns: 400,
            max_gap: 200.0,
            min_amplitude: 1e-6,
            chart: Chart::Linear,
        }
    }
}

/// Classification of a cycle by its smallest prey value.
pub fn classify(min_x: f64) -> CycleSize {
    if min_x < LARGE_CYCLE_THRESHOLD {
        CycleSize::Large
    } else {
        CycleSize::Small
    }
}

/// Integrates from `seed` and returns the attracting limit cycle.
pub fn find_limit_cycle(params: &ModelParams, seed: State, opts: &CycleSearch) -> Result<Cycle> {
    params.validate()?;
    let (xs, ys) = params
        .equilibrium()?
        .ok_or_else(|| Error::NoCycle("no coexistence equilibrium".into()))?;
    if !(opts.dt > 0.0 && opts.tol > 0.0) {
        return Err(invalid("dt", "step and tolerance must be positive"));
    }
    let mut st = Stepper::new(params, opts.chart, opts.dt, seed)?;
    let settle_steps = (opts.settle_time / opts.dt).round() as u64;
    for _ in 0..settle_steps {
        st.step()?;
    }

    let max_gap_steps = (opts.max_gap / opts.dt).ceil() as u64;
    // Advances to the next section crossing; returns (t, y) interpolated.
    let next_crossing = |st: &mut Stepper, record: Option<&mut Vec<State>>| -> Result<(f64, f64)> {
        let mut prev = st.state();
        let mut rec = record;
        for _ in 0..max_gap_steps {
            let cur = st.step()?;
            if let Some(r) = rec.as_deref_mut() {
                r.push(cur);
            }
            if prev.x > xs && cur.x <= xs && cur.y > ys {
                let w = (prev.x - xs) / (prev.x - cur.x);
                return Ok((prev.t + w * (cur.t - prev.t), prev.y + w * (cur.y - prev.y)));
            }
            prev = cur;
        }
        Err(Error::NoCycle(format!(
            "section x = {xs:.6} not crossed within {} time units",
            opts.max_gap
        )))
    };

    let (_, mut y_prev) = next_crossing(&mut st, None)?;
    for returns in 1..=opts.max_returns {
        let (t_c, y_c) = next_crossing(&mut st, None)?;
        if y_c - ys < opts.min_amplitude {
            return Err(Error::NoCycle(format!(
                "orbit collapses onto the equilibrium (crossing height {:.3e} above y*)",
                y_c - ys
            )));
        }
        let residual = (y_c - y_prev).abs();
        if residual < opts.tol {
            let mut points = vec![st.state()];
            let (t_end, _) = next_crossing(&mut st, Some(&mut points))?;
            let min_x = points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let max_x = points.iter().map(|p| p.x).fold(0.0, f64::max);
            return Ok(Cycle {
                points,
                period: t_end - t_c,
                min_x,
                max_x,
                size: classify(min_x),
                returns,
                residual,
            });
        }
        y_prev = y_c;
    }
    Err(Error::NoCycle(format!(
        "section returns did not converge to {:.1e} within {} revolutions",
        opts.tol, opts.max_returns
    )))
}

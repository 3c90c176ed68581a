//! Deterministic slow-fast system and its Euler scheme.
//!
//! ```text
//! dx/dt = (f(x) - mu(x) y) / eps
//! dy/dt = (mu(x) - m(t)) y
//! ```
//!
//! Euler is the production scheme: its recurrence is exactly the mean
//! dynamics of one diffusion step, so ODE and noiseless diffusion runs are
//! the same computation.
//!
//! Along the predator axis the prey falls to exponentially small values, so
//! the module also offers the log chart `xi = eps ln x`, an Euler scheme in
//! `(xi, y)`, and the closed-form minimum of the reduced log system valid
//! near the axis.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, State};
use crate::trajectory::{step_count, Diagnostics, Sampler, Termination, Trajectory};

/// Drift of one Euler step: `((dt/eps)(f - mu y), dt (mu - m(t)) y)`.
#[inline]
pub fn euler_increment(params: &ModelParams, s: &State, dt: f64) -> (f64, f64) {
    let mu = params.functional_response(s.x);
    let dx = dt / params.eps * (params.prey_growth(s.x) - mu * s.y);
    let dy = dt * (mu - params.mortality.at(s.t)) * s.y;
    (dx, dy)
}

pub fn step_euler(params: &ModelParams, s: &State, dt: f64) -> Result<State> {
    let (dx, dy) = euler_increment(params, s, dt);
    let next = State::new(s.t + dt, s.x + dx, s.y + dy);
    next.check_finite()?;
    Ok(next)
}

/// Euler trajectory from `init`. No absorbing barrier: the axes are
/// invariant and prey may shrink to any positive value.
pub fn simulate_ode(
    params: &ModelParams,
    init: State,
    horizon: f64,
    dt: f64,
    sample_stride: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be positive"));
    }
    if !(sample_stride > 0.0) {
        return Err(invalid("sample_stride", "must be positive"));
    }
    init.check_finite()?;
    let mut sampler = Sampler::new(init, sample_stride);
    let mut s = init;
    let n = step_count(horizon, dt);
    for k in 0..n {
        let (dx, dy) = euler_increment(params, &s, dt);
        s = State::new(init.t + (k + 1) as f64 * dt, (s.x + dx).max(0.0), (s.y + dy).max(0.0));
        s.check_finite()?;
        sampler.offer(s);
    }
    Ok(Trajectory {
        samples: sampler.finish(s),
        termination: Termination::RanToHorizon,
        absorption: None,
        diagnostics: Diagnostics::default(),
    })
}

/// A point in the log chart: `xi = eps ln x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogState {
    pub t: f64,
    pub xi: f64,
    pub y: f64,
}

impl LogState {
    pub fn from_state(params: &ModelParams, s: &State) -> Option<Self> {
        (s.x > 0.0).then(|| LogState {
            t: s.t,
            xi: params.eps * s.x.ln(),
            y: s.y,
        })
    }

    /// Prey concentration; underflows to 0 below about `xi = -14 eps`.
    pub fn x(&self, params: &ModelParams) -> f64 {
        (self.xi / params.eps).exp()
    }

    pub fn to_state(&self, params: &ModelParams) -> State {
        State::new(self.t, self.x(params), self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogChart {
    pub points: Vec<LogState>,
    /// Samples with `x = 0`, which have no log-chart image.
    pub dropped: usize,
}

pub fn to_log_chart(params: &ModelParams, traj: &Trajectory) -> LogChart {
    let points: Vec<LogState> = traj
        .samples
        .iter()
        .filter_map(|s| LogState::from_state(params, s))
        .collect();
    LogChart {
        dropped: traj.samples.len() - points.len(),
        points,
    }
}

/// Vector field in `(xi, y)`:
/// `dxi/dt = r (K - x) - y / (a + x)`, `dy/dt = (mu(x) - m) y`.
#[inline]
pub fn log_vector_field(params: &ModelParams, s: &LogState) -> (f64, f64) {
    let x = s.x(params);
    let dxi = params.r * (params.k - x) - s.y / (params.a + x);
    let dy = (params.functional_response(x) - params.mortality.at(s.t)) * s.y;
    (dxi, dy)
}

/// Euler step in the log chart.
#[inline]
pub fn step_log_euler(params: &ModelParams, s: &LogState, dt: f64) -> LogState {
    let (dxi, dy) = log_vector_field(params, s);
    LogState {
        t: s.t + dt,
        xi: s.xi + dt * dxi,
        y: s.y + dt * dy,
    }
}

/// Closed-form minimum of the reduced log system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedMinimum {
    pub t_star: f64,
    pub xi_star: f64,
    pub x_star: f64,
}

/// Near the predator axis (`x << 1`) the log system reduces to
/// `dxi/dt = r K - y / a`, `dy/dt = -m y`, which integrates to
/// `xi(t) = xi0 + r K t - (y0 / (a m))(1 - e^{-m t})`. The minimum sits where
/// `y(t*) = r K a`.
pub fn reduced_log_minimum(params: &ModelParams, xi0: f64, y0: f64) -> Result<ReducedMinimum> {
    let m = params.constant_m("reduced_log_minimum")?;
    if (xi0 / params.eps).exp() >= params.eps {
        return Err(Error::Domain(format!(
            "reduced log system needs x0 << eps; x0 = {:.3e} with eps = {}",
            (xi0 / params.eps).exp(),
            params.eps
        )));
    }
    if !(y0 >= 0.0) {
        return Err(invalid("y0", "must be nonnegative"));
    }
    let growth = params.r * params.k;
    let turning = growth * params.a;
    let (t_star, xi_star) = if y0 <= turning {
        (0.0, xi0)
    } else {
        let t = (y0 / turning).ln() / m;
        let xi = xi0 + growth * t - y0 / (params.a * m) * (-(-m * t).exp_m1());
        (t, xi)
    };
    Ok(ReducedMinimum {
        t_star,
        xi_star,
        x_star: (xi_star / params.eps).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MortalitySchedule;
    use approx::assert_relative_eq;

    fn defaults() -> ModelParams {
        ModelParams::default()
    }

    /// Classical RK4, used only to cross-check the Euler scheme.
    fn rk4(params: &ModelParams, init: State, horizon: f64, dt: f64) -> State {
        let f = |s: &State| params.vector_field(s);
        let mut s = init;
        let n = step_count(horizon, dt);
        for _ in 0..n {
            let k1 = f(&s);
            let s2 = State::new(s.t + dt / 2.0, s.x + dt / 2.0 * k1.0, s.y + dt / 2.0 * k1.1);
            let k2 = f(&s2);
            let s3 = State::new(s.t + dt / 2.0, s.x + dt / 2.0 * k2.0, s.y + dt / 2.0 * k2.1);
            let k3 = f(&s3);
            let s4 = State::new(s.t + dt, s.x + dt * k3.0, s.y + dt * k3.1);
            let k4 = f(&s4);
            s = State::new(
                s.t + dt,
                s.x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                s.y + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            );
        }
        s
    }

    #[test]
    fn euler_step_example() {
        let s = step_euler(&defaults(), &State::new(0.0, 2.0, 0.5), 1e-4).unwrap();
        assert_relative_eq!(s.x, 1.9979167, epsilon = 1e-7);
        assert_relative_eq!(s.y, 0.5000084, epsilon = 1e-7);
        assert_eq!(s.t, 1e-4);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let p = defaults();
        let (x, y) = p.equilibrium().unwrap().unwrap();
        let mut s = State::new(0.0, x, y);
        for _ in 0..100 {
            let next = step_euler(&p, &s, 1e-4).unwrap();
            assert!((next.x - s.x).abs() <= 10.0 * f64::EPSILON * x);
            assert!((next.y - s.y).abs() <= 10.0 * f64::EPSILON * y);
            s = next;
        }
    }

    #[test]
    fn axes_are_invariant() {
        let p = defaults();
        let mut s = State::new(0.0, 1.0, 0.0);
        for _ in 0..1000 {
            let next = step_euler(&p, &s, 1e-4).unwrap();
            assert!(next.x > s.x);
            assert_eq!(next.y, 0.0);
            s = next;
        }
        let traj = simulate_ode(&p, State::new(0.0, 0.0, 0.8), 3.0, 1e-4, 1.0).unwrap();
        for st in &traj.samples {
            assert_eq!(st.x, 0.0);
            // Euler decay of the axis solution y0 e^{-m t}.
            assert_relative_eq!(st.y, 0.8 * (-0.6645 * st.t).exp(), max_relative = 1e-3);
        }
    }

    #[test]
    fn euler_agrees_with_rk4_on_short_horizon() {
        let p = defaults().with_m(0.75);
        let init = State::new(0.0, 2.0, 0.5);
        let e = simulate_ode(&p, init, 5.0, 1e-5, 1.0).unwrap().final_state();
        let r = rk4(&p, init, 5.0, 1e-4);
        assert!((e.x - r.x).abs() < 1e-3 && (e.y - r.y).abs() < 1e-3, "{e:?} {r:?}");
    }

    #[test]
    fn stable_equilibrium_regime() {
        let p = defaults().with_m(0.75);
        let (xs, ys) = p.equilibrium().unwrap().unwrap();
        let traj = simulate_ode(&p, State::new(0.0, 2.0, 0.5), 200.0, 1e-4, 1.0).unwrap();
        let end = traj.final_state();
        assert!((end.x - xs).abs() < 1e-4 && (end.y - ys).abs() < 1e-4);
    }

    fn tail_min_x(traj: &Trajectory, from: f64) -> f64 {
        traj.samples
            .iter()
            .filter(|s| s.t >= from)
            .map(|s| s.x)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn large_cycle_regime() {
        let p = defaults().with_m(0.6);
        let traj = simulate_ode(&p, State::new(0.0, 2.0, 0.5), 200.0, 1e-4, 1e-3).unwrap();
        assert!(tail_min_x(&traj, 100.0) < 1e-6);
        let max_x = traj.samples.iter().filter(|s| s.t >= 100.0).map(|s| s.x).fold(0.0, f64::max);
        assert!(max_x > 1.0);
    }

    #[test]
    fn small_cycle_regime() {
        let p = defaults();
        let (xs, ys) = p.equilibrium().unwrap().unwrap();
        let traj = simulate_ode(&p, State::new(0.0, xs + 1e-3, ys), 300.0, 1e-4, 1e-3).unwrap();
        let tail: Vec<_> = traj.samples.iter().filter(|s| s.t >= 200.0).collect();
        let min_x = tail.iter().map(|s| s.x).fold(f64::INFINITY, f64::min);
        let max_x = tail.iter().map(|s| s.x).fold(0.0, f64::max);
        assert!(min_x > 1e-3, "min_x = {min_x}");
        // Oscillates around the unstable equilibrium rather than settling on it.
        assert!(max_x - min_x > 1e-3);
    }

    #[test]
    fn counter_clockwise_rotation() {
        // Cross product of (state - eq) with velocity is positive.
        let p = defaults().with_m(0.6);
        let (xs, ys) = p.equilibrium().unwrap().unwrap();
        let traj = simulate_ode(&p, State::new(0.0, 2.0, 0.5), 60.0, 1e-4, 1e-2).unwrap();
        let mut area = 0.0;
        for w in traj.samples.windows(2).filter(|w| w[0].t > 30.0) {
            area += (w[0].x - xs) * (w[1].y - ys) - (w[1].x - xs) * (w[0].y - ys);
        }
        assert!(area > 0.0);
    }

    #[test]
    fn log_chart_values() {
        let p = defaults();
        let traj = Trajectory {
            samples: vec![
                State::new(0.0, 1.0, 0.5),
                State::new(1.0, 1e-9, 0.5),
                State::new(2.0, 1e-6, 0.5),
                State::new(3.0, 0.0, 0.5),
            ],
            termination: Termination::RanToHorizon,
            absorption: None,
            diagnostics: Diagnostics::default(),
        };
        let chart = to_log_chart(&p, &traj);
        assert_eq!(chart.dropped, 1);
        assert_eq!(chart.points[0].xi, 0.0);
        assert_relative_eq!(chart.points[1].xi, -0.414465, epsilon = 1e-6);
        assert_relative_eq!(chart.points[2].xi, -0.276310, epsilon = 1e-6);
        assert_relative_eq!(chart.points[2].x(&p), 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn log_euler_tracks_linear_euler() {
        let p = defaults().with_m(0.6);
        let init = State::new(0.0, 2.0, 0.5);
        let lin = simulate_ode(&p, init, 2.0, 1e-5, 1.0).unwrap().final_state();
        let mut ls = LogState::from_state(&p, &init).unwrap();
        for _ in 0..200_000 {
            ls = step_log_euler(&p, &ls, 1e-5);
        }
        let lg = ls.to_state(&p);
        assert!((lin.x - lg.x).abs() < 1e-3 && (lin.y - lg.y).abs() < 1e-3);
    }

    #[test]
    fn reduced_minimum_example() {
        let r = reduced_log_minimum(&defaults(), -0.1, 0.9).unwrap();
        assert_relative_eq!(r.t_star, (2.25f64).ln() / 0.6645, max_relative = 1e-12);
        assert_relative_eq!(r.t_star, 1.2204, epsilon = 1e-4);
        assert_relative_eq!(r.xi_star, -0.7608, epsilon = 1e-4);
        assert!(r.x_star > 1e-17 && r.x_star < 1e-16, "{}", r.x_star);
    }

    #[test]
    fn reduced_minimum_matches_quadrature() {
        // Integrate the reduced system directly with tiny steps.
        let m = 0.6645;
        let (mut xi, mut y, mut t) = (-0.1f64, 0.9f64, 0.0f64);
        let dt = 1e-6;
        let mut best = (xi, t);
        while t < 3.0 {
            // midpoint rule, y known exactly
            let ym = 0.9 * (-m * (t + dt / 2.0)).exp();
            xi += dt * (1.0 - 2.5 * ym);
            t += dt;
            y = 0.9 * (-m * t).exp();
            if xi < best.0 {
                best = (xi, t);
            }
        }
        let _ = y;
        let r = reduced_log_minimum(&defaults(), -0.1, 0.9).unwrap();
        assert_relative_eq!(r.xi_star, best.0, epsilon = 1e-9);
        assert_relative_eq!(r.t_star, best.1, epsilon = 1e-5);
    }

    #[test]
    fn reduced_minimum_edges() {
        let p = defaults();
        let r = reduced_log_minimum(&p, -0.2, 0.4).unwrap();
        assert_eq!(r.t_star, 0.0);
        assert_eq!(r.xi_star, -0.2);
        let lo = reduced_log_minimum(&p, -0.1, 0.9).unwrap();
        let hi = reduced_log_minimum(&p, -0.1, 1.2).unwrap();
        assert!(hi.xi_star < lo.xi_star);
        // x0 = e^{-1} is not small against eps.
        assert!(reduced_log_minimum(&p, -0.02, 0.9).is_err());
        let seasonal = p.with_mortality(MortalitySchedule::seasonal(0.6645, 0.047, 0.1));
        assert!(reduced_log_minimum(&seasonal, -0.1, 0.9).is_err());
    }
}

//! Safety trajectories and the width of the safety funnel.
//!
//! A trajectory started far to the right at `(2, y0)` first dips towards the
//! predator axis and then climbs back along the right branch of the prey
//! nullcline, next to the limit cycle. The safety trajectory is the one whose
//! first dip bottoms out exactly at a prescribed prey level; the funnel is the
//! channel between it and the cycle on the right of `x = x*`.

use serde::{Deserialize, Serialize};

use super::cycle::{find_limit_cycle, Chart, CycleSearch, Stepper};
use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, State};

/// Abscissa used as "far to the right" for safety trajectories.
pub const SAFETY_START_X: f64 = 2.0;
/// Number of individuals defining the default safety level.
pub const SAFETY_INDIVIDUALS: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PreyMinimum {
    Reached { t: f64, x: f64, xi: f64 },
    /// The log prey coordinate fell under the configured floor at time `t`.
    BelowFloor { t: f64 },
}

impl PreyMinimum {
    /// `xi` of the minimum, or `-inf` below the floor. Orders minima even
    /// when `x` itself underflows.
    pub fn xi(&self) -> f64 {
        match *self {
            PreyMinimum::Reached { xi, .. } => xi,
            PreyMinimum::BelowFloor { .. } => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinPreySearch {
    pub dt: f64,
    pub horizon: f64,
    /// Lower bound on `xi = eps ln x`; `-3` is `x = e^-150` at `eps = 0.02`.
    pub xi_floor: f64,
}

impl Default for MinPreySearch {
    fn default() -> Self {
        MinPreySearch {
            dt: 1e-4,
            horizon: 100.0,
            xi_floor: -3.0,
        }
    }
}

/// First local minimum of prey along the deterministic trajectory from `init`,
/// integrated in the log chart.
pub fn min_prey_of_trajectory(
    params: &ModelParams,
    init: State,
    opts: &MinPreySearch,
) -> Result<PreyMinimum> {
    params.validate()?;
    if !(init.x > 0.0 && init.y >= 0.0) {
        return Err(invalid("init", "needs x > 0 and y >= 0"));
    }
    if !(opts.dt > 0.0 && opts.horizon >= 0.0) {
        return Err(invalid("dt", "step must be positive and horizon nonnegative"));
    }
    let mut st = Stepper::new(params, Chart::Log, opts.dt, init)?;
    let mut best = (init.t, st.xi());
    let steps = (opts.horizon / opts.dt).ceil() as u64;
    for _ in 0..steps {
        st.step()?;
        let xi = st.xi();
        if xi < opts.xi_floor {
            return Ok(PreyMinimum::BelowFloor { t: st.state().t });
        }
        if xi >= best.1 {
            return Ok(reached(params, best));
        }
        best = (st.state().t, xi);
    }
    Err(Error::NoMinimum {
        horizon: opts.horizon,
    })
}

fn reached(params: &ModelParams, (t, xi): (f64, f64)) -> PreyMinimum {
    PreyMinimum::Reached {
        t,
        x: (xi / params.eps).exp(),
        xi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetySearch {
    pub min_prey: MinPreySearch,
    pub rel_tol: f64,
    pub min_width: f64,
    pub max_iter: usize,
}

impl Default for SafetySearch {
    fn default() -> Self {
        SafetySearch {
            min_prey: MinPreySearch::default(),
            rel_tol: 1e-3,
            min_width: 1e-12,
            max_iter: 200,
        }
    }
}

/// Result of the safety-trajectory dichotomy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyTrajectory {
    pub y0: f64,
    pub minimum: PreyMinimum,
    pub iterations: usize,
}

/// Bisects on `y0` for the trajectory from `(2, y0)` whose first prey minimum
/// equals `alpha`. `bracket = (lo, hi)` must have the minimum above `alpha` at
/// `lo` and below it at `hi`.
pub fn find_safety_trajectory(
    params: &ModelParams,
    alpha: f64,
    bracket: (f64, f64),
    opts: &SafetySearch,
) -> Result<SafetyTrajectory> {
    let (xs, _) = params
        .equilibrium()?
        .ok_or_else(|| Error::Domain("no coexistence equilibrium".into()))?;
    if !(alpha > 0.0 && alpha < xs) {
        return Err(Error::Domain(format!(
            "safety level {alpha:e} must lie in (0, x* = {xs:.6})"
        )));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo < hi && lo >= 0.0) {
        return Err(Error::BracketInvalid {
            lo,
            hi,
            reason: "need 0 <= lo < hi".into(),
        });
    }
    let target = params.eps * alpha.ln();
    let run = |y0: f64| min_prey_of_trajectory(params, State::new(0.0, SAFETY_START_X, y0), &opts.min_prey);
    let m_lo = run(lo)?;
    let m_hi = run(hi)?;
    if !(m_lo.xi() > target && m_hi.xi() < target) {
        return Err(Error::BracketInvalid {
            lo,
            hi,
            reason: format!(
                "prey minima {:.3e} and {:.3e} do not straddle {alpha:e}",
                min_value(params, &m_lo),
                min_value(params, &m_hi)
            ),
        });
    }
    let mut best = if target - m_hi.xi() < m_lo.xi() - target {
        (hi, m_hi)
    } else {
        (lo, m_lo)
    };
    for it in 1..=opts.max_iter {
        let mid = 0.5 * (lo + hi);
        let m = run(mid)?;
        // |x/alpha - 1| computed from the log gap, which stays finite below underflow.
        let rel = ((m.xi() - target) / params.eps).exp_m1().abs();
        if rel < relative_gap(params, &best.1, target) {
            best = (mid, m);
        }
        if rel < opts.rel_tol || hi - lo < opts.min_width {
            return Ok(SafetyTrajectory {
                y0: best.0,
                minimum: best.1,
                iterations: it,
            });
        }
        if m.xi() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SafetyTrajectory {
        y0: best.0,
        minimum: best.1,
        iterations: opts.max_iter,
    })
}

fn min_value(params: &ModelParams, m: &PreyMinimum) -> f64 {
    (m.xi() / params.eps).exp()
}

fn relative_gap(params: &ModelParams, m: &PreyMinimum, target: f64) -> f64 {
    ((m.xi() - target) / params.eps).exp_m1().abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub omega: f64,
    pub alpha: f64,
    pub y0_star: f64,
    pub rho: f64,
    pub sigma_x_local: f64,
    pub sigma_y_local: f64,
    /// Safety-trajectory point closest to the limit cycle.
    pub closest_x: f64,
    pub closest_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunnelSearch {
    pub safety: SafetySearch,
    pub bracket: (f64, f64),
    pub cycle: CycleSearch,
    /// Step used for the local noise amplitudes.
    pub noise_dt: f64,
}

impl Default for FunnelSearch {
    fn default() -> Self {
        FunnelSearch {
            safety: SafetySearch::default(),
            bracket: (0.05, 1.5),
            cycle: CycleSearch {
                chart: Chart::Log,
                ..CycleSearch::default()
            },
            noise_dt: 1e-4,
        }
    }
}

/// Safety level for a population scale: 1000 individuals.
pub fn default_alpha(omega: f64) -> f64 {
    SAFETY_INDIVIDUALS / omega
}

/// Width of the safety funnel at the safety level `1000 / omega`.
pub fn funnel_width(params: &ModelParams, omega: f64, opts: &FunnelSearch) -> Result<FunnelReport> {
    let params = (*params).with_omega(omega);
    params.validate()?;
    let alpha = default_alpha(omega);
    let (xs, ys) = params
        .equilibrium()?
        .ok_or_else(|| Error::Domain("no coexistence equilibrium".into()))?;
    let safety = find_safety_trajectory(&params, alpha, opts.bracket, &opts.safety)?;
    let cycle = find_limit_cycle(&params, State::new(0.0, xs + 1e-3, ys), &opts.cycle)?;

    let cycle_arc: Vec<State> = cycle.points.iter().copied().filter(|p| p.x >= xs).collect();
    let safety_arc = climbing_arc(&params, safety.y0, xs, &opts.safety.min_prey)?;
    let (rho, at) = closest_approach(&safety_arc, &cycle_arc)
        .ok_or_else(|| Error::Domain("funnel arcs are empty".into()))?;
    let (sx, sy) = params.noise_amplitudes(&at, opts.noise_dt);
    Ok(FunnelReport {
        omega,
        alpha,
        y0_star: safety.y0,
        rho,
        sigma_x_local: sx,
        sigma_y_local: sy,
        closest_x: at.x,
        closest_y: at.y,
    })
}

/// Part of the trajectory from `(2, y0)` lying on the right of `x*` before
/// its first prey minimum: the climb along the attracting branch next to the
/// cycle, ahead of the dip.
fn climbing_arc(params: &ModelParams, y0: f64, xs: f64, opts: &MinPreySearch) -> Result<Vec<State>> {
    let mut st = Stepper::new(params, Chart::Log, opts.dt, State::new(0.0, SAFETY_START_X, y0))?;
    let steps = (opts.horizon / opts.dt).ceil() as u64;
    let mut prev_xi = st.xi();
    let mut arc = vec![st.state()];
    for _ in 0..steps {
        let s = st.step()?;
        let xi = st.xi();
        if xi >= prev_xi || s.x < xs {
            return Ok(arc);
        }
        prev_xi = xi;
        arc.push(s);
    }
    Err(Error::NoMinimum {
        horizon: opts.horizon,
    })
}

/// Smallest distance from the points of `a` to the polyline `b`, with the
/// point of `a` where it is attained. `b` must be ordered by increasing `y`,
/// as climbing arcs are.
fn closest_approach(a: &[State], b: &[State]) -> Option<(f64, State)> {
    if b.len() < 2 {
        let q = b.first()?;
        return a
            .iter()
            .map(|p| ((p.x - q.x).hypot(p.y - q.y), *p))
            .min_by(|u, v| u.0.total_cmp(&v.0));
    }
    let mut best: Option<(f64, State)> = None;
    for p in a {
        let start = b.partition_point(|q| q.y < p.y).min(b.len() - 1);
        let mut local = f64::INFINITY;
        // Walk outwards in both directions until the y gap alone exceeds the best distance.
        for i in (0..start.max(1)).rev() {
            if p.y - b[i + 1].y > local {
                break;
            }
            local = local.min(segment_distance(p, &b[i], &b[i + 1]));
        }
        for i in start.saturating_sub(1)..b.len() - 1 {
            if b[i].y - p.y > local {
                break;
            }
            local = local.min(segment_distance(p, &b[i], &b[i + 1]));
        }
        if best.is_none_or(|(d, _)| local < d) {
            best = Some((local, *p));
        }
    }
    best
}

fn segment_distance(p: &State, a: &State, b: &State) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len2 = vx * vx + vy * vy;
    let s = if len2 > 0.0 {
        (((p.x - a.x) * vx + (p.y - a.y) * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.x - a.x - s * vx).hypot(p.y - a.y - s * vy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn equilibrium_start_is_its_own_minimum() {
        let p = defaults();
        let (xs, ys) = p.equilibrium().unwrap().unwrap();
        let m = min_prey_of_trajectory(&p, State::new(0.0, xs, ys), &MinPreySearch::default()).unwrap();
        match m {
            PreyMinimum::Reached { x, t, .. } => {
                assert!((x - xs).abs() < 1e-9 * xs, "{x} vs {xs}");
                assert!(t < 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deep_dip_at_low_mortality() {
        let m = min_prey_of_trajectory(&defaults().with_m(0.6), State::new(0.0, 2.0, 0.95), &MinPreySearch::default())
            .unwrap();
        let x = min_value(&defaults(), &m);
        assert!(x > 1e-20 && x < 1e-14, "{x:e}");
    }

    #[test]
    fn low_start_stays_clear_of_the_axis() {
        let m = min_prey_of_trajectory(&defaults(), State::new(0.0, 2.0, 0.3), &MinPreySearch::default()).unwrap();
        assert!(min_value(&defaults(), &m) > 1e-6);
    }

    #[test]
    fn floor_is_reported() {
        let opts = MinPreySearch {
            xi_floor: -0.2,
            ..Default::default()
        };
        let m = min_prey_of_trajectory(&defaults().with_m(0.6), State::new(0.0, 2.0, 0.95), &opts).unwrap();
        assert!(matches!(m, PreyMinimum::BelowFloor { .. }), "{m:?}");
    }

    #[test]
    fn rejects_empty_prey() {
        let r = min_prey_of_trajectory(&defaults(), State::new(0.0, 0.0, 0.5), &MinPreySearch::default());
        assert!(matches!(r, Err(Error::InvalidParam { .. })));
    }

    #[test]
    fn safety_trajectory_hits_its_level() {
        let p = defaults();
        let s = find_safety_trajectory(&p, 1e-3, (0.05, 1.5), &SafetySearch::default()).unwrap();
        assert!(s.y0 > 0.0 && s.y0 < 0.72, "{}", s.y0);
        // Re-simulate independently of the search's bookkeeping.
        let again = min_prey_of_trajectory(&p, State::new(0.0, 2.0, s.y0), &MinPreySearch::default()).unwrap();
        let x = min_value(&p, &again);
        assert!((x / 1e-3 - 1.0).abs() < 1e-3, "{x:e}");
    }

    #[test]
    fn deeper_levels_need_higher_starts() {
        let p = defaults();
        let opts = SafetySearch::default();
        let shallow = find_safety_trajectory(&p, 2e-3, (0.05, 1.5), &opts).unwrap();
        let deep = find_safety_trajectory(&p, 1e-3, (0.05, 1.5), &opts).unwrap();
        assert!(shallow.y0 < deep.y0, "{} {}", shallow.y0, deep.y0);
    }

    #[test]
    fn level_above_equilibrium_is_rejected() {
        let r = find_safety_trajectory(&defaults(), 0.9, (0.05, 1.5), &SafetySearch::default());
        assert!(matches!(r, Err(Error::Domain(_))), "{r:?}");
    }

    #[test]
    fn bracket_must_straddle() {
        let r = find_safety_trajectory(&defaults(), 1e-3, (0.05, 0.1), &SafetySearch::default());
        assert!(matches!(r, Err(Error::BracketInvalid { .. })), "{r:?}");
    }

    #[test]
    fn funnel_at_a_million() {
        let r = funnel_width(&defaults(), 1e6, &FunnelSearch::default()).unwrap();
        assert_eq!(r.alpha, 1e-3);
        assert!(r.rho > 0.0 && r.rho < 1e-3, "{}", r.rho);
        let (xs, _) = defaults().equilibrium().unwrap().unwrap();
        assert!(r.closest_x >= xs);
        // Shared noise factor: sigma_x = (2 / eps) sigma_y.
        assert!((r.sigma_x_local / r.sigma_y_local - 100.0).abs() < 1e-9);
    }

    #[test]
    fn funnel_needs_a_level_below_equilibrium() {
        let r = funnel_width(&defaults(), 1e3, &FunnelSearch::default());
        assert!(matches!(r, Err(Error::Domain(_))), "{r:?}");
    }

    #[test]
    fn segment_distance_cases() {
        let a = State::new(0.0, 0.0, 0.0);
        let b = State::new(0.0, 1.0, 0.0);
        assert_eq!(segment_distance(&State::new(0.0, 0.5, 2.0), &a, &b), 2.0);
        assert_eq!(segment_distance(&State::new(0.0, 4.0, 4.0), &a, &b), 5.0);
        assert_eq!(segment_distance(&State::new(0.0, 3.0, 4.0), &a, &a), 5.0);
    }

    #[test]
    fn closest_approach_matches_brute_force() {
        let b: Vec<State> = (0..200)
            .map(|i| {
                let y = i as f64 * 0.01;
                State::new(0.0, 1.0 + 0.3 * (3.0 * y).sin(), y)
            })
            .collect();
        let a: Vec<State> = (0..150)
            .map(|i| {
                let y = 0.3 + i as f64 * 0.011;
                State::new(0.0, 1.05 + 0.3 * (3.0 * y).sin() + 0.02 * y, y)
            })
            .collect();
        let brute = a
            .iter()
            .flat_map(|p| b.windows(2).map(move |w| segment_distance(p, &w[0], &w[1])))
            .fold(f64::INFINITY, f64::min);
        let (d, _) = closest_approach(&a, &b).unwrap();
        assert!((d - brute).abs() < 1e-15, "{d} vs {brute}");
    }
}

//! Exact event-by-event simulation of the prey birth/capture process.
//!
//! The prey is an integer count `n = omega x`. Events arrive at rate
//! `lambda = (omega / eps)(f(x) + mu(x) y)`; each is a birth with probability
//! `f / (f + mu y)` and a capture otherwise. The predator stays continuous:
//! it decays as `exp(-int m)` between events and gains `eps / omega` per
//! capture.

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::rng::RngStream;
use crate::trajectory::{Diagnostics, Sampler, Termination, Trajectory};

/// Default cap on the number of events in one run.
pub const DEFAULT_EVENT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpConfig {
    pub event_budget: u64,
}

impl Default for JumpConfig {
    fn default() -> Self {
        JumpConfig {
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }
}

/// Jump-process state: prey as an individual count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpState {
    pub t: f64,
    pub n: u64,
    pub y: f64,
}

impl JumpState {
    /// Rounds `omega x` to the nearest count.
    pub fn from_state(params: &ModelParams, s: &State) -> Self {
        JumpState {
            t: s.t,
            n: (s.x * params.omega).round().max(0.0) as u64,
            y: s.y,
        }
    }

    #[inline]
    pub fn x(&self, params: &ModelParams) -> f64 {
        self.n as f64 / params.omega
    }

    pub fn to_state(&self, params: &ModelParams) -> State {
        State::new(self.t, self.x(params), self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpEvent {
    Birth,
    Capture,
}

/// Inverse-CDF draw of an exponential waiting time from `u` in (0, 1].
#[inline]
pub fn waiting_time(rate: f64, u: f64) -> f64 {
    -u.ln() / rate
}

/// One event of the process.
pub fn step_jump(
    params: &ModelParams,
    s: JumpState,
    rng: &mut RngStream,
) -> Result<(JumpState, JumpEvent)> {
    if s.n == 0 {
        return Err(Error::PreyAbsorbed { t: s.t });
    }
    let x = s.x(params);
    let birth = params.birth_rate(x);
    let mu = params.functional_response(x);
    let lambda = params.omega / params.eps * (birth + mu * s.y);
    if !(lambda > 0.0) {
        return Err(Error::DegenerateRates { x, y: s.y });
    }
    let tau = waiting_time(lambda, rng.uniform());
    let t = s.t + tau;
    let y = s.y * (-params.mortality.integral(s.t, t)).exp();
    Ok(apply_event(params, s.n, t, y, birth, mu, rng))
}

/// Event at time `t`, with `y` the predator already decayed up to `t`.
#[inline]
fn apply_event(
    params: &ModelParams,
    n: u64,
    t: f64,
    y: f64,
    birth: f64,
    mu: f64,
    rng: &mut RngStream,
) -> (JumpState, JumpEvent) {
    // Birth with probability birth / (birth + mu y), tested without dividing.
    let u = rng.uniform();
    if birth > 0.0 && u * (birth + mu * y) <= birth {
        (JumpState { t, n: n + 1, y }, JumpEvent::Birth)
    } else {
        let y = y + params.eps / params.omega;
        (JumpState { t, n: n - 1, y }, JumpEvent::Capture)
    }
}

/// How a jump segment ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SegmentEnd {
    Horizon,
    PredatorExtinct,
    /// Prey count reached the requested upper bound.
    ReachedUpper,
}

/// Mutable bookkeeping shared by a run's segments.
pub(crate) struct RunLog {
    pub sampler: Sampler,
    pub diagnostics: Diagnostics,
    pub absorption: Option<State>,
}

/// Runs the process from `s` until `t_end`, predator extinction, or (if
/// given) the prey count reaching `upper`. `s` is left at the end state.
pub(crate) fn run_segment(
    params: &ModelParams,
    cfg: &JumpConfig,
    s: &mut JumpState,
    t_end: f64,
    upper: Option<u64>,
    log: &mut RunLog,
    rng: &mut RngStream,
) -> Result<SegmentEnd> {
    let unit = params.unit();
    let m = params.mortality;
    let rate_scale = params.omega / params.eps;
    loop {
        if s.y <= unit {
            return Ok(SegmentEnd::PredatorExtinct);
        }
        if s.n == 0 {
            return Ok(decay_tail(params, s, t_end, log));
        }
        if upper.is_some_and(|u| s.n >= u) {
            return Ok(SegmentEnd::ReachedUpper);
        }
        let x = s.x(params);
        let birth = params.birth_rate(x);
        let mu = params.functional_response(x);
        let lambda = rate_scale * (birth + mu * s.y);
        let start = *s;
        let decayed = |g: f64| State::new(g, x, start.y * (-m.integral(start.t, g)).exp());

        let tau = if lambda > 0.0 {
            waiting_time(lambda, rng.uniform())
        } else {
            f64::INFINITY
        };
        let t_next = s.t + tau;
        if t_next > t_end {
            let last = decayed(t_end);
            if last.y <= unit {
                return Ok(extinct_between(params, s, x, t_end, log));
            }
            log.sampler.fill_until(t_end, decayed);
            *s = JumpState {
                t: t_end,
                n: s.n,
                y: last.y,
            };
            return Ok(SegmentEnd::Horizon);
        }
        let y_next = start.y * (-m.integral(start.t, t_next)).exp();
        if y_next <= unit {
            return Ok(extinct_between(params, s, x, t_next, log));
        }
        log.sampler.fill_until(t_next, decayed);
        let (next, event) = apply_event(params, start.n, t_next, y_next, birth, mu, rng);
        *s = next;
        log.diagnostics.events += 1;
        if event == JumpEvent::Capture {
            log.diagnostics.captures += 1;
        }
        if log.diagnostics.events > cfg.event_budget {
            return Err(Error::EventBudget {
                expected: log.diagnostics.events as f64,
                budget: cfg.event_budget as f64,
            });
        }
    }
}

/// The predator decays through `1/omega` before `t_limit` with no event in
/// between; `s` is moved to the crossing time.
fn extinct_between(
    params: &ModelParams,
    s: &mut JumpState,
    x: f64,
    t_limit: f64,
    log: &mut RunLog,
) -> SegmentEnd {
    let m = params.mortality;
    let start = *s;
    let te = m
        .time_to_accumulate(start.t, (params.omega * start.y).ln())
        .min(t_limit);
    log.sampler.fill_until(te, |g| {
        State::new(g, x, start.y * (-m.integral(start.t, g)).exp())
    });
    *s = JumpState {
        t: te,
        n: start.n,
        y: params.unit(),
    };
    SegmentEnd::PredatorExtinct
}

/// Closed-form predator decay once the prey is gone.
fn decay_tail(params: &ModelParams, s: &mut JumpState, t_end: f64, log: &mut RunLog) -> SegmentEnd {
    if log.absorption.is_none() {
        log.absorption = Some(s.to_state(params));
    }
    let m = params.mortality;
    let start = *s;
    let te = m.time_to_accumulate(start.t, (params.omega * start.y).ln());
    let until = te.min(t_end);
    log.sampler.fill_until(until, |g| {
        State::new(g, 0.0, start.y * (-m.integral(start.t, g)).exp())
    });
    if te <= t_end {
        *s = JumpState {
            t: te,
            n: 0,
            y: params.unit(),
        };
        SegmentEnd::PredatorExtinct
    } else {
        *s = JumpState {
            t: t_end,
            n: 0,
            y: start.y * (-m.integral(start.t, t_end)).exp(),
        };
        SegmentEnd::Horizon
    }
}

/// Simulates the birth/capture process from `init` (prey rounded to whole
/// individuals) up to `horizon`, sampling every `sample_stride`.
pub fn simulate_jump(
    params: &ModelParams,
    cfg: &JumpConfig,
    init: State,
    horizon: f64,
    sample_stride: f64,
    rng: &mut RngStream,
) -> Result<Trajectory> {
    params.validate()?;
    if !(sample_stride > 0.0) {
        return Err(crate::error::invalid("sample_stride", "must be positive"));
    }
    let mut s = JumpState::from_state(params, &init);
    let start = s.to_state(params);
    let t_end = init.t + horizon.max(0.0);
    let expected = params.total_event_rate(&start) * horizon.max(0.0);
    if expected > cfg.event_budget as f64 {
        return Err(Error::EventBudget {
            expected,
            budget: cfg.event_budget as f64,
        });
    }
    let mut log = RunLog {
        sampler: Sampler::new(start, sample_stride),
        diagnostics: Diagnostics::default(),
        absorption: None,
    };
    let end = if horizon > 0.0 {
        run_segment(params, cfg, &mut s, t_end, None, &mut log, rng)?
    } else {
        SegmentEnd::Horizon
    };
    let termination = match end {
        SegmentEnd::PredatorExtinct => Termination::PredatorExtinct,
        _ if log.absorption.is_some() => Termination::PreyAbsorbed,
        _ => Termination::RanToHorizon,
    };
    Ok(Trajectory {
        samples: log.sampler.finish(s.to_state(params)),
        termination,
        absorption: log.absorption,
        diagnostics: log.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MortalitySchedule;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn defaults() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn waiting_time_inverse_cdf() {
        let lambda = 5e7 * 6.0 / 7.0;
        assert_relative_eq!(lambda, 4.2857e7, max_relative = 1e-4);
        let tau = waiting_time(lambda, 0.5);
        assert_relative_eq!(tau, 2f64.ln() / lambda, max_relative = 1e-15);
        assert_relative_eq!(tau, 1.6173e-8, max_relative = 1e-4);
    }

    #[test]
    fn no_predator_means_birth() {
        let p = defaults();
        let s = JumpState {
            t: 0.0,
            n: 1_000_000,
            y: 0.0,
        };
        let mut rng = RngStream::new(1);
        for _ in 0..100 {
            let (next, ev) = step_jump(&p, s, &mut rng).unwrap();
            assert_eq!(ev, JumpEvent::Birth);
            assert_eq!(next.n, s.n + 1);
            assert_eq!(next.y, 0.0);
        }
    }

    #[test]
    fn capture_adds_eps_over_omega() {
        let p = defaults();
        // At x = K the birth channel is closed.
        let s = JumpState {
            t: 0.0,
            n: 2_000_000,
            y: 0.5,
        };
        let mut rng = RngStream::new(2);
        let (next, ev) = step_jump(&p, s, &mut rng).unwrap();
        assert_eq!(ev, JumpEvent::Capture);
        assert_eq!(next.n, s.n - 1);
        let decayed = 0.5 * (-0.6645 * next.t).exp();
        assert_relative_eq!(next.y - decayed, 2e-8, max_relative = 1e-6);
    }

    #[test]
    fn absorbed_state_is_contract_error() {
        let s = JumpState { t: 3.0, n: 0, y: 0.5 };
        let r = step_jump(&defaults(), s, &mut RngStream::new(0));
        assert_eq!(r.unwrap_err(), Error::PreyAbsorbed { t: 3.0 });
    }

    #[test]
    fn decay_tail_time() {
        let p = defaults();
        let traj = simulate_jump(
            &p,
            &JumpConfig::default(),
            State::new(0.0, 0.0, 0.5),
            100.0,
            1.0,
            &mut RngStream::new(0),
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::PredatorExtinct);
        let t = traj.extinction_time().unwrap();
        assert_relative_eq!(t, (0.5e6f64).ln() / 0.6645, max_relative = 1e-12);
        assert_relative_eq!(t, 19.747, epsilon = 1e-3);
        assert!(traj.absorption.is_some());
        // Samples follow the closed-form decay.
        for s in &traj.samples {
            assert_relative_eq!(s.y, 0.5 * (-0.6645 * s.t).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn absorbed_but_alive_at_horizon() {
        let traj = simulate_jump(
            &defaults(),
            &JumpConfig::default(),
            State::new(0.0, 0.0, 0.5),
            5.0,
            1.0,
            &mut RngStream::new(0),
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::PreyAbsorbed);
        assert_eq!(traj.final_state().t, 5.0);
    }

    #[test]
    fn zero_horizon() {
        let init = State::new(0.0, 0.2, 0.6);
        let traj = simulate_jump(
            &defaults().with_omega(1e4),
            &JumpConfig::default(),
            init,
            0.0,
            1.0,
            &mut RngStream::new(0),
        )
        .unwrap();
        assert_eq!(traj.samples, vec![init]);
        assert_eq!(traj.termination, Termination::RanToHorizon);
    }

    #[test]
    fn budget_guard() {
        let cfg = JumpConfig { event_budget: 1000 };
        let r = simulate_jump(
            &defaults(),
            &cfg,
            State::new(0.0, 1.0, 0.5),
            10.0,
            1.0,
            &mut RngStream::new(0),
        );
        assert!(matches!(r, Err(Error::EventBudget { .. })));
    }

    fn run(seed: u64) -> Trajectory {
        simulate_jump(
            &defaults().with_omega(1e3),
            &JumpConfig::default(),
            State::new(0.0, 0.2, 0.6),
            5.0,
            0.1,
            &mut RngStream::new(seed),
        )
        .unwrap()
    }

    #[test]
    fn same_seed_bit_identical() {
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn predator_mass_balance() {
        // With no event left out, y_end = y0 e^{-m T} + (eps/omega) sum of
        // capture contributions, each decayed from its event time. Summed
        // over captures this is bounded by (eps/omega) * captures.
        let p = defaults().with_omega(1e3);
        let t = run(5);
        let end = t.final_state();
        let y_free = 0.6 * (-0.6645 * end.t).exp();
        let gain = end.y - y_free;
        let bound = p.eps / p.omega * t.diagnostics.captures as f64;
        assert!(gain > 0.0 && gain <= bound * (1.0 + 1e-12));
        assert!(t.diagnostics.captures > 0);
    }

    #[test]
    fn capture_audit_with_zero_mortality_limit() {
        // Mortality tiny: predator gain equals eps/omega per capture.
        let p = defaults()
            .with_omega(500.0)
            .with_mortality(MortalitySchedule::Constant(1e-12));
        let traj = simulate_jump(
            &p,
            &JumpConfig::default(),
            State::new(0.0, 0.5, 0.4),
            2.0,
            0.5,
            &mut RngStream::new(3),
        )
        .unwrap();
        let gain = traj.final_state().y - 0.4;
        let expected = p.eps / p.omega * traj.diagnostics.captures as f64;
        assert_relative_eq!(gain, expected, max_relative = 1e-6);
    }

    #[test]
    fn pure_birth_without_predator() {
        let p = defaults().with_omega(200.0);
        let mut s = JumpState { t: 0.0, n: 20, y: 0.0 };
        let mut rng = RngStream::new(4);
        for _ in 0..300 {
            if s.n >= 400 {
                break;
            }
            let (next, _) = step_jump(&p, s, &mut rng).unwrap();
            assert!(next.n >= s.n);
            s = next;
        }
    }

    #[test]
    fn seasonal_mortality_runs() {
        let p = defaults()
            .with_omega(1e3)
            .with_mortality(MortalitySchedule::seasonal(0.6645, 0.047, 0.1));
        let t = simulate_jump(
            &p,
            &JumpConfig::default(),
            State::new(0.0, 0.2, 0.6),
            3.0,
            0.5,
            &mut RngStream::new(8),
        )
        .unwrap();
        assert!(t.samples.iter().all(|s| s.x >= 0.0 && s.y >= 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn prey_moves_by_single_individuals(seed in any::<u64>()) {
            let p = defaults().with_omega(300.0);
            let mut s = JumpState { t: 0.0, n: 60, y: 0.6 };
            let mut rng = RngStream::new(seed);
            for _ in 0..500 {
                if s.n == 0 { break; }
                let (next, _) = step_jump(&p, s, &mut rng).unwrap();
                prop_assert_eq!((next.n as i64 - s.n as i64).abs(), 1);
                prop_assert!(next.t > s.t);
                s = next;
            }
        }

        #[test]
        fn samples_are_ordered_and_nonnegative(seed in any::<u64>()) {
            let traj = run(seed);
            for w in traj.samples.windows(2) {
                prop_assert!(w[1].t >= w[0].t);
            }
            for s in &traj.samples {
                prop_assert!(s.x >= 0.0 && s.y >= 0.0);
                let n = s.x * 1e3;
                prop_assert!((n - n.round()).abs() < 1e-9);
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::model::State;

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    RanToHorizon,
    /// Prey hit zero and the horizon came before predator extinction.
    PreyAbsorbed,
    /// Predator concentration fell to one individual's worth, `1/omega`.
    PredatorExtinct,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::RanToHorizon => "ran-to-horizon",
            Termination::PreyAbsorbed => "prey-absorbed",
            Termination::PredatorExtinct => "predator-extinct",
        }
    }
}

/// Counters collected while integrating.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Diffusion steps whose predator update went negative and was clamped.
    pub y_clamps: u64,
    /// Jump events (births plus captures).
    pub events: u64,
    pub captures: u64,
    /// Diffusion/jump hand-overs in hybrid mode.
    pub mode_switches: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// States at multiples of the sample stride, then the final state.
    pub samples: Vec<State>,
    pub termination: Termination,
    /// State at which the prey was absorbed at zero, if it was.
    pub absorption: Option<State>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        *self.samples.last().expect("trajectory always holds its initial state")
    }

    /// Predator extinction time, when the run ended that way.
    pub fn extinction_time(&self) -> Option<f64> {
        (self.termination == Termination::PredatorExtinct).then(|| self.final_state().t)
    }

    /// Linear interpolation of the recorded samples at time `t`.
    pub fn state_at(&self, t: f64) -> Option<State> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
            return None;
        }
        let i = s.partition_point(|p| p.t <= t);
        if i == 0 {
            return Some(s[0]);
        }
        let lo = s[i - 1];
        if i == s.len() || lo.t == t {
            return Some(lo);
        }
        let hi = s[i];
        let w = (t - lo.t) / (hi.t - lo.t);
        Some(State::new(t, lo.x + w * (hi.x - lo.x), lo.y + w * (hi.y - lo.y)))
    }
}

/// Records states on the grid `t0 + k * stride`.
#[derive(Debug, Clone)]
pub(crate) struct Sampler {
    stride: f64,
    origin: f64,
    next_index: u64,
    pub(crate) samples: Vec<State>,
}

impl Sampler {
    pub(crate) fn new(init: State, stride: f64) -> Self {
        Sampler {
            stride,
            origin: init.t,
            next_index: 1,
            samples: vec![init],
        }
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self.stride.max(f64::MIN_POSITIVE)
    }

    /// Next grid time not yet recorded.
    pub(crate) fn next_time(&self) -> f64 {
        self.origin + self.next_index as f64 * self.stride
    }

    /// For fixed-step integrators: keep `s` if it lands on (or just past) a
    /// grid point.
    #[inline]
    pub(crate) fn offer(&mut self, s: State) {
        if s.t + self.tolerance() >= self.next_time() {
            self.samples.push(s);
            while self.next_time() <= s.t + self.tolerance() {
                self.next_index += 1;
            }
        }
    }

    /// For event-driven integrators: record the grid times in `(.., until]`,
    /// evaluating the state at each with `at`.
    pub(crate) fn fill_until(&mut self, until: f64, mut at: impl FnMut(f64) -> State) {
        loop {
            let g = self.next_time();
            if g > until {
                break;
            }
            self.samples.push(at(g));
            self.next_index += 1;
        }
    }

    /// Appends the final state unless it was just recorded.
    pub(crate) fn finish(mut self, last: State) -> Vec<State> {
        if self.samples.last().map(|s| s.t) != Some(last.t) {
            self.samples.push(last);
        } else if let Some(end) = self.samples.last_mut() {
            *end = last;
        }
        self.samples
    }
}

/// Number of fixed steps of length `dt` needed to cover `span`.
pub(crate) fn step_count(span: f64, dt: f64) -> u64 {
    if span <= 0.0 {
        return 0;
    }
    let n = span / dt;
    let r = n.round();
    if (n - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        n.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_grid() {
        let mut s = Sampler::new(State::new(0.0, 1.0, 1.0), 0.5);
        for k in 1..=10 {
            s.offer(State::new(k as f64 * 0.1, 1.0, 1.0));
        }
        let out = s.finish(State::new(1.0, 1.0, 1.0));
        let ts: Vec<f64> = out.iter().map(|p| p.t).collect();
        assert_eq!(ts.len(), 3);
        assert!((ts[1] - 0.5).abs() < 1e-12);
        assert!((ts[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fill_until_emits_grid_points() {
        let mut s = Sampler::new(State::new(0.0, 1.0, 1.0), 0.25);
        s.fill_until(0.6, |t| State::new(t, t, t));
        let out = s.finish(State::new(0.6, 0.0, 0.0));
        let ts: Vec<f64> = out.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.5, 0.6]);
    }

    #[test]
    fn steps() {
        assert_eq!(step_count(200.0, 1e-4), 2_000_000);
        assert_eq!(step_count(0.0, 1e-4), 0);
        assert_eq!(step_count(0.00015, 1e-4), 2);
    }

    #[test]
    fn interpolation() {
        let traj = Trajectory {
            samples: vec![State::new(0.0, 0.0, 1.0), State::new(1.0, 2.0, 3.0)],
            termination: Termination::RanToHorizon,
            absorption: None,
            diagnostics: Diagnostics::default(),
        };
        let s = traj.state_at(0.25).unwrap();
        assert!((s.x - 0.5).abs() < 1e-15 && (s.y - 1.5).abs() < 1e-15);
        assert!(traj.state_at(1.5).is_none());
        assert_eq!(traj.state_at(1.0).unwrap().x, 2.0);
    }
}

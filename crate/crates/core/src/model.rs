//! Model constants and the scalar functions shared by every integrator.
//!
//! The prey grows logistically, `f(x) = r x (K - x)`, and is captured
//! through a Holling type II response `mu(x) = x / (a + x)`. Prey is the
//! fast variable (rates scaled by `1/eps`), predator the slow one. One unit
//! of prey concentration stands for `omega` individuals.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Predator mortality `m(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MortalitySchedule {
    Constant(f64),
    /// `m(t) = a0 + b0 cos(rate t)`.
    Cosine { a0: f64, b0: f64, rate: f64 },
}

impl MortalitySchedule {
    /// Seasonal forcing written as `base - depth (1 - cos(rate t))`.
    pub fn seasonal(base: f64, depth: f64, rate: f64) -> Self {
        MortalitySchedule::Cosine {
            a0: base - depth,
            b0: depth,
            rate,
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            MortalitySchedule::Constant(m) => m,
            MortalitySchedule::Cosine { a0, b0, rate } => a0 + b0 * (rate * t).cos(),
        }
    }

    /// `int_{t0}^{t1} m(s) ds`. Short cosine spans (event gaps, single steps)
    /// use Simpson's rule, where the closed form would lose digits to
    /// cancellation between the two sines.
    #[inline]
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        match *self {
            MortalitySchedule::Constant(m) => m * (t1 - t0),
            MortalitySchedule::Cosine { a0, b0, rate } => {
                let h = t1 - t0;
                if (h * rate).abs() > 1e-2 {
                    a0 * h + b0 / rate * ((rate * t1).sin() - (rate * t0).sin())
                } else {
                    h / 6.0 * (self.at(t0) + 4.0 * self.at(t0 + 0.5 * h) + self.at(t1))
                }
            }
        }
    }

    /// Smallest `t1 >= t0` with `integral(t0, t1) = target`, for `target >= 0`.
    pub fn time_to_accumulate(&self, t0: f64, target: f64) -> f64 {
        match *self {
            MortalitySchedule::Constant(m) => t0 + target / m,
            MortalitySchedule::Cosine { a0, b0, .. } => {
                let mut lo = t0;
                let mut hi = t0 + target / (a0 - b0.abs());
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.integral(t0, mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match *self {
            MortalitySchedule::Constant(m) => Some(m),
            MortalitySchedule::Cosine { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MortalitySchedule::Constant(m) => {
                if !(m > 0.0 && m < 1.0) {
                    return Err(invalid("m", format!("must lie in (0, 1), got {m}")));
                }
            }
            MortalitySchedule::Cosine { a0, b0, rate } => {
                if !(a0.is_finite() && b0.is_finite() && rate.is_finite()) {
                    return Err(invalid("m_a0", "cosine schedule must be finite"));
                }
                if a0 - b0.abs() <= 0.0 {
                    return Err(invalid(
                        "m_a0",
                        format!("m(t) = {a0} + {b0} cos(..) is not positive for all t"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// All model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Prey growth coefficient.
    pub r: f64,
    /// Prey carrying capacity.
    #[serde(rename = "K")]
    pub k: f64,
    /// Half-saturation constant of the functional response.
    pub a: f64,
    /// Time-scale separation between prey and predator.
    pub eps: f64,
    pub mortality: MortalitySchedule,
    /// Individuals per unit of prey concentration.
    pub omega: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            r: 0.5,
            k: 2.0,
            a: 0.4,
            eps: 0.02,
            mortality: MortalitySchedule::Constant(0.6645),
            omega: 1e6,
        }
    }
}

/// A point of the (t, x, y) state space, in concentration units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl State {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        State { t, x, y }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.t.is_finite() && self.x.is_finite() && self.y.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                t: self.t,
                x: self.x,
                y: self.y,
            })
        }
    }
}

impl ModelParams {
    pub fn new(
        r: f64,
        k: f64,
        a: f64,
        eps: f64,
        mortality: MortalitySchedule,
        omega: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            r,
            k,
            a,
            eps,
            mortality,
            omega,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.mortality = MortalitySchedule::Constant(m);
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_mortality(mut self, mortality: MortalitySchedule) -> Self {
        self.mortality = mortality;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(invalid("r", format!("must be positive, got {}", self.r)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(invalid("K", format!("must be positive, got {}", self.k)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid("a", format!("must be positive, got {}", self.a)));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(invalid("eps", format!("must lie in (0, 1], got {}", self.eps)));
        }
        if !(self.omega >= 1.0 && self.omega.is_finite() && self.omega.fract() == 0.0) {
            return Err(invalid(
                "omega",
                format!("must be an integer >= 1, got {}", self.omega),
            ));
        }
        self.mortality.validate()
    }

    /// Constant mortality, or an error naming the caller.
    pub fn constant_m(&self, what: &'static str) -> Result<f64> {
        self.mortality
            .constant()
            .ok_or(Error::NonConstantMortality(what))
    }

    /// Prey concentration of a single individual.
    #[inline]
    pub fn unit(&self) -> f64 {
        1.0 / self.omega
    }

    /// `f(x) = r x (K - x)`; negative above the carrying capacity.
    #[inline]
    pub fn prey_growth(&self, x: f64) -> f64 {
        self.r * x * (self.k - x)
    }

    /// Birth channel of the jump process: `max(f(x), 0)`.
    #[inline]
    pub fn birth_rate(&self, x: f64) -> f64 {
        self.prey_growth(x).max(0.0)
    }

    /// `mu(x) = x / (a + x)`.
    #[inline]
    pub fn functional_response(&self, x: f64) -> f64 {
        x / (self.a + x)
    }

    /// Total jump intensity `(omega / eps) (f+(x) + mu(x) y)`.
    pub fn total_event_rate(&self, s: &State) -> f64 {
        self.omega / self.eps * (self.birth_rate(s.x) + self.functional_response(s.x) * s.y)
    }

    /// Probability that the next event is a birth rather than a capture.
    pub fn birth_probability(&self, s: &State) -> Result<f64> {
        let birth = self.birth_rate(s.x);
        let capture = self.functional_response(s.x) * s.y;
        let total = birth + capture;
        if total <= 0.0 {
            return Err(Error::DegenerateRates { x: s.x, y: s.y });
        }
        Ok(birth / total)
    }

    /// Per-step standard deviations `(sigma_x, sigma_y)` of the diffusion
    /// approximation over a step of length `dt`. Both share the factor
    /// `sqrt(f mu y / (f + mu y))`, so `sigma_x / sigma_y = 2 / eps`.
    pub fn noise_amplitudes(&self, s: &State, dt: f64) -> (f64, f64) {
        let birth = self.birth_rate(s.x);
        let capture = self.functional_response(s.x) * s.y;
        let total = birth + capture;
        if total <= 0.0 {
            return (0.0, 0.0);
        }
        let shared = (birth * capture / total).sqrt();
        let sx = (4.0 * dt / (self.omega * self.eps)).sqrt() * shared;
        let sy = (dt * self.eps / self.omega).sqrt() * shared;
        (sx, sy)
    }

    /// Prey nullcline `y = f(x) / mu(x) = r (K - x)(a + x)`.
    pub fn prey_nullcline(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "prey nullcline is undefined at x = {x} (mu vanishes at 0)"
            )));
        }
        Ok(self.r * (self.k - x) * (self.a + x))
    }

    /// Abscissa of the parabola maximum, `(K - a) / 2`.
    pub fn nullcline_peak(&self) -> f64 {
        0.5 * (self.k - self.a)
    }

    /// `mu^{-1}(m) = a m / (1 - m)`: the vertical predator nullcline.
    pub fn predator_nullcline(&self, m: f64) -> f64 {
        self.a * m / (1.0 - m)
    }

    /// Coexistence equilibrium for constant mortality, `None` when the
    /// predator nullcline lies beyond the carrying capacity.
    pub fn equilibrium(&self) -> Result<Option<(f64, f64)>> {
        let m = self.constant_m("equilibrium")?;
        let x = self.predator_nullcline(m);
        let y = self.prey_nullcline(x)?;
        Ok((y > 0.0).then_some((x, y)))
    }

    /// Deterministic vector field of the slow-fast system.
    #[inline]
    pub fn vector_field(&self, s: &State) -> (f64, f64) {
        let mu = self.functional_response(s.x);
        let dx = (self.prey_growth(s.x) - mu * s.y) / self.eps;
        let dy = (mu - self.mortality.at(s.t)) * s.y;
        (dx, dy)
    }

    /// Parses the flat `key = value` config format. Missing keys keep their
    /// default; unknown or duplicated keys are errors.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut p = ModelParams::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut m_const = None;
        let (mut a0, mut b0, mut rate) = (None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                reason: format!("expected `key = value`, got `{body}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let v: f64 = value.parse().map_err(|_| Error::Config {
                line,
                reason: format!("`{value}` is not a decimal number"),
            })?;
            if seen.contains(&key) {
                return Err(Error::Config {
                    line,
                    reason: format!("duplicate key `{key}`"),
                });
            }
            match key {
                "r" => p.r = v,
                "K" => p.k = v,
                "a" => p.a = v,
                "eps" => p.eps = v,
                "omega" => p.omega = v,
                "m" => m_const = Some(v),
                "m_a0" => a0 = Some(v),
                "m_b0" => b0 = Some(v),
                "m_rate" => rate = Some(v),
                _ => {
                    return Err(Error::Config {
                        line,
                        reason: format!("unknown key `{key}`"),
                    })
                }
            }
            seen.push(key);
        }
        p.mortality = match (m_const, a0, b0, rate) {
            (Some(m), None, None, None) => MortalitySchedule::Constant(m),
            (None, Some(a0), Some(b0), Some(rate)) => MortalitySchedule::Cosine { a0, b0, rate },
            (None, None, None, None) => p.mortality,
            (Some(_), ..) => {
                return Err(Error::Config {
                    line: 0,
                    reason: "`m` cannot be combined with `m_a0`/`m_b0`/`m_rate`".into(),
                })
            }
            _ => {
                return Err(Error::Config {
                    line: 0,
                    reason: "cosine mortality needs all of `m_a0`, `m_b0`, `m_rate`".into(),
                })
            }
        };
        p.validate()?;
        Ok(p)
    }

    /// Writes the config format read by [`ModelParams::from_config_str`].
    /// Values use the shortest round-tripping decimal representation.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "r = {}", self.r);
        let _ = writeln!(out, "K = {}", self.k);
        let _ = writeln!(out, "a = {}", self.a);
        let _ = writeln!(out, "eps = {}", self.eps);
        let _ = writeln!(out, "omega = {}", self.omega);
        match self.mortality {
            MortalitySchedule::Constant(m) => {
                let _ = writeln!(out, "m = {m}");
            }
            MortalitySchedule::Cosine { a0, b0, rate } => {
                let _ = writeln!(out, "m_a0 = {a0}");
                let _ = writeln!(out, "m_b0 = {b0}");
                let _ = writeln!(out, "m_rate = {rate}");
            }
        }
        out
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = match self.mortality {
            MortalitySchedule::Constant(m) => format!("m={m}"),
            MortalitySchedule::Cosine { a0, b0, rate } => {
                format!("m_a0={a0} m_b0={b0} m_rate={rate}")
            }
        };
        write!(
            f,
            "r={} K={} a={} eps={} omega={} {m}",
            self.r, self.k, self.a, self.eps, self.omega
        )
    }
}

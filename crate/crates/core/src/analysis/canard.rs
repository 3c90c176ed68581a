//! Bisection for the mortality at which the limit cycle explodes.

use serde::{Deserialize, Serialize};

use super::cycle::{find_limit_cycle, CycleSearch, CycleSize};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanardSearch {
    pub cycle: CycleSearch,
    /// Stop once the bracket is this narrow.
    pub width: f64,
    /// Offset of the cycle seed from the equilibrium, in prey.
    pub seed_offset: f64,
}

impl Default for CanardSearch {
    fn default() -> Self {
        CanardSearch {
            cycle: CycleSearch::default(),
            width: 1e-9,
            seed_offset: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketStep {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
    pub size: CycleSize,
    pub min_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Canard {
    pub m_star: f64,
    pub lo: f64,
    pub hi: f64,
    pub history: Vec<BracketStep>,
}

/// Limit-cycle size at constant mortality `m`, seeded next to the equilibrium.
pub fn cycle_size_at(params: &ModelParams, m: f64, opts: &CanardSearch) -> Result<(CycleSize, f64)> {
    let p = (*params).with_m(m);
    let (xs, ys) = p
        .equilibrium()?
        .ok_or_else(|| Error::NoCycle(format!("no coexistence equilibrium at m = {m}")))?;
    let c = find_limit_cycle(&p, State::new(0.0, xs + opts.seed_offset, ys), &opts.cycle)?;
    Ok((c.size, c.min_x))
}

/// Bisects `bracket = (lo, hi)` on mortality, where the cycle is large at `lo`
/// and small at `hi`.
pub fn find_canard_m(params: &ModelParams, bracket: (f64, f64), opts: &CanardSearch) -> Result<Canard> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::BracketInvalid {
            lo,
            hi,
            reason: "need lo < hi".into(),
        });
    }
    let (size_lo, _) = cycle_size_at(params, lo, opts)?;
    let (size_hi, _) = cycle_size_at(params, hi, opts)?;
    if size_lo != CycleSize::Large || size_hi != CycleSize::Small {
        return Err(Error::BracketInvalid {
            lo,
            hi,
            reason: format!("cycles are {size_lo:?} at lo and {size_hi:?} at hi; need Large then Small"),
        });
    }
    let mut history = Vec::new();
    while hi - lo > opts.width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (size, min_x) = cycle_size_at(params, mid, opts)?;
        history.push(BracketStep {
            lo,
            hi,
            mid,
            size,
            min_x,
        });
        match size {
            CycleSize::Large => lo = mid,
            CycleSize::Small => hi = mid,
        }
    }
    Ok(Canard {
        m_star: 0.5 * (lo + hi),
        lo,
        hi,
        history,
    })
}

//! Quantitative experiments built on the integrators.

pub mod canard;
pub mod compare;
pub mod cycle;
pub mod extinction;
pub mod funnel;
pub mod report;

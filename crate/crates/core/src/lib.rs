//! Simulation engine for a slow-fast prey-predator model in which one unit
//! of prey stands for `omega` individuals.
//!
//! Three integrators share one set of model functions:
//!
//! - [`jump`]: exact birth/capture events for an integer prey count,
//! - [`diffusion`]: the Euler-Maruyama diffusion approximation with an
//!   absorbing barrier at one individual (optionally hybrid with [`jump`]),
//! - [`ode`]: the deterministic Euler scheme and the log chart.
//!
//! [`analysis`] builds the experiments on top: extinction-time ensembles,
//! limit-cycle detection, safety trajectories and the funnel width, the
//! canard mortality search, and jump-versus-diffusion comparisons.

pub mod analysis;
pub mod diffusion;
pub mod error;
pub mod jump;
pub mod model;
pub mod ode;
pub mod rng;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{ModelParams, MortalitySchedule, State};
pub use rng::RngStream;
pub use trajectory::{Termination, Trajectory};

//! Mean-field simulation of coherent atom–trimer conversion in a two-species
//! condensate, driven by Feshbach coupling and photoassociation along
//! dark-state (STIRAP-like) paths.
//!
//! * [`model`]: amplitude equations, collision matrix, pulse schedules.
//! * [`integrator`]: adaptive Dormand–Prince propagation with dense output.
//! * [`cpt`]: closed-form dark states and the resonance detuning.
//! * [`stability`]: linearization and eigenvalue classification.
//! * [`sweep_opt`]: ratio/detuning sweeps and ratio-schedule optimization.
//! * [`cli_io`]: scenario files, built-in scenarios, CSV export.

pub mod cli_io;
pub mod cpt;
mod error;
pub mod integrator;
pub mod model;
pub mod stability;
pub mod sweep_opt;

pub use error::{Error, Result};

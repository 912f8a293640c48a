//! Resonance expansions of one-dimensional tunneling.
//!
//! The crate locates the complex poles of the transmission amplitude of a
//! layered potential, builds the associated resonance states, and uses them
//! to evaluate a transmitted cutoff Gaussian wave packet in closed form. An
//! independent quadrature path is provided for validation.

pub mod catalog;
pub mod error;
pub mod evolution;
pub mod oracle;
pub mod poles;
pub mod potential;
pub mod presets;
pub mod resonances;
pub mod specfun;
pub mod validation;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Simulation of optical Ramsey-Bordé atomic beam clocks interrogated by a
//! focused, folded Gaussian laser.
//!
//! Pipeline: [`species`] and [`config`] give the physical setup, [`laser`]
//! turns each atom-laser crossing into an effective pulse, [`interferometer`]
//! combines four pulses into the Ramsey-Bordé signal of one trajectory,
//! [`average`] integrates over the atomic beam, and [`analysis`] /
//! [`optimizer`] extract brightness, contrast, Fisher information and fringe
//! shifts. [`propagator`] holds the exact time-ordered single-zone propagator
//! used to validate the analytic pulses.

pub mod analysis;
pub mod average;
pub mod cli;
pub mod config;
pub mod error;
pub mod interferometer;
pub mod laser;
pub mod optimizer;
pub mod propagator;
pub mod quad;
pub mod species;

pub use average::{averaged_spectrum, RBSpectrum};
pub use config::{load_config, RunConfig};
pub use error::{Error, Result};

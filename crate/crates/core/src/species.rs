//! Physical constants and the atomic species driven by the clock laser.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact or CODATA 2018 values, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Speed of light (m/s).
    pub c_light: f64,
    /// Unified atomic mass unit (kg).
    pub amu: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    c_light: 299_792_458.0,
    amu: 1.660_539_066_60e-27,
};

/// Mass of calcium-40 in atomic mass units.
pub const CA40_MASS_AMU: f64 = 39.962_590_863;
/// Wavelength of the Ca ¹S₀ → ³P₁ intercombination line used by default (m).
pub const CA40_WAVELENGTH: f64 = 657e-9;
/// Default ³P₁ linewidth γ/2π (Hz).
pub const CA40_LINEWIDTH_HZ: f64 = 370.0;

/// A two-level atom as seen by the clock laser. All frequencies are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    pub mass: f64,
    pub wavelength: f64,
    /// Excited state decay rate γ (1/s).
    pub decay_rate: f64,
    /// k = 2π/λ (rad/m).
    pub wavevector: f64,
    /// δ = ħk²/2m (rad/s).
    pub recoil_shift: f64,
    /// ω_c = c k (rad/s).
    pub clock_frequency: f64,
}

/// Builds a species and its derived wavevector, recoil shift and clock frequency.
pub fn derive_species(wavelength: f64, mass: f64, decay_rate: f64) -> Result<AtomSpecies> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::validation("wavelength", "must be positive"));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::validation("mass", "must be positive"));
    }
    if !(decay_rate.is_finite() && decay_rate >= 0.0) {
        return Err(Error::validation("decay_rate", "must be non-negative"));
    }
    let k = 2.0 * PI / wavelength;
    Ok(AtomSpecies {
        mass,
        wavelength,
        decay_rate,
        wavevector: k,
        recoil_shift: CONSTANTS.hbar * k * k / (2.0 * mass),
        clock_frequency: CONSTANTS.c_light * k,
    })
}

impl AtomSpecies {
    /// ⁴⁰Ca on the 657 nm line with the default linewidth.
    pub fn calcium40() -> Self {
        derive_species(
            CA40_WAVELENGTH,
            CA40_MASS_AMU * CONSTANTS.amu,
            2.0 * PI * CA40_LINEWIDTH_HZ,
        )
        .expect("built-in species is valid")
    }

    /// Recoil shift in Hz.
    pub fn recoil_shift_hz(&self) -> f64 {
        self.recoil_shift / (2.0 * PI)
    }
}

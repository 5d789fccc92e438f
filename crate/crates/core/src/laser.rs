//! Gaussian beam optics and the effective pulse imparted by one atom-laser crossing.
//!
//! The effective pulse comes from the Fourier transform of the field seen by an
//! atom crossing the beam at distance `z` from the waist,
//! `χ(Δ) = ∫ E(t) e^{−iΔt} dt = Φ e^{iψ}`, evaluated in closed form for the
//! chirped Gaussian. Phases are kept unwrapped.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Focus of the single (folded) clock laser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserGeometry {
    /// Optical path position of the focus, l_w (m).
    pub waist_position: f64,
    /// Waist radius w₀ (m).
    pub waist_radius: f64,
    /// Pulse area A received by an atom at the reference speed crossing the waist (rad).
    pub target_pulse_area: f64,
    /// Laser wavevector k (rad/m).
    pub wavevector: f64,
    /// Drop wavefront curvature and the Gouy phase, keeping w(z) = w₀.
    pub plane_wave: bool,
}

impl LaserGeometry {
    pub fn new(
        waist_position: f64,
        waist_radius: f64,
        target_pulse_area: f64,
        wavevector: f64,
        plane_wave: bool,
    ) -> Result<Self> {
        if !(waist_radius.is_finite() && waist_radius > 0.0) {
            return Err(Error::validation("waist_radius", "must be positive"));
        }
        if !(target_pulse_area.is_finite() && target_pulse_area > 0.0) {
            return Err(Error::validation("target_pulse_area", "must be positive"));
        }
        if !(wavevector.is_finite() && wavevector > 0.0) {
            return Err(Error::validation("wavevector", "must be positive"));
        }
        if !waist_position.is_finite() {
            return Err(Error::validation("waist_position", "must be finite"));
        }
        Ok(LaserGeometry {
            waist_position,
            waist_radius,
            target_pulse_area,
            wavevector,
            plane_wave,
        })
    }

    /// z_R = k w₀² / 2.
    pub fn rayleigh_range(&self) -> f64 {
        0.5 * self.wavevector * self.waist_radius * self.waist_radius
    }

    /// Signed distance from the waist of a zone at optical position `l`.
    pub fn distance_from_waist(&self, l: f64) -> f64 {
        l - self.waist_position
    }
}

/// Local beam parameters a distance `z` from the waist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamFrame {
    pub z: f64,
    pub width: f64,
    /// 1/R(z); zero at the waist where the wavefront is flat.
    pub inv_curvature: f64,
    /// arctan(z/z_R).
    pub gouy: f64,
}

impl BeamFrame {
    pub fn curvature_radius(&self) -> f64 {
        if self.inv_curvature == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.inv_curvature
        }
    }
}

pub fn beam_frame(lg: &LaserGeometry, z: f64) -> BeamFrame {
    let zr = lg.rayleigh_range();
    let x = z / zr;
    // 1/R = z / (z² + z_R²), which is finite and zero at the waist
    BeamFrame {
        z,
        width: lg.waist_radius * (1.0 + x * x).sqrt(),
        inv_curvature: z / (z * z + zr * zr),
        gouy: x.atan(),
    }
}

/// Field seen by the atom at time `t` relative to the beam axis crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    /// Ω(t) (rad/s).
    pub rabi: f64,
    /// φ(t) (rad), unwrapped.
    pub phase: f64,
}

impl FieldSample {
    pub fn complex(&self) -> Complex64 {
        Complex64::from_polar(self.rabi, self.phase)
    }
}

/// Ω(t) e^{iφ(t)} for an atom with speed `v` crossing at `z`; amplitude is
/// normalised so an atom at `v_ref` crossing the waist gets pulse area A.
pub fn field_at(lg: &LaserGeometry, z: f64, v: f64, v_ref: f64, t: f64) -> FieldSample {
    let mut f = field_no_carrier(lg, z, v, v_ref, t);
    f.phase += lg.wavevector * z;
    f
}

/// [`field_at`] without the constant carrier k·z, which would otherwise
/// swamp the chirp in the last bits of the phase.
pub(crate) fn field_no_carrier(lg: &LaserGeometry, z: f64, v: f64, v_ref: f64, t: f64) -> FieldSample {
    let k = lg.wavevector;
    let (width, chirp, gouy) = if lg.plane_wave {
        (lg.waist_radius, 0.0, 0.0)
    } else {
        let f = beam_frame(lg, z);
        (f.width, 0.5 * k * v * v * t * t * f.inv_curvature, f.gouy)
    };
    let s = v * t / width;
    FieldSample {
        rabi: v_ref * lg.target_pulse_area / (2.0 * PI.sqrt() * width) * (-s * s).exp(),
        phase: chirp - gouy,
    }
}

/// Effective pulse of one crossing: half pulse area Φ and laser phase ψ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonePulse {
    pub half_area: f64,
    /// Unwrapped phase ψ = arg χ (rad).
    pub phase: f64,
}

impl ZonePulse {
    /// χ = Φ e^{iψ}.
    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.half_area, self.phase)
    }

    /// ψ wrapped to (−π, π], for display.
    pub fn wrapped_phase(&self) -> f64 {
        let w = self.phase.rem_euclid(2.0 * PI);
        if w > PI {
            w - 2.0 * PI
        } else {
            w
        }
    }
}

/// First-order Magnus pulse for detuning `detuning` (rad/s) in the atom frame.
pub fn effective_pulse(lg: &LaserGeometry, z: f64, v: f64, v_ref: f64, detuning: f64) -> ZonePulse {
    let mut p = effective_pulse_no_carrier(lg, z, v, v_ref, detuning);
    p.phase += lg.wavevector * z;
    p
}

/// Same as [`effective_pulse`] without the carrier term k·z.
///
/// The carrier cancels between zones up to the optical path differences
/// k·(l_i − l_j), which are fixed sub-wavelength offsets set by the apparatus.
pub(crate) fn effective_pulse_no_carrier(
    lg: &LaserGeometry,
    z: f64,
    v: f64,
    v_ref: f64,
    detuning: f64,
) -> ZonePulse {
    let tau0 = lg.waist_radius / v;
    let transit = (-0.25 * detuning * detuning * tau0 * tau0).exp();
    let base = 0.5 * lg.target_pulse_area * v_ref / v;
    if lg.plane_wave {
        return ZonePulse {
            half_area: base * transit,
            phase: 0.0,
        };
    }
    let zr = lg.rayleigh_range();
    let x = z / zr;
    let k = lg.wavevector;
    ZonePulse {
        half_area: base * (1.0 + x * x).powf(-0.25) * transit,
        phase: -z * detuning * detuning / (2.0 * k * v * v) - 0.5 * x.atan(),
    }
}

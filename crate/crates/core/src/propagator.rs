//! Two-level propagators for a single atom-laser crossing.
//!
//! Basis ordering is (ground, excited). In the interaction picture the
//! Hamiltonian is `H̃(t) = E(t) e^{−iΔt} |e⟩⟨g| + h.c.`; integrating it over a
//! time interval gives the complex area `χ`, and `exp(−i[χ|e⟩⟨g| + χ*|g⟩⟨e|])`
//! is a Rabi rotation with closed form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laser::{beam_frame, effective_pulse, field_no_carrier, LaserGeometry, ZonePulse};
use crate::quad;

/// Half-width of the integration window in units of the local beam crossing time w(z)/v.
pub const WINDOW_WIDTHS: f64 = 8.0;
const SEGMENT_TOL: f64 = 1e-10;

/// 2×2 complex matrix in the (ground, excited) basis, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelUnitary(pub [[Complex64; 2]; 2]);

impl TwoLevelUnitary {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        TwoLevelUnitary([[one, zero], [zero, one]])
    }

    /// Rabi rotation generated by the complex pulse area `chi`.
    pub fn rotation(chi: Complex64) -> Self {
        let theta = chi.norm();
        if theta == 0.0 {
            return Self::identity();
        }
        let (s, c) = theta.sin_cos();
        let unit = chi / theta;
        let mi = Complex64::new(0.0, -1.0);
        TwoLevelUnitary([
            [Complex64::new(c, 0.0), mi * unit.conj() * s],
            [mi * unit * s, Complex64::new(c, 0.0)],
        ])
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TwoLevelUnitary(out)
    }

    pub fn dagger(&self) -> Self {
        let a = &self.0;
        TwoLevelUnitary([[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]])
    }

    /// Largest entry-wise deviation of U†U from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.dagger().mul(self);
        let id = Self::identity();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((p.0[i][j] - id.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn max_entry_difference(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn determinant(&self) -> Complex64 {
        let a = &self.0;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }
}

/// Single-step Magnus propagator for an effective pulse, χ = Φ e^{iψ}.
pub fn magnus_unitary(pulse: &ZonePulse) -> TwoLevelUnitary {
    TwoLevelUnitary::rotation(pulse.amplitude())
}

/// Time-ordered product of `n_steps` equal-length segment rotations over the
/// window `[−τ, τ]`, `τ = 8 w(z)/v`.
pub fn trotter_unitary(
    lg: &LaserGeometry,
    z: f64,
    v: f64,
    v_ref: f64,
    detuning: f64,
    n_steps: usize,
) -> Result<TwoLevelUnitary> {
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    if !(v > 0.0) {
        return Err(Error::Domain("speed must be positive".into()));
    }
    let width = if lg.plane_wave {
        lg.waist_radius
    } else {
        beam_frame(lg, z).width
    };
    let tau = WINDOW_WIDTHS * width / v;
    let dt = 2.0 * tau / n_steps as f64;
    let integrand = |t: f64| field_no_carrier(lg, z, v, v_ref, t).complex() * Complex64::new(0.0, -detuning * t).exp();
    let carrier = Complex64::from_polar(1.0, lg.wavevector * z);
    // tolerance scaled by the peak rabi rate times the crossing time
    let scale = field_no_carrier(lg, z, v, v_ref, 0.0).rabi * width / v;
    let mut u = TwoLevelUnitary::identity();
    for step in 0..n_steps {
        let t0 = -tau + step as f64 * dt;
        let t1 = if step + 1 == n_steps { tau } else { t0 + dt };
        let chi = carrier * quad::integrate(integrand, t0, t1, SEGMENT_TOL * scale.max(1e-300));
        u = TwoLevelUnitary::rotation(chi).mul(&u);
    }
    Ok(u)
}

/// |⟨e|U|g⟩|².
pub fn excitation_probability(u: &TwoLevelUnitary) -> f64 {
    u.0[1][0].norm_sqr().clamp(0.0, 1.0)
}

/// Excitation probabilities of one zone from the Magnus pulse and the Trotter product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    /// Target pulse area A (rad).
    pub area: f64,
    /// Distance from the waist (m).
    pub z: f64,
    /// Δ τ₀ with τ₀ = w₀ / v.
    pub detuning_tau0: f64,
    pub magnus: f64,
    pub trotter: f64,
}

impl OracleRow {
    pub fn abs_diff(&self) -> f64 {
        (self.magnus - self.trotter).abs()
    }
}

/// Target areas of the standard comparison grid.
pub const ORACLE_AREAS: [f64; 4] = [
    std::f64::consts::PI / 10.0,
    std::f64::consts::PI / 4.0,
    std::f64::consts::PI / 2.5,
    std::f64::consts::PI / 2.0,
];

/// Zone distances of the standard grid in units of z_R.
pub const ORACLE_Z_MULTIPLES: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// Compares Magnus and Trotter excitation over `areas` × `z_multiples` × Δτ₀
/// equally spaced on [−2, 2] with `detuning_points` values, for an atom at
/// the reference speed.
pub fn oracle_sweep(
    base: &LaserGeometry,
    v: f64,
    areas: &[f64],
    z_multiples: &[f64],
    detuning_points: usize,
    n_steps: usize,
) -> Result<Vec<OracleRow>> {
    if detuning_points < 2 {
        return Err(Error::Domain("need at least two detuning points".into()));
    }
    let zr = base.rayleigh_range();
    let tau0 = base.waist_radius / v;
    let mut rows = Vec::with_capacity(areas.len() * z_multiples.len() * detuning_points);
    for &area in areas {
        let lg = LaserGeometry {
            target_pulse_area: area,
            ..*base
        };
        for &m in z_multiples {
            let z = m * zr;
            for i in 0..detuning_points {
                let x = -2.0 + 4.0 * i as f64 / (detuning_points - 1) as f64;
                let d = x / tau0;
                let magnus = excitation_probability(&magnus_unitary(&effective_pulse(&lg, z, v, v, d)));
                let trotter = excitation_probability(&trotter_unitary(&lg, z, v, v, d, n_steps)?);
                rows.push(OracleRow {
                    area,
                    z,
                    detuning_tau0: x,
                    magnus,
                    trotter,
                });
            }
        }
    }
    Ok(rows)
}

/// Ramsey background a₊ = a_g + a_e of two identical zones at the waist, from
/// Magnus pulses and from Trotter products: `(magnus, trotter)`.
pub fn ramsey_background_pair(
    lg: &LaserGeometry,
    v: f64,
    v_ref: f64,
    detuning: f64,
    n_steps: usize,
) -> Result<(f64, f64)> {
    let p = effective_pulse(lg, 0.0, v, v_ref, detuning);
    let magnus = crate::interferometer::ramsey_parts(p.half_area, p.half_area).background();
    let u = trotter_unitary(lg, 0.0, v, v_ref, detuning, n_steps)?;
    let excite = excitation_probability(&u);
    let exact = 2.0 * excite * (1.0 - excite);
    Ok((magnus, exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::AtomSpecies;
    use std::f64::consts::PI;

    fn laser(area: f64) -> LaserGeometry {
        let ca = AtomSpecies::calcium40();
        LaserGeometry::new(0.0, 0.125e-3, area, ca.wavevector, false).unwrap()
    }

    #[test]
    fn zero_pulse_is_identity() {
        let u = magnus_unitary(&ZonePulse { half_area: 0.0, phase: 1.3 });
        assert_eq!(u, TwoLevelUnitary::identity());
        assert_eq!(excitation_probability(&u), 0.0);
    }

    #[test]
    fn half_and_full_inversion() {
        let u = magnus_unitary(&ZonePulse { half_area: PI / 4.0, phase: 0.0 });
        assert!((excitation_probability(&u) - 0.5).abs() < 1e-15);
        let u = magnus_unitary(&ZonePulse { half_area: PI / 2.0, phase: 0.7 });
        assert!((excitation_probability(&u) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn magnus_matrix_entries() {
        let (phi, psi) = (0.4_f64, -1.1_f64);
        let u = magnus_unitary(&ZonePulse { half_area: phi, phase: psi });
        let mi = Complex64::new(0.0, -1.0);
        assert!((u.0[1][0] - mi * Complex64::from_polar(phi.sin(), psi)).norm() < 1e-15);
        assert!((u.0[0][1] - mi * Complex64::from_polar(phi.sin(), -psi)).norm() < 1e-15);
        assert!(u.unitarity_error() < 1e-12);
        assert!((u.determinant().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(trotter_unitary(&laser(PI / 2.0), 0.0, 610.0, 610.0, 0.0, 0).is_err());
    }

    #[test]
    fn single_step_matches_magnus() {
        let lg = laser(PI / 2.0);
        let zr = lg.rayleigh_range();
        for z in [0.0, zr, -2.0 * zr] {
            for dtau in [-2.0, 0.0, 1.5] {
                let v = 610.0;
                let d = dtau * v / lg.waist_radius;
                let exact = trotter_unitary(&lg, z, v, 610.0, d, 1).unwrap();
                let magnus = magnus_unitary(&effective_pulse(&lg, z, v, 610.0, d));
                assert!(exact.max_entry_difference(&magnus) < 1e-4);
            }
        }
    }

    #[test]
    fn resonant_rabi_at_waist() {
        let lg = laser(PI / 2.0);
        for v in [300.0, 610.0, 1200.0] {
            let u = trotter_unitary(&lg, 0.0, v, 610.0, 0.0, 17).unwrap();
            let expected = (PI / 2.0 * 610.0 / (2.0 * v)).sin().powi(2);
            assert!((excitation_probability(&u) - expected).abs() < 1e-6);
            assert!(u.unitarity_error() < 1e-10);
        }
    }
}

//! Ramsey and Ramsey-Bordé signals for a single atomic trajectory.
//!
//! Zones 1 and 2 form the first Ramsey interferometer (co-propagating with
//! the +k pass), zones 3 and 4 the second (counter-propagating). The lower
//! recoil branch stays in `g₀` through the first pair and is excited to
//! `e₋₁` in the second; the upper branch is excited to `e₁` in the first pair
//! and must remain there through the second. Only the Doppler-free fringe
//! `θ + θ′` is retained.

use num_complex::Complex64;

use crate::config::{BeamlineGeometry, DecayConvention, ModelFlags};
use crate::error::{Error, Result};
use crate::laser::{LaserGeometry, ZonePulse};
use crate::species::{AtomSpecies, CONSTANTS};

/// Longitudinal speed `v` and velocity component `v_z` along the +k pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub v: f64,
    pub v_z: f64,
}

impl Trajectory {
    pub fn new(v: f64, v_z: f64) -> Result<Self> {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("longitudinal speed must be positive, got {v}")));
        }
        Ok(Trajectory { v, v_z })
    }

    /// Ramsey times (T, T′) of the two interferometers.
    pub fn ramsey_times(&self, beamline: &BeamlineGeometry) -> (f64, f64) {
        (
            beamline.ramsey_separation / self.v,
            beamline.second_ramsey_separation / self.v,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Lower,
    Upper,
}

/// Atom-frame detunings (ζ_RI1, ζ_RI2) seen in each interferometer.
///
/// The first pair drives g₀ → e₁ in both branches. In the second pair the
/// lower branch drives g₀ → e₋₁ and the upper branch e₁ → g₂, which sits 4δ
/// higher; around the upper resonance this is `(Δ+δ) ± (2δ − k v_z)`.
pub fn effective_detunings(
    detuning: f64,
    traj: &Trajectory,
    branch: Branch,
    species: &AtomSpecies,
) -> (f64, f64) {
    let d = species.recoil_shift;
    let doppler = species.wavevector * traj.v_z;
    match branch {
        Branch::Lower => (detuning - d + doppler, detuning - d - doppler),
        Branch::Upper => (detuning - d + doppler, detuning + 3.0 * d - doppler),
    }
}

/// Second-order Doppler (time dilation): Δ → γ(ω_c + Δ) − ω_c.
pub fn relativistic_detuning(detuning: f64, v: f64, species: &AtomSpecies, enabled: bool) -> Result<f64> {
    let beta = v / CONSTANTS.c_light;
    if !(beta.abs() < 1.0) {
        return Err(Error::Domain(format!("speed {v} m/s is not below c")));
    }
    if !enabled {
        return Ok(detuning);
    }
    let s = (1.0 - beta * beta).sqrt();
    // γ − 1 without cancellation
    let gamma_m1 = beta * beta / (s * (1.0 + s));
    Ok(detuning + gamma_m1 * (species.clock_frequency + detuning))
}

/// Background and envelope pieces of one Ramsey interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyParts {
    /// Path spending the dark time in the initial state: cos²Φ₁ sin²Φ₂.
    pub a_g: f64,
    /// Path spending the dark time in the other state: sin²Φ₁ cos²Φ₂.
    pub a_e: f64,
    /// ½ sin 2Φ₁ sin 2Φ₂.
    pub a_minus: f64,
}

impl RamseyParts {
    /// a₊ without decay.
    pub fn background(&self) -> f64 {
        self.a_g + self.a_e
    }
}

pub fn ramsey_parts(half_area_1: f64, half_area_2: f64) -> RamseyParts {
    let (s1, c1) = half_area_1.sin_cos();
    let (s2, c2) = half_area_2.sin_cos();
    RamseyParts {
        a_g: c1 * c1 * s2 * s2,
        a_e: s1 * s1 * c2 * c2,
        a_minus: 2.0 * s1 * c1 * s2 * c2,
    }
}

/// Doppler-free fringe phase `ζ₁T + ζ₂T′ + ψ₁ − ψ₂ + ψ₃ − ψ₄`.
///
/// With T = T′ this is `2T(Δ ∓ δ) + ψ₁ − ψ₂ + ψ₃ − ψ₄`, lower branch −δ.
pub fn fringe_phase(
    branch: Branch,
    detuning: f64,
    traj: &Trajectory,
    beamline: &BeamlineGeometry,
    species: &AtomSpecies,
    phases: &[f64; 4],
) -> f64 {
    let (z1, z2) = effective_detunings(detuning, traj, branch, species);
    let (t1, t2) = traj.ramsey_times(beamline);
    z1 * t1 + z2 * t2 + (phases[0] - phases[1]) + (phases[2] - phases[3])
}

/// Leading-order decomposition of the lower-branch fringe phase near resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseBreakdown {
    /// Multiplies 2T(Δ−δ): 1 + (l_s/d_r)(v_z/v).
    pub time_of_flight_factor: f64,
    /// k l_s (1 − v_z²/2v²).
    pub spatial: f64,
    /// Σᵢ ±arctan((lᵢ − l_w)/z_R), signs (+, −, +, −).
    pub gouy_sum: f64,
}

pub fn phase_breakdown(
    traj: &Trajectory,
    beamline: &BeamlineGeometry,
    laser: &LaserGeometry,
    species: &AtomSpecies,
) -> PhaseBreakdown {
    let ls = beamline.path_sum();
    let ratio = traj.v_z / traj.v;
    PhaseBreakdown {
        time_of_flight_factor: 1.0 + ls / beamline.ramsey_separation * ratio,
        spatial: species.wavevector * ls * (1.0 - 0.5 * ratio * ratio),
        gouy_sum: gouy_sum(beamline, laser),
    }
}

/// Σᵢ sᵢ arctan((lᵢ − l_w)/z_R) with sᵢ = (+, −, +, −); zero for a plane wave.
pub fn gouy_sum(beamline: &BeamlineGeometry, laser: &LaserGeometry) -> f64 {
    if laser.plane_wave {
        return 0.0;
    }
    let zr = laser.rayleigh_range();
    beamline
        .zone_positions
        .iter()
        .zip(ZONE_SIGNS)
        .map(|(l, s)| s * ((l - laser.waist_position) / zr).atan())
        .sum()
}

const ZONE_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Excitation bookkeeping for one trajectory at one laser detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RBComponents {
    pub p_lower: f64,
    pub p_upper: f64,
    /// a₊′(1 − a₊), decay dressed.
    pub background_lower: f64,
    /// e^{−γT′} a₊(1 − a₊′), decay dressed.
    pub background_upper: f64,
    /// −½ a₋a₋′ e^{iθ_L}; the real part is the lower fringe term.
    pub fringe_lower: Complex64,
    /// −½ e^{−γT′} a₋a₋′ e^{iθ_U}.
    pub fringe_upper: Complex64,
}

/// Decay weights applied between zones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFactors {
    pub rate: f64,
    pub convention: DecayConvention,
}

impl DecayFactors {
    pub fn none() -> Self {
        DecayFactors {
            rate: 0.0,
            convention: DecayConvention::Population,
        }
    }

    fn dress(&self, parts: &RamseyParts, time: f64) -> (f64, f64) {
        let pop = (-self.rate * time).exp();
        let env = match self.convention {
            DecayConvention::Population => pop,
            DecayConvention::Amplitude => (-0.5 * self.rate * time).exp(),
        };
        (parts.a_g + pop * parts.a_e, env * parts.a_minus)
    }
}

/// Combines the interferometer parts of both branches into p_L and p_U.
///
/// `lower` and `upper` hold (RI1, RI2) parts evaluated at each branch's own
/// detunings.
pub fn rb_probabilities(
    lower: (&RamseyParts, &RamseyParts),
    upper: (&RamseyParts, &RamseyParts),
    theta_lower: f64,
    theta_upper: f64,
    decay: &DecayFactors,
    times: (f64, f64),
) -> RBComponents {
    let (t1, t2) = times;
    let (ap1, am1) = decay.dress(lower.0, t1);
    let (ap2, am2) = decay.dress(lower.1, t2);
    let bg_l = ap2 * (1.0 - ap1);
    let fr_l = Complex64::from_polar(-0.5 * am1 * am2, theta_lower);

    let (up1, um1) = decay.dress(upper.0, t1);
    let (up2, um2) = decay.dress(upper.1, t2);
    let transit = (-decay.rate * t2).exp();
    let bg_u = transit * up1 * (1.0 - up2);
    let fr_u = Complex64::from_polar(-0.5 * transit * um1 * um2, theta_upper);

    RBComponents {
        p_lower: bg_l + fr_l.re,
        p_upper: bg_u + fr_u.re,
        background_lower: bg_l,
        background_upper: bg_u,
        fringe_lower: fr_l,
        fringe_upper: fr_u,
    }
}

#[derive(Debug, Clone, Copy)]
struct ZoneGeometry {
    z: f64,
    /// (1 + z²/z_R²)^{−1/4}
    loss: f64,
    /// −½ arctan(z/z_R) + carrier k z (if enabled) + configured offset
    static_phase: f64,
}

/// Per-configuration precomputation for evaluating many trajectories.
#[derive(Debug, Clone)]
pub struct Interferometer {
    species: AtomSpecies,
    beamline: BeamlineGeometry,
    laser: LaserGeometry,
    flags: ModelFlags,
    reference_speed: f64,
    zones: [ZoneGeometry; 4],
}

impl Interferometer {
    pub fn new(
        species: &AtomSpecies,
        beamline: &BeamlineGeometry,
        laser: &LaserGeometry,
        flags: &ModelFlags,
        reference_speed: f64,
    ) -> Self {
        let zr = laser.rayleigh_range();
        let k = laser.wavevector;
        let zones = std::array::from_fn(|i| {
            let z = laser.distance_from_waist(beamline.zone_positions[i]);
            let carrier = if flags.carrier_phase { k * z } else { 0.0 };
            let offset = beamline.zone_phase_offsets[i];
            if laser.plane_wave {
                ZoneGeometry {
                    z,
                    loss: 1.0,
                    static_phase: carrier + offset,
                }
            } else {
                let x = z / zr;
                let gouy = if flags.gouy_phase { 0.5 * x.atan() } else { 0.0 };
                ZoneGeometry {
                    z,
                    loss: (1.0 + x * x).powf(-0.25),
                    static_phase: carrier + offset - gouy,
                }
            }
        });
        Interferometer {
            species: *species,
            beamline: *beamline,
            laser: *laser,
            flags: *flags,
            reference_speed,
            zones,
        }
    }

    pub fn species(&self) -> &AtomSpecies {
        &self.species
    }

    pub fn beamline(&self) -> &BeamlineGeometry {
        &self.beamline
    }

    pub fn laser(&self) -> &LaserGeometry {
        &self.laser
    }

    pub fn decay(&self) -> DecayFactors {
        DecayFactors {
            rate: if self.flags.decay { self.species.decay_rate } else { 0.0 },
            convention: self.flags.decay_convention,
        }
    }

    /// Effective pulses of zones `first` and `first + 1` at atom-frame detuning `zeta`.
    fn pair(&self, first: usize, v: f64, zeta: f64) -> [ZonePulse; 2] {
        let tau0 = self.laser.waist_radius / v;
        let base = 0.5 * self.laser.target_pulse_area * self.reference_speed / v
            * (-0.25 * zeta * zeta * tau0 * tau0).exp();
        let chirp = if self.laser.plane_wave || !self.flags.wavefront_chirp {
            0.0
        } else {
            -zeta * zeta / (2.0 * self.laser.wavevector * v * v)
        };
        std::array::from_fn(|j| {
            let g = &self.zones[first + j];
            ZonePulse {
                half_area: base * g.loss,
                phase: g.static_phase + chirp * g.z,
            }
        })
    }

    /// The four zone pulses seen by `traj` on `branch` at laser detuning `detuning`.
    pub fn pulses(&self, detuning: f64, traj: &Trajectory, branch: Branch) -> Result<[ZonePulse; 4]> {
        let d = relativistic_detuning(detuning, traj.v, &self.species, self.flags.relativistic_doppler)?;
        Ok(self.pulses_at(d, traj, branch))
    }

    fn pulses_at(&self, atom_detuning: f64, traj: &Trajectory, branch: Branch) -> [ZonePulse; 4] {
        let (z1, z2) = effective_detunings(atom_detuning, traj, branch, &self.species);
        let [p1, p2] = self.pair(0, traj.v, z1);
        let [p3, p4] = self.pair(2, traj.v, z2);
        [p1, p2, p3, p4]
    }

    /// Ramsey parts (RI1, RI2) and fringe phase of one branch.
    pub fn branch(&self, detuning: f64, traj: &Trajectory, branch: Branch) -> Result<(RamseyParts, RamseyParts, f64)> {
        let d = relativistic_detuning(detuning, traj.v, &self.species, self.flags.relativistic_doppler)?;
        let p = self.pulses_at(d, traj, branch);
        let phases = [p[0].phase, p[1].phase, p[2].phase, p[3].phase];
        let theta = fringe_phase(branch, d, traj, &self.beamline, &self.species, &phases);
        Ok((
            ramsey_parts(p[0].half_area, p[1].half_area),
            ramsey_parts(p[2].half_area, p[3].half_area),
            theta,
        ))
    }

    /// Both branches for one trajectory. The first interferometer is shared.
    pub fn evaluate(&self, detuning: f64, traj: &Trajectory) -> Result<RBComponents> {
        let d = relativistic_detuning(detuning, traj.v, &self.species, self.flags.relativistic_doppler)?;
        let (zl1, zl2) = effective_detunings(d, traj, Branch::Lower, &self.species);
        let (_, zu2) = effective_detunings(d, traj, Branch::Upper, &self.species);
        let [p1, p2] = self.pair(0, traj.v, zl1);
        let [p3, p4] = self.pair(2, traj.v, zl2);
        let [q3, q4] = self.pair(2, traj.v, zu2);
        let ri1 = ramsey_parts(p1.half_area, p2.half_area);
        let ri2_lower = ramsey_parts(p3.half_area, p4.half_area);
        let ri2_upper = ramsey_parts(q3.half_area, q4.half_area);
        let tl = fringe_phase(
            Branch::Lower,
            d,
            traj,
            &self.beamline,
            &self.species,
            &[p1.phase, p2.phase, p3.phase, p4.phase],
        );
        let tu = fringe_phase(
            Branch::Upper,
            d,
            traj,
            &self.beamline,
            &self.species,
            &[p1.phase, p2.phase, q3.phase, q4.phase],
        );
        Ok(rb_probabilities(
            (&ri1, &ri2_lower),
            (&ri1, &ri2_upper),
            tl,
            tu,
            &self.decay(),
            traj.ramsey_times(&self.beamline),
        ))
    }
}

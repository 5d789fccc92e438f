//! Velocity distributions, quadrature grids and the velocity-averaged signal.
//!
//! The averaged signal is `P = ⟨p_L⟩ + ⟨p_U⟩ = b(1 + c)` with total background
//! `b` and contrast `c`. Sums over velocity nodes always run in node order,
//! so results do not depend on how detuning points are spread over threads.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::interferometer::{Interferometer, Trajectory};
use crate::species::CONSTANTS;

/// Longitudinal and transverse velocity distributions of the atomic beam.
///
/// ρ(v) ∝ vⁿ exp(−m v² / 2k_BT) and ρ(v_z | v) ∝ exp(−(v_z − v sin α)² / v_w(v)²)
/// with v_w(v) = (v / v_m) · v_w(v_m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityDistribution {
    pub exponent: u32,
    pub temperature: f64,
    pub mass: f64,
    /// v_m (m/s).
    pub reference_speed: f64,
    /// Transverse width at v_m (m/s).
    pub transverse_width: f64,
    /// Tilt α between atomic beam and laser normal (rad).
    pub tilt: f64,
}

impl VelocityDistribution {
    /// Unnormalised longitudinal density.
    pub fn longitudinal_density(&self, v: f64) -> f64 {
        let x = self.mass * v * v / (2.0 * CONSTANTS.k_b * self.temperature);
        v.powi(self.exponent as i32) * (-x).exp()
    }

    pub fn transverse_width_at(&self, v: f64) -> f64 {
        self.transverse_width * v / self.reference_speed
    }

    pub fn transverse_center_at(&self, v: f64) -> f64 {
        v * self.tilt.sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub speed_min: f64,
    pub speed_max: f64,
    pub speed_nodes: usize,
    pub transverse_nodes: usize,
    /// Half-width of the transverse grid in units of v_w.
    pub transverse_span: f64,
}

/// One longitudinal node with its transverse nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedNode {
    pub v: f64,
    pub weight: f64,
    /// (v_z, weight) pairs; weights sum to one.
    pub transverse: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<SpeedNode>,
}

fn trapezoid_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i == 0 || i + 1 == n { 0.5 } else { 1.0 })
        .collect()
}

fn normalise(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|x| *x /= s);
    }
}

/// Equally spaced trapezoid grid weighted by the distribution.
pub fn build_grid(dist: &VelocityDistribution, settings: &GridSettings) -> Result<QuadratureGrid> {
    let GridSettings {
        speed_min,
        speed_max,
        speed_nodes,
        transverse_nodes,
        transverse_span,
    } = *settings;
    if !(speed_min > 0.0 && speed_max >= speed_min && speed_max.is_finite()) {
        return Err(Error::Domain(format!("invalid speed range [{speed_min}, {speed_max}]")));
    }
    if speed_nodes == 0 || transverse_nodes == 0 {
        return Err(Error::Domain("grids need at least one node".into()));
    }
    if speed_nodes == 1 && speed_max != speed_min {
        return Err(Error::Domain("a single speed node needs a collapsed range".into()));
    }
    if speed_nodes > 1 && speed_max == speed_min {
        return Err(Error::Domain("collapsed speed range needs exactly one node".into()));
    }
    let speeds: Vec<f64> = if speed_nodes == 1 {
        vec![speed_min]
    } else {
        (0..speed_nodes)
            .map(|i| speed_min + (speed_max - speed_min) * i as f64 / (speed_nodes - 1) as f64)
            .collect()
    };
    let mut weights: Vec<f64> = if speed_nodes == 1 {
        vec![1.0]
    } else {
        trapezoid_weights(speed_nodes)
            .into_iter()
            .zip(&speeds)
            .map(|(t, &v)| t * dist.longitudinal_density(v))
            .collect()
    };
    normalise(&mut weights);

    let nz = transverse_nodes;
    let nodes = speeds
        .iter()
        .zip(weights)
        .map(|(&v, weight)| {
            let center = dist.transverse_center_at(v);
            let width = dist.transverse_width_at(v);
            let transverse = if nz == 1 || width == 0.0 {
                vec![(center, 1.0)]
            } else {
                let m = (nz - 1) as f64;
                let mut w = trapezoid_weights(nz);
                let vz: Vec<f64> = (0..nz)
                    .map(|j| {
                        // symmetric about the centre to the last bit
                        let x = transverse_span * (2.0 * j as f64 - m) / m;
                        w[j] *= (-x * x).exp();
                        center + width * x
                    })
                    .collect();
                normalise(&mut w);
                vz.into_iter().zip(w).collect()
            };
            SpeedNode { v, weight, transverse }
        })
        .collect();
    Ok(QuadratureGrid { nodes })
}

impl QuadratureGrid {
    pub fn weighted_mean_speed(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight * n.v).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(|n| n.transverse.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Velocity-averaged Ramsey-Bordé signal over a detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RBSpectrum {
    /// Laser detuning Δ (rad/s).
    pub detuning: Vec<f64>,
    /// Total background b.
    pub background: Vec<f64>,
    /// Contrast function c.
    pub contrast: Vec<f64>,
    /// ⟨p_L⟩ + ⟨p_U⟩, summed directly.
    pub signal: Vec<f64>,
    /// −½⟨a₋a₋′ e^{iθ_L}⟩.
    pub fringe_lower: Vec<Complex64>,
    /// −½⟨e^{−γT′} a₋a₋′ e^{iθ_U}⟩.
    pub fringe_upper: Vec<Complex64>,
}

impl RBSpectrum {
    pub fn len(&self) -> usize {
        self.detuning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detuning.is_empty()
    }

    /// |Z_L| / b, the lower fringe envelope as a fraction of the background.
    pub fn envelope_lower(&self) -> Vec<f64> {
        self.fringe_lower
            .iter()
            .zip(&self.background)
            .map(|(z, b)| z.norm() / b)
            .collect()
    }

    pub fn envelope_upper(&self) -> Vec<f64> {
        self.fringe_upper
            .iter()
            .zip(&self.background)
            .map(|(z, b)| z.norm() / b)
            .collect()
    }
}

#[derive(Default, Clone, Copy)]
struct Accumulator {
    bg_lower: f64,
    bg_upper: f64,
    signal: f64,
    fr_lower: Complex64,
    fr_upper: Complex64,
}

fn average_point(ifm: &Interferometer, grid: &QuadratureGrid, detuning: f64) -> Result<Accumulator> {
    let mut acc = Accumulator::default();
    for node in &grid.nodes {
        let mut inner = Accumulator::default();
        for &(vz, w) in &node.transverse {
            let c = ifm.evaluate(detuning, &Trajectory { v: node.v, v_z: vz })?;
            inner.bg_lower += w * c.background_lower;
            inner.bg_upper += w * c.background_upper;
            inner.signal += w * (c.p_lower + c.p_upper);
            inner.fr_lower += c.fringe_lower * w;
            inner.fr_upper += c.fringe_upper * w;
        }
        acc.bg_lower += node.weight * inner.bg_lower;
        acc.bg_upper += node.weight * inner.bg_upper;
        acc.signal += node.weight * inner.signal;
        acc.fr_lower += inner.fr_lower * node.weight;
        acc.fr_upper += inner.fr_upper * node.weight;
    }
    Ok(acc)
}

/// Averages the signal over `config`'s velocity grid at its detunings.
pub fn averaged_spectrum(config: &RunConfig) -> Result<RBSpectrum> {
    averaged_spectrum_at(config, &config.detuning)
}

/// As [`averaged_spectrum`] at explicit detunings (rad/s).
pub fn averaged_spectrum_at(config: &RunConfig, detunings: &[f64]) -> Result<RBSpectrum> {
    let grid = build_grid(&config.velocity, &config.grid)?;
    let ifm = Interferometer::new(
        &config.species,
        &config.beamline,
        &config.laser,
        &config.flags,
        config.velocity.reference_speed,
    );
    spectrum_on_grid(&ifm, &grid, detunings)
}

/// Core averaging loop, parallel over detunings.
pub fn spectrum_on_grid(ifm: &Interferometer, grid: &QuadratureGrid, detunings: &[f64]) -> Result<RBSpectrum> {
    let points: Vec<Accumulator> = detunings
        .par_iter()
        .map(|&d| average_point(ifm, grid, d))
        .collect::<Result<_>>()?;
    let mut s = RBSpectrum {
        detuning: detunings.to_vec(),
        background: Vec::with_capacity(points.len()),
        contrast: Vec::with_capacity(points.len()),
        signal: Vec::with_capacity(points.len()),
        fringe_lower: Vec::with_capacity(points.len()),
        fringe_upper: Vec::with_capacity(points.len()),
    };
    for a in points {
        let b = a.bg_lower + a.bg_upper;
        s.background.push(b);
        s.contrast.push((a.fr_lower + a.fr_upper).re / b);
        s.signal.push(a.signal);
        s.fringe_lower.push(a.fr_lower);
        s.fringe_upper.push(a.fr_upper);
    }
    Ok(s)
}

/// Averaged fringe of a single Ramsey interferometer (zones 1–2, lower-branch
/// detuning): returns (⟨a₊⟩, ⟨a₋ e^{iθ}⟩) with θ = ζT + ψ₁ − ψ₂.
pub fn single_ramsey_average(config: &RunConfig, detuning: f64) -> Result<(f64, Complex64)> {
    use crate::interferometer::Branch;
    let grid = build_grid(&config.velocity, &config.grid)?;
    let ifm = Interferometer::new(
        &config.species,
        &config.beamline,
        &config.laser,
        &config.flags,
        config.velocity.reference_speed,
    );
    let mut bg = 0.0;
    let mut fr = Complex64::new(0.0, 0.0);
    for node in &grid.nodes {
        for &(vz, w) in &node.transverse {
            let traj = Trajectory { v: node.v, v_z: vz };
            let p = ifm.pulses(detuning, &traj, Branch::Lower)?;
            let (zeta, _) = crate::interferometer::effective_detunings(
                detuning,
                &traj,
                Branch::Lower,
                &config.species,
            );
            let parts = crate::interferometer::ramsey_parts(p[0].half_area, p[1].half_area);
            let theta = zeta * config.beamline.ramsey_separation / node.v + p[0].phase - p[1].phase;
            let ww = w * node.weight;
            bg += ww * parts.background();
            fr += Complex64::from_polar(parts.a_minus, theta) * ww;
        }
    }
    Ok((bg, fr))
}

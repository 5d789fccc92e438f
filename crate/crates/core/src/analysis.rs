//! Metrics derived from averaged spectra: brightness and contrast of the
//! central lower recoil fringe, Fisher information, the fringe frequency shift
//! and its sensitivity to the waist position.

use num_complex::Complex64;

use crate::average::{averaged_spectrum_at, RBSpectrum};
use crate::config::{BeamlineGeometry, RunConfig};
use crate::error::{Error, Result};
use crate::interferometer::Trajectory;
use crate::laser::{effective_pulse, LaserGeometry};
use crate::quad;
use crate::species::AtomSpecies;

/// Number of detuning points used by [`shift_at`].
pub const SHIFT_FIT_POINTS: usize = 21;

/// Largest accepted RMS residual (rad) of the fringe phase fit.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.2;

/// Default waist-position step for [`stability`] (m).
pub const STABILITY_STEP: f64 = 0.5e-3;

/// Linear interpolation of `y(x)` on an increasing grid.
pub fn interpolate(x: &[f64], y: &[f64], at: f64) -> Result<f64> {
    let n = x.len();
    if n == 0 || !(at >= x[0] && at <= x[n - 1]) {
        return Err(Error::OutOfRange {
            what: "detuning",
            value: at,
            lo: x.first().copied().unwrap_or(f64::NAN),
            hi: x.last().copied().unwrap_or(f64::NAN),
        });
    }
    if n == 1 {
        return Ok(y[0]);
    }
    let i = x.partition_point(|&xi| xi <= at).clamp(1, n - 1);
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    Ok(y[i - 1] + t * (y[i] - y[i - 1]))
}

/// Brightness b₀ = b(δ) and contrast c₀ = |Z_L(δ)| / b(δ).
pub fn brightness_contrast(spectrum: &RBSpectrum, species: &AtomSpecies) -> Result<(f64, f64)> {
    let d = species.recoil_shift;
    let b0 = interpolate(&spectrum.detuning, &spectrum.background, d)?;
    let env: Vec<f64> = spectrum.fringe_lower.iter().map(|z| z.norm()).collect();
    let e0 = interpolate(&spectrum.detuning, &env, d)?;
    Ok((b0, e0 / b0))
}

/// Brightness and contrast of the simplified model in which each Ramsey
/// interferometer has a₊ = a₋ = a at resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleModel {
    pub mean: f64,
    /// r = ⟨a²⟩ / ⟨a⟩.
    pub r: f64,
}

impl SimpleModel {
    /// From weighted samples of a.
    pub fn from_samples(samples: &[(f64, f64)]) -> Self {
        let w: f64 = samples.iter().map(|s| s.0).sum();
        let m1: f64 = samples.iter().map(|(wi, a)| wi * a).sum::<f64>() / w;
        let m2: f64 = samples.iter().map(|(wi, a)| wi * a * a).sum::<f64>() / w;
        SimpleModel { mean: m1, r: m2 / m1 }
    }

    /// b₀ = 2⟨a⟩(1 − r).
    pub fn brightness(&self) -> f64 {
        2.0 * self.mean * (1.0 - self.r)
    }

    /// c₀ = r / 4(1 − r).
    pub fn contrast(&self) -> f64 {
        self.r / (4.0 * (1.0 - self.r))
    }
}

/// F = P′² / P at the grid node nearest `at`, with a central difference over
/// the neighbouring nodes.
pub fn fisher(spectrum: &RBSpectrum, at: f64) -> Result<f64> {
    let x = &spectrum.detuning;
    let n = x.len();
    let out = || Error::OutOfRange {
        what: "detuning",
        value: at,
        lo: x.get(1).copied().unwrap_or(f64::NAN),
        hi: if n >= 2 { x[n - 2] } else { f64::NAN },
    };
    if n < 3 {
        return Err(out());
    }
    let i = x.partition_point(|&xi| xi < at);
    let i = if i == n || (i > 0 && at - x[i - 1] <= x[i] - at) { i - 1 } else { i };
    if i == 0 || i == n - 1 {
        return Err(out());
    }
    let p = &spectrum.signal;
    let dp = (p[i + 1] - p[i - 1]) / (x[i + 1] - x[i - 1]);
    Ok(dp * dp / p[i])
}

/// F at every interior grid node; the end nodes are zero.
pub fn fisher_curve(spectrum: &RBSpectrum) -> Vec<f64> {
    let x = &spectrum.detuning;
    let p = &spectrum.signal;
    (0..x.len())
        .map(|i| {
            if i == 0 || i + 1 == x.len() {
                0.0
            } else {
                let dp = (p[i + 1] - p[i - 1]) / (x[i + 1] - x[i - 1]);
                dp * dp / p[i]
            }
        })
        .collect()
}

/// Resonance estimate F ≈ T_f² b₀ c₀² / (1 + c₀).
pub fn fisher_estimate(fringe_time: f64, b0: f64, c0: f64) -> f64 {
    fringe_time * fringe_time * b0 * c0 * c0 / (1.0 + c0)
}

/// Reference F₀ = T_f² / 40 reached by b₀ = 1/2, c₀ = 1/4.
pub fn fisher_unit(fringe_time: f64) -> f64 {
    fringe_time * fringe_time / 40.0
}

/// F / F₀ from brightness and contrast; the fringe time cancels.
pub fn fisher_ratio(b0: f64, c0: f64) -> f64 {
    40.0 * b0 * c0 * c0 / (1.0 + c0)
}

/// Linear fit of the central fringe phase, arg(−Z_L) ≈ 2T_f(Δ − δ − Δ_s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeFit {
    /// Δ_s (rad/s).
    pub shift: f64,
    /// T_f (s); the fringe period is π/T_f in Δ.
    pub fringe_time: f64,
    /// Half-width of the fit window about Δ = δ (rad/s).
    pub window: f64,
    /// RMS residual of the phase fit (rad).
    pub residual: f64,
}

/// Half a fringe period, π / 2T, for a Ramsey time T.
pub fn fit_half_window(ramsey_time: f64) -> f64 {
    std::f64::consts::PI / (2.0 * ramsey_time)
}

fn wrap(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Fits the lower-branch fringe phase over |Δ − δ| ≤ `half_window`.
pub fn frequency_shift(spectrum: &RBSpectrum, species: &AtomSpecies, half_window: f64) -> Result<FringeFit> {
    let d = species.recoil_shift;
    let pts: Vec<(f64, Complex64)> = spectrum
        .detuning
        .iter()
        .zip(&spectrum.fringe_lower)
        .filter(|(x, _)| (**x - d).abs() <= half_window * (1.0 + 1e-12))
        .map(|(x, z)| (*x - d, -*z))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "only {} detuning points inside the fit window",
            pts.len()
        )));
    }
    let b0 = interpolate(&spectrum.detuning, &spectrum.background, d)?;
    if let Some((x, z)) = pts.iter().find(|(_, z)| !(z.norm() >= 1e-6 * b0)) {
        return Err(Error::DegenerateFit(format!(
            "fringe envelope {:.3e} at Δ−δ = {:.3e} rad/s is below 1e-6 of the brightness",
            z.norm(),
            x
        )));
    }
    let mut phase = Vec::with_capacity(pts.len());
    let mut prev = pts[0].1.arg();
    phase.push(prev);
    for (_, z) in &pts[1..] {
        let next = prev + wrap(z.arg() - prev);
        phase.push(next);
        prev = next;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = phase.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for ((x, _), y) in pts.iter().zip(&phase) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !(slope > 0.0) {
        return Err(Error::DegenerateFit(format!("non-positive phase slope {slope:.3e} s")));
    }
    let residual = (pts
        .iter()
        .zip(&phase)
        .map(|((x, _), y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if residual > FIT_RESIDUAL_LIMIT {
        return Err(Error::DegenerateFit(format!(
            "phase residual {residual:.3} rad exceeds {FIT_RESIDUAL_LIMIT}"
        )));
    }
    Ok(FringeFit {
        shift: -wrap(intercept) / slope,
        fringe_time: slope / 2.0,
        window: half_window,
        residual,
    })
}

/// Ramsey time of the reference speed.
pub fn reference_ramsey_time(config: &RunConfig) -> f64 {
    config.beamline.ramsey_separation / config.velocity.reference_speed
}

/// Detunings used by [`shift_at`]: equally spaced over half a fringe period about δ.
pub fn shift_detunings(config: &RunConfig) -> Vec<f64> {
    let w = fit_half_window(reference_ramsey_time(config));
    let d = config.species.recoil_shift;
    let m = (SHIFT_FIT_POINTS - 1) as f64;
    (0..SHIFT_FIT_POINTS)
        .map(|i| d - w + 2.0 * w * i as f64 / m)
        .collect()
}

/// Averages the signal near δ and fits the fringe phase.
pub fn shift_at(config: &RunConfig) -> Result<FringeFit> {
    let spec = averaged_spectrum_at(config, &shift_detunings(config))?;
    frequency_shift(&spec, &config.species, fit_half_window(reference_ramsey_time(config)))
}

/// Sensitivity of the fringe shift to the waist position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub waist_position: f64,
    /// s = (1/ω_c) dΔ_s/dl_w (1/m).
    pub per_metre: f64,
}

impl Stability {
    pub fn per_micrometre(&self) -> f64 {
        self.per_metre * 1e-6
    }
}

/// Central difference of [`shift_at`] over l_w ± `step`.
pub fn stability(config: &RunConfig, waist_position: f64, step: f64) -> Result<Stability> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("stability step must be positive, got {step}")));
    }
    let hi = shift_at(&config.with_waist_position(waist_position + step)?)?;
    let lo = shift_at(&config.with_waist_position(waist_position - step)?)?;
    Ok(Stability {
        waist_position,
        per_metre: (hi.shift - lo.shift) / (2.0 * step * config.species.clock_frequency),
    })
}

/// Leading residual shift of a counterpropagating pair, g_s/T (v_z l_s / 4 v d_r)² (rad/s).
pub fn counterprop_residual(traj: &Trajectory, beamline: &BeamlineGeometry, gouy_sum: f64) -> f64 {
    let (t, _) = traj.ramsey_times(beamline);
    let x = traj.v_z * beamline.path_sum() / (4.0 * traj.v * beamline.ramsey_separation);
    gouy_sum / t * x * x
}

/// Optimal ratio of laser to atomic divergence, √((z_R/z)² − 1), for a zone at
/// distance `z` from a waist with Rayleigh range `rayleigh_range`.
pub fn matching_ratio(z: f64, rayleigh_range: f64) -> Result<f64> {
    let z = z.abs();
    if !(rayleigh_range > 0.0) || z == 0.0 || z > rayleigh_range {
        return Err(Error::Domain(format!(
            "matching needs 0 < |z| ≤ z_R, got z = {z}, z_R = {rayleigh_range}"
        )));
    }
    let q = rayleigh_range / z;
    Ok((q * q - 1.0).sqrt())
}

/// ⟨Φ²⟩ of one zone at distance `z` from the waist, averaged over a Gaussian
/// transverse distribution ρ(v_z) ∝ exp(−v_z²/v_w²) at a single speed `v`.
/// The atom sees the Doppler detuning k v_z.
pub fn mean_square_area(lg: &LaserGeometry, z: f64, v: f64, transverse_width: f64) -> f64 {
    let k = lg.wavevector;
    let f = |x: f64| {
        let p = effective_pulse(lg, z, v, v, k * transverse_width * x);
        Complex64::new(p.half_area * p.half_area * (-x * x).exp(), 0.0)
    };
    quad::integrate(f, -8.0, 8.0, 1e-13).re / std::f64::consts::PI.sqrt()
}

/// Resonance metrics of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityMetrics {
    pub brightness: f64,
    pub contrast: f64,
    /// r recovered from c₀ through c₀ = r / 4(1 − r).
    pub r: f64,
    /// F / F₀.
    pub fisher_ratio: f64,
}

impl QualityMetrics {
    pub fn new(b0: f64, c0: f64) -> Self {
        QualityMetrics {
            brightness: b0,
            contrast: c0,
            r: 4.0 * c0 / (1.0 + 4.0 * c0),
            fisher_ratio: fisher_ratio(b0, c0),
        }
    }

    /// Evaluates the average at Δ = δ only.
    pub fn at_resonance(config: &RunConfig) -> Result<Self> {
        let spec = averaged_spectrum_at(config, &[config.species.recoil_shift])?;
        let (b0, c0) = brightness_contrast(&spec, &config.species)?;
        Ok(QualityMetrics::new(b0, c0))
    }
}

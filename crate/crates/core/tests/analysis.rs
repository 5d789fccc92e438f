//! Resonance metrics, fringe shifts and waist sensitivity.

mod common;

use common::{hz, with};
use num_complex::Complex64;
use rbclock::analysis::{
    fisher, fisher_curve, fisher_estimate, fisher_unit, frequency_shift, reference_ramsey_time, shift_at,
    stability, QualityMetrics, SimpleModel,
};
use rbclock::average::{build_grid, RBSpectrum};
use rbclock::config::ConfigFile;
use rbclock::error::Error;
use rbclock::RunConfig;
use std::f64::consts::PI;

const T: f64 = 0.09 / 610.0;

fn synthetic(step: f64, half_span: f64) -> RBSpectrum {
    let n = (2.0 * half_span / step).round() as usize + 1;
    let detuning: Vec<f64> = (0..n).map(|i| -half_span + step * i as f64).collect();
    let signal: Vec<f64> = detuning.iter().map(|d| 1.0 + (2.0 * T * d).cos()).collect();
    RBSpectrum {
        background: vec![1.0; n],
        contrast: signal.iter().map(|p| p - 1.0).collect(),
        fringe_lower: vec![Complex64::new(0.0, 0.0); n],
        fringe_upper: vec![Complex64::new(0.0, 0.0); n],
        detuning,
        signal,
    }
}

#[test]
fn fisher_of_manufactured_cosine() {
    let spec = synthetic(2.0, 2.0e4);
    for &at in &[-1.5e4, -7.3e3, -2.0e3, 1.0e3, 4.4e3, 9.9e3] {
        let x = 2.0 * T * at;
        let exact = (2.0 * T * x.sin()).powi(2) / (1.0 + x.cos());
        let got = fisher(&spec, at).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-6, "{at}: {got} vs {exact}");
    }
    // zero slope at the fringe top
    assert_eq!(fisher(&spec, 0.0).unwrap(), 0.0);
    assert!(fisher_curve(&spec).iter().all(|f| *f >= 0.0));
    assert!(matches!(fisher(&spec, -2.0e4), Err(Error::OutOfRange { .. })));
    assert!(matches!(fisher(&spec, 2.5e4), Err(Error::OutOfRange { .. })));
}

#[test]
fn ideal_resonance_estimate() {
    let tf = 1.5e-4;
    assert!((fisher_estimate(tf, 0.5, 0.25) / fisher_unit(tf) - 1.0).abs() < 1e-12);
    // a constant excitation a gives r = a
    let m = SimpleModel::from_samples(&[(0.3, 0.4), (1.1, 0.4), (0.2, 0.4)]);
    assert!((m.r - 0.4).abs() < 1e-15);
    assert!((m.contrast() - 0.4 / (4.0 * 0.6)).abs() < 1e-15);
}

fn coarse(edit: impl FnOnce(&mut ConfigFile)) -> RunConfig {
    with(|f| {
        f.grid.speed_nodes = 150;
        f.grid.transverse_nodes = 30;
        edit(f);
    })
}

#[test]
fn plane_wave_has_no_shift() {
    let c = coarse(|f| {
        f.laser.plane_wave = true;
        f.model.decay = false;
    });
    let fit = shift_at(&c).unwrap();
    assert!(fit.shift.abs() <= hz(1.0), "{} Hz", fit.shift / hz(1.0));
}

#[test]
fn fringe_period_matches_mean_ramsey_time() {
    let c = RunConfig::default();
    let fit = shift_at(&c).unwrap();
    let fitted = 1.0 / (2.0 * fit.fringe_time);
    let nominal = 1.0 / (2.0 * reference_ramsey_time(&c));
    println!("fringe period {:.0} Hz vs {:.0} Hz", fitted, nominal);
    assert!((fitted / nominal - 1.0).abs() < 0.15);
}

#[test]
fn vanishing_fringes_are_a_degenerate_fit() {
    let c = coarse(|f| f.laser.target_pulse_area_pi = 1e-4);
    assert!(matches!(shift_at(&c), Err(Error::DegenerateFit(_))));
    // so is a window holding fewer than three points
    let spec = synthetic(1.0e3, 2.0e4);
    let err = frequency_shift(&spec, &c.species, 100.0).unwrap_err();
    assert!(err.is_numerical());
}

/// Single speed, no transverse spread, no decay: only the Gouy phase moves the fringe.
fn gouy_only(waist: f64) -> RunConfig {
    with(|f| {
        f.grid.speed_min_m_s = 610.0;
        f.grid.speed_max_m_s = 610.0;
        f.grid.speed_nodes = 1;
        f.velocity.transverse_width_m_s = 0.0;
        f.model.decay = false;
        f.laser.waist_position_mm = waist * 1e3;
    })
}

fn gouy_sum(c: &RunConfig) -> f64 {
    let zr = c.laser.rayleigh_range();
    let l = c.beamline.zone_positions;
    (0..4)
        .map(|i| [1.0, -1.0, 1.0, -1.0][i] * ((l[i] - c.laser.waist_position) / zr).atan())
        .sum()
}

#[test]
fn gouy_only_shift_and_stability_match_arctan_sum() {
    for lw in [0.05, 0.2, 0.35, 0.45, 0.6] {
        let c = gouy_only(lw);
        let fit = shift_at(&c).unwrap();
        let expected = gouy_sum(&c) / (4.0 * T);
        assert!((fit.shift - expected).abs() <= 0.01 * expected.abs() + hz(0.5), "{lw}");

        let s = stability(&c, lw, 0.5e-3).unwrap().per_metre;
        let zr = c.laser.rayleigh_range();
        let lorentz: f64 = (0..4)
            .map(|i| {
                let u = (c.beamline.zone_positions[i] - lw) / zr;
                [1.0, -1.0, 1.0, -1.0][i] * (1.0 / zr) / (1.0 + u * u)
            })
            .sum();
        let analytic = -lorentz / (4.0 * T * c.species.clock_frequency);
        println!("l_w = {lw}: s = {s:.4e}, analytic {analytic:.4e}");
        assert!((s / analytic - 1.0).abs() < 0.05);
    }
}

/// Phase of the pulse-weighted transverse average of e^{−i k l_s v_z² / 2v²} at
/// v = 610 m/s, from the closed-form pulse areas.
fn spatial_phase(c: &RunConfig) -> f64 {
    let v = 610.0;
    let k = c.species.wavevector;
    let ls = c.beamline.path_sum();
    let zr = c.laser.rayleigh_range();
    let tau0 = c.laser.waist_radius / v;
    let area = |i: usize, zeta: f64| {
        let x = (c.beamline.zone_positions[i] - c.laser.waist_position) / zr;
        0.5 * c.laser.target_pulse_area * (1.0 + x * x).powf(-0.25) * (-0.25 * zeta * zeta * tau0 * tau0).exp()
    };
    let a_minus = |f1: f64, f2: f64| 0.5 * (2.0 * f1).sin() * (2.0 * f2).sin();
    let grid = build_grid(&c.velocity, &c.grid).unwrap();
    let mut acc = Complex64::new(0.0, 0.0);
    for &(vz, w) in &grid.nodes[0].transverse {
        let z = k * vz;
        let env = a_minus(area(0, z), area(1, z)) * a_minus(area(2, -z), area(3, -z));
        acc += Complex64::from_polar(w * env, -k * ls * vz * vz / (2.0 * v * v));
    }
    acc.arg()
}

#[test]
fn shift_is_sum_of_gouy_and_spatial_terms() {
    let lw = 0.2;
    let base = |gouy: bool, chirp: bool| {
        gouy_only(lw)
            .modify(|f| {
                f.velocity.transverse_width_m_s = 0.5;
                f.grid.transverse_nodes = 201;
                f.model.gouy_phase = gouy;
                f.model.wavefront_chirp = chirp;
            })
            .unwrap()
    };
    let c = base(true, true);
    let gouy_term = gouy_sum(&c) / (4.0 * T);
    let spatial_term = -spatial_phase(&c) / (2.0 * T);
    let off = shift_at(&base(false, false)).unwrap().shift;
    let g = shift_at(&base(true, false)).unwrap().shift;
    let s = shift_at(&base(false, true)).unwrap().shift;
    let both = shift_at(&c).unwrap().shift;
    println!(
        "Hz: none {:.2}, gouy {:.2} (pred {:.2}), spatial {:.2} (pred {:.2}), both {:.2}",
        off / hz(1.0),
        g / hz(1.0),
        gouy_term / hz(1.0),
        s / hz(1.0),
        spatial_term / hz(1.0),
        both / hz(1.0)
    );
    assert!(off.abs() < hz(0.5));
    assert!((g / gouy_term - 1.0).abs() < 0.05);
    assert!((s / spatial_term - 1.0).abs() < 0.05);
    assert!((both / (gouy_term + spatial_term) - 1.0).abs() < 0.05);
}

#[test]
fn stability_integrates_to_shift_difference() {
    let c = RunConfig::default();
    let (a, b, n) = (0.30, 0.50, 21);
    let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let s: Vec<f64> = xs.iter().map(|&x| stability(&c, x, 0.5e-3).unwrap().per_metre).collect();
    let h = (b - a) / (n - 1) as f64;
    let integral: f64 =
        c.species.clock_frequency * h * (s.iter().sum::<f64>() - 0.5 * (s[0] + s[n - 1]));
    let da = shift_at(&c.with_waist_position(a).unwrap()).unwrap().shift;
    let db = shift_at(&c.with_waist_position(b).unwrap()).unwrap().shift;
    println!("∫ s ω_c dl_w = {:.2} Hz, ΔΔ_s = {:.2} Hz", integral / hz(1.0), (db - da) / hz(1.0));
    assert!((integral / (db - da) - 1.0).abs() < 0.02);
}

#[test]
fn flat_doppler_contrast_matches_simple_model() {
    // a = ½ sin²(π/2 e^{−x²/4}) on a flat v_z distribution, x = k v_z τ₀
    let n = 200_000;
    let (mut m1, mut m2) = (0.0, 0.0);
    for i in 0..=n {
        let x = -20.0 + 40.0 * i as f64 / n as f64;
        let a = 0.5 * (0.5 * PI * (-0.25 * x * x).exp()).sin().powi(2);
        m1 += a;
        m2 += a * a;
    }
    let r = m2 / m1;
    let expected = r / (4.0 * (1.0 - r));
    let c = with(|f| {
        f.grid.speed_min_m_s = 610.0;
        f.grid.speed_max_m_s = 610.0;
        f.grid.speed_nodes = 1;
        f.laser.plane_wave = true;
        f.model.decay = false;
        f.velocity.transverse_width_m_s = 20.0;
        f.grid.transverse_nodes = 2001;
    });
    let q = QualityMetrics::at_resonance(&c).unwrap();
    println!("c₀ = {:.4}, simple model {expected:.4}", q.contrast);
    assert!((q.contrast - expected).abs() < 1e-3);
}

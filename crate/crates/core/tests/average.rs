//! Velocity grids and the averaged signal.

mod common;

use common::{hz, preset, with};
use proptest::prelude::*;
use rbclock::analysis::interpolate;
use rbclock::average::{averaged_spectrum, averaged_spectrum_at, build_grid, single_ramsey_average, GridSettings};
use rbclock::interferometer::{Interferometer, Trajectory};
use rbclock::species::CONSTANTS;
use std::f64::consts::PI;

fn single_speed(f: &mut rbclock::config::ConfigFile, v: f64) {
    f.grid.speed_min_m_s = v;
    f.grid.speed_max_m_s = v;
    f.grid.speed_nodes = 1;
}

/// ∫ vⁿ⁺¹ e^{−a v²} / ∫ vⁿ e^{−a v²} on (0, ∞).
fn closed_form_mean(n: u32, a: f64) -> f64 {
    match n {
        2 => 2.0 / (PI * a).sqrt(),
        3 => 0.75 * PI.sqrt() / a.sqrt(),
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn weights_are_normalised(
        nv in 2usize..500,
        nz in 1usize..80,
        vmin in 50.0..400.0f64,
        span in 0.5..5.0f64,
        width in 0.0..3.0f64,
        tilt in -0.01..0.01f64,
    ) {
        let mut dist = rbclock::RunConfig::default().velocity;
        dist.transverse_width = width;
        dist.tilt = tilt;
        let g = build_grid(&dist, &GridSettings {
            speed_min: vmin,
            speed_max: 2200.0,
            speed_nodes: nv,
            transverse_nodes: nz,
            transverse_span: span,
        }).unwrap();
        let total: f64 = g.nodes.iter().map(|n| n.weight).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for n in &g.nodes {
            prop_assert!(n.weight >= 0.0);
            let t: f64 = n.transverse.iter().map(|x| x.1).sum();
            prop_assert!((t - 1.0).abs() <= 1e-12);
            prop_assert!(n.transverse.iter().all(|x| x.1 >= 0.0));
        }
    }
}

#[test]
fn grid_mean_matches_closed_form() {
    for n in [2, 3] {
        let c = with(|f| {
            f.velocity.exponent = n;
            f.grid.speed_min_m_s = 1.0;
            f.grid.speed_max_m_s = 3000.0;
            f.grid.speed_nodes = 3000;
        });
        let a = c.velocity.mass / (2.0 * CONSTANTS.k_b * c.velocity.temperature);
        let g = build_grid(&c.velocity, &c.grid).unwrap();
        let exact = closed_form_mean(n, a);
        assert!((g.weighted_mean_speed() / exact - 1.0).abs() < 1e-4, "n={n}");
    }
}

#[test]
fn transverse_range_covers_three_widths() {
    let c = rbclock::RunConfig::default();
    let g = build_grid(&c.velocity, &c.grid).unwrap();
    for n in &g.nodes {
        let w = c.velocity.transverse_width_at(n.v);
        let lo = n.transverse.first().unwrap().0;
        let hi = n.transverse.last().unwrap().0;
        assert!((lo + 3.0 * w).abs() < 1e-12 && (hi - 3.0 * w).abs() < 1e-12);
    }
}

/// Cubic distribution at 625 K against the quoted mean speed of about 610 m/s.
#[test]
fn cubic_distribution_mean_speed_near_610() {
    let c = with(|f| f.velocity.exponent = 3);
    let g = build_grid(&c.velocity, &c.grid).unwrap();
    let m = g.weighted_mean_speed();
    println!("mean speed, n = 3, 625 K: {m:.1} m/s");
    assert!((m / 610.0 - 1.0).abs() <= 0.02, "mean speed {m:.1} m/s");
}

#[test]
fn single_node_passes_trajectory_through() {
    let c = with(|f| {
        single_speed(f, 700.0);
        f.velocity.transverse_width_m_s = 0.0;
        f.laser.plane_wave = true;
        f.model.decay = false;
    });
    let det: Vec<f64> = (0..41).map(|i| hz(-2.0e4 + 1.0e3 * i as f64)).collect();
    let spec = averaged_spectrum_at(&c, &det).unwrap();
    let ifm = Interferometer::new(&c.species, &c.beamline, &c.laser, &c.flags, c.velocity.reference_speed);
    for (i, &d) in det.iter().enumerate() {
        let r = ifm.evaluate(d, &Trajectory::new(700.0, 0.0).unwrap()).unwrap();
        assert!((spec.signal[i] - (r.p_lower + r.p_upper)).abs() <= 1e-12);
    }
}

#[test]
fn signal_equals_background_times_one_plus_contrast() {
    let c = with(|f| {
        f.grid.speed_nodes = 120;
        f.grid.transverse_nodes = 24;
        f.detuning.points = 301;
    });
    let s = averaged_spectrum(&c).unwrap();
    for i in 0..s.len() {
        let p = s.background[i] * (1.0 + s.contrast[i]);
        assert!((s.signal[i] - p).abs() <= 1e-12, "at {i}: {} vs {p}", s.signal[i]);
        assert!(s.signal[i].is_finite() && s.background[i] >= 0.0);
    }
}

fn tilted_plane_wave(tilt: f64, edit: impl Fn(&mut rbclock::config::ConfigFile)) -> Vec<f64> {
    let c = with(|f| {
        f.laser.plane_wave = true;
        f.velocity.tilt_mrad = tilt;
        f.grid.speed_nodes = 100;
        f.grid.transverse_nodes = 30;
        f.detuning.start_khz = -3000.0;
        f.detuning.stop_khz = 3000.0;
        f.detuning.points = 121;
        edit(f);
    });
    averaged_spectrum(&c).unwrap().signal
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn plane_wave_signal_is_even_in_tilt_without_recoil_or_decay() {
    // scaling mass and temperature together keeps ρ(v) and sends δ → 0
    let edit = |f: &mut rbclock::config::ConfigFile| {
        f.model.decay = false;
        f.species.mass_amu *= 1e9;
        f.velocity.temperature_k *= 1e9;
    };
    for tilt in [0.5, 2.0, 4.0] {
        let d = max_abs_diff(&tilted_plane_wave(tilt, edit), &tilted_plane_wave(-tilt, edit));
        assert!(d <= 1e-10, "tilt {tilt}: {d:e}");
    }
}

#[test]
fn recoil_and_decay_break_tilt_symmetry() {
    let none = |_: &mut rbclock::config::ConfigFile| {};
    let no_decay = |f: &mut rbclock::config::ConfigFile| f.model.decay = false;
    let full = max_abs_diff(&tilted_plane_wave(0.5, none), &tilted_plane_wave(-0.5, none));
    let recoil_only = max_abs_diff(&tilted_plane_wave(0.5, no_decay), &tilted_plane_wave(-0.5, no_decay));
    println!("max |P(α) − P(−α)|: {full:.2e} with decay, {recoil_only:.2e} recoil only");
    assert!(full > recoil_only && recoil_only > 1e-4);
}

#[test]
fn single_interferometer_fringes_dephase() {
    // k v_w T ≈ 70 rad at 610 m/s
    let c = with(|f| {
        single_speed(f, 610.0);
        f.velocity.transverse_width_m_s = 0.05;
        f.grid.transverse_nodes = 4001;
    });
    let k = c.species.wavevector;
    let t = c.beamline.ramsey_separation / 610.0;
    assert!(k * 0.05 * t > 2.0 * PI);
    for x in [-2.0e3, 0.0, 1.7e3, 4.0e3] {
        let (bg, fr) = single_ramsey_average(&c, c.species.recoil_shift + hz(x)).unwrap();
        assert!(fr.norm() < 0.05 * bg, "{} vs {}", fr.norm(), bg);
    }
    // a cold beam keeps its fringes
    let cold = with(|f| {
        single_speed(f, 610.0);
        f.velocity.transverse_width_m_s = 0.0;
        f.laser.plane_wave = true;
    });
    let (bg, fr) = single_ramsey_average(&cold, cold.species.recoil_shift).unwrap();
    assert!(fr.norm() > 0.9 * bg);
}

#[test]
fn doubling_speed_nodes_changes_signal_by_less_than_1e4() {
    let base = rbclock::RunConfig::default();
    let fine = base.modify(|f| f.grid.speed_nodes = 800).unwrap();
    let a = averaged_spectrum(&base).unwrap();
    let b = averaged_spectrum(&fine).unwrap();
    let worst = a
        .signal
        .iter()
        .zip(&b.signal)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max);
    println!("max relative change 400 → 800 speed nodes: {worst:.2e}");
    assert!(worst < 1e-4);
}

fn peak(x: &[f64], y: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    let mut best = (f64::NAN, f64::MIN);
    for (&xi, &yi) in x.iter().zip(y) {
        if keep(xi) && yi > best.1 {
            best = (xi, yi);
        }
    }
    best.0
}

#[test]
fn tilted_beam_background_splits_by_doppler() {
    let c = preset("fig2_tilted")
        .modify(|f| {
            f.detuning.points = 481;
            f.grid.speed_nodes = 200;
        })
        .unwrap();
    let s = averaged_spectrum(&c).unwrap();
    let lo = peak(&s.detuning, &s.background, |x| x < 0.0) / hz(1e6);
    let hi = peak(&s.detuning, &s.background, |x| x > 0.0) / hz(1e6);
    println!("tilted background peaks at {lo:.2} and {hi:.2} MHz");
    // slow atoms carry most of the background, so the peaks sit inside k v_m α ≈ 3.7 MHz
    assert!(lo < -2.0 && lo > -5.0);
    assert!(hi > 2.0 && hi < 5.0);
    // the untilted beam has one central peak instead
    let flat = c.modify(|f| f.velocity.tilt_mrad = 0.0).unwrap();
    let s0 = averaged_spectrum(&flat).unwrap();
    let centre = interpolate(&s0.detuning, &s0.background, 0.0).unwrap();
    let side = interpolate(&s0.detuning, &s0.background, hz(4e6)).unwrap();
    assert!(centre > 3.0 * side);
}

//! Sweeps of the resonance metrics over waist position and waist radius, with
//! golden-section refinement of the Fisher-information maximum.

use rayon::prelude::*;

use crate::analysis::{shift_at, stability, QualityMetrics, STABILITY_STEP};
use crate::config::RunConfig;
use crate::error::{Error, Result};

/// Refinement tolerance of the Fisher maximum (m).
pub const REFINE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    WaistPosition,
    WaistRadius,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::WaistPosition => "waist_position",
            SweepParameter::WaistRadius => "waist_radius",
        }
    }

    fn apply(&self, config: &RunConfig, value: f64) -> Result<RunConfig> {
        match self {
            SweepParameter::WaistPosition => config.with_waist_position(value),
            SweepParameter::WaistRadius => config.with_waist_radius(value),
        }
    }
}

/// Metrics at one sweep node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepNode {
    /// Swept value (m).
    pub value: f64,
    pub brightness: f64,
    pub contrast: f64,
    /// F / F₀.
    pub fisher_ratio: f64,
    /// Δ_s (rad/s); NaN when shifts were not requested.
    pub shift: f64,
    /// T_f (s); NaN when shifts were not requested.
    pub fringe_time: f64,
    /// s (1/m); NaN when shifts were not requested.
    pub stability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Argmax {
    pub value: f64,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub nodes: Vec<SweepNode>,
    /// Maximum of F / F₀, refined between the bracketing nodes.
    pub argmax_fisher: Argmax,
    pub argmax_brightness: Argmax,
    /// Node with the largest |Δ_s|, if shifts were computed.
    pub argmax_abs_shift: Option<Argmax>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Also fit Δ_s and s at each node.
    pub shifts: bool,
    /// Waist-position step for s (m).
    pub stability_step: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            shifts: true,
            stability_step: STABILITY_STEP,
        }
    }
}

/// `n` equally spaced values over `range`; a single node sits at the lower end.
pub fn linspace(range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    let (a, b) = range;
    if n == 0 {
        return Err(Error::Domain("a sweep needs at least one node".into()));
    }
    if !(a.is_finite() && b.is_finite()) || (n > 1 && !(b > a)) {
        return Err(Error::Domain(format!("sweep range [{a}, {b}] is not increasing")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn evaluate_node(config: &RunConfig, parameter: SweepParameter, value: f64, options: &SweepOptions) -> Result<SweepNode> {
    let c = parameter.apply(config, value)?;
    let q = QualityMetrics::at_resonance(&c)?;
    let (shift, fringe_time, s) = if options.shifts {
        let fit = shift_at(&c)?;
        let st = stability(&c, c.laser.waist_position, options.stability_step)?;
        (fit.shift, fit.fringe_time, st.per_metre)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(SweepNode {
        value,
        brightness: q.brightness,
        contrast: q.contrast,
        fisher_ratio: q.fisher_ratio,
        shift,
        fringe_time,
        stability: s,
    })
}

/// Maximises `f` on [a, b] by golden-section search to tolerance `tol`.
pub fn golden_section_max(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<Argmax> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd {
        Argmax { value: c, metric: fc }
    } else {
        Argmax { value: d, metric: fd }
    })
}

fn best_by(nodes: &[SweepNode], key: impl Fn(&SweepNode) -> f64) -> usize {
    let mut best = 0;
    for (i, n) in nodes.iter().enumerate() {
        if key(n) > key(&nodes[best]) {
            best = i;
        }
    }
    best
}

/// Evaluates the metrics at each value of `parameter` and locates the maxima.
pub fn sweep(config: &RunConfig, parameter: SweepParameter, values: &[f64], options: &SweepOptions) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Domain("a sweep needs at least one node".into()));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("sweep nodes must be strictly increasing".into()));
    }
    let nodes: Vec<SweepNode> = values
        .par_iter()
        .map(|&v| evaluate_node(config, parameter, v, options))
        .collect::<Result<_>>()?;
    for n in &nodes {
        let shift_ok = !options.shifts || (n.shift.is_finite() && n.stability.is_finite());
        if !(n.brightness.is_finite() && n.contrast.is_finite() && n.fisher_ratio.is_finite() && shift_ok) {
            return Err(Error::DegenerateFit(format!(
                "non-finite metric at {} = {}",
                parameter.name(),
                n.value
            )));
        }
    }

    let i = best_by(&nodes, |n| n.fisher_ratio);
    let grid_best = Argmax {
        value: nodes[i].value,
        metric: nodes[i].fisher_ratio,
    };
    let argmax_fisher = if nodes.len() < 3 {
        grid_best
    } else {
        let lo = nodes[i.saturating_sub(1)].value;
        let hi = nodes[(i + 1).min(nodes.len() - 1)].value;
        let tol = match parameter {
            SweepParameter::WaistPosition => REFINE_TOLERANCE,
            // radii are a few 0.1 mm; keep the same relative resolution
            SweepParameter::WaistRadius => REFINE_TOLERANCE * 1e-2,
        };
        let refined = golden_section_max(
            |x| Ok(QualityMetrics::at_resonance(&parameter.apply(config, x)?)?.fisher_ratio),
            lo,
            hi,
            tol,
        )?;
        if refined.metric >= grid_best.metric {
            refined
        } else {
            grid_best
        }
    };
    let j = best_by(&nodes, |n| n.brightness);
    let argmax_brightness = Argmax {
        value: nodes[j].value,
        metric: nodes[j].brightness,
    };
    let argmax_abs_shift = options.shifts.then(|| {
        let k = best_by(&nodes, |n| n.shift.abs());
        Argmax {
            value: nodes[k].value,
            metric: nodes[k].shift,
        }
    });
    Ok(SweepResult {
        parameter,
        nodes,
        argmax_fisher,
        argmax_brightness,
        argmax_abs_shift,
    })
}

/// Default waist-position grid: −10 to 90 cm, 101 nodes.
pub fn default_position_grid() -> Vec<f64> {
    linspace((-0.10, 0.90), 101).expect("valid range")
}

/// Default waist-radius grid: 0.05 to 0.6 mm, 56 nodes.
pub fn default_radius_grid() -> Vec<f64> {
    linspace((0.05e-3, 0.6e-3), 56).expect("valid range")
}

pub fn sweep_waist_position(config: &RunConfig, range: (f64, f64), n: usize, options: &SweepOptions) -> Result<SweepResult> {
    sweep(config, SweepParameter::WaistPosition, &linspace(range, n)?, options)
}

pub fn sweep_waist_size(config: &RunConfig, range: (f64, f64), n: usize, options: &SweepOptions) -> Result<SweepResult> {
    sweep(config, SweepParameter::WaistRadius, &linspace(range, n)?, options)
}

impl SweepResult {
    /// Interior local minima of |s| (requires shifts).
    pub fn stability_minima(&self) -> Vec<f64> {
        let s: Vec<f64> = self.nodes.iter().map(|n| n.stability.abs()).collect();
        (1..s.len().saturating_sub(1))
            .filter(|&i| s[i] < s[i - 1] && s[i] <= s[i + 1])
            .map(|i| self.nodes[i].value)
            .collect()
    }

    /// Waist positions where Δ_s changes sign, by linear interpolation.
    pub fn shift_zero_crossings(&self) -> Vec<f64> {
        self.nodes
            .windows(2)
            .filter(|w| w[0].shift.signum() != w[1].shift.signum() && w[0].shift.is_finite())
            .map(|w| w[0].value - w[0].shift * (w[1].value - w[0].value) / (w[1].shift - w[0].shift))
            .collect()
    }
}

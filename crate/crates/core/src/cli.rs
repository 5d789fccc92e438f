//! Command-line front end: loads a configuration, runs one study and writes
//! a CSV table plus a JSON run summary.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure, 64 usage.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    brightness_contrast, fisher_curve, fisher_ratio, fit_half_window, frequency_shift, reference_ramsey_time,
    shift_detunings, QualityMetrics,
};
use crate::average::{averaged_spectrum, averaged_spectrum_at, RBSpectrum};
use crate::config::{load_config_with_overrides, RunConfig};
use crate::error::{Error, Result};
use crate::optimizer::{linspace, sweep, SweepOptions, SweepParameter, SweepResult};
use crate::propagator::{oracle_sweep, ramsey_background_pair, ORACLE_AREAS, ORACLE_Z_MULTIPLES};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Version tag written into every CSV header.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Parser)]
#[command(name = "rbclock", version, about = "Ramsey-Bordé beam clock simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Configuration file (TOML). Built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a configuration key, e.g. `laser.waist_radius_mm=0.2`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Worker threads, 0 for one per core. Does not change the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Averaged background, contrast and signal over the configured detunings.
    Spectrum,
    /// Signal, fringes and envelopes near the lower recoil resonance.
    Fringes {
        /// Half-width of the window about δ (kHz).
        #[arg(long, default_value_t = 15.0)]
        span_khz: f64,
        #[arg(long, default_value_t = 3001)]
        points: usize,
    },
    /// Metrics over waist positions.
    SweepWaist {
        /// First and last waist position (cm).
        #[arg(long, num_args = 2, value_names = ["START", "STOP"], default_values_t = [-10.0, 90.0])]
        range_cm: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        nodes: usize,
        /// Skip the fringe-shift fits.
        #[arg(long)]
        no_shifts: bool,
    },
    /// Metrics over waist radii.
    SweepSize {
        /// First and last waist radius (mm).
        #[arg(long, num_args = 2, value_names = ["START", "STOP"], default_values_t = [0.05, 0.6])]
        range_mm: Vec<f64>,
        #[arg(long, default_value_t = 56)]
        nodes: usize,
        /// Also fit fringe shifts.
        #[arg(long)]
        shifts: bool,
    },
    /// Fisher information F = P′²/P over the configured detunings.
    Fisher,
    /// Fringe phase fit of the central lower recoil fringe.
    Shift,
    /// Fringe shift and its waist-position sensitivity over waist positions.
    Stability {
        #[arg(long, num_args = 2, value_names = ["START", "STOP"], default_values_t = [-10.0, 90.0])]
        range_cm: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        nodes: usize,
        /// Finite-difference step (mm).
        #[arg(long, default_value_t = 0.5)]
        step_mm: f64,
    },
    /// Magnus pulses against the time-ordered propagator.
    OracleCheck {
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Detuning points on Δτ₀ ∈ [−2, 2].
        #[arg(long, default_value_t = 17)]
        points: usize,
        #[arg(long, default_value_t = 1e-2)]
        threshold: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Fringes { .. } => "fringes",
            Command::SweepWaist { .. } => "sweep-waist",
            Command::SweepSize { .. } => "sweep-size",
            Command::Fisher => "fisher",
            Command::Shift => "shift",
            Command::Stability { .. } => "stability",
            Command::OracleCheck { .. } => "oracle-check",
        }
    }
}

/// A CSV table with its `#` metadata header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, columns: Vec<&'static str>) -> Self {
        Table {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    /// Renders the table. Floats use the shortest round-trip representation.
    pub fn render(&self, command: &str, config_hash: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# rbclock {VERSION}");
        let _ = writeln!(s, "# schema: {}/{SCHEMA_VERSION}", self.name);
        let _ = writeln!(s, "# command: {command}");
        let _ = writeln!(s, "# config_sha256: {config_hash}");
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|x| format!("{x}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Everything a command produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub metrics: Value,
    /// False when a check command found a violation.
    pub passed: bool,
}

pub fn config_hash(config: &RunConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn spectrum_table(name: &str, s: &RBSpectrum) -> Table {
    let mut t = Table::new(name, vec!["delta_hz", "b", "c", "P", "env_L", "env_U"]);
    for i in 0..s.len() {
        t.rows.push(vec![
            s.detuning[i] / TWO_PI,
            s.background[i],
            s.contrast[i],
            s.signal[i],
            s.fringe_lower[i].norm(),
            s.fringe_upper[i].norm(),
        ]);
    }
    t
}

fn resonance_metrics(config: &RunConfig, s: &RBSpectrum) -> Value {
    match brightness_contrast(s, &config.species) {
        Ok((b0, c0)) => json!({ "b0": b0, "c0": c0, "fisher_ratio": fisher_ratio(b0, c0) }),
        Err(_) => Value::Null,
    }
}

fn sweep_table(name: &str, r: &SweepResult) -> Table {
    let (label, scale) = match r.parameter {
        SweepParameter::WaistPosition => ("waist_position_cm", 1e2),
        SweepParameter::WaistRadius => ("waist_radius_mm", 1e3),
    };
    let mut t = Table::new(
        name,
        vec![label, "b0", "c0", "F_over_F0", "shift_hz", "fringe_time_s", "stability_per_um"],
    );
    for n in &r.nodes {
        t.rows.push(vec![
            n.value * scale,
            n.brightness,
            n.contrast,
            n.fisher_ratio,
            n.shift / TWO_PI,
            n.fringe_time,
            n.stability * 1e-6,
        ]);
    }
    t
}

fn sweep_metrics(r: &SweepResult) -> Value {
    let scale = match r.parameter {
        SweepParameter::WaistPosition => 1e2,
        SweepParameter::WaistRadius => 1e3,
    };
    let unit = match r.parameter {
        SweepParameter::WaistPosition => "cm",
        SweepParameter::WaistRadius => "mm",
    };
    let mut m = json!({
        "parameter": r.parameter.name(),
        "unit": unit,
        "argmax_fisher": r.argmax_fisher.value * scale,
        "max_fisher_ratio": r.argmax_fisher.metric,
        "argmax_brightness": r.argmax_brightness.value * scale,
        "max_brightness": r.argmax_brightness.metric,
    });
    if let Some(a) = r.argmax_abs_shift {
        m["argmax_abs_shift"] = json!(a.value * scale);
        m["max_abs_shift_hz"] = json!(a.metric.abs() / TWO_PI);
        m["shift_zero_crossings"] = json!(r.shift_zero_crossings().iter().map(|x| x * scale).collect::<Vec<_>>());
        m["stability_minima"] = json!(r.stability_minima().iter().map(|x| x * scale).collect::<Vec<_>>());
        let peak = r.nodes.iter().map(|n| n.stability.abs()).fold(0.0, f64::max);
        m["peak_abs_stability_per_um"] = json!(peak * 1e-6);
    }
    m
}

fn range_of(v: &[f64], scale: f64) -> Result<(f64, f64)> {
    match v {
        [a, b] => Ok((a * scale, b * scale)),
        _ => Err(Error::Domain("a range needs exactly two values".into())),
    }
}

/// Runs `command` on a validated configuration.
pub fn execute(command: &Command, config: &RunConfig) -> Result<Outcome> {
    let d = config.species.recoil_shift;
    match command {
        Command::Spectrum => {
            let s = averaged_spectrum(config)?;
            Ok(Outcome {
                metrics: resonance_metrics(config, &s),
                tables: vec![spectrum_table("spectrum", &s)],
                passed: true,
            })
        }
        Command::Fringes { span_khz, points } => {
            if !(*span_khz > 0.0) || *points < 2 {
                return Err(Error::Domain("fringe window needs span > 0 and at least two points".into()));
            }
            let grid = linspace((d - TWO_PI * 1e3 * span_khz, d + TWO_PI * 1e3 * span_khz), *points)?;
            let s = averaged_spectrum_at(config, &grid)?;
            let mut t = Table::new(
                "fringes",
                vec!["delta_hz", "P", "b", "fringe_L", "fringe_U", "env_L", "env_U"],
            );
            for i in 0..s.len() {
                t.rows.push(vec![
                    s.detuning[i] / TWO_PI,
                    s.signal[i],
                    s.background[i],
                    s.fringe_lower[i].re,
                    s.fringe_upper[i].re,
                    s.fringe_lower[i].norm(),
                    s.fringe_upper[i].norm(),
                ]);
            }
            Ok(Outcome {
                metrics: resonance_metrics(config, &s),
                tables: vec![t],
                passed: true,
            })
        }
        Command::Fisher => {
            let s = averaged_spectrum(config)?;
            let f = fisher_curve(&s);
            // F₀ with T_f taken as the Ramsey time of the reference speed
            let t_ref = reference_ramsey_time(config);
            let f0 = t_ref * t_ref / 40.0;
            let mut t = Table::new("fisher", vec!["delta_hz", "P", "F_per_hz2", "F_over_F0"]);
            for i in 0..s.len() {
                t.rows.push(vec![s.detuning[i] / TWO_PI, s.signal[i], f[i] * TWO_PI * TWO_PI, f[i] / f0]);
            }
            let mut m = resonance_metrics(config, &s);
            let (imax, fmax) = f
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
            m["max_F_over_F0"] = json!(fmax / f0);
            m["argmax_F_delta_hz"] = json!(s.detuning[imax] / TWO_PI);
            Ok(Outcome {
                metrics: m,
                tables: vec![t],
                passed: true,
            })
        }
        Command::Shift => {
            let det = shift_detunings(config);
            let s = averaged_spectrum_at(config, &det)?;
            let fit = frequency_shift(&s, &config.species, fit_half_window(reference_ramsey_time(config)))?;
            let q = QualityMetrics::at_resonance(config)?;
            let mut t = Table::new("shift", vec!["delta_minus_recoil_hz", "phase_rad", "fit_rad", "env_L"]);
            let mut prev = None;
            for i in 0..s.len() {
                let x = s.detuning[i] - d;
                let raw = (-s.fringe_lower[i]).arg();
                let ph = match prev {
                    None => raw,
                    Some(p) => {
                        let mut y: f64 = raw;
                        while y - p > std::f64::consts::PI {
                            y -= TWO_PI;
                        }
                        while y - p < -std::f64::consts::PI {
                            y += TWO_PI;
                        }
                        y
                    }
                };
                prev = Some(ph);
                t.rows.push(vec![
                    x / TWO_PI,
                    ph,
                    2.0 * fit.fringe_time * (x - fit.shift),
                    s.fringe_lower[i].norm(),
                ]);
            }
            Ok(Outcome {
                metrics: json!({
                    "shift_hz": fit.shift / TWO_PI,
                    "fringe_time_s": fit.fringe_time,
                    "fringe_period_hz": 1.0 / (2.0 * fit.fringe_time),
                    "fit_half_window_hz": fit.window / TWO_PI,
                    "fit_residual_rad": fit.residual,
                    "fractional_shift": fit.shift / config.species.clock_frequency,
                    "b0": q.brightness,
                    "c0": q.contrast,
                    "fisher_ratio": q.fisher_ratio,
                }),
                tables: vec![t],
                passed: true,
            })
        }
        Command::SweepWaist {
            range_cm,
            nodes,
            no_shifts,
        } => {
            let r = sweep(
                config,
                SweepParameter::WaistPosition,
                &linspace(range_of(range_cm, 1e-2)?, *nodes)?,
                &SweepOptions {
                    shifts: !no_shifts,
                    ..Default::default()
                },
            )?;
            Ok(Outcome {
                metrics: sweep_metrics(&r),
                tables: vec![sweep_table("sweep", &r)],
                passed: true,
            })
        }
        Command::SweepSize {
            range_mm,
            nodes,
            shifts,
        } => {
            let r = sweep(
                config,
                SweepParameter::WaistRadius,
                &linspace(range_of(range_mm, 1e-3)?, *nodes)?,
                &SweepOptions {
                    shifts: *shifts,
                    ..Default::default()
                },
            )?;
            Ok(Outcome {
                metrics: sweep_metrics(&r),
                tables: vec![sweep_table("sweep", &r)],
                passed: true,
            })
        }
        Command::Stability {
            range_cm,
            nodes,
            step_mm,
        } => {
            let r = sweep(
                config,
                SweepParameter::WaistPosition,
                &linspace(range_of(range_cm, 1e-2)?, *nodes)?,
                &SweepOptions {
                    shifts: true,
                    stability_step: step_mm * 1e-3,
                },
            )?;
            let mut t = Table::new(
                "stability",
                vec!["waist_position_cm", "shift_hz", "stability_per_m", "stability_per_um"],
            );
            for n in &r.nodes {
                t.rows.push(vec![n.value * 1e2, n.shift / TWO_PI, n.stability, n.stability * 1e-6]);
            }
            Ok(Outcome {
                metrics: sweep_metrics(&r),
                tables: vec![t],
                passed: true,
            })
        }
        Command::OracleCheck {
            steps,
            points,
            threshold,
        } => {
            let v = config.velocity.reference_speed;
            let rows = oracle_sweep(&config.laser, v, &ORACLE_AREAS, &ORACLE_Z_MULTIPLES, *points, *steps)?;
            let zr = config.laser.rayleigh_range();
            let mut t = Table::new(
                "oracle",
                vec!["area_pi", "z_over_zr", "detuning_tau0", "p_magnus", "p_trotter", "abs_diff"],
            );
            let mut worst: f64 = 0.0;
            for r in &rows {
                worst = worst.max(r.abs_diff());
                t.rows.push(vec![
                    r.area / std::f64::consts::PI,
                    r.z / zr,
                    r.detuning_tau0,
                    r.magnus,
                    r.trotter,
                    r.abs_diff(),
                ]);
            }

            // Ramsey backgrounds of two π/2 plane-wave zones at several speeds
            let plane = crate::laser::LaserGeometry {
                plane_wave: true,
                target_pulse_area: std::f64::consts::PI / 2.0,
                ..config.laser
            };
            let mut a = Table::new("ramsey_background", vec!["speed_m_s", "delta_hz", "a_magnus", "a_exact"]);
            for factor in [0.5, 1.0, 2.0] {
                let speed = v * factor;
                let tau0 = plane.waist_radius / speed;
                for i in 0..201 {
                    let x = -4.0 + 8.0 * i as f64 / 200.0;
                    let (m, e) = ramsey_background_pair(&plane, speed, v, x / tau0, *steps)?;
                    a.rows.push(vec![speed, x / tau0 / TWO_PI, m, e]);
                }
            }
            let passed = worst <= *threshold;
            Ok(Outcome {
                metrics: json!({
                    "max_abs_diff": worst,
                    "threshold": threshold,
                    "trotter_steps": steps,
                    "pass": passed,
                }),
                tables: vec![t, a],
                passed,
            })
        }
    }
}

fn summary(command: &Command, config: &RunConfig, hash: &str, outcome: &Outcome, wall: f64) -> Value {
    json!({
        "program": "rbclock",
        "version": VERSION,
        "command": command.name(),
        "config_sha256": hash,
        "config": serde_json::to_value(config.file()).unwrap_or(Value::Null),
        "derived": {
            "recoil_shift_hz": config.species.recoil_shift_hz(),
            "clock_frequency_hz": config.species.clock_frequency / TWO_PI,
            "wavevector_per_m": config.species.wavevector,
            "rayleigh_range_m": config.laser.rayleigh_range(),
            "ramsey_time_s": reference_ramsey_time(config),
            "mean_position_m": config.beamline.mean_position(),
            "path_sum_m": config.beamline.path_sum(),
        },
        "grid": {
            "speed_nodes": config.grid.speed_nodes,
            "transverse_nodes": config.grid.transverse_nodes,
            "detuning_points": config.detuning.len(),
        },
        "metrics": outcome.metrics,
        "pass": outcome.passed,
        "wall_time_s": wall,
    })
}

/// Writes the tables as `<name>.csv` and the summary as `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, command: &Command, config: &RunConfig, outcome: &Outcome, wall: f64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let hash = config_hash(config);
    let mut written = Vec::new();
    for t in &outcome.tables {
        let p = dir.join(format!("{}.csv", t.name));
        std::fs::write(&p, t.render(command.name(), &hash))?;
        written.push(p);
    }
    let p = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary(command, config, &hash, outcome, wall))
        .map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&p, text + "\n")?;
    written.push(p);
    Ok(written)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    load_config_with_overrides(&text, &cli.overrides)
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // a pool already built by an earlier call in this process is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let start = Instant::now();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let outcome = match execute(&cli.command, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match write_outputs(&cli.out, &cli.command, &config, &outcome, start.elapsed().as_secs_f64()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    }
    if outcome.passed {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

//! Run configuration: the on-disk document, its validation, and derived SI quantities.
//!
//! The document uses mm, kHz and multiples of π in its key names; everything
//! inside the crate is SI with angular frequencies.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::average::{GridSettings, VelocityDistribution};
use crate::error::{Error, Result};
use crate::laser::LaserGeometry;
use crate::species::{derive_species, AtomSpecies, CA40_LINEWIDTH_HZ, CA40_MASS_AMU, CONSTANTS};

/// Optical-path layout of the four interaction zones.
///
/// Zone positions follow the folded beam, so they need not be monotonic in
/// the order the atoms meet them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamlineGeometry {
    /// l₁..l₄ (m).
    pub zone_positions: [f64; 4],
    /// Atomic-path separation d_r of the zones in the first interferometer (m).
    pub ramsey_separation: f64,
    /// Separation in the second interferometer (m); equal to `ramsey_separation` by default.
    pub second_ramsey_separation: f64,
    /// Extra laser phase at each zone (rad), from sub-wavelength path offsets.
    pub zone_phase_offsets: [f64; 4],
}

impl BeamlineGeometry {
    pub fn new(
        zone_positions: [f64; 4],
        ramsey_separation: f64,
        second_ramsey_separation: f64,
        zone_phase_offsets: [f64; 4],
    ) -> Result<Self> {
        if zone_positions.iter().any(|l| !l.is_finite()) {
            return Err(Error::validation("beamline.zone_positions_mm", "must be finite"));
        }
        if !(ramsey_separation.is_finite() && ramsey_separation > 0.0) {
            return Err(Error::validation("beamline.ramsey_separation_mm", "must be positive"));
        }
        if !(second_ramsey_separation.is_finite() && second_ramsey_separation > 0.0) {
            return Err(Error::validation(
                "beamline.second_ramsey_separation_mm",
                "must be positive",
            ));
        }
        Ok(BeamlineGeometry {
            zone_positions,
            ramsey_separation,
            second_ramsey_separation,
            zone_phase_offsets,
        })
    }

    /// {0, 51, 77, 30} cm with 9 cm Ramsey separation.
    pub fn calcium_default() -> Self {
        BeamlineGeometry {
            zone_positions: [0.0, 0.51, 0.77, 0.30],
            ramsey_separation: 0.09,
            second_ramsey_separation: 0.09,
            zone_phase_offsets: [0.0; 4],
        }
    }

    /// l̄ = Σ lᵢ / 4.
    pub fn mean_position(&self) -> f64 {
        self.zone_positions.iter().sum::<f64>() / 4.0
    }

    /// l_s = (l₁ − l₂) + (l₃ − l₄).
    pub fn path_sum(&self) -> f64 {
        let l = &self.zone_positions;
        (l[0] - l[1]) + (l[2] - l[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecayConvention {
    /// Populations: a₊ → a_g + e^{−γT}a_e, a₋ → e^{−γT}a₋.
    #[default]
    Population,
    /// As `Population` but the envelope decays as e^{−γT/2}.
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFlags {
    pub relativistic_doppler: bool,
    pub decay: bool,
    pub decay_convention: DecayConvention,
    /// Keep the carrier k·(lᵢ − l_w) in each zone phase. Off means zone
    /// positions are taken as whole numbers of wavelengths.
    pub carrier_phase: bool,
    /// Keep the −½ arctan(z/z_R) Gouy term of each pulse phase.
    pub gouy_phase: bool,
    /// Keep the detuning-dependent wavefront term −zΔ²/2kv² of each pulse phase.
    pub wavefront_chirp: bool,
}

impl Default for ModelFlags {
    fn default() -> Self {
        ModelFlags {
            relativistic_doppler: false,
            decay: true,
            decay_convention: DecayConvention::Population,
            carrier_phase: false,
            gouy_phase: true,
            wavefront_chirp: true,
        }
    }
}

// ---------------------------------------------------------------------------
// On-disk document

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeciesSection {
    pub wavelength_nm: f64,
    pub mass_amu: f64,
    /// γ/2π.
    pub linewidth_hz: f64,
}

impl Default for SpeciesSection {
    fn default() -> Self {
        SpeciesSection {
            wavelength_nm: 657.0,
            mass_amu: CA40_MASS_AMU,
            linewidth_hz: CA40_LINEWIDTH_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamlineSection {
    pub zone_positions_mm: [f64; 4],
    pub ramsey_separation_mm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_ramsey_separation_mm: Option<f64>,
    pub zone_offsets_wavelengths: [f64; 4],
}

impl Default for BeamlineSection {
    fn default() -> Self {
        BeamlineSection {
            zone_positions_mm: [0.0, 510.0, 770.0, 300.0],
            ramsey_separation_mm: 90.0,
            second_ramsey_separation_mm: None,
            zone_offsets_wavelengths: [0.0; 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserSection {
    pub waist_position_mm: f64,
    pub waist_radius_mm: f64,
    /// A/π.
    pub target_pulse_area_pi: f64,
    pub plane_wave: bool,
}

impl Default for LaserSection {
    fn default() -> Self {
        LaserSection {
            waist_position_mm: 395.0,
            waist_radius_mm: 0.125,
            target_pulse_area_pi: 0.5,
            plane_wave: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VelocitySection {
    /// Power n in ρ(v) ∝ vⁿ exp(−mv²/2k_BT); 2 or 3.
    pub exponent: u32,
    pub temperature_k: f64,
    /// v_m: pulse-area normalisation speed and transverse-width reference.
    pub reference_speed_m_s: f64,
    /// Transverse width v_w at v = v_m.
    pub transverse_width_m_s: f64,
    pub tilt_mrad: f64,
}

impl Default for VelocitySection {
    fn default() -> Self {
        VelocitySection {
            exponent: 2,
            temperature_k: 625.0,
            reference_speed_m_s: 610.0,
            transverse_width_m_s: 0.5,
            tilt_mrad: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub speed_min_m_s: f64,
    pub speed_max_m_s: f64,
    pub speed_nodes: usize,
    pub transverse_nodes: usize,
    /// Half-width of the transverse grid in units of v_w.
    pub transverse_span: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            speed_min_m_s: 100.0,
            speed_max_m_s: 2200.0,
            speed_nodes: 400,
            transverse_nodes: 40,
            transverse_span: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetuningSection {
    pub start_khz: f64,
    pub stop_khz: f64,
    pub points: usize,
}

impl Default for DetuningSection {
    fn default() -> Self {
        DetuningSection {
            start_khz: -15.0,
            stop_khz: 15.0,
            points: 3001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub relativistic_doppler: bool,
    pub decay: bool,
    pub decay_convention: DecayConvention,
    pub carrier_phase: bool,
    pub gouy_phase: bool,
    pub wavefront_chirp: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let f = ModelFlags::default();
        ModelSection {
            relativistic_doppler: f.relativistic_doppler,
            decay: f.decay,
            decay_convention: f.decay_convention,
            carrier_phase: f.carrier_phase,
            gouy_phase: f.gouy_phase,
            wavefront_chirp: f.wavefront_chirp,
        }
    }
}

/// The configuration document as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub species: SpeciesSection,
    pub beamline: BeamlineSection,
    pub laser: LaserSection,
    pub velocity: VelocitySection,
    pub grid: GridSection,
    pub detuning: DetuningSection,
    pub model: ModelSection,
}

// ---------------------------------------------------------------------------

/// A validated configuration with all derived SI quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub species: AtomSpecies,
    pub beamline: BeamlineGeometry,
    pub laser: LaserGeometry,
    pub velocity: VelocityDistribution,
    pub grid: GridSettings,
    /// Laser detunings (rad/s), strictly increasing.
    pub detuning: Vec<f64>,
    pub flags: ModelFlags,
    file: ConfigFile,
}

fn positive(field: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::validation(field, format!("must be positive, got {x}")))
    }
}

fn finite(field: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::validation(field, "must be finite"))
    }
}

impl RunConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let s = &file.species;
        let species = derive_species(
            positive("species.wavelength_nm", s.wavelength_nm)? * 1e-9,
            positive("species.mass_amu", s.mass_amu)? * CONSTANTS.amu,
            2.0 * PI * s.linewidth_hz,
        )
        .map_err(|_| Error::validation("species.linewidth_hz", "must be non-negative"))?;

        let b = &file.beamline;
        for (i, l) in b.zone_positions_mm.iter().enumerate() {
            finite(&format!("beamline.zone_positions_mm[{i}]"), *l)?;
        }
        for (i, o) in b.zone_offsets_wavelengths.iter().enumerate() {
            finite(&format!("beamline.zone_offsets_wavelengths[{i}]"), *o)?;
        }
        let d1 = positive("beamline.ramsey_separation_mm", b.ramsey_separation_mm)?;
        let d2 = match b.second_ramsey_separation_mm {
            Some(d) => positive("beamline.second_ramsey_separation_mm", d)?,
            None => d1,
        };
        let beamline = BeamlineGeometry::new(
            b.zone_positions_mm.map(|l| l * 1e-3),
            d1 * 1e-3,
            d2 * 1e-3,
            b.zone_offsets_wavelengths.map(|o| 2.0 * PI * o),
        )?;

        let l = &file.laser;
        let laser = LaserGeometry::new(
            finite("laser.waist_position_mm", l.waist_position_mm)? * 1e-3,
            positive("laser.waist_radius_mm", l.waist_radius_mm)? * 1e-3,
            positive("laser.target_pulse_area_pi", l.target_pulse_area_pi)? * PI,
            species.wavevector,
            l.plane_wave,
        )?;

        let v = &file.velocity;
        if !(v.exponent == 2 || v.exponent == 3) {
            return Err(Error::validation("velocity.exponent", "must be 2 or 3"));
        }
        if !(v.transverse_width_m_s.is_finite() && v.transverse_width_m_s >= 0.0) {
            return Err(Error::validation("velocity.transverse_width_m_s", "must be non-negative"));
        }
        let tilt = finite("velocity.tilt_mrad", v.tilt_mrad)? * 1e-3;
        if tilt.abs() >= PI / 2.0 {
            return Err(Error::validation("velocity.tilt_mrad", "must be below π/2"));
        }
        let velocity = VelocityDistribution {
            exponent: v.exponent,
            temperature: positive("velocity.temperature_k", v.temperature_k)?,
            mass: species.mass,
            reference_speed: positive("velocity.reference_speed_m_s", v.reference_speed_m_s)?,
            transverse_width: v.transverse_width_m_s,
            tilt,
        };

        let g = &file.grid;
        let vmin = positive("grid.speed_min_m_s", g.speed_min_m_s)?;
        let vmax = positive("grid.speed_max_m_s", g.speed_max_m_s)?;
        if vmax < vmin || vmax >= CONSTANTS.c_light {
            return Err(Error::validation("grid.speed_max_m_s", "must lie in [speed_min, c)"));
        }
        if g.speed_nodes == 0 || (g.speed_nodes == 1) != (vmin == vmax) {
            return Err(Error::validation(
                "grid.speed_nodes",
                "must be ≥ 2, or 1 with speed_min = speed_max",
            ));
        }
        if g.transverse_nodes == 0 {
            return Err(Error::validation("grid.transverse_nodes", "must be ≥ 1"));
        }
        let grid = GridSettings {
            speed_min: vmin,
            speed_max: vmax,
            speed_nodes: g.speed_nodes,
            transverse_nodes: g.transverse_nodes,
            transverse_span: positive("grid.transverse_span", g.transverse_span)?,
        };

        let d = &file.detuning;
        finite("detuning.start_khz", d.start_khz)?;
        finite("detuning.stop_khz", d.stop_khz)?;
        let detuning = match d.points {
            0 => return Err(Error::validation("detuning.points", "must be ≥ 1")),
            1 => vec![2.0 * PI * 1e3 * d.start_khz],
            n => {
                if d.stop_khz <= d.start_khz {
                    return Err(Error::validation(
                        "detuning.stop_khz",
                        "must exceed start_khz (grid is strictly increasing)",
                    ));
                }
                (0..n)
                    .map(|i| {
                        let f = d.start_khz + (d.stop_khz - d.start_khz) * i as f64 / (n - 1) as f64;
                        2.0 * PI * 1e3 * f
                    })
                    .collect()
            }
        };

        let m = &file.model;
        let flags = ModelFlags {
            relativistic_doppler: m.relativistic_doppler,
            decay: m.decay,
            decay_convention: m.decay_convention,
            carrier_phase: m.carrier_phase,
            gouy_phase: m.gouy_phase,
            wavefront_chirp: m.wavefront_chirp,
        };

        Ok(RunConfig {
            species,
            beamline,
            laser,
            velocity,
            grid,
            detuning,
            flags,
            file,
        })
    }

    /// The document this configuration was built from.
    pub fn file(&self) -> &ConfigFile {
        &self.file
    }

    /// Applies an edit to the document and revalidates.
    pub fn modify(&self, edit: impl FnOnce(&mut ConfigFile)) -> Result<RunConfig> {
        let mut file = self.file.clone();
        edit(&mut file);
        RunConfig::from_file(file)
    }

    pub fn with_waist_position(&self, metres: f64) -> Result<RunConfig> {
        self.modify(|f| f.laser.waist_position_mm = metres * 1e3)
    }

    pub fn with_waist_radius(&self, metres: f64) -> Result<RunConfig> {
        self.modify(|f| f.laser.waist_radius_mm = metres * 1e3)
    }

    /// Replaces the detuning grid (rad/s) without touching the document.
    pub fn with_detunings(&self, detuning: Vec<f64>) -> Result<RunConfig> {
        if detuning.is_empty() || detuning.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("detuning", "grid must be non-empty and strictly increasing"));
        }
        let mut c = self.clone();
        c.detuning = detuning;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("configuration serialises")
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_file(ConfigFile::default()).expect("defaults are valid")
    }
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str) -> Result<RunConfig> {
    load_config_with_overrides(text, &[])
}

/// Parses a document and applies `key.path=value` overrides before validation.
pub fn load_config_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let file: ConfigFile = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    RunConfig::from_file(file)
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("override key `{key}` is malformed")));
    }
    let (last, path) = parts.split_last().expect("non-empty");
    let mut cur = table;
    for p in path {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = load_config("").unwrap();
        assert_eq!(c.beamline.zone_positions, [0.0, 0.51, 0.77, 0.30]);
        assert!((c.beamline.ramsey_separation - 0.09).abs() < 1e-15);
        assert!((c.beamline.mean_position() - 0.395).abs() < 1e-12);
        assert!((c.beamline.path_sum() + 0.04).abs() < 1e-12);
    }

    #[test]
    fn negative_waist_rejected() {
        let e = load_config("[laser]\nwaist_radius_mm = -1\n").unwrap_err();
        match e {
            Error::Validation { field, .. } => assert_eq!(field, "laser.waist_radius_mm"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_parse_error() {
        let e = load_config("[laser]\nwaist_radius_mm = 0.1\nwaist_radius_mm = 0.2\n").unwrap_err();
        assert!(matches!(e, Error::Parse(_)));
    }

    #[test]
    fn unknown_key_named_in_error() {
        let e = load_config("[laser]\nwaist_radius = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("waist_radius"), "{e}");
    }

    #[test]
    fn overrides_apply() {
        let c = load_config_with_overrides(
            "",
            &["laser.waist_radius_mm=0.2".into(), "model.decay=false".into()],
        )
        .unwrap();
        assert!((c.laser.waist_radius - 0.2e-3).abs() < 1e-18);
        assert!(!c.flags.decay);
        assert!(load_config_with_overrides("", &["laser.nope=1".into()]).is_err());
        assert!(load_config_with_overrides("", &["novalue".into()]).is_err());
    }

    #[test]
    fn non_increasing_detuning_rejected() {
        assert!(load_config("[detuning]\nstart_khz = 5\nstop_khz = 1\npoints = 10\n").is_err());
        assert!(RunConfig::default().with_detunings(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn rayleigh_range_chain() {
        let c = RunConfig::default();
        let zr = c.laser.rayleigh_range();
        assert!(zr > 0.074 && zr < 0.076, "{zr}");
    }

    #[test]
    fn serialise_round_trip() {
        let c = load_config_with_overrides(
            "[beamline]\nsecond_ramsey_separation_mm = 91.5\n",
            &["velocity.tilt_mrad=-0.16".into()],
        )
        .unwrap();
        let again = load_config(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }
}

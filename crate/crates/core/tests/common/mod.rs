//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rbclock::config::{load_config, ConfigFile, RunConfig};
use std::path::PathBuf;

pub fn preset_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(format!("{name}.toml"))
}

pub fn preset(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(preset_path(name)).expect("preset exists");
    load_config(&text).expect("preset is valid")
}

/// Defaults with an edit applied.
pub fn with(edit: impl FnOnce(&mut ConfigFile)) -> RunConfig {
    RunConfig::default().modify(edit).expect("valid configuration")
}

pub fn hz(x: f64) -> f64 {
    2.0 * std::f64::consts::PI * x
}

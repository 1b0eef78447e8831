//! Unit conventions.
//!
//! Internally everything is angular frequency in rad/ns and time in ns, with
//! ħ = 1. Config files and CLI flags quote linear frequencies (GHz, MHz, kHz)
//! as is customary for quoted ω/2π values; conversion is a single factor 2π.

use std::f64::consts::TAU;

/// Linear GHz -> rad/ns.
pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// Linear MHz -> rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// Linear kHz -> rad/ns.
pub fn khz(f: f64) -> f64 {
    TAU * f * 1e-6
}

/// rad/ns -> linear GHz.
pub fn to_ghz(w: f64) -> f64 {
    w / TAU
}

/// rad/ns -> linear MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / TAU * 1e3
}

/// rad/ns -> linear kHz.
pub fn to_khz(w: f64) -> f64 {
    w / TAU * 1e6
}

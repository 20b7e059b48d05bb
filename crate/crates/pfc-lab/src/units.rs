//! Unit conversions shared by the statics and dynamics modules.
//!
//! Static energies are carried in GHz (linear frequency, h = 1). Dynamics
//! converts to angular units (rad/ns) at its boundary; temperatures convert
//! through k_B T / h.

use std::f64::consts::TAU;

/// k_B / h in GHz per kelvin (CODATA exact SI values:
/// k_B = 1.380649e-23 J/K, h = 6.62607015e-34 J s).
pub const BOLTZMANN_GHZ_PER_K: f64 = 1.380649e-23 / 6.62607015e-34 / 1e9;

/// Thermal energy k_B T / h in GHz for a temperature in millikelvin.
/// 12 mK maps to about 0.25004 GHz.
pub fn temperature_to_ghz(t_mk: f64) -> f64 {
    t_mk * 1e-3 * BOLTZMANN_GHZ_PER_K
}

/// Inverse temperature h / (k_B T) in 1/GHz; about 3.9994 at 12 mK.
pub fn inverse_temperature_ghz(t_mk: f64) -> f64 {
    1.0 / temperature_to_ghz(t_mk)
}

/// Convert a linear frequency in GHz to angular units, rad/ns.
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    TAU * f_ghz
}

/// Inverse temperature matched to angular energies, ns rad^-1.
pub fn inverse_temperature_angular(t_mk: f64) -> f64 {
    inverse_temperature_ghz(t_mk) / TAU
}

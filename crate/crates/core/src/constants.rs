//! CODATA 2018 exact and recommended values, SI units.

use std::f64::consts::PI;

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Magnetic flux quantum h / 2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
/// Reduced flux quantum Φ0 / 2π (Wb).
pub const REDUCED_FLUX_QUANTUM: f64 = FLUX_QUANTUM / (2.0 * PI);

/// Angular frequency (rad/s) to ordinary frequency in GHz.
pub fn rad_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI) / 1e9
}

/// Ordinary frequency in GHz to angular frequency (rad/s).
pub fn ghz_to_rad(f_ghz: f64) -> f64 {
    f_ghz * 1e9 * 2.0 * PI
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Watts to dBm; zero power maps to `-inf`.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

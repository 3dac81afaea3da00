//! Physical constants (CODATA exact values where defined).

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Angular frequency (rad/s) of light with vacuum wavelength `lambda` (m).
pub fn omega_from_wavelength(lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda
}

/// Vacuum wavelength (m) of light at angular frequency `omega` (rad/s).
pub fn wavelength_from_omega(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega
}

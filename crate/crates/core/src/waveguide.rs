//! Dispersion, loss and propagation phase of the single transverse mode
//! shared by every waveguide in the structure.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::{Error, Result};

/// How the round-trip field amplitude is derived from the power loss
/// coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossConvention {
    /// `a = exp(-xi L / 2)`, consistent with the complex propagation
    /// constant `k + i xi / 2`: `1 - a^2` is the round-trip power loss.
    #[default]
    FieldAmplitude,
    /// `a = exp(-xi L)`, the literal printed form. Compatibility only.
    LiteralExponent,
}

/// First- and second-order dispersion model around a reference frequency,
/// plus a frequency-independent power attenuation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideModel {
    /// Reference angular frequency (rad/s).
    pub omega0: f64,
    /// Effective index at `omega0`.
    pub n_eff: f64,
    /// Group velocity (m/s).
    pub v_g: f64,
    /// Group-velocity dispersion (s^2/m). Resonance and rate formulas are
    /// validated only for zero.
    #[serde(default)]
    pub beta2: f64,
    /// Power attenuation coefficient (1/m).
    #[serde(default)]
    pub xi: f64,
    #[serde(default)]
    pub loss_convention: LossConvention,
}

impl WaveguideModel {
    pub fn new(omega0: f64, n_eff: f64, v_g: f64, xi: f64) -> Result<Self> {
        let model = Self {
            omega0,
            n_eff,
            v_g,
            beta2: 0.0,
            xi,
            loss_convention: LossConvention::default(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_beta2(mut self, beta2: f64) -> Self {
        self.beta2 = beta2;
        self
    }

    pub fn with_loss_convention(mut self, convention: LossConvention) -> Self {
        self.loss_convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::InvalidSpec(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !(self.n_eff > 0.0 && self.n_eff.is_finite()) {
            return Err(Error::InvalidSpec(format!("n_eff must be positive, got {}", self.n_eff)));
        }
        if !(self.v_g > 0.0 && self.v_g.is_finite()) {
            return Err(Error::InvalidSpec(format!("v_g must be positive, got {}", self.v_g)));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidSpec(format!("xi must be non-negative, got {}", self.xi)));
        }
        if !self.beta2.is_finite() {
            return Err(Error::InvalidSpec("beta2 must be finite".into()));
        }
        Ok(())
    }

    /// Wavenumber at the reference frequency, `n_eff omega0 / c`.
    pub fn k0(&self) -> f64 {
        self.n_eff * self.omega0 / SPEED_OF_LIGHT
    }

    /// Real part of the propagation constant, truncated after the GVD term.
    pub fn k_real(&self, omega: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        Ok(self.k_unchecked(omega))
    }

    pub(crate) fn k_unchecked(&self, omega: f64) -> f64 {
        let d = omega - self.omega0;
        self.k0() + d / self.v_g + 0.5 * self.beta2 * d * d
    }

    /// Complex propagation constant `k(omega) + i xi / 2`.
    pub fn k_complex(&self, omega: f64) -> Result<Complex64> {
        Ok(Complex64::new(self.k_real(omega)?, 0.5 * self.xi))
    }

    /// Field transmission factor over `length`: `exp(i k L - xi L / 2)`.
    pub fn propagation_factor(&self, length: f64, omega: f64) -> Result<Complex64> {
        if !(length >= 0.0) {
            return Err(Error::Domain(format!("length must be non-negative, got {length}")));
        }
        let k = self.k_real(omega)?;
        Ok(Complex64::from_polar((-0.5 * self.xi * length).exp(), k * length))
    }

    pub fn propagate(&self, amplitude: Complex64, length: f64, omega: f64) -> Result<Complex64> {
        Ok(amplitude * self.propagation_factor(length, omega)?)
    }

    /// Round-trip field amplitude `a` of a resonator of length `ring_length`.
    pub fn round_trip_amplitude(&self, ring_length: f64) -> Result<f64> {
        if !(ring_length > 0.0) {
            return Err(Error::Domain(format!("ring length must be positive, got {ring_length}")));
        }
        Ok(match self.loss_convention {
            LossConvention::FieldAmplitude => (-0.5 * self.xi * ring_length).exp(),
            LossConvention::LiteralExponent => (-self.xi * ring_length).exp(),
        })
    }

    /// Free spectral range `v_g / L` (cycles per second).
    pub fn fsr(&self, ring_length: f64) -> f64 {
        self.v_g / ring_length
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::omega_from_wavelength;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn model(xi: f64) -> WaveguideModel {
        WaveguideModel::new(omega_from_wavelength(1550e-9), 2.0, SPEED_OF_LIGHT / 4.2, xi).unwrap()
    }

    #[test]
    fn k_at_reference() {
        let m = model(0.0);
        assert_eq!(m.k_real(m.omega0).unwrap(), m.k0());
        // 2 * 2 pi / 1.55 um
        let expected = 2.0 * 2.0 * PI / 1.55e-6;
        assert!((m.k0() - expected).abs() / expected < 1e-14);
        assert!((m.k0() - 8.1073e6).abs() < 1e2);
    }

    #[test]
    fn linear_term_isolated() {
        let m = model(0.0);
        let dk = 1234.5;
        let k = m.k_real(m.omega0 + m.v_g * dk).unwrap();
        assert!((k - (m.k0() + dk)).abs() < 1e-12 * m.k0());
    }

    #[test]
    fn gvd_term() {
        let m = model(0.0).with_beta2(1e-24);
        let d = 1e12;
        let k = m.k_real(m.omega0 + d).unwrap();
        assert!((k - (m.k0() + d / m.v_g + 0.5e-24 * d * d)).abs() < 1e-9 * k);
    }

    #[test]
    fn non_positive_omega_rejected() {
        assert!(matches!(model(0.0).k_real(0.0), Err(Error::Domain(_))));
        assert!(model(0.0).k_real(-1.0).is_err());
    }

    #[test]
    fn full_phase_lossless_is_identity() {
        let m = model(0.0);
        let w = m.omega0 * 1.001;
        let len = 2.0 * PI / m.k_real(w).unwrap();
        let out = m.propagate(Complex64::new(0.3, -0.7), len, w).unwrap();
        assert!((out - Complex64::new(0.3, -0.7)).norm() < 1e-12);
    }

    #[test]
    fn one_db_per_cm() {
        let m = model(23.0);
        let out = m.propagate(Complex64::new(1.0, 0.0), 0.01, m.omega0).unwrap();
        let power = out.norm_sqr();
        assert!((power - (-0.23f64).exp()).abs() < 1e-12);
        assert!((power - 0.7945).abs() < 1e-4);
        assert!((-10.0 * power.log10() - 1.0).abs() < 0.01);
    }

    #[test]
    fn zero_length_and_negative_length() {
        let m = model(23.0);
        let a = Complex64::new(0.2, 0.1);
        assert_eq!(m.propagate(a, 0.0, m.omega0).unwrap(), a);
        assert!(m.propagate(a, -1e-6, m.omega0).is_err());
    }

    #[test]
    fn round_trip_amplitudes() {
        assert_eq!(model(0.0).round_trip_amplitude(1e-3).unwrap(), 1.0);
        let m = model(23.0);
        let a1 = m.round_trip_amplitude(641e-6).unwrap();
        let a2 = m.round_trip_amplitude(432e-6).unwrap();
        assert!((a1 - (-23.0 * 641e-6 / 2.0f64).exp()).abs() < 1e-15);
        assert!((a1 - 0.99266).abs() < 1e-5);
        assert!((a2 - 0.99505).abs() < 1e-5);
        assert!(m.round_trip_amplitude(0.0).is_err());
        let lit = m.with_loss_convention(LossConvention::LiteralExponent);
        assert!((lit.round_trip_amplitude(641e-6).unwrap() - (-23.0 * 641e-6f64).exp()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn phase_is_linear_without_gvd(delta in -5e12f64..5e12) {
            let m = model(0.0);
            let dk = m.k_real(m.omega0 + delta).unwrap() - m.k0();
            prop_assert!((dk - delta / m.v_g).abs() <= 4.0 * f64::EPSILON * m.k0());
        }

        #[test]
        fn loss_composes(l1 in 0.0f64..5e-3, l2 in 0.0f64..5e-3, xi in 0.0f64..100.0) {
            let m = model(xi);
            let w = m.omega0 * 1.0003;
            let a = Complex64::new(0.8, 0.6);
            let two = m.propagate(m.propagate(a, l1, w).unwrap(), l2, w).unwrap();
            let one = m.propagate(a, l1 + l2, w).unwrap();
            // phases of order 1e5 rad lose ~1e-11 to rounding
            prop_assert!((two - one).norm() / one.norm() < 1e-9);
        }

        #[test]
        fn amplitude_monotone(xi in 0.0f64..100.0, len in 1e-6f64..1e-2, dxi in 1e-3f64..10.0, dl in 1e-7f64..1e-3) {
            let a = model(xi).round_trip_amplitude(len).unwrap();
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!(model(xi + dxi).round_trip_amplitude(len).unwrap() < a);
            if xi > 1e-3 {
                prop_assert!(model(xi).round_trip_amplitude(len + dl).unwrap() < a);
            }
        }
    }
}

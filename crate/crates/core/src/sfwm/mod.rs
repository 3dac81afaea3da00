//! Spontaneous four-wave mixing: overlap integrals, CW pair rates, pulsed
//! pairs per pulse and the biphoton wavefunction.
//!
//! The pump lives in resonator 1, signal and idler in resonator 2. For a
//! single ring all three share the ring.

mod overlap;
mod pulsed;
mod rate;

pub use overlap::{
    delta_k, j_channel, j_spatial_analytic, j_total, sinc, unit_amplitudes, EntranceAmplitudes,
    InteractionRegion, J_REL_TOL,
};
pub use pulsed::{
    biphoton_wavefunction, pairs_per_pulse, BiphotonGrid, BiphotonResult, PulsedOptions, PulsedResult,
};
pub use rate::{
    lorentzian_pair_integral, pair_rate_analytic, pair_rate_cw, pair_rate_finesse_form, pair_rate_q_form,
    pair_rate_quadrature, ratio_to_ring, select_triple, CwOptions, FieldModel,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::network::{ResonanceInfo, StructureSpec};
use crate::numerics::{simpson_weights, CompensatedSum};
use crate::{Error, Result};

/// Allowed error on the pump profile normalization.
pub const PROFILE_NORM_TOL: f64 = 1e-6;

/// Spectral amplitude `phi_P(w)` of a pump pulse with `int |phi_P|^2 dw = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PumpProfile {
    /// Gaussian amplitude centred at `center` whose intensity `|phi_P|^2`
    /// has full width at half maximum `fwhm` (rad/s).
    Gaussian { center: f64, fwhm: f64 },
    /// Tabulated complex amplitude, linearly interpolated and zero outside.
    Tabulated { omega: Vec<f64>, re: Vec<f64>, im: Vec<f64> },
}

impl PumpProfile {
    pub fn gaussian(center: f64, fwhm: f64) -> Result<Self> {
        let p = Self::Gaussian { center, fwhm };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(omega: Vec<f64>, values: &[Complex64]) -> Result<Self> {
        let p = Self::Tabulated {
            omega,
            re: values.iter().map(|v| v.re).collect(),
            im: values.iter().map(|v| v.im).collect(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Standard deviation of `|phi_P|^2` for a Gaussian.
    fn intensity_rms(fwhm: f64) -> f64 {
        fwhm / (8.0 * std::f64::consts::LN_2).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { center, fwhm } => {
                if !(*center > 0.0 && *fwhm > 0.0 && center.is_finite() && fwhm.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "Gaussian pump needs positive center and fwhm, got {center:e}, {fwhm:e}"
                    )));
                }
                Ok(())
            }
            Self::Tabulated { omega, re, im } => {
                if omega.len() < 3 || omega.len() != re.len() || omega.len() != im.len() {
                    return Err(Error::InvalidSpec(
                        "tabulated pump needs at least 3 points and matching columns".into(),
                    ));
                }
                if omega.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidSpec("tabulated pump grid must be increasing".into()));
                }
                let norm = self.table_norm();
                if (norm - 1.0).abs() > PROFILE_NORM_TOL {
                    return Err(Error::InvalidSpec(format!(
                        "pump profile must satisfy int |phi|^2 dw = 1 within {PROFILE_NORM_TOL:e}, got {norm}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn table_norm(&self) -> f64 {
        match self {
            Self::Tabulated { omega, re, im } => {
                // exact integral of the squared linear interpolant
                let mut acc = CompensatedSum::<f64>::new();
                for i in 0..omega.len() - 1 {
                    let h = omega[i + 1] - omega[i];
                    let (a, b) = (
                        Complex64::new(re[i], im[i]),
                        Complex64::new(re[i + 1], im[i + 1]),
                    );
                    acc.push(h / 3.0 * (a.norm_sqr() + b.norm_sqr() + (a * b.conj()).re));
                }
                acc.value()
            }
            Self::Gaussian { .. } => 1.0,
        }
    }

    pub fn amplitude(&self, omega: f64) -> Complex64 {
        match self {
            Self::Gaussian { center, fwhm } => {
                let s = Self::intensity_rms(*fwhm);
                let d = omega - center;
                let norm = (2.0 * std::f64::consts::PI * s * s).powf(-0.25);
                Complex64::new(norm * (-d * d / (4.0 * s * s)).exp(), 0.0)
            }
            Self::Tabulated { omega: grid, re, im } => {
                if omega < grid[0] || omega > grid[grid.len() - 1] {
                    return Complex64::new(0.0, 0.0);
                }
                let j = grid.partition_point(|&x| x <= omega).clamp(1, grid.len() - 1);
                let t = (omega - grid[j - 1]) / (grid[j] - grid[j - 1]);
                Complex64::new(re[j - 1] + t * (re[j] - re[j - 1]), im[j - 1] + t * (im[j] - im[j - 1]))
            }
        }
    }

    /// Frequency interval outside which the profile is negligible.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Gaussian { center, fwhm } => {
                let s = Self::intensity_rms(*fwhm);
                (center - 8.0 * s, center + 8.0 * s)
            }
            Self::Tabulated { omega, .. } => (omega[0], omega[omega.len() - 1]),
        }
    }

    /// Carrier frequency (centroid of `|phi_P|^2`).
    pub fn center(&self) -> f64 {
        match self {
            Self::Gaussian { center, .. } => *center,
            Self::Tabulated { omega, re, im } => {
                let mut num = CompensatedSum::<f64>::new();
                let mut den = CompensatedSum::<f64>::new();
                for i in 0..omega.len() - 1 {
                    let h = 0.5 * (omega[i + 1] - omega[i]);
                    let p0 = re[i] * re[i] + im[i] * im[i];
                    let p1 = re[i + 1] * re[i + 1] + im[i + 1] * im[i + 1];
                    num.push(h * (omega[i] * p0 + omega[i + 1] * p1));
                    den.push(h * (p0 + p1));
                }
                num.value() / den.value()
            }
        }
    }

    /// Smallest spectral feature the quadrature grid must resolve.
    pub fn resolution_scale(&self) -> f64 {
        match self {
            Self::Gaussian { fwhm, .. } => Self::intensity_rms(*fwhm),
            Self::Tabulated { omega, .. } => omega
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min)
                .max(1e-300),
        }
    }

    /// Effective pulse duration `2 pi / int |(phi * phi)(W)|^2 dW`, which
    /// links photons per pulse to average power in the CW limit.
    pub fn duration(&self) -> f64 {
        match self {
            Self::Gaussian { fwhm, .. } => std::f64::consts::PI.sqrt() / Self::intensity_rms(*fwhm),
            Self::Tabulated { .. } => {
                let (lo, hi) = self.support();
                let n = 801;
                let g3 = crate::numerics::UniformGrid::new(lo, hi, n);
                let gw = crate::numerics::UniformGrid::new(2.0 * lo, 2.0 * hi, 2 * n - 1);
                let mut acc = CompensatedSum::<f64>::new();
                for (&w, &ww) in gw.points.iter().zip(&gw.weights) {
                    let mut conv = CompensatedSum::<Complex64>::new();
                    for (&x, &wx) in g3.points.iter().zip(&g3.weights) {
                        conv.push(self.amplitude(x) * self.amplitude(w - x) * wx);
                    }
                    acc.push(ww * conv.value().norm_sqr());
                }
                2.0 * std::f64::consts::PI / acc.value()
            }
        }
    }
}

/// Pump description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PumpSpec {
    Cw { power: f64, omega: f64 },
    Pulsed { profile: PumpProfile, alpha_sq: f64 },
}

impl PumpSpec {
    pub fn cw(power: f64, omega: f64) -> Result<Self> {
        let p = Self::Cw { power, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn pulsed(profile: PumpProfile, alpha_sq: f64) -> Result<Self> {
        let p = Self::Pulsed { profile, alpha_sq };
        p.validate()?;
        Ok(p)
    }

    /// Pulse carrying average power `power` over its effective duration.
    pub fn pulsed_with_power(profile: PumpProfile, power: f64) -> Result<Self> {
        profile.validate()?;
        let alpha_sq = power * profile.duration() / (HBAR * profile.center());
        Self::pulsed(profile, alpha_sq)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Cw { power, omega } => {
                if !(*power > 0.0 && power.is_finite()) {
                    return Err(Error::InvalidSpec(format!("pump power must be positive, got {power}")));
                }
                if !(*omega > 0.0 && omega.is_finite()) {
                    return Err(Error::InvalidSpec(format!("pump frequency must be positive, got {omega}")));
                }
                Ok(())
            }
            Self::Pulsed { profile, alpha_sq } => {
                if !(*alpha_sq > 0.0 && alpha_sq.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "photons per pulse must be positive, got {alpha_sq}"
                    )));
                }
                profile.validate()
            }
        }
    }

    /// Average power `hbar w_P |alpha|^2 / dT` of a pulsed pump, or the CW power.
    pub fn power(&self) -> f64 {
        match self {
            Self::Cw { power, .. } => *power,
            Self::Pulsed { profile, alpha_sq } => HBAR * profile.center() * alpha_sq / profile.duration(),
        }
    }
}

/// Waveguide nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearSpec {
    /// Nonlinear power factor (1/(W m)).
    pub gamma_nl: f64,
    /// Optional transverse coupling at the degenerate point, checked against
    /// `gamma_nl`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_perp: Option<f64>,
}

/// Relative mismatch allowed between a supplied `s_perp` and `gamma_nl`.
pub const S_PERP_TOL: f64 = 1e-6;

impl NonlinearSpec {
    pub fn new(gamma_nl: f64) -> Result<Self> {
        let nl = Self { gamma_nl, s_perp: None };
        nl.validate(None)?;
        Ok(nl)
    }

    /// `S_perp(w1..w4) = hbar^2 gamma / (4 pi^2) sqrt(w1 w2 w3 w4) / w_P`.
    pub fn s_perp_at(&self, omegas: [f64; 4], omega_p: f64) -> f64 {
        let prod: f64 = omegas.iter().product();
        HBAR * HBAR * self.gamma_nl / (4.0 * std::f64::consts::PI.powi(2)) * prod.sqrt() / omega_p
    }

    /// Checks `gamma_nl >= 0` and, when `omega_p` is given, that a supplied
    /// `s_perp` agrees with `gamma_nl` at the degenerate point.
    pub fn validate(&self, omega_p: Option<f64>) -> Result<()> {
        if !(self.gamma_nl >= 0.0 && self.gamma_nl.is_finite()) {
            return Err(Error::InvalidSpec(format!("gamma_nl must be non-negative, got {}", self.gamma_nl)));
        }
        if let (Some(s), Some(w)) = (self.s_perp, omega_p) {
            let expected = self.s_perp_at([w; 4], w);
            let scale = expected.abs().max(s.abs());
            if scale > 0.0 && (s - expected).abs() > S_PERP_TOL * scale {
                return Err(Error::InvalidSpec(format!(
                    "s_perp = {s:e} is inconsistent with gamma_nl (expected {expected:e})"
                )));
            }
        }
        Ok(())
    }
}

/// Pump, signal and idler resonances satisfying energy conservation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceTriple {
    pub pump: ResonanceInfo,
    pub signal: ResonanceInfo,
    pub idler: ResonanceInfo,
}

/// Default energy-conservation tolerance as a fraction of the narrowest linewidth.
pub const ENERGY_TOL_FRACTION: f64 = 0.1;

impl ResonanceTriple {
    pub fn new(pump: ResonanceInfo, signal: ResonanceInfo, idler: ResonanceInfo) -> Result<Self> {
        Self::with_tolerance(pump, signal, idler, ENERGY_TOL_FRACTION)
    }

    pub fn with_tolerance(
        pump: ResonanceInfo,
        signal: ResonanceInfo,
        idler: ResonanceInfo,
        fraction: f64,
    ) -> Result<Self> {
        let t = Self { pump, signal, idler };
        let tolerance = fraction * pump.gamma.min(signal.gamma).min(idler.gamma);
        let mismatch = t.energy_mismatch();
        if mismatch.abs() > tolerance {
            return Err(Error::EnergyConservation { mismatch, tolerance });
        }
        Ok(t)
    }

    /// `2 w_P - w_S - w_I`.
    pub fn energy_mismatch(&self) -> f64 {
        2.0 * self.pump.omega - self.signal.omega - self.idler.omega
    }

    /// `|FE_S|^2 |FE_I|^2 |FE_P|^4` at the resonance peaks.
    pub fn fe_product(&self) -> f64 {
        self.signal.fe_max_sq * self.idler.fe_max_sq * self.pump.fe_max_sq.powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    Analytic,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfwmResult {
    pub rate_pairs_per_s: f64,
    pub j_spatial: Complex64,
    pub fe_product: f64,
    pub method: RateMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_to_ring: Option<f64>,
}

/// Checks the structure supports nonlinear overlap and returns the region.
fn region_of(spec: &StructureSpec) -> Result<InteractionRegion> {
    InteractionRegion::from_structure(spec)
}

/// Simpson grid helper shared by the pulsed paths.
fn simpson_grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = if n % 2 == 0 { n + 1 } else { n };
    let h = (hi - lo) / (n - 1) as f64;
    ((0..n).map(|i| lo + h * i as f64).collect(), simpson_weights(n, h))
}

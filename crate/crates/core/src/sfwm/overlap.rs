//! Spatial overlap of the four interacting fields inside the coupling region.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupler::{cross_coefficient, dc_envelopes, mzi_envelopes, CouplerSpec};
use crate::network::{StructureKind, StructureSpec};
use crate::numerics::AdaptiveQuadrature;
use crate::{Error, Result};

/// Relative tolerance of every z integral.
pub const J_REL_TOL: f64 = 1e-9;

/// Field amplitudes `(f^(1), f^(2))` entering the coupler from resonator 1
/// and resonator 2. For a single ring only the first entry is used.
pub type EntranceAmplitudes = [Complex64; 2];

/// Integrates `conj(f1) conj(f2) f3 f4 exp(i dk z)` over `[0, length]` for
/// one channel. `envelopes(z)` returns `[f1, f2, f3, f4]` at `z`.
pub fn j_channel<F>(envelopes: F, delta_k: f64, length: f64) -> Result<Complex64>
where
    F: Fn(f64) -> [Complex64; 4],
{
    if !(length >= 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!("channel length must be non-negative, got {length}")));
    }
    if length == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let integrand = |z: f64| {
        let [f1, f2, f3, f4] = envelopes(z);
        f1.conj() * f2.conj() * f3 * f4 * Complex64::from_polar(1.0, delta_k * z)
    };
    let scale = {
        let [f1, f2, f3, f4] = envelopes(0.0);
        (f1.norm() * f2.norm() * f3.norm() * f4.norm()).max(f64::MIN_POSITIVE)
    };
    let quad = AdaptiveQuadrature::with_rel_tol(J_REL_TOL).abs_tol(1e-15 * scale * length);
    Ok(quad.integrate(integrand, 0.0, length)?.value)
}

/// Phase mismatch `k(w1) + k(w2) - k(w3) - k(w4)`.
pub fn delta_k(spec: &StructureSpec, omegas: [f64; 4]) -> Result<f64> {
    let wg = &spec.waveguide;
    Ok(wg.k_real(omegas[0])? + wg.k_real(omegas[1])? - wg.k_real(omegas[2])? - wg.k_real(omegas[3])?)
}

/// Total overlap `J` summed over the coupler channels (or the whole ring for
/// a single ring), given each field's entrance amplitudes.
pub fn j_total(
    spec: &StructureSpec,
    omegas: [f64; 4],
    amplitudes: [EntranceAmplitudes; 4],
) -> Result<Complex64> {
    let dk = delta_k(spec, omegas)?;
    j_total_with_delta_k(spec, dk, amplitudes)
}

pub(crate) fn j_total_with_delta_k(
    spec: &StructureSpec,
    dk: f64,
    amplitudes: [EntranceAmplitudes; 4],
) -> Result<Complex64> {
    match spec.kind {
        StructureKind::SingleRing { length, .. } => {
            let f = amplitudes.map(|a| a[0]);
            j_channel(|_| f, dk, length)
        }
        StructureKind::DoubleRacetrack { coupler, .. } => match coupler {
            CouplerSpec::DirectionalCoupler { kappa, length } => {
                let fields = |z: f64| {
                    amplitudes.map(|a| dc_envelopes(a[0], a[1], kappa, length, z.min(length)).expect("z in range"))
                };
                let up = j_channel(|z| fields(z).map(|e| e.f_up), dk, length)?;
                let lo = j_channel(|z| fields(z).map(|e| e.f_lo), dk, length)?;
                Ok(up + lo)
            }
            CouplerSpec::MachZehnder {
                sigma_dx,
                delta_phi,
                length,
                ..
            } => {
                let arms = amplitudes.map(|a| mzi_envelopes(a[0], a[1], sigma_dx, delta_phi));
                let up = j_channel(|_| arms.map(|e| e.f_up), dk, length)?;
                let lo = j_channel(|_| arms.map(|e| e.f_lo), dk, length)?;
                Ok(up + lo)
            }
            CouplerSpec::GenericUnitary { .. } => Err(Error::Unsupported(
                "overlap integrals need a directional or Mach-Zehnder coupler".into(),
            )),
        },
    }
}

/// Geometry of the nonlinear interaction region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InteractionRegion {
    Ring { length: f64 },
    Directional { kappa: f64, length: f64 },
    MachZehnder { sigma_dx: f64, length: f64 },
}

impl InteractionRegion {
    pub fn from_structure(spec: &StructureSpec) -> Result<Self> {
        match spec.kind {
            StructureKind::SingleRing { length, .. } => Ok(Self::Ring { length }),
            StructureKind::DoubleRacetrack { coupler, .. } => match coupler {
                CouplerSpec::DirectionalCoupler { kappa, length } => Ok(Self::Directional { kappa, length }),
                CouplerSpec::MachZehnder { sigma_dx, length, .. } => Ok(Self::MachZehnder { sigma_dx, length }),
                CouplerSpec::GenericUnitary { .. } => Err(Error::Unsupported(
                    "no interaction region for a generic unitary coupler".into(),
                )),
            },
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Self::Ring { length } | Self::Directional { length, .. } | Self::MachZehnder { length, .. } => length,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ring { .. } => "ring",
            Self::Directional { .. } => "directional_coupler",
            Self::MachZehnder { .. } => "mach_zehnder",
        }
    }
}

/// Unnormalized sinc, `sin(x) / x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Closed-form spatial overlap for unit entrance amplitudes with the pump in
/// resonator 1 and signal/idler in resonator 2.
///
/// The directional and Mach-Zehnder forms hold only at `dk = 0`; for the
/// Mach-Zehnder the value is `-2 sigma^2 kappa^2 L`, which is `-L/2` for
/// 50:50 splitters.
pub fn j_spatial_analytic(region: &InteractionRegion, delta_k: f64) -> Result<Complex64> {
    match *region {
        InteractionRegion::Ring { length } => {
            let half = 0.5 * delta_k * length;
            Ok(Complex64::from_polar(length * sinc(half), half))
        }
        _ if delta_k != 0.0 => Err(Error::Unsupported(
            "closed-form coupler overlap needs dk = 0; use j_total".into(),
        )),
        InteractionRegion::Directional { kappa, length } => {
            let x = 4.0 * kappa.abs() * length;
            Ok(Complex64::new(-0.25 * length * (1.0 - sinc(x)), 0.0))
        }
        InteractionRegion::MachZehnder { sigma_dx, length } => {
            let k = cross_coefficient(sigma_dx);
            Ok(Complex64::new(-2.0 * sigma_dx * sigma_dx * k * k * length, 0.0))
        }
    }
}

/// Entrance amplitudes of unit fields: pump in resonator 1, signal and idler
/// in resonator 2 (all in the ring for a single ring).
pub fn unit_amplitudes(spec: &StructureSpec) -> [EntranceAmplitudes; 4] {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    match spec.kind {
        StructureKind::SingleRing { .. } => [[one, zero]; 4],
        StructureKind::DoubleRacetrack { .. } => [[zero, one], [zero, one], [one, zero], [one, zero]],
    }
}

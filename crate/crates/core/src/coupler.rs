//! Linear 2x2 description of the coupling region between the two resonators
//! and the slowly varying field envelopes inside it.
//!
//! Point couplers use the `[[s, i k], [i k, s]]` convention with real,
//! non-negative `s` and `k = sqrt(1 - s^2)`. Transfer matrices exclude the
//! common propagation factor `exp(i k(w) L_cp)`; the network applies it.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Tolerance on user-supplied matrices before polar renormalisation.
pub const USER_UNITARITY_TOL: f64 = 1e-6;

/// Complex 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn new(x11: Complex64, x12: Complex64, x21: Complex64, x22: Complex64) -> Self {
        Mat2([[x11, x12], [x21, x22]])
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::new(one, zero, zero, one)
    }

    pub fn diag(a: Complex64, b: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self::new(a, zero, zero, b)
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let m = &self.0;
        Some(Self::new(m[1][1] / d, -m[0][1] / d, -m[1][0] / d, m[0][0] / d))
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// Largest elementwise deviation of `X X^dagger` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = *self * self.adjoint();
        let id = Self::identity();
        (0..2)
            .flat_map(|r| (0..2).map(move |c| (r, c)))
            .map(|(r, c)| (p.0[r][c] - id.0[r][c]).norm())
            .fold(0.0, f64::max)
    }

    /// Unitary factor of the polar decomposition (Newton iteration).
    fn polar_unitary(&self) -> Option<Self> {
        let mut u = *self;
        for _ in 0..50 {
            let inv_adj = u.inverse()?.adjoint();
            let next = Self::new(
                0.5 * (u.0[0][0] + inv_adj.0[0][0]),
                0.5 * (u.0[0][1] + inv_adj.0[0][1]),
                0.5 * (u.0[1][0] + inv_adj.0[1][0]),
                0.5 * (u.0[1][1] + inv_adj.0[1][1]),
            );
            let step = (0..2)
                .flat_map(|r| (0..2).map(move |c| (r, c)))
                .map(|(r, c)| (next.0[r][c] - u.0[r][c]).norm())
                .fold(0.0, f64::max);
            u = next;
            if step < 1e-16 {
                break;
            }
        }
        Some(u)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let e = |r: usize, c: usize| a[r][0] * b[0][c] + a[r][1] * b[1][c];
        Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

/// Lossless point coupler `[[s, i k], [i k, s]]`.
pub fn point_coupler(sigma: f64) -> Mat2 {
    let kappa = cross_coefficient(sigma);
    Mat2::new(
        Complex64::new(sigma, 0.0),
        I * kappa,
        I * kappa,
        Complex64::new(sigma, 0.0),
    )
}

/// `sqrt(1 - s^2)`, clamped for round-off at `s = 1`.
pub fn cross_coefficient(sigma: f64) -> f64 {
    (1.0 - sigma * sigma).max(0.0).sqrt()
}

/// Effective straight-through coefficient of the Mach-Zehnder coupler.
pub fn sigma_mzi(sigma_sx: f64, sigma_dx: f64, delta_phi: f64) -> Complex64 {
    let (k_sx, k_dx) = (cross_coefficient(sigma_sx), cross_coefficient(sigma_dx));
    sigma_sx * sigma_dx - k_sx * k_dx * Complex64::from_polar(1.0, delta_phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CouplerSpec {
    DirectionalCoupler {
        /// Coupling constant (1/m).
        kappa: f64,
        length: f64,
    },
    MachZehnder {
        sigma_sx: f64,
        sigma_dx: f64,
        /// Lumped phase on the lower arm (rad).
        delta_phi: f64,
        length: f64,
    },
    GenericUnitary {
        matrix: Mat2,
        /// Physical length of the coupling region (m); may be zero.
        length: f64,
    },
}

impl CouplerSpec {
    pub fn directional(kappa: f64, length: f64) -> Result<Self> {
        let spec = CouplerSpec::DirectionalCoupler { kappa, length };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mach_zehnder(sigma_sx: f64, sigma_dx: f64, delta_phi: f64, length: f64) -> Result<Self> {
        let spec = CouplerSpec::MachZehnder {
            sigma_sx,
            sigma_dx,
            delta_phi,
            length,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Accepts a measured or fitted matrix. Deviations from unitarity up to
    /// [`USER_UNITARITY_TOL`] are removed by polar decomposition; larger ones
    /// are rejected.
    pub fn generic(matrix: Mat2, length: f64) -> Result<Self> {
        let dev = matrix.unitarity_deviation();
        if !(dev <= USER_UNITARITY_TOL) {
            return Err(Error::InvalidSpec(format!(
                "coupler matrix is not unitary: max |X X^dagger - I| = {dev:.3e} > {USER_UNITARITY_TOL:e}"
            )));
        }
        let matrix = if dev > 1e-14 {
            matrix
                .polar_unitary()
                .ok_or_else(|| Error::InvalidSpec("singular coupler matrix".into()))?
        } else {
            matrix
        };
        let spec = CouplerSpec::GenericUnitary { matrix, length };
        spec.validate()?;
        Ok(spec)
    }

    /// Near-uncoupled unitary with real positive diagonal and cross terms
    /// `cross` (e.g. `-0.00161 i`).
    pub fn near_uncoupled(cross: Complex64, length: f64) -> Result<Self> {
        let diag = Complex64::new((1.0 - cross.norm_sqr()).max(0.0).sqrt(), 0.0);
        // [[d, c], [c, d]] is unitary when Re(d conj(c)) = 0, i.e. c imaginary
        Self::generic(Mat2::new(diag, cross, cross, diag), length)
    }

    /// Identity coupler of the given length (perfect linear uncoupling).
    pub fn identity(length: f64) -> Self {
        CouplerSpec::GenericUnitary {
            matrix: Mat2::identity(),
            length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CouplerSpec::DirectionalCoupler { kappa, length } => {
                if !(kappa >= 0.0 && kappa.is_finite()) {
                    return Err(Error::InvalidSpec(format!("kappa_dc must be non-negative, got {kappa}")));
                }
                if !(length > 0.0 && length.is_finite()) {
                    return Err(Error::InvalidSpec(format!("L_dc must be positive, got {length}")));
                }
            }
            CouplerSpec::MachZehnder {
                sigma_sx,
                sigma_dx,
                delta_phi,
                length,
            } => {
                for (name, s) in [("sigma_sx", sigma_sx), ("sigma_dx", sigma_dx)] {
                    if !(0.0..=1.0).contains(&s) {
                        return Err(Error::InvalidSpec(format!("{name} must lie in [0, 1], got {s}")));
                    }
                }
                if !delta_phi.is_finite() {
                    return Err(Error::InvalidSpec("delta_phi must be finite".into()));
                }
                if !(length >= 0.0 && length.is_finite()) {
                    return Err(Error::InvalidSpec(format!("L_mzi must be non-negative, got {length}")));
                }
            }
            CouplerSpec::GenericUnitary { matrix, length } => {
                let dev = matrix.unitarity_deviation();
                if !(dev <= 1e-12) {
                    return Err(Error::InvalidSpec(format!(
                        "coupler matrix deviates from unitarity by {dev:.3e}"
                    )));
                }
                if (matrix.det().norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidSpec("|det X| must equal 1".into()));
                }
                if !(length >= 0.0 && length.is_finite()) {
                    return Err(Error::InvalidSpec(format!("coupler length must be non-negative, got {length}")));
                }
            }
        }
        Ok(())
    }

    /// Physical length of the coupling region.
    pub fn length(&self) -> f64 {
        match *self {
            CouplerSpec::DirectionalCoupler { length, .. }
            | CouplerSpec::MachZehnder { length, .. }
            | CouplerSpec::GenericUnitary { length, .. } => length,
        }
    }

    pub fn transfer_matrix(&self) -> Mat2 {
        match *self {
            CouplerSpec::DirectionalCoupler { kappa, length } => {
                let (s, c) = (kappa * length).sin_cos();
                Mat2::new(
                    Complex64::new(c, 0.0),
                    -I * s,
                    -I * s,
                    Complex64::new(c, 0.0),
                )
            }
            CouplerSpec::MachZehnder {
                sigma_sx,
                sigma_dx,
                delta_phi,
                ..
            } => {
                let (k_sx, k_dx) = (cross_coefficient(sigma_sx), cross_coefficient(sigma_dx));
                let e = Complex64::from_polar(1.0, delta_phi);
                Mat2::new(
                    sigma_sx * sigma_dx - k_sx * k_dx * e,
                    I * (sigma_sx * k_dx + k_sx * sigma_dx * e),
                    I * (k_sx * sigma_dx + sigma_sx * k_dx * e),
                    -k_sx * k_dx + sigma_sx * sigma_dx * e,
                )
            }
            CouplerSpec::GenericUnitary { matrix, .. } => matrix,
        }
    }

    /// Envelopes in the upper and lower channel at position `z`, given the
    /// fields entering the coupler from resonator 1 and resonator 2.
    pub fn envelopes(&self, f1_in: Complex64, f2_in: Complex64, z: f64) -> Result<EnvelopePair> {
        match *self {
            CouplerSpec::DirectionalCoupler { kappa, length } => {
                dc_envelopes(f1_in, f2_in, kappa, length, z)
            }
            CouplerSpec::MachZehnder {
                sigma_dx,
                delta_phi,
                length,
                ..
            } => {
                if !(0.0..=length).contains(&z) {
                    return Err(Error::Domain(format!("z = {z:e} outside MZI arms [0, {length:e}]")));
                }
                Ok(EnvelopePair {
                    z,
                    ..mzi_envelopes(f1_in, f2_in, sigma_dx, delta_phi)
                })
            }
            CouplerSpec::GenericUnitary { .. } => Err(Error::Unsupported(
                "field envelopes are only defined for directional and Mach-Zehnder couplers".into(),
            )),
        }
    }
}

/// Slowly varying envelopes in the upper and lower channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePair {
    pub f_up: Complex64,
    pub f_lo: Complex64,
    pub z: f64,
}

impl EnvelopePair {
    pub fn total_intensity(&self) -> f64 {
        self.f_up.norm_sqr() + self.f_lo.norm_sqr()
    }
}

/// Coupled-mode envelopes of a directional coupler of length `length`.
pub fn dc_envelopes(
    f1_in: Complex64,
    f2_in: Complex64,
    kappa: f64,
    length: f64,
    z: f64,
) -> Result<EnvelopePair> {
    if !(0.0..=length).contains(&z) {
        return Err(Error::Domain(format!("z = {z:e} outside coupler [0, {length:e}]")));
    }
    let (s, c) = (kappa.abs() * z).sin_cos();
    Ok(EnvelopePair {
        f_up: f1_in * c - I * f2_in * s,
        f_lo: -I * f1_in * s + f2_in * c,
        z,
    })
}

/// Arm envelopes of the Mach-Zehnder coupler (independent of `z`). The
/// entrance splitter is the `dx` one; the exit splitter is `sx`.
pub fn mzi_envelopes(f1_in: Complex64, f2_in: Complex64, sigma_dx: f64, delta_phi: f64) -> EnvelopePair {
    let k_dx = cross_coefficient(sigma_dx);
    EnvelopePair {
        f_up: sigma_dx * f1_in + I * k_dx * f2_in,
        f_lo: (I * k_dx * f1_in + sigma_dx * f2_in) * Complex64::from_polar(1.0, delta_phi),
        z: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn dc_full_beat_is_identity() {
        let x = CouplerSpec::directional(2.0 * PI / 100e-6, 100e-6).unwrap().transfer_matrix();
        let id = Mat2::identity();
        for r in 0..2 {
            for col in 0..2 {
                assert!(close(x.get(r, col), id.get(r, col), 1e-12));
            }
        }
    }

    #[test]
    fn dc_quarter_beat_crosses_over() {
        let x = CouplerSpec::directional(PI / 2.0, 1.0).unwrap().transfer_matrix();
        assert!(close(x.get(0, 0), c(0.0, 0.0), 1e-15));
        assert!(close(x.get(0, 1), c(0.0, -1.0), 1e-15));
        assert!(close(x.get(1, 0), c(0.0, -1.0), 1e-15));
        assert!(close(x.get(1, 1), c(0.0, 0.0), 1e-15));
    }

    #[test]
    fn mzi_balanced_pi_uncouples() {
        for s in [0.1, FRAC_1_SQRT_2, 0.9] {
            let x = CouplerSpec::mach_zehnder(s, s, PI, 50e-6).unwrap().transfer_matrix();
            assert!((x.get(0, 0).norm() - 1.0).abs() < 1e-15);
            assert!(x.get(0, 1).norm() < 1e-15);
            assert!(x.get(1, 0).norm() < 1e-15);
        }
    }

    #[test]
    fn sigma_mzi_values() {
        let s = FRAC_1_SQRT_2;
        assert!(close(sigma_mzi(s, s, PI), c(1.0, 0.0), 1e-15));
        assert!(close(sigma_mzi(s, s, 0.0), c(0.0, 0.0), 1e-15));
        for phi in [0.0, 0.3, 2.0, PI] {
            assert!(close(sigma_mzi(0.37, 1.0, phi), c(0.37, 0.0), 1e-15));
        }
        let x = CouplerSpec::mach_zehnder(0.6, 0.8, 1.1, 1e-5).unwrap().transfer_matrix();
        assert_eq!(x.get(0, 0), sigma_mzi(0.6, 0.8, 1.1));
    }

    #[test]
    fn dc_envelope_boundaries() {
        let (f1, f2) = (c(0.3, 0.2), c(-0.5, 0.9));
        let e = dc_envelopes(f1, f2, 6.4e4, 98.2e-6, 0.0).unwrap();
        assert_eq!((e.f_up, e.f_lo), (f1, f2));
        let e = dc_envelopes(c(1.0, 0.0), c(0.0, 0.0), 1.0, PI, PI / 2.0).unwrap();
        assert!(close(e.f_up, c(0.0, 0.0), 1e-15));
        assert!(close(e.f_lo, c(0.0, -1.0), 1e-15));
        assert!(dc_envelopes(f1, f2, 1.0, 1.0, 1.5).is_err());
        assert!(dc_envelopes(f1, f2, 1.0, 1.0, -1e-9).is_err());
    }

    #[test]
    fn dc_perfect_uncoupling_residual() {
        // kappa = 0.064 /um, L = 98.2 um: kappa L = 2 pi (1.0003)
        let (kappa, len) = (0.064e6, 98.2e-6);
        let e = dc_envelopes(c(0.0, 0.0), c(1.0, 0.0), kappa, len, len).unwrap();
        let residual = (kappa * len).sin().powi(2);
        assert!((e.f_up.norm_sqr() - residual).abs() < 1e-15);
        assert!(e.f_up.norm_sqr() < 4e-4);
        assert!(((kappa * len) / (2.0 * PI) - 1.0003).abs() < 1e-4);
    }

    #[test]
    fn mzi_envelopes_cases() {
        let (f1, f2) = (c(0.4, -0.1), c(0.2, 0.7));
        let e = mzi_envelopes(f1, f2, 1.0, 0.8);
        assert!(close(e.f_up, f1, 1e-15));
        assert!(close(e.f_lo, f2 * Complex64::from_polar(1.0, 0.8), 1e-15));
        let e = mzi_envelopes(c(1.0, 0.0), c(0.0, 0.0), FRAC_1_SQRT_2, PI);
        assert!((e.f_up.norm_sqr() - 0.5).abs() < 1e-15);
        assert!((e.f_lo.norm_sqr() - 0.5).abs() < 1e-15);
        let e = mzi_envelopes(c(1.0, 0.0), c(0.0, 0.0), 0.0, 0.3);
        assert!(e.f_up.norm() < 1e-15);
        assert!((e.f_lo.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generic_renormalises_near_unitary_input() {
        let cross = c(0.0, -0.00161);
        let d = (1.0 - 0.00161f64 * 0.00161).sqrt();
        let noisy = Mat2::new(c(d + 3e-7, 0.0), cross, cross, c(d, 1e-7));
        let spec = CouplerSpec::generic(noisy, 0.0).unwrap();
        assert!(spec.transfer_matrix().unitarity_deviation() < 1e-12);
        assert!((spec.transfer_matrix().get(0, 1) - cross).norm() < 1e-6);

        let bad = Mat2::new(c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(matches!(CouplerSpec::generic(bad, 0.0), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(CouplerSpec::directional(-1.0, 1e-5).is_err());
        assert!(CouplerSpec::directional(1.0, 0.0).is_err());
        assert!(CouplerSpec::mach_zehnder(1.2, 0.5, 0.0, 1e-5).is_err());
        assert!(CouplerSpec::mach_zehnder(0.5, -0.1, 0.0, 1e-5).is_err());
    }

    #[test]
    fn generic_envelopes_unsupported() {
        let spec = CouplerSpec::identity(0.0);
        assert!(matches!(
            spec.envelopes(c(1.0, 0.0), c(0.0, 0.0), 0.0),
            Err(Error::Unsupported(_))
        ));
    }

    fn arb_spec() -> impl Strategy<Value = CouplerSpec> {
        prop_oneof![
            (0.0f64..2e5, 1e-6f64..1e-3).prop_map(|(k, l)| CouplerSpec::directional(k, l).unwrap()),
            (0.0f64..=1.0, 0.0f64..=1.0, -10.0f64..10.0, 0.0f64..1e-3)
                .prop_map(|(a, b, p, l)| CouplerSpec::mach_zehnder(a, b, p, l).unwrap()),
            (0.0f64..1.0, -PI..PI, -PI..PI).prop_map(|(t, p1, p2)| {
                let (s, co) = (t * PI / 2.0).sin_cos();
                let m = Mat2::new(
                    Complex64::from_polar(co, p1),
                    Complex64::from_polar(s, p2),
                    -Complex64::from_polar(s, -p2),
                    Complex64::from_polar(co, -p1),
                );
                CouplerSpec::generic(m, 0.0).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn every_coupler_is_unitary(spec in arb_spec()) {
            let x = spec.transfer_matrix();
            prop_assert!(x.unitarity_deviation() < 1e-12);
            prop_assert!((x.det().norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn dc_envelope_matches_matrix_at_exit(k in 0.0f64..2e5, l in 1e-6f64..1e-3,
                                              a in -1.0f64..1.0, b in -1.0f64..1.0, p in -PI..PI) {
            let spec = CouplerSpec::directional(k, l).unwrap();
            let (f1, f2) = (c(a, b), Complex64::from_polar(b.abs(), p));
            let e = spec.envelopes(f1, f2, l).unwrap();
            let out = spec.transfer_matrix().apply([f1, f2]);
            prop_assert!(close(e.f_up, out[0], 1e-14));
            prop_assert!(close(e.f_lo, out[1], 1e-14));
        }

        #[test]
        fn dc_energy_constant_along_z(k in 0.0f64..2e5, l in 1e-6f64..1e-3,
                                      a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let (f1, f2) = (c(a, 0.3 * b), c(0.2, b));
            let e0 = dc_envelopes(f1, f2, k, l, 0.0).unwrap().total_intensity();
            for i in 0..=64 {
                let z = l * i as f64 / 64.0;
                let e = dc_envelopes(f1, f2, k, l, z).unwrap().total_intensity();
                prop_assert!((e - e0).abs() <= 1e-12 * e0);
            }
        }

        #[test]
        fn mzi_boundary_relation(ssx in 0.0f64..=1.0, sdx in 0.0f64..=1.0, phi in -PI..PI,
                                 a in -1.0f64..1.0, b in -1.0f64..1.0) {
            // entrance splitter (dx) -> arm fields -> exit splitter (sx)
            let (f1, f2) = (c(a, b), c(b, -0.5 * a));
            let arms = mzi_envelopes(f1, f2, sdx, phi);
            let out = point_coupler(ssx).apply([arms.f_up, arms.f_lo]);
            let (k_sx, k_dx) = (cross_coefficient(ssx), cross_coefficient(sdx));
            let e = Complex64::from_polar(1.0, phi);
            let f_in_plus = (ssx * sdx - k_sx * k_dx * e) * f1 + I * (ssx * k_dx + k_sx * sdx * e) * f2;
            let f_add_plus = (-k_sx * k_dx + ssx * sdx * e) * f2 + I * (k_sx * sdx + ssx * k_dx * e) * f1;
            prop_assert!(close(out[0], f_in_plus, 1e-12));
            prop_assert!(close(out[1], f_add_plus, 1e-12));
            let x = CouplerSpec::mach_zehnder(ssx, sdx, phi, 1e-5).unwrap().transfer_matrix();
            let direct = x.apply([f1, f2]);
            prop_assert!(close(direct[0], f_in_plus, 1e-12));
            prop_assert!(close(direct[1], f_add_plus, 1e-12));
        }
    }
}

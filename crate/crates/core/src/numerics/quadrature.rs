//! Adaptive Gauss-Kronrod quadrature and fixed-grid rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::sum::{CompensatedSum, Summable};
use crate::{Error, Result};

// 15-point Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Scalar types the quadrature routines can integrate. Complex integrands
/// share one subdivision for both parts.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Summable
{
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    roundoff: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T> Eq for Segment<T> {}

impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 quadrature with bisection of the worst interval.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveQuadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveQuadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_intervals: 4000,
        }
    }
}

impl AdaptiveQuadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    fn kronrod<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> Result<Segment<T>> {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let fc = f(center);
        if !fc.is_finite_value() {
            return Err(Error::Domain(format!("integrand not finite at {center:e}")));
        }
        let mut kronrod = fc * WGK[7];
        let mut gauss = fc * WG[3];
        let mut resabs = fc.magnitude() * WGK[7];
        for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
            let dx = half * x;
            let f1 = f(center - dx);
            let f2 = f(center + dx);
            if !f1.is_finite_value() || !f2.is_finite_value() {
                return Err(Error::Domain(format!(
                    "integrand not finite near {:e}",
                    center - dx
                )));
            }
            let pair = f1 + f2;
            kronrod = kronrod + pair * wk;
            resabs += wk * (f1.magnitude() + f2.magnitude());
            if j % 2 == 1 {
                gauss = gauss + pair * WG[j / 2];
            }
        }
        let value = kronrod * half;
        let resabs = resabs * half.abs();
        let raw = (kronrod - gauss).magnitude() * half.abs();
        let roundoff = 50.0 * f64::EPSILON * resabs;
        Ok(Segment {
            a,
            b,
            value,
            error: raw.max(roundoff),
            roundoff,
        })
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<T, F>(&self, mut f: F, a: f64, b: f64) -> Result<QuadratureResult<T>>
    where
        T: QuadValue,
        F: FnMut(f64) -> T,
    {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("invalid interval [{a:e}, {b:e}]")));
        }
        let mut heap = BinaryHeap::new();
        heap.push(Self::kronrod(&mut f, a, b)?);
        let mut evaluations = 15;
        loop {
            let total: CompensatedSum<T> = heap.iter().map(|s| s.value).collect();
            let value = total.value();
            let error: f64 = heap.iter().map(|s| s.error).sum();
            let roundoff: f64 = heap.iter().map(|s| s.roundoff).sum();
            let tol = self.abs_tol.max(self.rel_tol * value.magnitude());
            if error <= tol || error <= 2.0 * roundoff {
                return Ok(QuadratureResult {
                    value,
                    abs_error_estimate: error,
                    evaluations,
                });
            }
            if heap.len() >= self.max_intervals {
                return Err(Error::Quadrature {
                    message: format!("subdivision limit of {} intervals reached", self.max_intervals),
                    achieved: error,
                    requested: tol,
                });
            }
            let worst = heap.pop().expect("heap never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                return Err(Error::Quadrature {
                    message: "interval cannot be bisected further".into(),
                    achieved: error,
                    requested: tol,
                });
            }
            heap.push(Self::kronrod(&mut f, worst.a, mid)?);
            heap.push(Self::kronrod(&mut f, mid, worst.b)?);
            evaluations += 30;
        }
    }

    /// Integrates over several disjoint windows and sums the results.
    pub fn integrate_windows<T, F>(&self, mut f: F, windows: &[(f64, f64)]) -> Result<QuadratureResult<T>>
    where
        T: QuadValue,
        F: FnMut(f64) -> T,
    {
        let mut acc = CompensatedSum::<T>::new();
        let mut err = 0.0;
        let mut evaluations = 0;
        for &(a, b) in windows {
            let r = self.integrate(&mut f, a, b)?;
            acc.push(r.value);
            err += r.abs_error_estimate;
            evaluations += r.evaluations;
        }
        Ok(QuadratureResult {
            value: acc.value(),
            abs_error_estimate: err,
            evaluations,
        })
    }
}

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn integrate_adaptive<T, F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<QuadratureResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    AdaptiveQuadrature::with_rel_tol(rel_tol).integrate(f, a, b)
}

/// Composite Simpson weights for `n` uniformly spaced points with step `h`.
///
/// Odd `n` uses the plain composite rule; even `n` closes the last panel with
/// the 3/8 rule. `n = 2` degrades to the trapezoid rule and `n = 1` to zero.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => vec![0.5 * h, 0.5 * h],
        3 => vec![h / 3.0, 4.0 * h / 3.0, h / 3.0],
        _ if n % 2 == 1 => (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    h / 3.0
                } else if i % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                }
            })
            .collect(),
        _ => {
            let mut w = simpson_weights(n - 3, h);
            w.extend_from_slice(&[0.0, 0.0, 0.0]);
            let k = n - 4;
            for (j, c) in [3.0, 9.0, 9.0, 3.0].iter().enumerate() {
                w[k + j] += c * h / 8.0;
            }
            w
        }
    }
}

/// Uniform grid on `[lo, hi]` paired with Simpson weights.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        if n == 1 {
            return Self {
                points: vec![0.5 * (lo + hi)],
                weights: vec![hi - lo],
            };
        }
        let h = (hi - lo) / (n - 1) as f64;
        let points = (0..n).map(|i| lo + h * i as f64).collect();
        Self {
            points,
            weights: simpson_weights(n, h),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Concatenates grids over disjoint windows into one weighted point set.
    pub fn union(grids: impl IntoIterator<Item = UniformGrid>) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for g in grids {
            points.extend(g.points);
            weights.extend(g.weights);
        }
        Self { points, weights }
    }
}

//! Pulsed pump: pairs per pulse and the biphoton wavefunction.
//!
//! With Lorentzian fields and no group-velocity dispersion the overlap
//! factorizes as `conj(A2(w1) A2(w2)) A1(w3) A1(w4) J_unit`, and the pump
//! integral depends only on `W = w1 + w2`. Both quantities are evaluated on
//! tensor grids in `(W, w1)` with an inner `w3` grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::overlap::{j_total_with_delta_k, unit_amplitudes};
use super::rate::{FieldModel, FieldSource};
use super::{region_of, simpson_grid, NonlinearSpec, PumpProfile, PumpSpec, ResonanceTriple};
use crate::constants::HBAR;
use crate::network::StructureSpec;
use crate::numerics::{CompensatedSum, UniformGrid};
use crate::{Error, Result};

/// Pairs-per-pulse values above this trigger a low-gain warning.
pub const LOW_GAIN_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsedOptions {
    /// Half-width of the signal and idler windows in linewidths.
    pub window_widths: f64,
    /// Grid points per narrowest spectral feature at the first level.
    pub points_per_feature: f64,
    /// Relative change between refinements accepted as converged.
    pub tolerance: f64,
    pub max_levels: usize,
}

impl Default for PulsedOptions {
    fn default() -> Self {
        Self {
            window_widths: 12.0,
            points_per_feature: 3.0,
            tolerance: 0.01,
            max_levels: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsedResult {
    pub beta_sq: f64,
    /// Effective pulse duration (s).
    pub duration: f64,
    /// Relative change at the last refinement.
    pub last_change: f64,
    pub levels: usize,
}

struct PulsedSetup<'a> {
    fields: FieldSource<'a>,
    profile: &'a PumpProfile,
    j_unit: Complex64,
    prefactor: f64,
    omega_s: f64,
    omega_i: f64,
    gen_width: f64,
    gen_min_width: f64,
    pump_width: f64,
    window_widths: f64,
}

impl<'a> PulsedSetup<'a> {
    fn new(
        spec: &'a StructureSpec,
        triple: &ResonanceTriple,
        profile: &'a PumpProfile,
        alpha_sq: f64,
        nl: &NonlinearSpec,
        window_widths: f64,
    ) -> Result<Self> {
        if spec.waveguide.beta2 != 0.0 {
            return Err(Error::Unsupported(
                "pulsed pair generation is implemented for zero group-velocity dispersion".into(),
            ));
        }
        region_of(spec)?;
        let omega_p = profile.center();
        nl.validate(Some(omega_p))?;
        let j_unit = j_total_with_delta_k(spec, 0.0, unit_amplitudes(spec))?;
        let prefactor = HBAR * HBAR * alpha_sq * alpha_sq / (8.0 * PI * PI) * (nl.gamma_nl / omega_p).powi(2);
        Ok(Self {
            fields: FieldSource::new(spec, triple, FieldModel::Lorentzian),
            profile,
            j_unit,
            prefactor,
            omega_s: triple.signal.omega,
            omega_i: triple.idler.omega,
            gen_width: triple.signal.gamma.max(triple.idler.gamma),
            gen_min_width: triple.signal.gamma.min(triple.idler.gamma),
            pump_width: triple.pump.gamma,
            window_widths,
        })
    }

    /// `int dw3 phi(w3) phi(W - w3) sqrt(w3 (W - w3)) A1(w3) A1(W - w3)`.
    fn pump_integral(&self, big: f64, n: usize) -> Complex64 {
        let (lo, hi) = self.profile.support();
        let (a, b) = (lo.max(big - hi), hi.min(big - lo));
        if !(b > a) {
            return Complex64::new(0.0, 0.0);
        }
        let (pts, wts) = simpson_grid(a, b, n);
        let mut acc = CompensatedSum::<Complex64>::new();
        for (&w3, &wt) in pts.iter().zip(&wts) {
            let w4 = big - w3;
            let v = self.profile.amplitude(w3)
                * self.profile.amplitude(w4)
                * (w3 * w4).sqrt()
                * self.fields.pump_scalar(w3)
                * self.fields.pump_scalar(w4);
            acc.push(v * wt);
        }
        acc.value()
    }

    /// `int dw1 w1 (W - w1) |A2(w1)|^2 |A2(W - w1)|^2` over both windows.
    fn generated_integral(&self, big: f64, n: usize) -> f64 {
        let shift = (big - self.omega_s - self.omega_i).abs();
        let half = self.window_widths * self.gen_width + shift;
        let sep = (self.omega_s - self.omega_i).abs();
        let half = half.min(0.5 * sep);
        let mut acc = CompensatedSum::<f64>::new();
        for c in [self.omega_i.min(self.omega_s), self.omega_i.max(self.omega_s)] {
            let (pts, wts) = simpson_grid(c - half, c + half, n);
            for (&w1, &wt) in pts.iter().zip(&wts) {
                let w2 = big - w1;
                acc.push(wt * w1 * w2 * self.fields.gen_scalar(w1).norm_sqr() * self.fields.gen_scalar(w2).norm_sqr());
            }
        }
        acc.value()
    }

    fn big_range(&self) -> (f64, f64) {
        let (lo, hi) = self.profile.support();
        (2.0 * lo, 2.0 * hi)
    }

    fn counts(&self, level: usize, ppf: f64) -> (usize, usize, usize) {
        let scale = (1usize << level) as f64 * ppf;
        let (lo, hi) = self.profile.support();
        let pump_feature = self.profile.resolution_scale().min(self.pump_width);
        let n3 = ((hi - lo) / pump_feature * scale).ceil() as usize;
        let (blo, bhi) = self.big_range();
        let big_feature = pump_feature.min(self.gen_min_width);
        let n_big = ((bhi - blo) / big_feature * scale).ceil() as usize;
        let n1 = (2.0 * self.window_widths * self.gen_width / self.gen_min_width * scale).ceil() as usize;
        (n3.max(9), n_big.max(9), n1.max(9))
    }

    fn beta_sq(&self, level: usize, ppf: f64) -> f64 {
        let (n3, n_big, n1) = self.counts(level, ppf);
        let (blo, bhi) = self.big_range();
        let (pts, wts) = simpson_grid(blo, bhi, n_big);
        let terms: Vec<f64> = pts
            .par_iter()
            .zip(wts.par_iter())
            .map(|(&big, &wt)| {
                let p = self.pump_integral(big, n3);
                if p.norm_sqr() == 0.0 {
                    return 0.0;
                }
                wt * p.norm_sqr() * self.generated_integral(big, n1)
            })
            .collect();
        let sum: CompensatedSum<f64> = terms.into_iter().collect();
        self.prefactor * self.j_unit.norm_sqr() * sum.value()
    }
}

fn pulsed_parts(pump: &PumpSpec) -> Result<(&PumpProfile, f64)> {
    match pump {
        PumpSpec::Pulsed { profile, alpha_sq } => Ok((profile, *alpha_sq)),
        PumpSpec::Cw { .. } => Err(Error::Domain("a pulsed pump is required".into())),
    }
}

/// Mean number of pairs per pump pulse, `|beta|^2`, refined by grid doubling
/// until successive estimates differ by less than `opts.tolerance`.
pub fn pairs_per_pulse(
    spec: &StructureSpec,
    triple: &ResonanceTriple,
    pump: &PumpSpec,
    nl: &NonlinearSpec,
    opts: &PulsedOptions,
) -> Result<PulsedResult> {
    pump.validate()?;
    let (profile, alpha_sq) = pulsed_parts(pump)?;
    let setup = PulsedSetup::new(spec, triple, profile, alpha_sq, nl, opts.window_widths)?;
    let duration = profile.duration();
    if nl.gamma_nl == 0.0 {
        return Ok(PulsedResult {
            beta_sq: 0.0,
            duration,
            last_change: 0.0,
            levels: 0,
        });
    }
    let mut prev = setup.beta_sq(0, opts.points_per_feature);
    let mut change = f64::INFINITY;
    for level in 1..=opts.max_levels {
        let next = setup.beta_sq(level, opts.points_per_feature);
        change = if next == 0.0 { 0.0 } else { (next - prev).abs() / next.abs() };
        prev = next;
        if change < opts.tolerance {
            if prev > LOW_GAIN_LIMIT {
                log::warn!("|beta|^2 = {prev:.3} exceeds the low-gain regime");
            }
            return Ok(PulsedResult {
                beta_sq: prev,
                duration,
                last_change: change,
                levels: level,
            });
        }
    }
    Err(Error::GridTooCoarse {
        change,
        levels: opts.max_levels,
    })
}

/// Frequency axes of the biphoton wavefunction with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonGrid {
    pub omega1: UniformGrid,
    pub omega2: UniformGrid,
}

impl BiphotonGrid {
    /// Both axes cover `+-half_widths` linewidths around the signal and the
    /// idler with `points` samples per window.
    pub fn around(triple: &ResonanceTriple, half_widths: f64, points: usize) -> Self {
        let g = triple.signal.gamma.max(triple.idler.gamma);
        let (lo, hi) = (
            triple.signal.omega.min(triple.idler.omega),
            triple.signal.omega.max(triple.idler.omega),
        );
        let half = (half_widths * g).min(0.5 * (hi - lo));
        let axis = || {
            UniformGrid::union([
                UniformGrid::new(lo - half, lo + half, points),
                UniformGrid::new(hi - half, hi + half, points),
            ])
        };
        Self {
            omega1: axis(),
            omega2: axis(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiphotonResult {
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    /// Normalized amplitude, row-major with `omega1` as the row index.
    pub phi: Vec<Complex64>,
    /// `int int |phi|^2` before normalization; equals `|beta|^2`.
    pub beta_sq: f64,
    pub normalization_residual: f64,
    pub marginal1: Vec<f64>,
    pub marginal2: Vec<f64>,
    /// `(peak frequency, FWHM)` of each marginal lobe along `omega1`.
    pub marginal1_lobes: Vec<(f64, f64)>,
    pub marginal2_lobes: Vec<(f64, f64)>,
}

impl BiphotonResult {
    pub fn intensity(&self, i: usize, j: usize) -> f64 {
        self.phi[i * self.omega2.len() + j].norm_sqr()
    }
}

/// Full width at half maximum of each contiguous lobe of `values` sampled on
/// `axis`, split where the axis jumps between windows.
pub(crate) fn lobe_widths(axis: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let mut lobes = Vec::new();
    let mut start = 0;
    let step = |k: usize| axis[k + 1] - axis[k];
    for k in 0..axis.len() {
        let last = k + 1 == axis.len();
        let jump = !last && k > start && step(k) > 1.5 * step(start);
        if last || jump {
            let end = k + 1;
            lobes.push(lobe_fwhm(&axis[start..end], &values[start..end]));
            start = end;
        }
    }
    lobes
}

fn lobe_fwhm(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (imax, &ymax) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty lobe");
    let half = 0.5 * ymax;
    let cross = |range: &mut dyn Iterator<Item = usize>| {
        for k in range {
            let (a, b) = (k, if k > imax { k - 1 } else { k + 1 });
            if y[a] < half && y[b] >= half {
                return Some(x[a] + (half - y[a]) / (y[b] - y[a]) * (x[b] - x[a]));
            }
        }
        None
    };
    let left = cross(&mut (0..imax).rev());
    let right = cross(&mut (imax + 1..x.len()));
    match (left, right) {
        (Some(l), Some(r)) => (x[imax], r - l),
        _ => (x[imax], f64::NAN),
    }
}

/// Biphoton wavefunction on `grid`, normalized with the grid's quadrature
/// weights.
pub fn biphoton_wavefunction(
    spec: &StructureSpec,
    triple: &ResonanceTriple,
    pump: &PumpSpec,
    nl: &NonlinearSpec,
    grid: &BiphotonGrid,
    opts: &PulsedOptions,
) -> Result<BiphotonResult> {
    pump.validate()?;
    let (profile, alpha_sq) = pulsed_parts(pump)?;
    let setup = PulsedSetup::new(spec, triple, profile, alpha_sq, nl, opts.window_widths)?;
    let omega_p = profile.center();
    let (n3, _, _) = setup.counts(opts.max_levels.min(3), opts.points_per_feature);
    // i sqrt(2) hbar alpha^2 / (4 pi) gamma / w_P, times |beta| after normalization
    let pre = Complex64::new(0.0, 2f64.sqrt() * HBAR * alpha_sq / (4.0 * PI) * nl.gamma_nl / omega_p) * setup.j_unit;
    let (ax1, ax2) = (&grid.omega1, &grid.omega2);
    let rows: Vec<Vec<Complex64>> = ax1
        .points
        .par_iter()
        .map(|&w1| {
            let a1 = setup.fields.gen_scalar(w1).conj();
            ax2.points
                .iter()
                .map(|&w2| {
                    let a2 = setup.fields.gen_scalar(w2).conj();
                    pre * (w1 * w2).sqrt() * a1 * a2 * setup.pump_integral(w1 + w2, n3)
                })
                .collect()
        })
        .collect();
    let mut phi: Vec<Complex64> = rows.into_iter().flatten().collect();
    let n2 = ax2.len();
    let weighted = |phi: &[Complex64]| -> f64 {
        let mut acc = CompensatedSum::<f64>::new();
        for (i, &wi) in ax1.weights.iter().enumerate() {
            for (j, &wj) in ax2.weights.iter().enumerate() {
                acc.push(wi * wj * phi[i * n2 + j].norm_sqr());
            }
        }
        acc.value()
    };
    let beta_sq = weighted(&phi);
    if !(beta_sq > 0.0) {
        return Err(Error::Degenerate("biphoton amplitude vanishes on the grid".into()));
    }
    let inv = 1.0 / beta_sq.sqrt();
    phi.iter_mut().for_each(|v| *v *= inv);
    let normalization_residual = (weighted(&phi) - 1.0).abs();
    let marginal1: Vec<f64> = (0..ax1.len())
        .map(|i| (0..n2).map(|j| ax2.weights[j] * phi[i * n2 + j].norm_sqr()).sum())
        .collect();
    let marginal2: Vec<f64> = (0..n2)
        .map(|j| (0..ax1.len()).map(|i| ax1.weights[i] * phi[i * n2 + j].norm_sqr()).sum())
        .collect();
    Ok(BiphotonResult {
        marginal1_lobes: lobe_widths(&ax1.points, &marginal1),
        marginal2_lobes: lobe_widths(&ax2.points, &marginal2),
        omega1: ax1.points.clone(),
        omega2: ax2.points.clone(),
        phi,
        beta_sq,
        normalization_residual,
        marginal1,
        marginal2,
    })
}

//! Steady-state linear response of the full structure: two bus waveguides,
//! two racetracks and the coupler between them (or a single ring).
//!
//! Each racetrack of length `L_i` contains the coupling region of length
//! `L_cp`. The remaining `L_i - L_cp` is split by the bus point coupler: a
//! fraction `geometry_split` lies between the bus coupler and the coupler
//! entrance, the rest between the coupler exit and the bus coupler.
//! Circulating amplitudes are reported at the coupler entrance.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupler::{cross_coefficient, CouplerSpec, Mat2};
use crate::numerics::{find_root_bracketed, fit_lorentzian, LorentzianFit};
use crate::waveguide::WaveguideModel;
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Round-trip phases of ~1e4 rad carry rounding near 1e-12, so a system
/// determinant below this is treated as singular.
const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StructureKind {
    DoubleRacetrack {
        l1: f64,
        l2: f64,
        sigma_bus1: f64,
        sigma_bus2: f64,
        coupler: CouplerSpec,
    },
    /// A single ring on one bus. The Add port of a single ring is not
    /// connected to anything and passes straight to Drop.
    SingleRing { length: f64, sigma_bus: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub kind: StructureKind,
    pub waveguide: WaveguideModel,
    #[serde(default = "default_split")]
    pub geometry_split: f64,
}

fn default_split() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    In,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputPort {
    Through,
    Drop,
}

/// Port amplitudes for unit input at one port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortResponse {
    pub through: Complex64,
    pub drop: Complex64,
    /// Circulating amplitude in resonator 1 at the coupler entrance.
    pub circ1: Complex64,
    /// Circulating amplitude in resonator 2 at the coupler entrance.
    pub circ2: Complex64,
}

impl PortResponse {
    pub fn output(&self, port: OutputPort) -> Complex64 {
        match port {
            OutputPort::Through => self.through,
            OutputPort::Drop => self.drop,
        }
    }

    pub fn circulating(&self, resonator: usize) -> Complex64 {
        if resonator == 1 {
            self.circ1
        } else {
            self.circ2
        }
    }
}

/// Per-resonance linear characterisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceInfo {
    pub resonator: usize,
    /// Absolute mode number from `k(w) L + arg(X_ii) = 2 pi m`.
    pub mode: i64,
    pub omega: f64,
    /// Full width at half maximum (rad/s).
    pub gamma: f64,
    pub fe_max_sq: f64,
    pub finesse: f64,
    /// Free spectral range `v_g / L` (cycles per second).
    pub fsr: f64,
    pub q_loaded: f64,
    pub q_coupling: f64,
    pub ring_length: f64,
}

impl ResonanceInfo {
    /// Builds the resonance from bus self-coupling `sigma` and effective
    /// round-trip amplitude `a` using the isolated-resonance formulas.
    pub fn from_coupling(
        resonator: usize,
        mode: i64,
        omega: f64,
        sigma: f64,
        a: f64,
        v_g: f64,
        ring_length: f64,
    ) -> Self {
        let sa = sigma * a;
        let fe_max_sq = (1.0 - sigma * sigma) / (1.0 - sa).powi(2);
        let fsr = v_g / ring_length;
        let gamma = fsr * 2.0 * (1.0 - sa) / sa.sqrt();
        let q_loaded = omega / gamma;
        Self {
            resonator,
            mode,
            omega,
            gamma,
            fe_max_sq,
            finesse: 2.0 * PI * fsr / gamma,
            fsr,
            q_loaded,
            q_coupling: 4.0 * v_g * q_loaded * q_loaded / (ring_length * omega * fe_max_sq),
            ring_length,
        }
    }

    /// Builds the resonance from loaded and coupling quality factors; the
    /// peak enhancement follows from `4 v_g Q^2 / (L w Q_C)`.
    pub fn from_quality(
        resonator: usize,
        mode: i64,
        omega: f64,
        q_loaded: f64,
        q_coupling: f64,
        v_g: f64,
        ring_length: f64,
    ) -> Self {
        let gamma = omega / q_loaded;
        let fsr = v_g / ring_length;
        Self {
            resonator,
            mode,
            omega,
            gamma,
            fe_max_sq: 4.0 * v_g * q_loaded * q_loaded / (ring_length * omega * q_coupling),
            finesse: 2.0 * PI * fsr / gamma,
            fsr,
            q_loaded,
            q_coupling,
            ring_length,
        }
    }

    /// Lorentzian intensity enhancement around this resonance.
    pub fn lorentzian_intensity(&self, omega: f64) -> f64 {
        let hw2 = 0.25 * self.gamma * self.gamma;
        let d = omega - self.omega;
        self.fe_max_sq * hw2 / (hw2 + d * d)
    }

    /// Angular free spectral range `2 pi v_g / L`.
    pub fn fsr_angular(&self) -> f64 {
        2.0 * PI * self.fsr
    }
}

impl StructureSpec {
    pub fn new(kind: StructureKind, waveguide: WaveguideModel) -> Result<Self> {
        let spec = Self {
            kind,
            waveguide,
            geometry_split: default_split(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn double_racetrack(
        l1: f64,
        l2: f64,
        sigma_bus1: f64,
        sigma_bus2: f64,
        coupler: CouplerSpec,
        waveguide: WaveguideModel,
    ) -> Result<Self> {
        Self::new(
            StructureKind::DoubleRacetrack {
                l1,
                l2,
                sigma_bus1,
                sigma_bus2,
                coupler,
            },
            waveguide,
        )
    }

    pub fn single_ring(length: f64, sigma_bus: f64, waveguide: WaveguideModel) -> Result<Self> {
        Self::new(StructureKind::SingleRing { length, sigma_bus }, waveguide)
    }

    pub fn with_geometry_split(mut self, split: f64) -> Result<Self> {
        self.geometry_split = split;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.waveguide.validate()?;
        if !(0.0..=1.0).contains(&self.geometry_split) {
            return Err(Error::InvalidSpec(format!(
                "geometry_split must lie in [0, 1], got {}",
                self.geometry_split
            )));
        }
        let check_sigma = |name: &str, s: f64| {
            if (0.0..=1.0).contains(&s) {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must lie in [0, 1], got {s}")))
            }
        };
        match self.kind {
            StructureKind::DoubleRacetrack {
                l1,
                l2,
                sigma_bus1,
                sigma_bus2,
                coupler,
            } => {
                coupler.validate()?;
                check_sigma("sigma_bus1", sigma_bus1)?;
                check_sigma("sigma_bus2", sigma_bus2)?;
                let lcp = coupler.length();
                for (name, l) in [("L1", l1), ("L2", l2)] {
                    if !(l > lcp && l.is_finite()) {
                        return Err(Error::InvalidSpec(format!(
                            "{name} = {l:e} m must exceed the coupler length {lcp:e} m"
                        )));
                    }
                }
            }
            StructureKind::SingleRing { length, sigma_bus } => {
                check_sigma("sigma_bus", sigma_bus)?;
                if !(length > 0.0 && length.is_finite()) {
                    return Err(Error::InvalidSpec(format!("ring length must be positive, got {length}")));
                }
            }
        }
        Ok(())
    }

    /// Number of resonators (1 or 2).
    pub fn resonator_count(&self) -> usize {
        match self.kind {
            StructureKind::DoubleRacetrack { .. } => 2,
            StructureKind::SingleRing { .. } => 1,
        }
    }

    pub fn resonator_length(&self, resonator: usize) -> f64 {
        match (self.kind, resonator) {
            (StructureKind::DoubleRacetrack { l1, .. }, 1) => l1,
            (StructureKind::DoubleRacetrack { l2, .. }, _) => l2,
            (StructureKind::SingleRing { length, .. }, _) => length,
        }
    }

    pub fn bus_sigma(&self, resonator: usize) -> f64 {
        match (self.kind, resonator) {
            (StructureKind::DoubleRacetrack { sigma_bus1, .. }, 1) => sigma_bus1,
            (StructureKind::DoubleRacetrack { sigma_bus2, .. }, _) => sigma_bus2,
            (StructureKind::SingleRing { sigma_bus, .. }, _) => sigma_bus,
        }
    }

    pub fn coupler(&self) -> Option<&CouplerSpec> {
        match &self.kind {
            StructureKind::DoubleRacetrack { coupler, .. } => Some(coupler),
            StructureKind::SingleRing { .. } => None,
        }
    }

    /// Phase and magnitude the coupler adds to resonator `i`'s round trip.
    fn diagonal_coupler_term(&self, resonator: usize) -> Complex64 {
        match self.coupler() {
            Some(c) => {
                let x = c.transfer_matrix();
                x.get(resonator - 1, resonator - 1)
            }
            None => Complex64::new(1.0, 0.0),
        }
    }

    /// Effective round-trip amplitude of resonator `i` on its own: waveguide
    /// loss times the coupler's straight-through magnitude.
    pub fn effective_round_trip(&self, resonator: usize) -> Result<f64> {
        let a = self
            .waveguide
            .round_trip_amplitude(self.resonator_length(resonator))?;
        Ok(a * self.diagonal_coupler_term(resonator).norm())
    }
}

/// Steady-state amplitudes for unit input at `input`.
pub fn solve_linear(spec: &StructureSpec, omega: f64, input: Port) -> Result<PortResponse> {
    let wg = &spec.waveguide;
    match spec.kind {
        StructureKind::SingleRing { length, sigma_bus } => {
            if input == Port::Add {
                let zero = Complex64::new(0.0, 0.0);
                return Ok(PortResponse {
                    through: zero,
                    drop: Complex64::new(1.0, 0.0),
                    circ1: zero,
                    circ2: zero,
                });
            }
            let kappa = cross_coefficient(sigma_bus);
            let round = wg.propagation_factor(length, omega)?;
            let den = Complex64::new(1.0, 0.0) - sigma_bus * round;
            if den.norm() <= SINGULAR_TOL {
                return Err(Error::Degenerate(format!(
                    "lossless ring with sigma = 1 on resonance at {omega:e} rad/s"
                )));
            }
            let circ = I * kappa / den;
            let through = sigma_bus + I * kappa * round * circ;
            Ok(PortResponse {
                through,
                drop: Complex64::new(0.0, 0.0),
                circ1: circ,
                circ2: Complex64::new(0.0, 0.0),
            })
        }
        StructureKind::DoubleRacetrack {
            l1,
            l2,
            sigma_bus1,
            sigma_bus2,
            coupler,
        } => {
            let lcp = coupler.length();
            let split = spec.geometry_split;
            let x = coupler.transfer_matrix();
            let sig = [sigma_bus1, sigma_bus2];
            let kap = [cross_coefficient(sigma_bus1), cross_coefficient(sigma_bus2)];
            let lens = [l1, l2];
            let inputs = match input {
                Port::In => [1.0, 0.0],
                Port::Add => [0.0, 1.0],
            };
            let mut pre = [Complex64::new(0.0, 0.0); 2];
            let mut post = [Complex64::new(0.0, 0.0); 2];
            let mut round = [Complex64::new(0.0, 0.0); 2];
            for i in 0..2 {
                let free = lens[i] - lcp;
                pre[i] = wg.propagation_factor(split * free, omega)?;
                post[i] = wg.propagation_factor((1.0 - split) * free, omega)?
                    * wg.propagation_factor(lcp, omega)?;
                round[i] = sig[i] * pre[i] * post[i];
            }
            // (I - D X) u = b with D = diag(sigma_i exp(i k~ L_i))
            let dx = Mat2::diag(round[0], round[1]) * x;
            let one = Complex64::new(1.0, 0.0);
            let system = Mat2::new(
                one - dx.get(0, 0),
                -dx.get(0, 1),
                -dx.get(1, 0),
                one - dx.get(1, 1),
            );
            let det = system.det();
            if det.norm() <= SINGULAR_TOL {
                return Err(Error::Degenerate(format!(
                    "steady-state system singular at {omega:e} rad/s (|det| = {:.3e})",
                    det.norm()
                )));
            }
            let b = [
                pre[0] * I * kap[0] * inputs[0],
                pre[1] * I * kap[1] * inputs[1],
            ];
            let u = system.inverse().expect("non-singular").apply(b);
            let exit = x.apply(u);
            let arrive = [post[0] * exit[0], post[1] * exit[1]];
            Ok(PortResponse {
                through: sig[0] * inputs[0] + I * kap[0] * arrive[0],
                drop: sig[1] * inputs[1] + I * kap[1] * arrive[1],
                circ1: u[0],
                circ2: u[1],
            })
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("frequency grid must be strictly increasing".into()));
    }
    if grid.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Domain("frequency grid must be positive".into()));
    }
    Ok(())
}

/// Uniform grid of `n` points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Power transmission `input -> output` over `grid`.
pub fn spectrum(
    spec: &StructureSpec,
    grid: &[f64],
    input: Port,
    output: OutputPort,
) -> Result<Vec<(f64, f64)>> {
    check_grid(grid)?;
    grid.par_iter()
        .map(|&w| Ok((w, solve_linear(spec, w, input)?.output(output).norm_sqr())))
        .collect()
}

/// Circulating intensity `|FE|^2` in `resonator` for unit input on its own bus.
pub fn intensity_enhancement(
    spec: &StructureSpec,
    grid: &[f64],
    resonator: usize,
) -> Result<Vec<(f64, f64)>> {
    check_grid(grid)?;
    let port = own_port(spec, resonator)?;
    grid.par_iter()
        .map(|&w| {
            Ok((
                w,
                solve_linear(spec, w, port)?.circulating(resonator).norm_sqr(),
            ))
        })
        .collect()
}

fn own_port(spec: &StructureSpec, resonator: usize) -> Result<Port> {
    match resonator {
        1 => Ok(Port::In),
        2 if spec.resonator_count() == 2 => Ok(Port::Add),
        _ => Err(Error::Domain(format!(
            "structure has no resonator {resonator}"
        ))),
    }
}

/// Resonances of every resonator whose frequency lies inside `band`.
pub fn find_resonances(spec: &StructureSpec, band: (f64, f64)) -> Result<Vec<ResonanceInfo>> {
    let mut out = Vec::new();
    for r in 1..=spec.resonator_count() {
        out.extend(find_resonator_resonances(spec, r, band)?);
    }
    Ok(out)
}

/// Resonances of one resonator inside `band`, sorted by frequency.
pub fn find_resonator_resonances(
    spec: &StructureSpec,
    resonator: usize,
    band: (f64, f64),
) -> Result<Vec<ResonanceInfo>> {
    let (lo, hi) = band;
    if !(lo > 0.0) || !(hi > lo) {
        return Ok(Vec::new());
    }
    own_port(spec, resonator)?;
    let wg = &spec.waveguide;
    let len = spec.resonator_length(resonator);
    let extra = spec.diagonal_coupler_term(resonator).arg();
    let total_phase = |w: f64| wg.k_unchecked(w) * len + extra;
    let (p_lo, p_hi) = (total_phase(lo), total_phase(hi));
    let (m_min, m_max) = (
        (p_lo.min(p_hi) / (2.0 * PI)).ceil() as i64,
        (p_lo.max(p_hi) / (2.0 * PI)).floor() as i64,
    );
    let sigma = spec.bus_sigma(resonator);
    let a = spec.effective_round_trip(resonator)?;
    let mut out = Vec::new();
    for m in m_min..=m_max {
        let target = 2.0 * PI * m as f64;
        let omega = if wg.beta2 == 0.0 {
            wg.omega0 + wg.v_g * ((target - extra) / len - wg.k0())
        } else {
            let tol = 1e-15 * hi;
            match find_root_bracketed(|w| total_phase(w) - target, lo, hi, tol) {
                Ok(w) => w,
                Err(Error::Bracket { .. }) => continue,
                Err(e) => return Err(e),
            }
        };
        if omega < lo || omega > hi {
            continue;
        }
        out.push(ResonanceInfo::from_coupling(
            resonator, m, omega, sigma, a, wg.v_g, len,
        ));
    }
    out.sort_by(|x, y| x.omega.total_cmp(&y.omega));
    Ok(out)
}

/// Resonance of `resonator` nearest to `omega`.
pub fn nearest_resonance(spec: &StructureSpec, resonator: usize, omega: f64) -> Result<ResonanceInfo> {
    let fsr = 2.0 * PI * spec.waveguide.v_g / spec.resonator_length(resonator);
    let band = ((omega - 1.5 * fsr).max(f64::MIN_POSITIVE), omega + 1.5 * fsr);
    find_resonator_resonances(spec, resonator, band)?
        .into_iter()
        .min_by(|a, b| (a.omega - omega).abs().total_cmp(&(b.omega - omega).abs()))
        .ok_or_else(|| Error::Domain(format!("no resonance of resonator {resonator} near {omega:e}")))
}

/// On-resonance isolation in dB: circulating power in the driven resonator
/// over the power leaking into the other one. Infinite for a perfectly
/// uncoupled structure.
pub fn isolation(spec: &StructureSpec, resonance: &ResonanceInfo) -> Result<f64> {
    if spec.resonator_count() == 1 {
        return Ok(f64::INFINITY);
    }
    let port = own_port(spec, resonance.resonator)?;
    let r = solve_linear(spec, resonance.omega, port)?;
    let other = if resonance.resonator == 1 { 2 } else { 1 };
    let same = r.circulating(resonance.resonator).norm_sqr();
    let cross = r.circulating(other).norm_sqr();
    if cross == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (same / cross).log10())
}

/// Comparison of a fitted lineshape against the isolated-resonance formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineshapeCheck {
    pub fit_center: f64,
    pub fit_fwhm: f64,
    pub fit_peak: f64,
    pub analytic_gamma: f64,
    pub analytic_fe_max_sq: f64,
    pub fwhm_rel_diff: f64,
    pub peak_rel_diff: f64,
}

/// Relative disagreement above which [`check_lineshape`] logs a warning.
pub const LINESHAPE_WARN_THRESHOLD: f64 = 0.02;

/// Fits the simulated `|FE|^2` around `resonance` over `+-half_span_widths`
/// linewidths and compares with the analytic linewidth and peak.
pub fn check_lineshape(
    spec: &StructureSpec,
    resonance: &ResonanceInfo,
    half_span_widths: f64,
    points: usize,
) -> Result<LineshapeCheck> {
    let half = half_span_widths * resonance.gamma;
    let grid = linspace(resonance.omega - half, resonance.omega + half, points);
    let data = intensity_enhancement(spec, &grid, resonance.resonator)?;
    let fit: LorentzianFit = fit_lorentzian(&data)?;
    let check = LineshapeCheck {
        fit_center: fit.center,
        fit_fwhm: fit.fwhm,
        fit_peak: fit.peak,
        analytic_gamma: resonance.gamma,
        analytic_fe_max_sq: resonance.fe_max_sq,
        fwhm_rel_diff: (fit.fwhm - resonance.gamma).abs() / resonance.gamma,
        peak_rel_diff: (fit.peak - resonance.fe_max_sq).abs() / resonance.fe_max_sq,
    };
    if check.fwhm_rel_diff > LINESHAPE_WARN_THRESHOLD || check.peak_rel_diff > LINESHAPE_WARN_THRESHOLD {
        log::warn!(
            "resonator {} mode {}: fitted lineshape departs from isolated-resonance formulas \
             (FWHM {:.2}%, peak {:.2}%)",
            resonance.resonator,
            resonance.mode,
            100.0 * check.fwhm_rel_diff,
            100.0 * check.peak_rel_diff
        );
    }
    Ok(check)
}

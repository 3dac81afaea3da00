//! CW pair-generation rates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::overlap::{j_spatial_analytic, j_total, sinc, unit_amplitudes, EntranceAmplitudes, InteractionRegion};
use super::{region_of, NonlinearSpec, PumpSpec, RateMethod, ResonanceTriple, SfwmResult};
use crate::network::{find_resonator_resonances, nearest_resonance, solve_linear, Port, ResonanceInfo, StructureKind, StructureSpec};
use crate::numerics::AdaptiveQuadrature;
use crate::{Error, Result};

/// How the circulating fields entering the overlap are modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldModel {
    /// Sum of complex Lorentzian amplitudes of the triple's resonances.
    #[default]
    Lorentzian,
    /// Circulating amplitudes from the full linear solve.
    Solved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwOptions {
    /// Half-width of each integration window in units of the widest of the
    /// signal and idler linewidths.
    pub window_widths: f64,
    pub field_model: FieldModel,
    pub rel_tol: f64,
}

impl Default for CwOptions {
    fn default() -> Self {
        Self {
            window_widths: 12.0,
            field_model: FieldModel::Lorentzian,
            rel_tol: 1e-7,
        }
    }
}

/// `int w1 (2 w_P - w1) L(w1) dw1 ~ pi G_S G_I / (G_S + G_I) w_S w_I`.
pub fn lorentzian_pair_integral(gamma_s: f64, gamma_i: f64, omega_s: f64, omega_i: f64) -> f64 {
    PI * gamma_s * gamma_i / (gamma_s + gamma_i) * omega_s * omega_i
}

/// Complex Lorentzian amplitude whose modulus squared is the resonance's
/// intensity enhancement.
pub(crate) fn lorentzian_amplitude(r: &ResonanceInfo, omega: f64) -> Complex64 {
    let hw = 0.5 * r.gamma;
    r.fe_max_sq.sqrt() * hw / Complex64::new(hw, -(omega - r.omega))
}

/// Entrance amplitudes of the pump and generated fields.
pub(crate) struct FieldSource<'a> {
    spec: &'a StructureSpec,
    model: FieldModel,
    pump_res: Vec<ResonanceInfo>,
    gen_res: Vec<ResonanceInfo>,
    single: bool,
}

impl<'a> FieldSource<'a> {
    pub(crate) fn new(spec: &'a StructureSpec, triple: &ResonanceTriple, model: FieldModel) -> Self {
        let single = matches!(spec.kind, StructureKind::SingleRing { .. });
        let (pump_res, gen_res) = if single {
            let all = vec![triple.pump, triple.signal, triple.idler];
            (all.clone(), all)
        } else {
            (vec![triple.pump], vec![triple.signal, triple.idler])
        };
        Self {
            spec,
            model,
            pump_res,
            gen_res,
            single,
        }
    }

    pub(crate) fn pump_scalar(&self, omega: f64) -> Complex64 {
        self.pump_res.iter().map(|r| lorentzian_amplitude(r, omega)).sum()
    }

    pub(crate) fn gen_scalar(&self, omega: f64) -> Complex64 {
        self.gen_res.iter().map(|r| lorentzian_amplitude(r, omega)).sum()
    }

    fn place(&self, a: Complex64, resonator: usize) -> EntranceAmplitudes {
        let zero = Complex64::new(0.0, 0.0);
        if self.single || resonator == 1 {
            [a, zero]
        } else {
            [zero, a]
        }
    }

    fn pump(&self, omega: f64) -> Result<EntranceAmplitudes> {
        match self.model {
            FieldModel::Lorentzian => Ok(self.place(self.pump_scalar(omega), 1)),
            FieldModel::Solved => {
                let r = solve_linear(self.spec, omega, Port::In)?;
                Ok([r.circ1, r.circ2])
            }
        }
    }

    fn generated(&self, omega: f64) -> Result<EntranceAmplitudes> {
        match self.model {
            FieldModel::Lorentzian => Ok(self.place(self.gen_scalar(omega), 2)),
            FieldModel::Solved => {
                let port = if self.single { Port::In } else { Port::Add };
                let r = solve_linear(self.spec, omega, port)?;
                Ok([r.circ1, r.circ2])
            }
        }
    }
}

fn check_power(power: f64, omega_p: f64, nl: &NonlinearSpec) -> Result<()> {
    if !(power > 0.0) || !(omega_p > 0.0) {
        return Err(Error::InvalidSpec("pump power and frequency must be positive".into()));
    }
    nl.validate(Some(omega_p))
}

/// Closed-form CW rate with a per-structure spatial overlap at `dk = 0`:
/// `(1/4pi) (gamma P / w_P)^2 |F_max|^2 pi G_S G_I/(G_S+G_I) w_S w_I |J|^2`.
pub fn pair_rate_analytic(
    region: &InteractionRegion,
    triple: &ResonanceTriple,
    power: f64,
    omega_p: f64,
    nl: &NonlinearSpec,
) -> Result<SfwmResult> {
    check_power(power, omega_p, nl)?;
    let j = j_spatial_analytic(region, 0.0)?;
    let fe_p = triple.pump.lorentzian_intensity(omega_p);
    let fe_product = triple.signal.fe_max_sq * triple.idler.fe_max_sq * fe_p * fe_p;
    let freq = lorentzian_pair_integral(triple.signal.gamma, triple.idler.gamma, triple.signal.omega, triple.idler.omega);
    let pre = (nl.gamma_nl * power / omega_p).powi(2) / (4.0 * PI);
    Ok(SfwmResult {
        rate_pairs_per_s: pre * fe_product * freq * j.norm_sqr(),
        j_spatial: j,
        fe_product,
        method: RateMethod::Analytic,
        ratio_to_ring: None,
    })
}

/// Integrates `(1/4pi) (gamma P / w_P)^2 int w1 w2 |J(w1, w2, w_P, w_P)|^2 dw1`
/// with `w2 = 2 w_P - w1` over windows around the signal and idler.
pub fn pair_rate_quadrature(
    spec: &StructureSpec,
    triple: &ResonanceTriple,
    power: f64,
    omega_p: f64,
    nl: &NonlinearSpec,
    opts: &CwOptions,
) -> Result<SfwmResult> {
    check_power(power, omega_p, nl)?;
    let fields = FieldSource::new(spec, triple, opts.field_model);
    let pump = fields.pump(omega_p)?;
    let integrand = |w1: f64| -> f64 {
        let w2 = 2.0 * omega_p - w1;
        let amps = match (fields.generated(w1), fields.generated(w2)) {
            (Ok(a1), Ok(a2)) => [a1, a2, pump, pump],
            _ => return f64::NAN,
        };
        match j_total(spec, [w1, w2, omega_p, omega_p], amps) {
            Ok(j) => w1 * w2 * j.norm_sqr(),
            Err(_) => f64::NAN,
        }
    };
    let (s, i) = (triple.signal, triple.idler);
    let separation = (s.omega - i.omega).abs();
    let half = (opts.window_widths * s.gamma.max(i.gamma)).min(0.5 * separation);
    let windows = [(i.omega.min(s.omega) - half, i.omega.min(s.omega) + half), (i.omega.max(s.omega) - half, i.omega.max(s.omega) + half)];
    let quad = AdaptiveQuadrature::with_rel_tol(opts.rel_tol).abs_tol(f64::MIN_POSITIVE);
    let integral = quad.integrate_windows(integrand, &windows)?.value;
    let pre = (nl.gamma_nl * power / omega_p).powi(2) / (4.0 * PI);
    let j_unit = j_total(spec, [s.omega, i.omega, omega_p, omega_p], unit_amplitudes(spec))?;
    Ok(SfwmResult {
        rate_pairs_per_s: pre * integral,
        j_spatial: j_unit,
        fe_product: triple.fe_product(),
        method: RateMethod::Quadrature,
        ratio_to_ring: None,
    })
}

/// CW pair rate by the requested method.
pub fn pair_rate_cw(
    spec: &StructureSpec,
    triple: &ResonanceTriple,
    pump: &PumpSpec,
    nl: &NonlinearSpec,
    method: RateMethod,
    opts: &CwOptions,
) -> Result<SfwmResult> {
    let (power, omega_p) = match pump {
        PumpSpec::Cw { power, omega } => (*power, *omega),
        PumpSpec::Pulsed { .. } => {
            return Err(Error::Domain("pair_rate_cw needs a CW pump".into()));
        }
    };
    match method {
        RateMethod::Analytic => pair_rate_analytic(&region_of(spec)?, triple, power, omega_p, nl),
        RateMethod::Quadrature => pair_rate_quadrature(spec, triple, power, omega_p, nl, opts),
    }
}

/// Rate written with loaded and coupling quality factors. Lengths come from
/// the triple's resonances: `L1` from the pump, `L2` from the signal.
pub fn pair_rate_q_form(
    region: &InteractionRegion,
    triple: &ResonanceTriple,
    power: f64,
    nl: &NonlinearSpec,
    v_g: f64,
) -> f64 {
    let (p, s, i) = (&triple.pump, &triple.signal, &triple.idler);
    let q_fac = p.q_loaded.powi(4) * s.q_loaded.powi(2) * i.q_loaded.powi(2)
        / (p.q_coupling.powi(2) * s.q_coupling * i.q_coupling);
    let common = (nl.gamma_nl * power).powi(2) * v_g.powi(4) * s.omega * i.omega
        / (p.omega.powi(4) * (s.omega * i.q_loaded + i.omega * s.q_loaded))
        * q_fac;
    let (l1, l2) = (p.ring_length, s.ring_length);
    match *region {
        InteractionRegion::Ring { length } => 64.0 * common / (length * length),
        InteractionRegion::Directional { kappa, length } => {
            let shape = 1.0 - sinc(4.0 * kappa.abs() * length);
            4.0 * common * (length / (l1 * l2)).powi(2) * shape * shape
        }
        InteractionRegion::MachZehnder { length, .. } => 16.0 * common * (length / (l1 * l2)).powi(2),
    }
}

/// Rate at critical coupling written with the finesses. The coupler forms
/// carry the `L_DC^2/64` and `L_MZI^2/16` prefactors without the sinc term.
pub fn pair_rate_finesse_form(
    region: &InteractionRegion,
    triple: &ResonanceTriple,
    power: f64,
    nl: &NonlinearSpec,
) -> f64 {
    let (p, s, i) = (&triple.pump, &triple.signal, &triple.idler);
    let fin = (s.finesse / PI) * (i.finesse / PI) * (p.finesse / PI).powi(2);
    let pre = (nl.gamma_nl * power / p.omega).powi(2);
    let freq = s.gamma * i.gamma / (s.gamma + i.gamma) * s.omega * i.omega;
    let geom = match *region {
        InteractionRegion::Ring { length } => length * length / 4.0,
        InteractionRegion::Directional { length, .. } => length * length / 64.0,
        InteractionRegion::MachZehnder { length, .. } => length * length / 16.0,
    };
    pre * fin * freq * geom
}

/// Rate relative to a single ring of length `l_ring` with matched resonances:
/// `(L L_DC / (4 L1 L2))^2` or `(L L_MZI / (2 L1 L2))^2`.
pub fn ratio_to_ring(region: &InteractionRegion, l1: f64, l2: f64, l_ring: f64) -> Result<f64> {
    match *region {
        InteractionRegion::Ring { .. } => Ok(1.0),
        InteractionRegion::Directional { length, .. } => Ok((l_ring * length / (4.0 * l1 * l2)).powi(2)),
        InteractionRegion::MachZehnder { length, .. } => Ok((l_ring * length / (2.0 * l1 * l2)).powi(2)),
    }
}

/// Picks the pump resonance of resonator 1 nearest `pump_hint` and the
/// `order`-th generated pair symmetric about it (1 = nearest pair).
pub fn select_triple(spec: &StructureSpec, pump_hint: f64, order: usize, tolerance_fraction: f64) -> Result<ResonanceTriple> {
    if order == 0 {
        return Err(Error::Domain("triple order starts at 1".into()));
    }
    let pump = nearest_resonance(spec, 1, pump_hint)?;
    let gen = spec.resonator_count();
    let fsr = 2.0 * PI * spec.waveguide.v_g / spec.resonator_length(gen);
    let reach = (order as f64 + 2.0) * fsr;
    let band = ((pump.omega - reach).max(f64::MIN_POSITIVE), pump.omega + reach);
    let all = find_resonator_resonances(spec, gen, band)?;
    let guard = pump.gamma;
    let above: Vec<_> = all.iter().filter(|r| r.omega > pump.omega + guard).collect();
    let below: Vec<_> = all.iter().rev().filter(|r| r.omega < pump.omega - guard).collect();
    match (above.get(order - 1), below.get(order - 1)) {
        (Some(s), Some(i)) => ResonanceTriple::with_tolerance(pump, **s, **i, tolerance_fraction),
        _ => Err(Error::Domain(format!(
            "no generated resonance pair of order {order} around {:e} rad/s",
            pump.omega
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{omega_from_wavelength, SPEED_OF_LIGHT};
    use crate::coupler::CouplerSpec;
    use crate::numerics::integrate_adaptive;
    use crate::waveguide::WaveguideModel;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn wg(xi: f64) -> WaveguideModel {
        WaveguideModel::new(omega_from_wavelength(1550e-9), 2.0, SPEED_OF_LIGHT / 4.0, xi).unwrap()
    }

    fn nl() -> NonlinearSpec {
        NonlinearSpec::new(1.0).unwrap()
    }

    #[test]
    fn lorentzian_integral_symmetric_and_homogeneous() {
        let (ws, wi) = (1.21e15, 1.19e15);
        let g = 1e9;
        let v = lorentzian_pair_integral(g, g, ws, wi);
        assert!((v - 0.5 * PI * g * ws * wi).abs() < 1e-12 * v);
        let v2 = lorentzian_pair_integral(2.0 * g, 2.0 * g, ws, wi);
        assert!((v2 - 2.0 * v).abs() < 1e-12 * v);
    }

    #[test]
    fn lorentzian_integral_against_quadrature() {
        let wp = 1.2e15;
        let (ws, wi) = (wp + 5e11, wp - 5e11);
        for ratio in [0.1, 1.0, 10.0] {
            let gi = 1e-6 * wp;
            let gs = ratio * gi;
            let l = |x: f64, g: f64| (g * g / 4.0) / (g * g / 4.0 + x * x);
            let f = |w1: f64| {
                w1 * (2.0 * wp - w1) * (l(w1 - ws, gs) * l(w1 - ws, gi) + l(w1 - wi, gs) * l(w1 - wi, gi))
            };
            let half = (400.0 * gs.max(gi)).min(0.5 * (ws - wi));
            let num = integrate_adaptive(f, ws - half, ws + half, 1e-10).unwrap().value
                + integrate_adaptive(f, wi - half, wi + half, 1e-10).unwrap().value;
            let ana = lorentzian_pair_integral(gs, gi, ws, wi);
            assert!((num - ana).abs() / ana < 1e-3, "ratio {ratio}: {num} vs {ana}");
        }
    }

    #[test]
    fn ratio_identities() {
        let r = 10e-6;
        let l = 2.0 * PI * r;
        let dc = InteractionRegion::Directional { kappa: 1e5, length: PI * r };
        let mzi = InteractionRegion::MachZehnder { sigma_dx: FRAC_1_SQRT_2, length: PI * r };
        assert!((ratio_to_ring(&dc, 2.0 * l, 2.0 * l, l).unwrap() - 1.0 / 1024.0).abs() < 1e-12);
        assert!((ratio_to_ring(&mzi, 2.0 * l, 2.0 * l, l).unwrap() - 1.0 / 256.0).abs() < 1e-12);
        let tiny = InteractionRegion::Directional { kappa: 1e5, length: 0.0 };
        assert_eq!(ratio_to_ring(&tiny, 2.0 * l, 2.0 * l, l).unwrap(), 0.0);
    }

    fn ring_triple(sigma: f64, xi: f64) -> (StructureSpec, ResonanceTriple) {
        let ring = StructureSpec::single_ring(200e-6, sigma, wg(xi)).unwrap();
        let t = select_triple(&ring, ring.waveguide.omega0, 1, 0.1).unwrap();
        (ring, t)
    }

    #[test]
    fn ring_triple_is_symmetric() {
        let (_, t) = ring_triple(0.99, 0.0);
        assert_eq!(t.signal.mode, t.pump.mode + 1);
        assert_eq!(t.idler.mode, t.pump.mode - 1);
        assert!(t.energy_mismatch().abs() < 1e-9 * t.pump.gamma);
    }

    #[test]
    fn mzi_triple_uses_half_fsr_offset() {
        let spec = StructureSpec::double_racetrack(
            400e-6,
            400e-6,
            0.99,
            0.99,
            CouplerSpec::mach_zehnder(FRAC_1_SQRT_2, FRAC_1_SQRT_2, PI, 60e-6).unwrap(),
            wg(0.0),
        )
        .unwrap();
        let t = select_triple(&spec, spec.waveguide.omega0, 1, 0.1).unwrap();
        let fsr = 2.0 * PI * spec.waveguide.v_g / 400e-6;
        assert!(((t.signal.omega - t.pump.omega) / fsr - 0.5).abs() < 1e-6);
        assert!(t.energy_mismatch().abs() < 0.1 * t.pump.gamma);
    }

    #[test]
    fn mismatched_combs_report_nearest_miss() {
        let spec = StructureSpec::double_racetrack(
            400e-6,
            397e-6,
            0.99,
            0.99,
            CouplerSpec::directional(2.0 * PI / 100e-6, 100e-6).unwrap(),
            wg(0.0),
        )
        .unwrap();
        let err = select_triple(&spec, spec.waveguide.omega0, 1, 0.1).unwrap_err();
        assert!(matches!(err, Error::EnergyConservation { .. }));
    }

    #[test]
    fn analytic_equals_fe_form_and_scales() {
        let (ring, t) = ring_triple(0.99, 5.0);
        let region = region_of(&ring).unwrap();
        let r1 = pair_rate_analytic(&region, &t, 1e-3, t.pump.omega, &nl()).unwrap();
        let r2 = pair_rate_analytic(&region, &t, 2e-3, t.pump.omega, &nl()).unwrap();
        assert!((r2.rate_pairs_per_s / r1.rate_pairs_per_s - 4.0).abs() < 1e-12);
        let fe_form = t.fe_product() * (1e-3 / t.pump.omega).powi(2) * t.signal.gamma * t.idler.gamma
            / (t.signal.gamma + t.idler.gamma)
            * t.signal.omega
            * t.idler.omega
            * 200e-6f64.powi(2)
            / 4.0;
        assert!((r1.rate_pairs_per_s - fe_form).abs() / fe_form < 1e-12);
        let zero = NonlinearSpec::new(0.0).unwrap();
        assert_eq!(pair_rate_analytic(&region, &t, 1e-3, t.pump.omega, &zero).unwrap().rate_pairs_per_s, 0.0);
    }

    #[test]
    fn quadrature_matches_analytic_for_ring() {
        let (ring, t) = ring_triple(0.995, 1.0);
        assert!(t.pump.finesse > 100.0);
        let pump = PumpSpec::cw(1e-3, t.pump.omega).unwrap();
        let opts = CwOptions::default();
        let a = pair_rate_cw(&ring, &t, &pump, &nl(), RateMethod::Analytic, &opts).unwrap();
        let q = pair_rate_cw(&ring, &t, &pump, &nl(), RateMethod::Quadrature, &opts).unwrap();
        let rel = (a.rate_pairs_per_s - q.rate_pairs_per_s).abs() / a.rate_pairs_per_s;
        assert!(rel < 0.02, "{rel}");
        let solved = CwOptions { field_model: FieldModel::Solved, ..opts };
        let s = pair_rate_cw(&ring, &t, &pump, &nl(), RateMethod::Quadrature, &solved).unwrap();
        let rel = (a.rate_pairs_per_s - s.rate_pairs_per_s).abs() / a.rate_pairs_per_s;
        assert!(rel < 0.05, "{rel}");
    }

    #[test]
    fn pulsed_pump_rejected_by_cw_rate() {
        let (ring, t) = ring_triple(0.99, 0.0);
        let pump = PumpSpec::pulsed(crate::sfwm::PumpProfile::gaussian(t.pump.omega, 1e8).unwrap(), 1e6).unwrap();
        assert!(pair_rate_cw(&ring, &t, &pump, &nl(), RateMethod::Analytic, &CwOptions::default()).is_err());
    }

    #[test]
    fn finesse_form_power_counting() {
        let mk = |f: f64| {
            let w = 1.2e15;
            let q = f * w * 1e-3 / (2.0 * PI * 1e8);
            let r = |res, m, om| ResonanceInfo::from_quality(res, m, om, q, 2.0 * q, 1e8, 1e-3);
            ResonanceTriple::new(r(1, 0, w), r(2, 1, w + 1e11), r(2, -1, w - 1e11)).unwrap()
        };
        let region = InteractionRegion::Ring { length: 1e-3 };
        let a = pair_rate_finesse_form(&region, &mk(100.0), 1e-3, &nl());
        let b = pair_rate_finesse_form(&region, &mk(200.0), 1e-3, &nl());
        // F^4 from the finesse factors, 1/F from the linewidth factor
        assert!((b / a - 8.0).abs() < 1e-9);
        let dc = InteractionRegion::Directional { kappa: 2.0 * PI / 1e-4, length: 1e-4 };
        let mzi = InteractionRegion::MachZehnder { sigma_dx: FRAC_1_SQRT_2, length: 1e-4 };
        let t = mk(100.0);
        let ratio = pair_rate_finesse_form(&mzi, &t, 1e-3, &nl()) / pair_rate_finesse_form(&dc, &t, 1e-3, &nl());
        assert!((ratio - 4.0).abs() < 1e-12);
    }
}

use rayon::prelude::*;
use serde_json::{json, Value};
use uncoupled_core::constants::wavelength_from_omega;
use uncoupled_core::network::{
    find_resonances, intensity_enhancement, isolation, linspace, nearest_resonance, solve_linear, Port,
    ResonanceInfo, StructureKind,
};
use uncoupled_core::sfwm::{
    biphoton_wavefunction, pair_rate_cw, pair_rate_finesse_form, pair_rate_q_form, pairs_per_pulse, ratio_to_ring,
    select_triple, BiphotonGrid, InteractionRegion, NonlinearSpec, PumpProfile, PumpSpec, RateMethod,
    ResonanceTriple,
};
use uncoupled_core::Complex64;

use crate::config::{PumpAmount, PumpBandwidth, PumpMode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Report, Table};

fn lambda_nm(omega: f64) -> f64 {
    wavelength_from_omega(omega) * 1e9
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn complex(c: Complex64) -> Value {
    json!({ "re": c.re, "im": c.im })
}

fn resonance(r: &ResonanceInfo) -> Value {
    json!({
        "resonator": r.resonator,
        "mode": r.mode,
        "omega_rad_s": r.omega,
        "lambda_nm": lambda_nm(r.omega),
        "gamma_rad_s": r.gamma,
        "fe_max_sq": r.fe_max_sq,
        "finesse": r.finesse,
        "fsr_hz": r.fsr,
        "q_loaded": r.q_loaded,
        "q_coupling": r.q_coupling,
    })
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn sweep_grid(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs a [sweep] section".into()))?;
    Ok(linspace(sw.start, sw.stop, sw.points))
}

fn nonlinear(cfg: &RunConfig) -> CliResult<&NonlinearSpec> {
    cfg.nonlinear
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs a [nonlinear] section".into()))
}

fn triple(cfg: &RunConfig) -> CliResult<ResonanceTriple> {
    let hint = cfg
        .pump
        .as_ref()
        .and_then(|p| p.center)
        .unwrap_or(cfg.spec.waveguide.omega0);
    Ok(select_triple(&cfg.spec, hint, cfg.rates.order, cfg.rates.tolerance_fraction)?)
}

fn triple_json(t: &ResonanceTriple) -> Value {
    json!({
        "pump": resonance(&t.pump),
        "signal": resonance(&t.signal),
        "idler": resonance(&t.idler),
        "energy_mismatch_rad_s": t.energy_mismatch(),
    })
}

/// Port transmissions: I In->Through, II Add->Drop, III In->Drop, IV Add->Through.
pub fn spectrum(cfg: &RunConfig) -> CliResult<Report> {
    let grid = sweep_grid(cfg)?;
    let spec = &cfg.spec;
    let rows = grid
        .par_iter()
        .map(|&w| {
            let a = solve_linear(spec, w, Port::In)?;
            let b = solve_linear(spec, w, Port::Add)?;
            Ok(vec![
                w,
                lambda_nm(w),
                a.through.norm_sqr(),
                b.drop.norm_sqr(),
                a.drop.norm_sqr(),
                b.through.norm_sqr(),
            ])
        })
        .collect::<uncoupled_core::Result<Vec<_>>>()?;
    let mut table = Table::new(&["omega_rad_s", "lambda_nm", "T_I", "T_II", "T_III", "T_IV"]);
    table.rows = rows.into_iter().map(|r| r.into_iter().map(Cell::Num).collect()).collect();

    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let mut resonances = Vec::new();
    for r in find_resonances(spec, (lo, hi))? {
        let mut v = resonance(&r);
        v["isolation_db"] = num(isolation(spec, &r)?);
        resonances.push(v);
    }
    Ok(Report {
        command: "spectrum",
        summary: json!({ "points": grid.len(), "resonances": resonances }),
        table,
        table_in_json: true,
    })
}

/// Circulating `|FE|^2` of each resonator for unit input on its own bus.
pub fn enhance(cfg: &RunConfig) -> CliResult<Report> {
    let grid = sweep_grid(cfg)?;
    let spec = &cfg.spec;
    let n = spec.resonator_count();
    let per: Vec<Vec<(f64, f64)>> = (1..=n)
        .map(|r| intensity_enhancement(spec, &grid, r))
        .collect::<uncoupled_core::Result<_>>()?;
    let names: Vec<&str> = ["omega_rad_s", "lambda_nm", "FE1_sq", "FE2_sq"][..2 + n].to_vec();
    let mut table = Table::new(&names);
    for (i, &w) in grid.iter().enumerate() {
        let mut row = vec![Cell::Num(w), Cell::Num(lambda_nm(w))];
        row.extend(per.iter().map(|p| Cell::Num(p[i].1)));
        table.rows.push(row);
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let resonances: Vec<Value> = find_resonances(spec, (lo, hi))?.iter().map(resonance).collect();
    Ok(Report {
        command: "enhance",
        summary: json!({ "points": grid.len(), "resonances": resonances }),
        table,
        table_in_json: true,
    })
}

/// Intensities in the two coupler channels along z.
pub fn fields(cfg: &RunConfig) -> CliResult<Report> {
    let spec = &cfg.spec;
    let coupler = match &spec.kind {
        StructureKind::DoubleRacetrack { coupler, .. } => *coupler,
        StructureKind::SingleRing { .. } => {
            return Err(CliError::Config("fields needs a double-racetrack structure".into()));
        }
    };
    let port = cfg.fields.port;
    let omega = match cfg.fields.at {
        Some(w) => w,
        None => {
            let resonator = if port == Port::In { 1 } else { 2 };
            nearest_resonance(spec, resonator, spec.waveguide.omega0)?.omega
        }
    };
    let r = solve_linear(spec, omega, port)?;
    let zs = linspace(0.0, coupler.length(), cfg.fields.points);
    let mut table = Table::new(&["z_m", "I_up", "I_lo"]);
    for &z in &zs {
        let e = coupler.envelopes(r.circ1, r.circ2, z)?;
        table.rows.push(vec![z.into(), e.f_up.norm_sqr().into(), e.f_lo.norm_sqr().into()]);
    }
    let up = table.column("I_up").expect("column exists");
    let peak = up.iter().cloned().fold(0.0, f64::max);
    let ends = up[0].max(up[up.len() - 1]);
    Ok(Report {
        command: "fields",
        summary: json!({
            "port": port,
            "omega_rad_s": omega,
            "lambda_nm": lambda_nm(omega),
            "circ1": complex(r.circ1),
            "circ2": complex(r.circ2),
            "peak_up": peak,
            "end_to_peak_up": num(ends / peak),
        }),
        table,
        table_in_json: true,
    })
}

/// CW pair rates by every available route for the configured structure.
pub fn rates(cfg: &RunConfig) -> CliResult<Report> {
    let nl = nonlinear(cfg)?;
    let pump = cfg
        .pump
        .as_ref()
        .ok_or_else(|| CliError::Config("rates needs a [pump] section".into()))?;
    let power = match (pump.mode, pump.amount) {
        (PumpMode::Cw, PumpAmount::Power(p)) => p,
        _ => return Err(CliError::Config("rates needs a CW pump with a power".into())),
    };
    let spec = &cfg.spec;
    let region = InteractionRegion::from_structure(spec)?;
    let t = triple(cfg)?;
    let omega_p = pump.center.unwrap_or(t.pump.omega);
    let cw = PumpSpec::cw(power, omega_p)?;
    let analytic = pair_rate_cw(spec, &t, &cw, nl, RateMethod::Analytic, &cfg.rates.cw)?;
    let quadrature = pair_rate_cw(spec, &t, &cw, nl, RateMethod::Quadrature, &cfg.rates.cw)?;
    let q_form = pair_rate_q_form(&region, &t, power, nl, spec.waveguide.v_g);
    let finesse_form = pair_rate_finesse_form(&region, &t, power, nl);
    let (l1, l2) = (spec.resonator_length(1), spec.resonator_length(spec.resonator_count()));
    let ratio = match cfg.rates.reference_ring_length {
        Some(l) => Some(ratio_to_ring(&region, l1, l2, l)?),
        None => None,
    };
    let a = analytic.rate_pairs_per_s;
    let summary = json!({
        "structure": region.name(),
        "interaction_length_m": region.length(),
        "pump_omega_rad_s": omega_p,
        "pump_power_w": power,
        "triple": triple_json(&t),
        "fe_product": analytic.fe_product,
        "j_spatial_m": complex(analytic.j_spatial),
        "j_total_unit_m": complex(quadrature.j_spatial),
        "analytic_rate_pairs_per_s": a,
        "quadrature_rate_pairs_per_s": quadrature.rate_pairs_per_s,
        "analytic_vs_quadrature": rel_diff(quadrature.rate_pairs_per_s, a),
        "q_form_rate_pairs_per_s": q_form,
        "q_form_vs_analytic": rel_diff(q_form, a),
        "finesse_form_rate_pairs_per_s": finesse_form,
        "finesse_form_vs_analytic": rel_diff(finesse_form, a),
        "ratio_to_ring": ratio,
    });
    let mut table = Table::new(&["quantity", "value"]);
    let scalar_keys = [
        "analytic_rate_pairs_per_s",
        "quadrature_rate_pairs_per_s",
        "analytic_vs_quadrature",
        "q_form_rate_pairs_per_s",
        "q_form_vs_analytic",
        "finesse_form_rate_pairs_per_s",
        "finesse_form_vs_analytic",
        "fe_product",
        "pump_omega_rad_s",
        "pump_power_w",
    ];
    for k in scalar_keys {
        table.rows.push(vec![k.into(), summary[k].as_f64().unwrap_or(f64::NAN).into()]);
    }
    table.rows.push(vec!["j_spatial_re_m".into(), analytic.j_spatial.re.into()]);
    table.rows.push(vec!["j_spatial_im_m".into(), analytic.j_spatial.im.into()]);
    if let Some(r) = ratio {
        table.rows.push(vec!["ratio_to_ring".into(), r.into()]);
    }
    Ok(Report {
        command: "rates",
        summary,
        table,
        table_in_json: false,
    })
}

/// Normalized biphoton intensity on a grid around the signal and idler.
pub fn biphoton(cfg: &RunConfig) -> CliResult<Report> {
    let nl = nonlinear(cfg)?;
    let pump = cfg
        .pump
        .as_ref()
        .ok_or_else(|| CliError::Config("biphoton needs a [pump] section".into()))?;
    if pump.mode != PumpMode::Pulsed {
        return Err(CliError::Config("biphoton needs a pulsed pump".into()));
    }
    let spec = &cfg.spec;
    let t = triple(cfg)?;
    let center = pump.center.unwrap_or(t.pump.omega);
    let fwhm = match pump.fwhm.unwrap_or(PumpBandwidth::Linewidths(1.0)) {
        PumpBandwidth::Absolute(v) => v,
        PumpBandwidth::Linewidths(n) => n * t.pump.gamma,
    };
    let profile = PumpProfile::gaussian(center, fwhm)?;
    let pulsed = match pump.amount {
        PumpAmount::Power(p) => PumpSpec::pulsed_with_power(profile, p)?,
        PumpAmount::Photons(n) => PumpSpec::pulsed(profile, n)?,
    };
    let opts = &cfg.biphoton.pulsed;
    let grid = BiphotonGrid::around(&t, cfg.biphoton.half_widths, cfg.biphoton.points);
    let bi = biphoton_wavefunction(spec, &t, &pulsed, nl, &grid, opts)?;
    let refined = pairs_per_pulse(spec, &t, &pulsed, nl, opts)?;

    let n2 = bi.omega2.len();
    let mut table = Table::new(&["omega1_rad_s", "omega2_rad_s", "intensity"]);
    let mut global: f64 = 0.0;
    for (i, &w1) in bi.omega1.iter().enumerate() {
        for (j, &w2) in bi.omega2.iter().enumerate() {
            let v = bi.intensity(i, j);
            global = global.max(v);
            table.rows.push(vec![w1.into(), w2.into(), v.into()]);
        }
    }
    // offset of each row's maximum from the w1 + w2 = 2 w_P line
    let mut ridge: f64 = 0.0;
    for (i, &w1) in bi.omega1.iter().enumerate() {
        let (j, v) = (0..n2)
            .map(|j| (j, bi.intensity(i, j)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty grid");
        if v > 1e-3 * global {
            ridge = ridge.max((w1 + bi.omega2[j] - 2.0 * center).abs());
        }
    }
    let step = bi.omega1.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let lobes = |lobes: &[(f64, f64)]| -> Vec<Value> {
        lobes
            .iter()
            .map(|&(c, w)| {
                let gamma = if (c - t.signal.omega).abs() < (c - t.idler.omega).abs() {
                    t.signal.gamma
                } else {
                    t.idler.gamma
                };
                json!({ "center_rad_s": c, "fwhm_rad_s": num(w), "fwhm_over_gamma": num(w / gamma) })
            })
            .collect()
    };
    let summary = json!({
        "triple": triple_json(&t),
        "pump_center_rad_s": center,
        "pump_fwhm_rad_s": fwhm,
        "pulse_duration_s": refined.duration,
        "beta_sq": refined.beta_sq,
        "beta_sq_grid": bi.beta_sq,
        "beta_sq_rel_diff": rel_diff(bi.beta_sq, refined.beta_sq),
        "refinement_levels": refined.levels,
        "normalization_residual": bi.normalization_residual,
        "marginal1": lobes(&bi.marginal1_lobes),
        "marginal2": lobes(&bi.marginal2_lobes),
        "ridge_offset_rad_s": ridge,
        "grid_step_rad_s": step,
    });
    Ok(Report {
        command: "biphoton",
        summary,
        table,
        table_in_json: true,
    })
}

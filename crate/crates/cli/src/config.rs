//! Run configuration: TOML sections with unit-suffixed values.
//!
//! Loading converts every quantity to SI and validates it by building the
//! core model types. The normalized config (bare SI numbers) is what reports
//! embed, and it loads back to the same run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use uncoupled_core::coupler::{CouplerSpec, Mat2};
use uncoupled_core::network::{Port, StructureSpec};
use uncoupled_core::sfwm::{CwOptions, FieldModel, NonlinearSpec, PulsedOptions};
use uncoupled_core::waveguide::{LossConvention, WaveguideModel};
use uncoupled_core::Complex64;

use crate::error::{CliError, CliResult};
use crate::units::{relative_linewidths, to_si, Kind, Quantity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub waveguide: WaveguideSection,
    pub structure: StructureSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<PumpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<NonlinearSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<FieldsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biphoton: Option<BiphotonSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideSection {
    /// Reference wavelength or frequency.
    pub center: Quantity,
    pub n_eff: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_g: Option<Quantity>,
    /// Group index, an alternative to `v_g`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_g: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_convention: Option<LossConvention>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKindName {
    DoubleRacetrack,
    SingleRing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSection {
    pub kind: StructureKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_split: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupler: Option<CouplerSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplerSection {
    Directional {
        kappa: Quantity,
        length: Quantity,
    },
    MachZehnder {
        sigma_sx: Quantity,
        sigma_dx: Quantity,
        delta_phi: Quantity,
        length: Quantity,
    },
    /// Full 2x2 matrix given as `[re, im]` pairs.
    Generic {
        x11: [f64; 2],
        x12: [f64; 2],
        x21: [f64; 2],
        x22: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<Quantity>,
    },
    /// Symmetric coupler with a small cross term `[re, im]`.
    NearUncoupled {
        cross: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<Quantity>,
    },
    Identity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<Quantity>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpMode {
    Cw,
    Pulsed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub mode: PumpMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<Quantity>,
    /// Mean photons per pulse, an alternative to `power` for pulsed pumps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_sq: Option<Quantity>,
    /// Pump frequency; defaults to the resonator-1 resonance nearest the
    /// waveguide reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Quantity>,
    /// Intensity FWHM of a Gaussian pulse, absolute or in pump linewidths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearSection {
    pub gamma_nl: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_perp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start: Quantity,
    pub stop: Quantity,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSection {
    pub port: Port,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_widths: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_model: Option<FieldModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_ring_length: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiphotonSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_levels: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpBandwidth {
    Absolute(f64),
    Linewidths(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpAmount {
    Power(f64),
    Photons(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pump {
    pub mode: PumpMode,
    pub amount: PumpAmount,
    pub center: Option<f64>,
    pub fwhm: Option<PumpBandwidth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    pub port: Port,
    pub at: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub order: usize,
    pub tolerance_fraction: f64,
    pub cw: CwOptions,
    pub reference_ring_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Biphoton {
    pub half_widths: f64,
    pub points: usize,
    pub pulsed: PulsedOptions,
}

/// Validated configuration ready for the commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub normalized: RawConfig,
    pub spec: StructureSpec,
    pub pump: Option<Pump>,
    pub nonlinear: Option<NonlinearSpec>,
    pub sweep: Option<Sweep>,
    pub fields: Fields,
    pub rates: Rates,
    pub biphoton: Biphoton,
    pub format: Option<Format>,
    pub path: Option<String>,
}

/// Finds the line of `key` inside `[section]` for error messages.
fn locate(source: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let mut current = String::new();
    let mut header_line = None;
    for (i, line) in source.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section && header_line.is_none() {
                header_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(k) = key {
                if let Some(rest) = t.strip_prefix(k) {
                    if rest.trim_start().starts_with('=') {
                        return Some(i + 1);
                    }
                }
            }
        }
    }
    header_line
}

struct Ctx<'a> {
    origin: &'a str,
    source: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: Option<&str>, msg: impl std::fmt::Display) -> CliError {
        let at = match locate(self.source, section, key) {
            Some(line) => format!("{}:{line}", self.origin),
            None => self.origin.to_string(),
        };
        match key {
            Some(k) => CliError::Config(format!("{at}: [{section}] {k}: {msg}")),
            None => CliError::Config(format!("{at}: [{section}] {msg}")),
        }
    }

    /// Converts `q` in place to a bare SI number and returns it.
    fn si(&self, q: &mut Quantity, kind: Kind, section: &str, key: &str) -> CliResult<f64> {
        let v = to_si(q, kind).map_err(|m| self.err(section, Some(key), m))?;
        *q = Quantity::Number(v);
        Ok(v)
    }

    fn req<'q>(&self, q: &'q mut Option<Quantity>, section: &str, key: &str) -> CliResult<&'q mut Quantity> {
        q.as_mut().ok_or_else(|| self.err(section, None, format!("missing `{key}`")))
    }

    fn opt(&self, q: &mut Option<Quantity>, kind: Kind, section: &str, key: &str) -> CliResult<Option<f64>> {
        match q {
            Some(q) => Ok(Some(self.si(q, kind, section, key)?)),
            None => Ok(None),
        }
    }
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

/// Reads a config from TOML, or the config embedded in a CSV or JSON report.
pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let origin = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
            let cfg = doc.get("config").cloned().unwrap_or(doc);
            let raw: RawConfig =
                serde_json::from_value(cfg).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
            resolve(raw, &origin, "")
        }
        Some("csv") => {
            let embedded: String = text
                .lines()
                .filter_map(|l| l.strip_prefix("# "))
                .take_while(|l| !l.starts_with("summary:"))
                .filter(|l| !l.starts_with("command:"))
                .map(|l| format!("{l}\n"))
                .collect();
            parse_str(&embedded, &origin)
        }
        _ => parse_str(&text, &origin),
    }
}

pub fn parse_str(text: &str, origin: &str) -> CliResult<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    resolve(raw, origin, text)
}

fn resolve(mut raw: RawConfig, origin: &str, source: &str) -> CliResult<RunConfig> {
    let cx = Ctx { origin, source };

    let w = &mut raw.waveguide;
    let s = "waveguide";
    let omega0 = cx.si(&mut w.center, Kind::Spectral, s, "center")?;
    let n_eff = cx.si(&mut w.n_eff, Kind::Dimensionless, s, "n_eff")?;
    let v_g = match (&mut w.v_g, &mut w.n_g) {
        (Some(v), None) => cx.si(v, Kind::Velocity, s, "v_g")?,
        (None, Some(n)) => {
            let n = cx.si(n, Kind::Dimensionless, s, "n_g")?;
            uncoupled_core::constants::SPEED_OF_LIGHT / n
        }
        _ => return Err(cx.err(s, None, "give exactly one of `v_g` and `n_g`")),
    };
    w.v_g = Some(Quantity::Number(v_g));
    w.n_g = None;
    let xi = cx.opt(&mut w.xi, Kind::InverseLength, s, "xi")?.unwrap_or(0.0);
    let beta2 = cx.opt(&mut w.beta2, Kind::Dispersion, s, "beta2")?.unwrap_or(0.0);
    let wg = WaveguideModel::new(omega0, n_eff, v_g, xi)
        .map(|m| m.with_beta2(beta2).with_loss_convention(w.loss_convention.unwrap_or_default()))
        .and_then(|m| m.validate().map(|_| m))
        .map_err(|e| cx.err(s, None, e))?;

    let st = &mut raw.structure;
    let s = "structure";
    let mut spec = match st.kind {
        StructureKindName::SingleRing => {
            let length = cx.si(cx.req(&mut st.length, s, "length")?, Kind::Length, s, "length")?;
            let sigma = cx.si(cx.req(&mut st.sigma, s, "sigma")?, Kind::Dimensionless, s, "sigma")?;
            StructureSpec::single_ring(length, sigma, wg).map_err(|e| cx.err(s, None, e))?
        }
        StructureKindName::DoubleRacetrack => {
            let l1 = cx.si(cx.req(&mut st.l1, s, "l1")?, Kind::Length, s, "l1")?;
            let l2 = cx.si(cx.req(&mut st.l2, s, "l2")?, Kind::Length, s, "l2")?;
            let s1 = cx.si(cx.req(&mut st.sigma1, s, "sigma1")?, Kind::Dimensionless, s, "sigma1")?;
            let s2 = cx.si(cx.req(&mut st.sigma2, s, "sigma2")?, Kind::Dimensionless, s, "sigma2")?;
            let cs = "structure.coupler";
            let coupler = match st.coupler.as_mut() {
                None => return Err(cx.err(s, None, "missing [structure.coupler]")),
                Some(CouplerSection::Directional { kappa, length }) => {
                    let kappa = cx.si(kappa, Kind::InverseLength, cs, "kappa")?;
                    let length = cx.si(length, Kind::Length, cs, "length")?;
                    CouplerSpec::directional(kappa, length)
                }
                Some(CouplerSection::MachZehnder {
                    sigma_sx,
                    sigma_dx,
                    delta_phi,
                    length,
                }) => {
                    let sx = cx.si(sigma_sx, Kind::Dimensionless, cs, "sigma_sx")?;
                    let dx = cx.si(sigma_dx, Kind::Dimensionless, cs, "sigma_dx")?;
                    let phi = cx.si(delta_phi, Kind::Angle, cs, "delta_phi")?;
                    let length = cx.si(length, Kind::Length, cs, "length")?;
                    CouplerSpec::mach_zehnder(sx, dx, phi, length)
                }
                Some(CouplerSection::Generic {
                    x11,
                    x12,
                    x21,
                    x22,
                    length,
                }) => {
                    let length = cx.opt(length, Kind::Length, cs, "length")?.unwrap_or(0.0);
                    let m = Mat2::new(complex(*x11), complex(*x12), complex(*x21), complex(*x22));
                    CouplerSpec::generic(m, length)
                }
                Some(CouplerSection::NearUncoupled { cross, length }) => {
                    let length = cx.opt(length, Kind::Length, cs, "length")?.unwrap_or(0.0);
                    CouplerSpec::near_uncoupled(complex(*cross), length)
                }
                Some(CouplerSection::Identity { length }) => {
                    let length = cx.opt(length, Kind::Length, cs, "length")?.unwrap_or(0.0);
                    Ok(CouplerSpec::identity(length))
                }
            }
            .map_err(|e| cx.err(cs, None, e))?;
            StructureSpec::double_racetrack(l1, l2, s1, s2, coupler, wg).map_err(|e| cx.err(s, None, e))?
        }
    };
    if let Some(split) = cx.opt(&mut st.geometry_split, Kind::Dimensionless, s, "geometry_split")? {
        spec = spec.with_geometry_split(split).map_err(|e| cx.err(s, Some("geometry_split"), e))?;
    }

    let pump = match raw.pump.as_mut() {
        None => None,
        Some(p) => {
            let s = "pump";
            let amount = match (&mut p.power, &mut p.alpha_sq) {
                (Some(q), None) => PumpAmount::Power(cx.si(q, Kind::Power, s, "power")?),
                (None, Some(q)) if p.mode == PumpMode::Pulsed => {
                    PumpAmount::Photons(cx.si(q, Kind::Dimensionless, s, "alpha_sq")?)
                }
                _ => return Err(cx.err(s, None, "give `power` (or `alpha_sq` for a pulsed pump)")),
            };
            let bad = match amount {
                PumpAmount::Power(v) | PumpAmount::Photons(v) => !(v > 0.0),
            };
            if bad {
                return Err(cx.err(s, None, "pump power and photon number must be positive"));
            }
            let center = cx.opt(&mut p.center, Kind::Spectral, s, "center")?;
            let fwhm = match p.fwhm.as_mut() {
                None => None,
                Some(q) => match relative_linewidths(q) {
                    Some(v) => Some(PumpBandwidth::Linewidths(v)),
                    None => Some(PumpBandwidth::Absolute(cx.si(q, Kind::Bandwidth, s, "fwhm")?)),
                },
            };
            if let Some(PumpBandwidth::Absolute(v) | PumpBandwidth::Linewidths(v)) = fwhm {
                if !(v > 0.0) {
                    return Err(cx.err(s, Some("fwhm"), "must be positive"));
                }
            }
            Some(Pump {
                mode: p.mode,
                amount,
                center,
                fwhm,
            })
        }
    };

    let nonlinear = match raw.nonlinear.as_mut() {
        None => None,
        Some(n) => {
            let s = "nonlinear";
            let g = cx.si(&mut n.gamma_nl, Kind::NonlinearFactor, s, "gamma_nl")?;
            let mut spec = NonlinearSpec::new(g).map_err(|e| cx.err(s, Some("gamma_nl"), e))?;
            spec.s_perp = n.s_perp;
            let omega_p = pump.as_ref().and_then(|p| p.center);
            spec.validate(omega_p).map_err(|e| cx.err(s, Some("s_perp"), e))?;
            Some(spec)
        }
    };

    let sweep = match raw.sweep.as_mut() {
        None => None,
        Some(sw) => {
            let s = "sweep";
            let a = cx.si(&mut sw.start, Kind::Spectral, s, "start")?;
            let b = cx.si(&mut sw.stop, Kind::Spectral, s, "stop")?;
            if sw.points == 0 {
                return Err(cx.err(s, Some("points"), "need at least one point"));
            }
            if !(a > 0.0 && b > 0.0) || (a == b && sw.points > 1) {
                return Err(cx.err(s, None, "start and stop must be positive and distinct"));
            }
            Some(Sweep {
                start: a.min(b),
                stop: a.max(b),
                points: sw.points,
            })
        }
    };

    let fields = {
        let f = raw.fields.get_or_insert(FieldsSection {
            port: Port::In,
            at: None,
            points: None,
        });
        let at = cx.opt(&mut f.at, Kind::Spectral, "fields", "at")?;
        let points = *f.points.get_or_insert(501);
        if points < 2 {
            return Err(cx.err("fields", Some("points"), "need at least two points"));
        }
        Fields {
            port: f.port,
            at,
            points,
        }
    };

    let rates = {
        let r = raw.rates.get_or_insert(RatesSection {
            order: None,
            tolerance_fraction: None,
            window_widths: None,
            field_model: None,
            reference_ring_length: None,
        });
        let defaults = CwOptions::default();
        let order = *r.order.get_or_insert(1);
        let tolerance_fraction = *r.tolerance_fraction.get_or_insert(uncoupled_core::sfwm::ENERGY_TOL_FRACTION);
        let window_widths = *r.window_widths.get_or_insert(defaults.window_widths);
        let field_model = *r.field_model.get_or_insert(defaults.field_model);
        if order == 0 || !(tolerance_fraction > 0.0) || !(window_widths > 0.0) {
            return Err(cx.err("rates", None, "order, tolerance_fraction and window_widths must be positive"));
        }
        let reference_ring_length = cx.opt(&mut r.reference_ring_length, Kind::Length, "rates", "reference_ring_length")?;
        Rates {
            order,
            tolerance_fraction,
            cw: CwOptions {
                window_widths,
                field_model,
                ..defaults
            },
            reference_ring_length,
        }
    };

    let biphoton = {
        let b = raw.biphoton.get_or_insert(BiphotonSection {
            half_widths: None,
            points: None,
            refine_tolerance: None,
            max_levels: None,
        });
        let defaults = PulsedOptions::default();
        let half_widths = *b.half_widths.get_or_insert(10.0);
        let points = *b.points.get_or_insert(101);
        let tolerance = *b.refine_tolerance.get_or_insert(defaults.tolerance);
        let max_levels = *b.max_levels.get_or_insert(defaults.max_levels);
        if !(half_widths > 0.0) || points < 5 || !(tolerance > 0.0) {
            return Err(cx.err("biphoton", None, "half_widths and refine_tolerance must be positive, points >= 5"));
        }
        Biphoton {
            half_widths,
            points,
            pulsed: PulsedOptions {
                tolerance,
                max_levels,
                ..defaults
            },
        }
    };

    let (format, path) = match &raw.output {
        Some(o) => (o.format, o.path.clone()),
        None => (None, None),
    };

    Ok(RunConfig {
        normalized: raw,
        spec,
        pump,
        nonlinear,
        sweep,
        fields,
        rates,
        biphoton,
        format,
        path,
    })
}

impl RunConfig {
    /// The normalized config as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.normalized).expect("config serializes")
    }
}

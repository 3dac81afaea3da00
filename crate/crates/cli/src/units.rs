//! Unit-suffixed config values.
//!
//! A value is either a bare number in SI units or a string `"<number> <unit>"`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use uncoupled_core::constants::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Number(v) => write!(f, "{v}"),
            Quantity::Text(s) => write!(f, "\"{s}\""),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Dimensionless,
    Length,
    InverseLength,
    /// Spectral position: wavelength or frequency, resolved to rad/s.
    Spectral,
    /// Spectral width, resolved to rad/s.
    Bandwidth,
    Power,
    Velocity,
    Angle,
    NonlinearFactor,
    Dispersion,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Dimensionless => "dimensionless",
            Kind::Length => "length",
            Kind::InverseLength => "inverse length",
            Kind::Spectral => "wavelength or frequency",
            Kind::Bandwidth => "bandwidth",
            Kind::Power => "power",
            Kind::Velocity => "velocity",
            Kind::Angle => "angle",
            Kind::NonlinearFactor => "nonlinear factor",
            Kind::Dispersion => "group-velocity dispersion",
        }
    }
}

/// dB of power per unit length to a power attenuation coefficient.
fn db_to_neper(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 10.0
}

fn frequency_scale(unit: &str) -> Option<f64> {
    Some(match unit {
        "Hz" => 1.0,
        "kHz" => 1e3,
        "MHz" => 1e6,
        "GHz" => 1e9,
        "THz" => 1e12,
        _ => return None,
    })
}

fn length_scale(unit: &str) -> Option<f64> {
    Some(match unit {
        "m" => 1.0,
        "cm" => 1e-2,
        "mm" => 1e-3,
        "um" | "µm" | "μm" => 1e-6,
        "nm" => 1e-9,
        "pm" => 1e-12,
        _ => return None,
    })
}

fn convert(kind: Kind, v: f64, unit: &str) -> Option<f64> {
    let unit = unit.trim();
    match kind {
        Kind::Dimensionless => unit.is_empty().then_some(v),
        Kind::Length => length_scale(unit).map(|s| v * s),
        Kind::InverseLength => {
            if let Some(per) = unit.strip_prefix("dB/") {
                return length_scale(per).map(|s| db_to_neper(v) / s);
            }
            let per = unit
                .strip_prefix('/')
                .or_else(|| unit.strip_prefix("1/"))
                .or_else(|| unit.strip_suffix("^-1"))?;
            length_scale(per).map(|s| v / s)
        }
        Kind::Spectral => {
            if unit == "rad/s" {
                return Some(v);
            }
            if let Some(s) = frequency_scale(unit) {
                return Some(2.0 * PI * v * s);
            }
            length_scale(unit).map(|s| 2.0 * PI * SPEED_OF_LIGHT / (v * s))
        }
        Kind::Bandwidth => {
            if unit == "rad/s" {
                return Some(v);
            }
            frequency_scale(unit).map(|s| 2.0 * PI * v * s)
        }
        Kind::Power => Some(
            v * match unit {
                "W" => 1.0,
                "mW" => 1e-3,
                "uW" | "µW" | "μW" => 1e-6,
                "nW" => 1e-9,
                _ => return None,
            },
        ),
        Kind::Velocity => Some(
            v * match unit {
                "m/s" => 1.0,
                "km/s" => 1e3,
                "c" => SPEED_OF_LIGHT,
                _ => return None,
            },
        ),
        Kind::Angle => Some(
            v * match unit {
                "rad" => 1.0,
                "deg" => PI / 180.0,
                "pi" => PI,
                _ => return None,
            },
        ),
        Kind::NonlinearFactor => Some(
            v * match unit {
                "/W/m" | "1/(W m)" | "1/(W*m)" | "W^-1 m^-1" => 1.0,
                "/W/km" | "1/(W km)" | "W^-1 km^-1" => 1e-3,
                _ => return None,
            },
        ),
        Kind::Dispersion => Some(
            v * match unit {
                "s2/m" | "s^2/m" => 1.0,
                "ps2/km" | "ps^2/km" => 1e-27,
                "ps2/m" | "ps^2/m" => 1e-24,
                "fs2/mm" | "fs^2/mm" => 1e-27,
                _ => return None,
            },
        ),
    }
}

/// Splits `"641 um"` into the number and the unit text.
fn split(text: &str) -> Option<(f64, &str)> {
    let t = text.trim();
    let end = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-'
                || ((c == 'e' || c == 'E') && t[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let v: f64 = t[..end].parse().ok()?;
    Some((v, &t[end..]))
}

/// Converts to SI (rad/s for spectral kinds).
pub fn to_si(q: &Quantity, kind: Kind) -> Result<f64, String> {
    let v = match q {
        Quantity::Number(v) => *v,
        Quantity::Text(text) => {
            let (v, unit) = split(text).ok_or_else(|| format!("cannot read a number from \"{text}\""))?;
            convert(kind, v, unit)
                .ok_or_else(|| format!("unknown {} unit \"{}\" in \"{text}\"", kind.name(), unit.trim()))?
        }
    };
    if !v.is_finite() {
        return Err(format!("value {q} is not finite"));
    }
    Ok(v)
}

/// A bandwidth given in multiples of a resonance linewidth, e.g. `"0.01 linewidths"`.
pub fn relative_linewidths(q: &Quantity) -> Option<f64> {
    match q {
        Quantity::Text(text) => {
            let (v, unit) = split(text)?;
            matches!(unit.trim(), "linewidth" | "linewidths").then_some(v)
        }
        Quantity::Number(_) => None,
    }
}

//! Unit-tagged scalar quantities for configuration files.
//!
//! Internally every frequency is an angular frequency in rad/s, every
//! duration is in seconds and every angle is in radians. Configuration
//! values may be bare numbers (already in those base units) or strings with
//! a unit suffix:
//!
//! * frequencies: `Hz`, `kHz`, `MHz`, `GHz`, `THz` (ordinary frequency, scaled
//!   by 2π on ingestion) or `rad/s`
//! * durations: `s`, `ms`, `us`, `µs`, `ns`, `ps`, `fs`
//! * angles: `rad`, `turn`/`turns` (fractions of 2π), `pi` (multiples of π),
//!   `deg`

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Duration,
    Angle,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Frequency => "frequency",
            Dimension::Duration => "duration",
            Dimension::Angle => "angle",
        };
        f.write_str(s)
    }
}

fn unit_factor(dim: Dimension, unit: &str) -> Option<f64> {
    let f = match (dim, unit) {
        (Dimension::Frequency, "Hz") => TAU,
        (Dimension::Frequency, "kHz") => TAU * 1e3,
        (Dimension::Frequency, "MHz") => TAU * 1e6,
        (Dimension::Frequency, "GHz") => TAU * 1e9,
        (Dimension::Frequency, "THz") => TAU * 1e12,
        (Dimension::Frequency, "rad/s") => 1.0,
        (Dimension::Duration, "s") => 1.0,
        (Dimension::Duration, "ms") => 1e-3,
        (Dimension::Duration, "us") | (Dimension::Duration, "µs") => 1e-6,
        (Dimension::Duration, "ns") => 1e-9,
        (Dimension::Duration, "ps") => 1e-12,
        (Dimension::Duration, "fs") => 1e-15,
        (Dimension::Angle, "rad") => 1.0,
        (Dimension::Angle, "turn") | (Dimension::Angle, "turns") => TAU,
        (Dimension::Angle, "pi") => PI,
        (Dimension::Angle, "deg") => PI / 180.0,
        _ => return None,
    };
    Some(f)
}

/// Parses `"<number> <unit>"` (whitespace optional) into base units.
pub fn parse_quantity(dim: Dimension, text: &str) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            // the exponent marker of a float literal is not a unit
            c.is_alphabetic()
                && c != 'e'
                && c != 'E'
                || (c == 'e' || c == 'E') && !next_is_numeric(text, i)
                || c == 'µ'
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse {dim} value `{text}`"))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(value);
    }
    let factor = unit_factor(dim, unit)
        .ok_or_else(|| format!("unknown {dim} unit `{unit}` in `{text}`"))?;
    Ok(value * factor)
}

fn next_is_numeric(text: &str, i: usize) -> bool {
    let rest = &text[i + 1..];
    let rest = rest.strip_prefix(['+', '-']).unwrap_or(rest);
    rest.chars().next().is_some_and(|c| c.is_ascii_digit())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawQuantity {
    Number(f64),
    Text(String),
}

macro_rules! quantity {
    ($(#[$doc:meta])* $name:ident, $dim:expr) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
        pub struct $name(pub f64);

        impl $name {
            pub fn value(self) -> f64 {
                self.0
            }

            pub fn parse(text: &str) -> Result<Self, String> {
                parse_quantity($dim, text).map(Self)
            }
        }

        impl From<f64> for $name {
            fn from(v: f64) -> Self {
                Self(v)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(self.0)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                match RawQuantity::deserialize(d)? {
                    RawQuantity::Number(v) => Ok(Self(v)),
                    RawQuantity::Text(t) => Self::parse(&t).map_err(serde::de::Error::custom),
                }
            }
        }
    };
}

quantity!(
    /// Angular frequency in rad/s.
    AngularFrequency,
    Dimension::Frequency
);
quantity!(
    /// Duration in seconds.
    Duration,
    Dimension::Duration
);
quantity!(
    /// Angle in radians.
    Angle,
    Dimension::Angle
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_are_angular() {
        let w = AngularFrequency::parse("10 GHz").unwrap();
        assert!((w.0 - TAU * 1e10).abs() < 1e-3);
        let w = AngularFrequency::parse("33.64MHz").unwrap();
        assert!((w.0 - TAU * 33.64e6).abs() < 1e-6);
        assert_eq!(AngularFrequency::parse("2.5e3 rad/s").unwrap().0, 2.5e3);
    }

    #[test]
    fn durations_and_exponents() {
        assert!((Duration::parse("5 ns").unwrap().0 - 5e-9).abs() < 1e-24);
        assert!((Duration::parse("1e1 ps").unwrap().0 - 1e-11).abs() < 1e-26);
        assert!((Duration::parse("2.5E-3 s").unwrap().0 - 2.5e-3).abs() < 1e-18);
        assert!((Duration::parse("3 µs").unwrap().0 - 3e-6).abs() < 1e-20);
        assert_eq!(Duration::parse("4e-9").unwrap().0, 4e-9);
    }

    #[test]
    fn angles() {
        assert!((Angle::parse("0.25 turn").unwrap().0 - PI / 2.0).abs() < 1e-15);
        assert!((Angle::parse("1 pi").unwrap().0 - PI).abs() < 1e-15);
        assert!((Angle::parse("-45 deg").unwrap().0 + PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_dimension() {
        assert!(Duration::parse("5 GHz").is_err());
        assert!(Angle::parse("1 ns").is_err());
        assert!(AngularFrequency::parse("fast").is_err());
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        #[derive(Deserialize)]
        struct T {
            a: Duration,
            b: Duration,
        }
        let t: T = toml::from_str("a = 1e-9\nb = \"2 ns\"").unwrap();
        assert_eq!(t.a.0, 1e-9);
        assert!((t.b.0 - 2e-9).abs() < 1e-24);
    }
}

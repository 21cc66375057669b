//! Quantity types used by the slice specification.
//!
//! CPU is stored as integer millicpu, memory as integer bytes. Both accept the
//! human-friendly forms found in deployment manifests and resolve them at parse
//! time.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// CPU quantity in millicpu (1000 = one core).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Millicpu(pub u64);

impl Millicpu {
    pub fn from_cores(cores: f64) -> Option<Self> {
        if !cores.is_finite() || cores < 0.0 {
            return None;
        }
        let milli = cores * 1000.0;
        let rounded = milli.round();
        if (milli - rounded).abs() > 1e-6 || rounded > u64::MAX as f64 {
            return None;
        }
        Some(Millicpu(rounded as u64))
    }

    pub fn cores(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(digits) = s.strip_suffix('m') {
            return digits
                .parse::<u64>()
                .map(Millicpu)
                .map_err(|_| format!("invalid millicpu quantity {s:?}"));
        }
        let cores: f64 = s
            .parse()
            .map_err(|_| format!("invalid cpu quantity {s:?}"))?;
        Millicpu::from_cores(cores)
            .ok_or_else(|| format!("cpu quantity {s:?} is finer than 1m or negative"))
    }
}

impl fmt::Display for Millicpu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}m", self.0)
    }
}

impl Serialize for Millicpu {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Millicpu {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MillicpuVisitor;

        impl Visitor<'_> for MillicpuVisitor {
            type Value = Millicpu;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number of cores or a millicpu string such as \"2000m\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Millicpu, E> {
                v.checked_mul(1000)
                    .map(Millicpu)
                    .ok_or_else(|| E::custom("cpu quantity overflows"))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Millicpu, E> {
                if v < 0 {
                    return Err(E::custom("cpu quantity must not be negative"));
                }
                self.visit_u64(v as u64)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Millicpu, E> {
                Millicpu::from_cores(v).ok_or_else(|| {
                    E::custom(format!("cpu quantity {v} is finer than 1m or negative"))
                })
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Millicpu, E> {
                Millicpu::parse(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(MillicpuVisitor)
    }
}

/// Memory quantity in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct Bytes(pub u64);

impl Bytes {
    pub const KI: u64 = 1024;
    pub const MI: u64 = 1024 * 1024;
    pub const GI: u64 = 1024 * 1024 * 1024;

    pub fn gib(n: u64) -> Self {
        Bytes(n * Self::GI)
    }

    pub fn mib(n: u64) -> Self {
        Bytes(n * Self::MI)
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (digits, scale) = if let Some(d) = s.strip_suffix("Gi") {
            (d, Self::GI)
        } else if let Some(d) = s.strip_suffix("Mi") {
            (d, Self::MI)
        } else if let Some(d) = s.strip_suffix("Ki") {
            (d, Self::KI)
        } else {
            (s, 1)
        };
        digits
            .trim()
            .parse::<u64>()
            .ok()
            .and_then(|n| n.checked_mul(scale))
            .map(Bytes)
            .ok_or_else(|| format!("invalid memory quantity {s:?}"))
    }
}

impl<'de> Deserialize<'de> for Bytes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct BytesVisitor;

        impl Visitor<'_> for BytesVisitor {
            type Value = Bytes;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer number of bytes or a string with a Ki/Mi/Gi suffix")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Bytes, E> {
                Ok(Bytes(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Bytes, E> {
                u64::try_from(v)
                    .map(Bytes)
                    .map_err(|_| E::custom("memory quantity must not be negative"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Bytes, E> {
                Err(E::custom(format!("memory quantity {v} must be an integer")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Bytes, E> {
                Bytes::parse(v).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(BytesVisitor)
    }
}

/// How long network guarantees should hold. `Auto` lets the runtime decide.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GuaranteeDuration {
    #[default]
    Auto,
    Millis(f64),
}

impl Serialize for GuaranteeDuration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            GuaranteeDuration::Auto => serializer.serialize_str("auto"),
            GuaranteeDuration::Millis(ms) => serializer.serialize_f64(*ms),
        }
    }
}

impl<'de> Deserialize<'de> for GuaranteeDuration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DurationVisitor;

        impl Visitor<'_> for DurationVisitor {
            type Value = GuaranteeDuration;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("\"auto\" or a duration in milliseconds")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(GuaranteeDuration::Millis(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(GuaranteeDuration::Millis(v as f64))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(GuaranteeDuration::Millis(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == "auto" {
                    Ok(GuaranteeDuration::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(DurationVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn millicpu_forms() {
        assert_eq!(Millicpu::parse("2000m").unwrap(), Millicpu(2000));
        assert_eq!(Millicpu::parse("1m").unwrap(), Millicpu(1));
        assert_eq!(Millicpu::parse("2").unwrap(), Millicpu(2000));
        assert_eq!(Millicpu::parse("0.5").unwrap(), Millicpu(500));
        assert!(Millicpu::parse("0.0005").is_err());
        assert!(Millicpu::parse("-1").is_err());
        assert!(Millicpu::parse("abc").is_err());

        let v: Millicpu = serde_json::from_str("2").unwrap();
        assert_eq!(v, Millicpu(2000));
        let v: Millicpu = serde_json::from_str("0.1").unwrap();
        assert_eq!(v, Millicpu(100));
        let v: Millicpu = serde_json::from_str("\"250m\"").unwrap();
        assert_eq!(v, Millicpu(250));
        assert_eq!(serde_json::to_string(&Millicpu(250)).unwrap(), "\"250m\"");
    }

    #[test]
    fn memory_suffixes() {
        assert_eq!(Bytes::parse("4Gi").unwrap(), Bytes(4 * Bytes::GI));
        assert_eq!(Bytes::parse("512Mi").unwrap(), Bytes(512 * Bytes::MI));
        assert_eq!(Bytes::parse("3Ki").unwrap(), Bytes(3072));
        assert_eq!(Bytes::parse("1000").unwrap(), Bytes(1000));
        assert!(Bytes::parse("4GB").is_err());
        assert!(serde_json::from_str::<Bytes>("1.5").is_err());
        assert!(serde_json::from_str::<Bytes>("-3").is_err());
    }

    #[test]
    fn duration_auto_or_millis() {
        let d: GuaranteeDuration = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(d, GuaranteeDuration::Auto);
        let d: GuaranteeDuration = serde_json::from_str("1500").unwrap();
        assert_eq!(d, GuaranteeDuration::Millis(1500.0));
        assert!(serde_json::from_str::<GuaranteeDuration>("\"forever\"").is_err());
    }
}

//! Deterministic JSON output.
//!
//! Every float is written in scientific notation with 17 significant digits,
//! so two runs with the same inputs produce identical bytes.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Flattened coordinates of a point, used to record witnesses.
pub trait Coords {
    fn coords(&self) -> Vec<f64>;
}

impl Coords for Vec<f64> {
    fn coords(&self) -> Vec<f64> {
        self.clone()
    }
}

impl Coords for usize {
    fn coords(&self) -> Vec<f64> {
        vec![*self as f64]
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SigDigitsFormatter;

impl Formatter for SigDigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value == 0.0 {
            // Keeps -0.0 and 0.0 distinguishable while staying valid JSON.
            return write!(writer, "{}", if value.is_sign_negative() { "-0.0" } else { "0.0" });
        }
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn write_u64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: u64) -> io::Result<()> {
        CompactFormatter.write_u64(writer, value)
    }
}

/// Serializes `value` as one line of JSON using [`SigDigitsFormatter`].
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitsFormatter);
    value.serialize(&mut ser).map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        let s = to_json(&vec![0.1_f64, -2.5, 0.0]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,-2.5000000000000000e0,0.0]");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.5, 0.0]);
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(to_json(&f64::INFINITY).unwrap(), "null");
    }
}

//! Binary grid dumps.
//!
//! Layout (little-endian): magic `SGS1`, `n_per_axis: u32`, `box_length: f64`,
//! kind tag `u8` (0 = real, 1 = complex), then `n³` row-major values as `f64`
//! (interleaved re, im for complex fields).

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{ComplexField, GridSpec, RealField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SGS1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Real = 0,
    Complex = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DumpedField {
    Real(RealField),
    Complex(ComplexField),
}

impl From<RealField> for DumpedField {
    fn from(f: RealField) -> Self {
        DumpedField::Real(f)
    }
}

impl From<ComplexField> for DumpedField {
    fn from(f: ComplexField) -> Self {
        DumpedField::Complex(f)
    }
}

pub fn write_dump<W: Write>(mut w: W, field: &DumpedField) -> Result<()> {
    let (spec, kind) = match field {
        DumpedField::Real(f) => (*f.spec(), FieldKind::Real),
        DumpedField::Complex(f) => (*f.spec(), FieldKind::Complex),
    };
    let n = u32::try_from(spec.n()).map_err(|_| Error::InvalidGrid("n too large".into()))?;
    let mut buf = Vec::with_capacity(17 + spec.len() * 16);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&spec.box_length().to_le_bytes());
    buf.push(kind as u8);
    match field {
        DumpedField::Real(f) => {
            for v in f.values() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        DumpedField::Complex(f) => {
            for v in f.values() {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_dump<R: Read>(mut r: R) -> Result<DumpedField> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 17 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing SGS1 header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let box_length = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let spec = GridSpec::new(n, box_length)?;
    let per_value = match bytes[16] {
        0 => 1,
        1 => 2,
        t => return Err(Error::Format(format!("unknown field kind tag {t}"))),
    };
    let body = &bytes[17..];
    if body.len() != spec.len() * per_value * 8 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            spec.len() * per_value * 8,
            body.len()
        )));
    }
    let mut floats = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    if per_value == 1 {
        Ok(DumpedField::Real(RealField::from_values(spec, floats.collect())?))
    } else {
        let mut vals = Vec::with_capacity(spec.len());
        while let (Some(re), Some(im)) = (floats.next(), floats.next()) {
            vals.push(Complex64::new(re, im));
        }
        Ok(DumpedField::Complex(ComplexField::from_values(spec, vals)?))
    }
}

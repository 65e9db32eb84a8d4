//! FLD field files: a one-line JSON header followed by raw cell data.
//!
//! The header is UTF-8 JSON terminated by `\n`:
//!
//! ```json
//! {"dims":[256,256],"dtype":"u8","order":"row-major","domain":[[-3.141592653589793,3.141592653589793],[-3.141592653589793,3.141592653589793]]}
//! ```
//!
//! followed by the little-endian cell values in canonical row-major order
//! (`u8` for label/indicator data, `f64` for scalar fields).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{IndicatorField, ScalarField};
use crate::grid::{GridSpec, DOMAIN_MAX, DOMAIN_MIN};

#[derive(Debug, Serialize, Deserialize)]
struct FldHeader {
    dims: Vec<usize>,
    dtype: String,
    order: String,
    domain: Vec<[f64; 2]>,
}

impl FldHeader {
    fn for_spec(spec: GridSpec, dtype: &str) -> Self {
        let d = spec.dim();
        Self {
            dims: vec![spec.n_axis(); d],
            dtype: dtype.to_string(),
            order: "row-major".to_string(),
            domain: vec![[DOMAIN_MIN, DOMAIN_MAX]; d],
        }
    }

    fn to_spec(&self) -> Result<GridSpec> {
        let d = self.dims.len();
        if d != 2 && d != 3 {
            return Err(Error::MalformedFld(format!("{d} dims, expected 2 or 3")));
        }
        let n = self.dims[0];
        if self.dims.iter().any(|&m| m != n) {
            return Err(Error::MalformedFld("non-uniform dims".into()));
        }
        if self.order != "row-major" {
            return Err(Error::MalformedFld(format!("order '{}'", self.order)));
        }
        if self.domain.len() != d
            || self
                .domain
                .iter()
                .any(|&[lo, hi]| lo != DOMAIN_MIN || hi != DOMAIN_MAX)
        {
            return Err(Error::MalformedFld("unexpected domain".into()));
        }
        GridSpec::new(d, n)
    }
}

fn write_header(w: &mut impl Write, header: &FldHeader) -> Result<()> {
    let line = serde_json::to_string(header)
        .map_err(|e| Error::Internal(format!("header serialization: {e}")))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<FldHeader> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match r.read(&mut byte)? {
            0 => return Err(Error::MalformedFld("missing header newline".into())),
            _ => {
                if byte[0] == b'\n' {
                    break;
                }
                line.push(byte[0]);
                if line.len() > 4096 {
                    return Err(Error::MalformedFld("header too long".into()));
                }
            }
        }
    }
    serde_json::from_slice(&line).map_err(|e| Error::MalformedFld(format!("header JSON: {e}")))
}

/// Writes raw byte-per-cell data (indicators or phase labels).
pub fn write_u8(path: &Path, spec: GridSpec, values: &[u8]) -> Result<()> {
    if values.len() != spec.cells() {
        return Err(Error::InvalidField(format!(
            "expected {} cells, got {}",
            spec.cells(),
            values.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, &FldHeader::for_spec(spec, "u8"))?;
    w.write_all(values)?;
    w.flush()?;
    Ok(())
}

/// Reads byte-per-cell data.
pub fn read_u8(path: &Path) -> Result<(GridSpec, Vec<u8>)> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    if header.dtype != "u8" {
        return Err(Error::MalformedFld(format!(
            "dtype '{}', expected u8",
            header.dtype
        )));
    }
    let spec = header.to_spec()?;
    let mut values = vec![0u8; spec.cells()];
    r.read_exact(&mut values)
        .map_err(|_| Error::MalformedFld("truncated cell data".into()))?;
    Ok((spec, values))
}

pub fn write_indicator(path: &Path, field: &IndicatorField) -> Result<()> {
    write_u8(path, field.spec(), field.values())
}

pub fn read_indicator(path: &Path) -> Result<IndicatorField> {
    let (spec, values) = read_u8(path)?;
    IndicatorField::from_values(spec, values)
}

pub fn write_scalar(path: &Path, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, &FldHeader::for_spec(field.spec(), "f64"))?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    if header.dtype != "f64" {
        return Err(Error::MalformedFld(format!(
            "dtype '{}', expected f64",
            header.dtype
        )));
    }
    let spec = header.to_spec()?;
    let mut bytes = vec![0u8; spec.cells() * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::MalformedFld("truncated cell data".into()))?;
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::from_values(spec, values)
}

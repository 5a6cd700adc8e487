//! Versioned text model format.
//!
//! ```text
//! rotinv-model v1
//! layer1.shared.0.weight 12 32
//! 1.2345678901234567e-1 ...
//! ```
//!
//! One header line, then two lines per array: name and shape, then the
//! values with 17 significant digits.

use std::io::{BufRead, Write};

use super::{NetworkConfig, NetworkParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_HEADER: &str = "rotinv-model v1";

pub fn write_model<T: Real, W: Write>(params: &NetworkParams<T>, mut out: W) -> Result<()> {
    writeln!(out, "{MODEL_HEADER}")?;
    for (name, shape, values) in params.named_arrays() {
        let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
        writeln!(out, "{name} {}", dims.join(" "))?;
        let vals: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", vals.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a model whose layout must match `cfg` exactly.
pub fn read_model<T: Real, R: BufRead>(input: R, cfg: &NetworkConfig) -> Result<NetworkParams<T>> {
    let mut params = NetworkParams::<T>::init(cfg, 0)?;
    let expected: Vec<(String, Vec<usize>)> = params.named_arrays().into_iter().map(|(n, s, _)| (n, s)).collect();
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::parse(0, format!("unexpected end of file, expected {what}"))),
        }
    };
    let (n, header) = next("header")?;
    if header.trim() != MODEL_HEADER {
        return Err(Error::parse(n, format!("expected header `{MODEL_HEADER}`")));
    }
    let mut arrays = params.arrays_mut();
    for ((name, shape), dst) in expected.iter().zip(arrays.iter_mut()) {
        let (n, record) = next("array record")?;
        let mut fields = record.split_whitespace();
        let got_name = fields.next().unwrap_or_default();
        if got_name != name {
            return Err(Error::parse(n, format!("expected array `{name}`, found `{got_name}`")));
        }
        let got_shape = fields
            .map(|f| {
                f.parse::<usize>()
                    .map_err(|_| Error::parse(n, format!("bad dimension `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if &got_shape != shape {
            return Err(Error::parse(
                n,
                format!("array `{name}` has shape {got_shape:?}, expected {shape:?}"),
            ));
        }
        let (n, values) = next("array values")?;
        let parsed = values
            .split_whitespace()
            .map(|t| t.parse::<T>().map_err(|_| Error::parse(n, format!("bad value `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if parsed.len() != dst.len() {
            return Err(Error::parse(
                n,
                format!("array `{name}` needs {} values, got {}", dst.len(), parsed.len()),
            ));
        }
        dst.copy_from_slice(&parsed);
    }
    drop(arrays);
    if let Some((n, Ok(extra))) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(Error::parse(n, "trailing content after last array"));
        }
    }
    Ok(params)
}

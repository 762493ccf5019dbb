//! File formats: headerless row-major CSV matrices and JSON model files.

use std::fs;
use std::io::Write;
use std::path::Path;

use matxai_core::{Model, RealMatrix};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a headerless CSV of decimals. Every row must have the same number
/// of fields and every value must be finite.
pub fn parse_matrix(text: &[u8], path: &Path) -> Result<RealMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text);
    let mut cols = 0;
    let mut data = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::parse(path, e))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if rows == 0 {
            cols = record.len();
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::parse(
                    path,
                    format!("row {}, column {}: bad number {field:?}", r + 1, c + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(CliError::parse(
                    path,
                    format!("row {}, column {}: value is not finite", r + 1, c + 1),
                ));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 || cols == 0 {
        return Err(CliError::parse(path, "no data"));
    }
    RealMatrix::new(rows, cols, data).map_err(|e| CliError::parse(path, e))
}

pub fn read_matrix(path: &Path) -> Result<RealMatrix, CliError> {
    parse_matrix(&read_bytes(path)?, path)
}

/// Writes `m` as headerless CSV. `f64`'s `Display` is the shortest string
/// that parses back to the same value, so finite values round-trip exactly.
pub fn emit_matrix(m: &RealMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(text.as_bytes()).map_err(io_err)
}

pub fn parse_model(text: &[u8], path: &Path) -> Result<Model, CliError> {
    let text = std::str::from_utf8(text).map_err(|e| CliError::parse(path, e))?;
    Model::from_json(text).map_err(|e| CliError::parse(path, e))
}

/// SHA-256 over the given files, each prefixed by its length.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hex::encode(hasher.finalize())
}

/// Parses `RxC`, e.g. `4x4`.
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let parse = |t: &str| -> Result<usize, String> {
        match t.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("expected a positive integer, got {t:?}")),
            Ok(v) => Ok(v),
        }
    };
    Ok((parse(r)?, parse(c)?))
}

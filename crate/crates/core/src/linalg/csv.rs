//! Matrix CSV: one row per line, comma-separated decimal literals, no header.
//! Values are written with 17 significant digits so they round-trip exactly.

use std::fmt::Write as _;
use std::io::{self, Read, Write};

use thiserror::Error;

use super::{LinalgError, Matrix};

#[derive(Debug, Error)]
pub enum MatrixIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}, field {field}: invalid number {token:?}")]
    InvalidToken { line: usize, field: usize, token: String },
    #[error("line {line}: expected {expected} fields, found {actual}")]
    Ragged {
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("no rows found")]
    Empty,
    #[error(transparent)]
    Matrix(#[from] LinalgError),
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_matrix_csv(text: &str) -> Result<Matrix, MatrixIoError> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for (field, tok) in line.split(',').enumerate() {
            let tok = tok.trim();
            let v: f64 = tok.parse().map_err(|_| MatrixIoError::InvalidToken {
                line: lineno + 1,
                field: field + 1,
                token: tok.to_string(),
            })?;
            if !v.is_finite() {
                return Err(MatrixIoError::InvalidToken {
                    line: lineno + 1,
                    field: field + 1,
                    token: tok.to_string(),
                });
            }
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(MatrixIoError::Ragged {
                    line: lineno + 1,
                    expected: c,
                    actual: count,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or(MatrixIoError::Empty)?;
    Ok(Matrix::new(rows, cols, data)?)
}

pub fn read_matrix_csv(mut reader: impl Read) -> Result<Matrix, MatrixIoError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_matrix_csv(&text)
}

pub fn format_matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(mut writer: impl Write, m: &Matrix) -> Result<(), MatrixIoError> {
    writer.write_all(format_matrix_csv(m).as_bytes())?;
    Ok(())
}

//! Small helpers shared by the TSV exporters.
//!
//! All numeric artifacts print floats with nine significant digits so that
//! files are stable across platforms and diff cleanly between runs.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Number of significant digits used by every float written to disk.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Formats `x` with nine significant digits, `%g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(contents)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes a dense matrix as TSV with a header row. `row_labels` become the
/// first column when given.
pub fn dense_tsv(
    corner: &str,
    col_labels: &[String],
    row_labels: Option<&[String]>,
    rows: &[Vec<f64>],
) -> String {
    let mut out = String::new();
    if row_labels.is_some() {
        out.push_str(corner);
        out.push('\t');
    }
    out.push_str(&col_labels.join("\t"));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if let Some(labels) = row_labels {
            out.push_str(&labels[i]);
            out.push('\t');
        }
        let cells: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

/// Parses a dense numeric TSV with a header row. When `labelled` is set the
/// first column is a row label and is returned separately.
pub fn parse_dense_tsv(path: &Path, labelled: bool) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    lines.next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "missing header row".into(),
    })?;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        if labelled {
            labels.push(fields.next().unwrap_or_default().to_string());
        }
        let row = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("bad number: {e}"),
            })?;
        rows.push(row);
    }
    Ok((labels, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_float(0.123456789123), "0.123456789");
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(-2.5), "-2.5");
        assert_eq!(fmt_float(123456789.4), "123456789");
        assert_eq!(fmt_float(1234567891.0), "1.23456789e9");
        assert_eq!(fmt_float(0.000012345678912), "1.23456789e-5");
        assert_eq!(fmt_float(0.00012345678912), "0.000123456789");
        assert_eq!(fmt_float(0.0), "0");
    }

    #[test]
    fn formatted_values_round_trip_to_nine_digits() {
        for &x in &[std::f64::consts::PI, 1e-300, 6.02214076e23, 0.333333333333] {
            let back: f64 = fmt_float(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-8, "{x} -> {back}");
        }
    }
}

//! Versioned text format for parameter stores.
//!
//! ```text
//! RISKRNN-MODEL v1
//! [config]
//! key = value
//! [params]
//! <name> <rows> <cols>
//! <row 0 values>
//! ...
//! checksum <sum of all values>
//! ```
//!
//! Values are written with 17 significant digits, so a round trip is exact.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::params::{ParamMatrix, ParameterStore};

pub const MODEL_HEADER: &str = "RISKRNN-MODEL v1";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_model(config: &[(String, String)], store: &ParameterStore) -> String {
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    out.push_str("[config]\n");
    for (k, v) in config {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.push_str("[params]\n");
    for p in store.iter() {
        let _ = writeln!(out, "{} {} {}", p.name, p.rows, p.cols);
        for r in 0..p.rows {
            let row: Vec<String> = p.values[r * p.cols..(r + 1) * p.cols]
                .iter()
                .map(|v| fmt_f64(*v))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    let _ = writeln!(out, "checksum {}", fmt_f64(store.checksum()));
    out
}

pub fn read_model(text: &str) -> Result<(Vec<(String, String)>, ParameterStore)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let perr = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };

    match lines.next() {
        Some((_, MODEL_HEADER)) => {}
        Some((n, other)) => return Err(perr(n, &format!("expected header, found {other:?}"))),
        None => return Err(perr(1, "empty model file")),
    }
    match lines.next() {
        Some((_, "[config]")) => {}
        Some((n, _)) => return Err(perr(n, "expected [config] section")),
        None => return Err(perr(2, "expected [config] section")),
    }

    let mut config = Vec::new();
    loop {
        let (n, line) = lines
            .next()
            .ok_or_else(|| perr(0, "missing [params] section"))?;
        if line == "[params]" {
            break;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| perr(n, &format!("malformed config line {line:?}")))?;
        config.push((k.to_string(), v.to_string()));
    }

    let mut store = ParameterStore::new();
    loop {
        let (n, line) = lines
            .next()
            .ok_or_else(|| perr(0, "missing checksum line"))?;
        if let Some(sum) = line.strip_prefix("checksum ") {
            let expected: f64 = sum.parse().map_err(|_| perr(n, "bad checksum value"))?;
            let actual = store.checksum();
            if actual.to_bits() != expected.to_bits() {
                return Err(perr(
                    n,
                    &format!("checksum mismatch: file {expected:e}, values {actual:e}"),
                ));
            }
            if let Some((n, extra)) = lines.find(|(_, l)| !l.is_empty()) {
                return Err(perr(n, &format!("trailing content {extra:?}")));
            }
            return Ok((config, store));
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [name, rows, cols] = parts[..] else {
            return Err(perr(
                n,
                &format!("expected `name rows cols`, found {line:?}"),
            ));
        };
        let rows: usize = rows.parse().map_err(|_| perr(n, "bad row count"))?;
        let cols: usize = cols.parse().map_err(|_| perr(n, "bad column count"))?;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, row) = lines.next().ok_or_else(|| perr(n, "truncated matrix"))?;
            let before = values.len();
            for tok in row.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| perr(n, "bad value"))?);
            }
            if values.len() - before != cols {
                return Err(perr(n, &format!("expected {cols} values")));
            }
        }
        store.push(ParamMatrix::new(name, rows, cols, values))?;
    }
}

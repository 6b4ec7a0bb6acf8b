//! Reference exponent tables in `s,delta,Delta` CSV form.

use thiserror::Error;

/// Published exponents at `s = 4.0, 4.1, …, 7.9`, shipped with the crate.
pub const REFERENCE_TABLE_CSV: &str = include_str!("../data/table1.csv");

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceRow {
    pub s: f64,
    pub associated: f64,
    pub admissible: f64,
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("reference table line {line}: {reason}")]
pub struct ReferenceError {
    pub line: usize,
    pub reason: String,
}

/// Parses `s,delta,Delta` rows; `#` comments and a header row are skipped.
pub fn parse_reference_csv(text: &str) -> Result<Vec<ReferenceRow>, ReferenceError> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('s') {
            continue;
        }
        let err = |reason: String| ReferenceError {
            line: idx + 1,
            reason,
        };
        let fields = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(e.to_string()))?;
        let [s, associated, admissible] = fields[..] else {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        };
        rows.push(ReferenceRow {
            s,
            associated,
            admissible,
        });
    }
    if rows.is_empty() {
        return Err(ReferenceError {
            line: 0,
            reason: "no rows".into(),
        });
    }
    Ok(rows)
}

pub fn reference_table() -> Vec<ReferenceRow> {
    parse_reference_csv(REFERENCE_TABLE_CSV).expect("bundled table parses")
}

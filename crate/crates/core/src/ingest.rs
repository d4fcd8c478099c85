//! Headered CSV input.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::prob::{clamp_probs, PredictionSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub x_col: String,
    pub y_col: String,
    /// Outcome value that counts as an event; every other value is a non-event.
    pub event: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            x_col: "x".into(),
            y_col: "y".into(),
            event: "1".into(),
        }
    }
}

/// Numeric labels compare by value ("1" matches "1.0"), others as trimmed text.
fn is_event(value: &str, event: &str) -> bool {
    let (v, e) = (value.trim(), event.trim());
    match (v.parse::<f64>(), e.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => v == e,
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Parse {
            row: 1,
            message: format!("missing column '{name}'"),
        })
}

fn parse_probability(raw: &str, row: usize, name: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        row,
        message: format!("column '{name}' value '{raw}' is not a number"),
    })?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Parse {
            row,
            message: format!("column '{name}' value {v} is outside [0, 1]"),
        });
    }
    Ok(v)
}

/// Reads predictions and outcomes. Row numbers in errors count the header
/// as row 1.
pub fn read_prediction_set<R: Read>(
    input: R,
    mapping: &ColumnMapping,
    epsilon: f64,
) -> Result<PredictionSet> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let xi = column_index(&headers, &mapping.x_col)?;
    let yi = column_index(&headers, &mapping.y_col)?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = n + 2;
        x.push(parse_probability(
            rec.get(xi).unwrap_or(""),
            row,
            &mapping.x_col,
        )?);
        let label = rec.get(yi).unwrap_or("").trim();
        if label.is_empty() || label.eq_ignore_ascii_case("na") {
            return Err(Error::Parse {
                row,
                message: format!("column '{}' is empty", mapping.y_col),
            });
        }
        y.push(u8::from(is_event(label, &mapping.event)));
    }
    let set = PredictionSet::new(&x, &y, epsilon)?;
    log::info!(
        "read {} predictions, base rate {:.4}",
        set.len(),
        set.base_rate()
    );
    Ok(set)
}

pub fn ingest_csv(path: &Path, mapping: &ColumnMapping, epsilon: f64) -> Result<PredictionSet> {
    read_prediction_set(File::open(path)?, mapping, epsilon)
}

/// One probability column, clamped. Used where outcomes are not needed.
pub fn read_probabilities<R: Read>(input: R, column: &str, epsilon: f64) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let xi = column_index(&headers, column)?;
    let mut x = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        x.push(parse_probability(rec.get(xi).unwrap_or(""), n + 2, column)?);
    }
    clamp_probs(&x, epsilon)
}

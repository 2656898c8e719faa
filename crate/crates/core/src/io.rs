//! Text formats: decimal formatting, matrix files, coefficient keys and the
//! probability-table CSV.
//!
//! A matrix file is a JSON array of rows, each row an array of `[re, im]`
//! pairs. An ancilla-basis file is a JSON array with one entry per party,
//! each entry an array of four matrices in the matrix-file layout; a single
//! entry is reused for every party.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::qcore::{c, BellOutcome, ComplexMatrix, DensityMatrix};
use crate::witness::AncillaBasis;

/// Fifteen significant digits, scientific notation.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.14e}")
}

/// `"i1,i2,…"` with one-based labels.
pub fn outcome_key(outcome: &[BellOutcome]) -> String {
    outcome
        .iter()
        .map(|o| o.label().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses `"1,2,4"` into an outcome tuple.
pub fn parse_outcome(s: &str) -> Result<Vec<BellOutcome>> {
    s.split(',')
        .map(|part| {
            let label: usize = part
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad outcome label {part:?}")))?;
            BellOutcome::from_label(label)
                .ok_or_else(|| Error::Parse(format!("outcome label {label} not in 1..=4")))
        })
        .collect()
}

pub fn matrix_from_json(v: &Value) -> Result<ComplexMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix must be an array of rows".into()))?;
    let n_rows = rows.len();
    if n_rows == 0 {
        return Err(Error::Parse("matrix has no rows".into()));
    }
    let mut entries = Vec::new();
    let mut n_cols = None;
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse("matrix row must be an array".into()))?;
        if *n_cols.get_or_insert(row.len()) != row.len() {
            return Err(Error::Parse("ragged matrix rows".into()));
        }
        for pair in row {
            let pair = pair
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::Parse("matrix entries must be [re, im] pairs".into()))?;
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| Error::Parse("non-numeric real part".into()))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| Error::Parse("non-numeric imaginary part".into()))?;
            entries.push(c(re, im));
        }
    }
    let n_cols = n_cols.unwrap_or(0);
    if n_cols == 0 {
        return Err(Error::Parse("matrix has no columns".into()));
    }
    Ok(ComplexMatrix::from_row_slice(n_rows, n_cols, &entries))
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path)?;
    matrix_from_json(&serde_json::from_str(&text)?)
}

pub fn basis_from_json(v: &Value, party_count: usize) -> Result<AncillaBasis> {
    let parties = v
        .as_array()
        .ok_or_else(|| Error::Parse("basis file must be an array of per-party sets".into()))?;
    let mut sets = Vec::with_capacity(parties.len());
    for set in parties {
        let mats = set
            .as_array()
            .filter(|s| s.len() == 4)
            .ok_or_else(|| Error::Parse("each party needs exactly four ancilla matrices".into()))?;
        let states = mats
            .iter()
            .map(|m| DensityMatrix::new(matrix_from_json(m)?))
            .collect::<Result<Vec<_>>>()?;
        let arr: [DensityMatrix; 4] = states.try_into().expect("length checked above");
        sets.push(arr);
    }
    if sets.len() == 1 && party_count > 1 {
        sets = vec![sets[0].clone(); party_count];
    }
    if sets.len() != party_count {
        return Err(Error::Parse(format!(
            "basis file describes {} parties, expected {party_count}",
            sets.len()
        )));
    }
    AncillaBasis::new(sets)
}

pub fn read_basis(path: &Path, party_count: usize) -> Result<AncillaBasis> {
    let text = std::fs::read_to_string(path)?;
    basis_from_json(&serde_json::from_str(&text)?, party_count)
}

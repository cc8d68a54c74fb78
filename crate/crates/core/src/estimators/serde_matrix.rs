//! Row-major `Vec<Vec<f64>>` representation of dense matrices; non-finite
//! entries become `null`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::Matrix;

pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<Option<f64>>> =
        m.row_iter().map(|r| r.iter().map(|x| x.is_finite().then_some(*x)).collect()).collect();
    rows.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
    let rows = Vec::<Vec<Option<f64>>>::deserialize(d)?;
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(serde::de::Error::custom("ragged matrix rows"));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j].unwrap_or(f64::NAN)))
}

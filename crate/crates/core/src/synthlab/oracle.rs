//! Elementary reference computations used only to check the estimators.

use crate::error::{Error, Result};
use crate::linalg::{hstack, Matrix, Vector};

use super::montecarlo::compensated_sum;

/// Solves the normal equations `(X'X) b = X'y` by Gaussian elimination with
/// partial pivoting; cross products are accumulated with compensated sums.
pub fn oracle_ols(y: &[f64], x_rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = y.len();
    if x_rows.len() != n || n == 0 {
        return Err(Error::Dimension("oracle needs one regressor row per observation".into()));
    }
    let k = x_rows[0].len();
    if x_rows.iter().any(|r| r.len() != k) {
        return Err(Error::Dimension("ragged regressor rows".into()));
    }
    // augmented system [X'X | X'y]
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = compensated_sum(x_rows.iter().map(|r| r[i] * r[j]));
        }
        a[i][k] = compensated_sum(x_rows.iter().zip(y).map(|(r, v)| r[i] * v));
    }
    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .expect("nonempty range");
        if a[pivot][col].abs() <= 1e-13 * scale {
            return Err(Error::Numerical("singular normal equations".into()));
        }
        a.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..=k {
                a[row][c] -= f * a[col][c];
            }
        }
    }
    let mut b = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| a[row][c] * b[c]).sum();
        b[row] = (a[row][k] - s) / a[row][row];
    }
    Ok(b)
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Residual sum of squares of `y` on `x` via [`oracle_ols`].
pub fn oracle_rss(y: &Vector, x: &Matrix) -> Result<f64> {
    if x.ncols() == 0 {
        return Ok(compensated_sum(y.iter().map(|v| v * v)));
    }
    let rows = rows_of(x);
    let b = oracle_ols(y.as_slice(), &rows)?;
    Ok(compensated_sum(rows.iter().zip(y.iter()).map(|(r, v)| {
        let fit: f64 = r.iter().zip(&b).map(|(a, c)| a * c).sum();
        (v - fit).powi(2)
    })))
}

/// Anderson canonical-correlation LM for one endogenous regressor: `n` times
/// the partial R-squared of `x` on the excluded instruments given `exog`.
pub fn anderson_lm_oracle(x: &Vector, excluded: &Matrix, exog: &Matrix) -> Result<f64> {
    let restricted = oracle_rss(x, exog)?;
    let unrestricted = oracle_rss(x, &hstack(&[exog, excluded]))?;
    Ok(x.len() as f64 * (1.0 - unrestricted / restricted))
}

/// Homoskedastic first-stage F for the excluded instruments, denominator
/// degrees of freedom `n - L` with `L` counting every instrument.
pub fn first_stage_f_oracle(x: &Vector, excluded: &Matrix, exog: &Matrix) -> Result<f64> {
    let n = x.len() as f64;
    let l2 = excluded.ncols() as f64;
    let l = (exog.ncols() + excluded.ncols()) as f64;
    let restricted = oracle_rss(x, exog)?;
    let unrestricted = oracle_rss(x, &hstack(&[exog, excluded]))?;
    Ok(((restricted - unrestricted) / l2) / (unrestricted / (n - l)))
}

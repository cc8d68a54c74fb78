//! Small dense linear-algebra helpers shared by the estimators and tests.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Largest absolute asymmetry `max |a_ij - a_ji|`.
pub fn asymmetry(a: &Matrix) -> f64 {
    (a - a.transpose()).amax()
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let chol = symmetrize(a)
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(chol.inverse())
}

/// Solves `a x = b` for symmetric positive definite `a`.
pub fn spd_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let chol = symmetrize(a)
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

pub fn sym_eigen(a: &Matrix) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(a))
}

pub fn min_eigenvalue(a: &Matrix) -> f64 {
    sym_eigen(a).eigenvalues.min()
}

/// Symmetric square root of a positive semidefinite matrix; negative
/// eigenvalues from rounding are clamped at zero.
pub fn psd_sqrt(a: &Matrix) -> Matrix {
    let eig = sym_eigen(a);
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Greedy column selection in order: a column is kept when its component
/// orthogonal to the previously kept columns has norm above
/// `rel_tol * ||column||`. Returns `(kept, dropped)` column indices.
pub fn independent_columns(m: &Matrix, rel_tol: f64) -> (Vec<usize>, Vec<usize>) {
    let mut basis: Vec<Vector> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..m.ncols() {
        let col = m.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            dropped.push(j);
            continue;
        }
        let mut r = col.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn > rel_tol * norm {
            basis.push(r / rn);
            kept.push(j);
        } else {
            dropped.push(j);
        }
    }
    (kept, dropped)
}

/// Residuals of the least-squares projection of every column of `m` on the
/// columns of `on`, i.e. `M_on m`.
pub fn residualize(m: &Matrix, on: &Matrix) -> Result<Matrix> {
    if on.ncols() == 0 {
        return Ok(m.clone());
    }
    let coef = spd_solve(&(on.transpose() * on), &(on.transpose() * m))?;
    Ok(m - on * coef)
}

/// Orthonormal basis of the column space of `m`, keeping singular
/// directions above `rel_tol * sigma_max`.
pub fn orthonormal_basis(m: &Matrix, rel_tol: f64) -> Matrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Matrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
        .collect();
    u.select_columns(keep.iter())
}

pub fn hstack(blocks: &[&Matrix]) -> Matrix {
    let nrows = blocks.first().map_or(0, |b| b.nrows());
    let ncols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(nrows, ncols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

pub fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_cols(m: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

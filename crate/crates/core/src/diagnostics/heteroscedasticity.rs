//! Residual heteroscedasticity tests: Koenker's n R-squared form of White's
//! test, Breusch-Pagan, and the IV-consistent Pagan-Hall statistic.

use serde::{Deserialize, Serialize};

use super::TestResult;
use crate::error::{Error, Result};
use crate::estimators::{floored_inverse, EstimationProblem, EstimationResult};
use crate::linalg::{hstack, independent_columns, select_cols, spd_solve, Matrix, Vector};

const AUX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HetVariant {
    PaganHall,
    WhiteKoenker,
    BreuschPagan,
}

/// Indicator variables of the auxiliary regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxiliarySet {
    Levels,
    LevelsSquaresCross,
    Fitted,
}

fn is_constant(m: &Matrix, j: usize) -> bool {
    let c = m.column(j);
    c.iter().all(|v| *v == c[0])
}

/// Non-constant columns of `m` before its trailing fixed-effect dummies.
fn level_columns(m: &Matrix, fe_columns: usize) -> Matrix {
    let cols: Vec<usize> = (0..m.ncols() - fe_columns).filter(|&j| !is_constant(m, j)).collect();
    select_cols(m, &cols)
}

fn auxiliary(levels: Matrix, fitted: &Vector, aux: AuxiliarySet) -> Matrix {
    match aux {
        AuxiliarySet::Levels => levels,
        AuxiliarySet::Fitted => Matrix::from_column_slice(fitted.len(), 1, fitted.as_slice()),
        AuxiliarySet::LevelsSquaresCross => {
            let p = levels.ncols();
            let mut cols = vec![levels.clone()];
            for a in 0..p {
                for b in a..p {
                    let prod = levels.column(a).component_mul(&levels.column(b));
                    cols.push(Matrix::from_column_slice(prod.len(), 1, prod.as_slice()));
                }
            }
            hstack(&cols.iter().collect::<Vec<_>>())
        }
    }
}

/// Drops auxiliary columns that are constant or linearly dependent on the
/// intercept and earlier columns.
fn independent_auxiliary(psi: Matrix) -> Result<Matrix> {
    let n = psi.nrows();
    let with_const = hstack(&[&Matrix::from_element(n, 1, 1.0), &psi]);
    let (kept, dropped) = independent_columns(&with_const, AUX_TOL);
    if !dropped.is_empty() {
        log::warn!("{} dependent auxiliary column(s) dropped", dropped.len());
    }
    let cols: Vec<usize> = kept.into_iter().filter(|&j| j > 0).map(|j| j - 1).collect();
    if cols.is_empty() {
        return Err(Error::InvalidArgument("auxiliary regression has no usable columns".into()));
    }
    Ok(select_cols(&psi, &cols))
}

/// Explained and total sums of squares of `g` regressed on an intercept and `psi`.
fn auxiliary_fit(g: &Vector, psi: &Matrix) -> Result<(f64, f64)> {
    let n = g.len();
    let design = hstack(&[&Matrix::from_element(n, 1, 1.0), psi]);
    let gm = Matrix::from_column_slice(n, 1, g.as_slice());
    let coef = spd_solve(&(design.transpose() * &design), &(design.transpose() * &gm))?;
    let fitted = &design * coef;
    let mean = g.mean();
    let ess = fitted.iter().map(|v| (v - mean).powi(2)).sum();
    let tss = g.iter().map(|v| (v - mean).powi(2)).sum();
    Ok((ess, tss))
}

/// Tests `H0: E[u^2 | psi] = sigma^2` for the auxiliary set `aux`.
///
/// White/Koenker and Breusch-Pagan use the regressors; Pagan-Hall uses the
/// instruments and accounts for the estimation of the coefficients through
/// the estimator's influence function. All are chi-squared with one degree
/// of freedom per auxiliary column.
pub fn heteroscedasticity_tests(
    result: &EstimationResult,
    problem: &EstimationProblem,
    variant: HetVariant,
    aux: AuxiliarySet,
) -> Result<TestResult> {
    let u = &result.residuals;
    let n = u.len();
    if n != problem.n() {
        return Err(Error::Dimension("residuals do not match the problem".into()));
    }
    let beta = result.beta();
    let u2 = u.component_mul(u);
    let sigma2 = u2.mean();

    let (levels, fitted) = match variant {
        HetVariant::PaganHall => {
            let z = &problem.z;
            let coef = spd_solve(&(z.transpose() * z), &(z.transpose() * &problem.x))?;
            let xhat = z * coef;
            (level_columns(z, problem.fe_columns), &xhat * &beta)
        }
        _ => (level_columns(&problem.x, problem.fe_columns), &problem.x * &beta),
    };
    let psi = independent_auxiliary(auxiliary(levels, &fitted, aux))?;
    let p = psi.ncols();

    let (name, stat) = match variant {
        HetVariant::WhiteKoenker => {
            let (ess, tss) = auxiliary_fit(&u2, &psi)?;
            let r2 = if tss > 0.0 { ess / tss } else { 0.0 };
            ("White/Koenker", n as f64 * r2)
        }
        HetVariant::BreuschPagan => {
            if sigma2 == 0.0 {
                ("Breusch-Pagan", 0.0)
            } else {
                let (ess, _) = auxiliary_fit(&(&u2 / sigma2), &psi)?;
                ("Breusch-Pagan", ess / 2.0)
            }
        }
        HetVariant::PaganHall => ("Pagan-Hall", pagan_hall(result, problem, &psi, &u2, sigma2)?),
    };
    TestResult::chi2(name, stat.max(0.0), p)
}

fn pagan_hall(
    result: &EstimationResult,
    problem: &EstimationProblem,
    psi: &Matrix,
    u2: &Vector,
    sigma2: f64,
) -> Result<f64> {
    let n = u2.len() as f64;
    let u = &result.residuals;
    if sigma2 == 0.0 {
        return Ok(0.0);
    }
    let means = psi.row_mean();
    let mut psic = psi.clone();
    for mut row in psic.row_iter_mut() {
        row -= &means;
    }
    let d = psic.transpose() * u2 / n;
    let var_u2 = u2.iter().map(|v| (v - sigma2).powi(2)).sum::<f64>() / n;
    let mu3 = u.iter().map(|v| v.powi(3)).sum::<f64>() / n;
    let mut b = psic.transpose() * &psic * (var_u2 / n);

    if let Some(infl) = &result.influence {
        // linear effect of coefficient estimation on the moment, 2/n sum psi_c u x'
        let mut ux = problem.x.clone();
        for (mut row, v) in ux.row_iter_mut().zip(u.iter()) {
            row *= *v;
        }
        let gamma = psic.transpose() * ux * (2.0 / n);
        let c = &gamma * &infl.h;
        let s = &infl.score;
        let b2 = (psic.transpose() * s / n) * c.transpose() * (-mu3);
        let b4 = &c * (s.transpose() * s / n) * c.transpose() * sigma2;
        b += &b2 + b2.transpose() + b4;
    }
    let binv = floored_inverse(&b)?;
    Ok(n * (d.transpose() * binv * &d)[(0, 0)])
}

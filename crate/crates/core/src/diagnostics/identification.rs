//! Rank tests on the partialled first stage: Kleibergen-Paap rk LM and Wald
//! statistics and the Cragg-Donald F.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::TestResult;
use crate::error::{Error, Result};
use crate::estimators::{floored_inverse, hac_long_run, EstimationProblem};
use crate::linalg::{orthonormal_basis, psd_sqrt, residualize, select_cols, spd_inverse, spd_solve, sym_eigen, Matrix};

const BASIS_TOL: f64 = 1e-10;

/// Covariance plugged into the rank statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// HAC covariance of the first-stage scores (Kleibergen-Paap).
    Robust,
    /// `Sigma_v (x) Z'Z / n`; the statistics reduce to Anderson LM and Cragg-Donald.
    Homoskedastic,
}

/// Endogenous regressors and excluded instruments with the exogenous
/// regressors partialled out; instruments replaced by an orthonormal basis.
struct FirstStage {
    x1: Matrix,
    z: Matrix,
}

fn first_stage(problem: &EstimationProblem) -> Result<FirstStage> {
    let k1 = problem.endogenous.len();
    if k1 == 0 {
        return Err(Error::InvalidArgument("no endogenous regressors".into()));
    }
    let exog = problem.x_exog();
    let exog_names: HashSet<&String> = problem.exogenous_columns().iter().map(|&j| &problem.x_names[j]).collect();
    let excluded: Vec<usize> = (0..problem.l()).filter(|&j| !exog_names.contains(&problem.z_names[j])).collect();
    if excluded.len() < k1 {
        return Err(Error::OrderCondition { instruments: problem.l(), parameters: problem.k() });
    }
    let x1 = residualize(&problem.x_endog(), &exog)?;
    let z = orthonormal_basis(&residualize(&select_cols(&problem.z, &excluded), &exog)?, BASIS_TOL);
    if z.ncols() < k1 {
        return Err(Error::OrderCondition { instruments: z.ncols() + exog.ncols(), parameters: problem.k() });
    }
    Ok(FirstStage { x1, z })
}

fn inverse_sqrt(a: &Matrix) -> Result<Matrix> {
    let eig = sym_eigen(a);
    if eig.eigenvalues.min() <= 0.0 {
        return Err(Error::Numerical("first-stage residual covariance is singular".into()));
    }
    let d = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
    Ok(&eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

/// Eigenvectors of a symmetric matrix ordered by decreasing eigenvalue.
fn sorted_eigenvectors(a: &Matrix) -> Matrix {
    let eig = sym_eigen(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    select_cols(&eig.eigenvectors, &order)
}

/// Kleibergen-Paap rk statistic for `H0: rank(Pi) = K1 - 1` where
/// `x1 = z Pi + e`; `e` sets the scaling and score covariance.
fn rk_statistic(
    fs: &FirstStage,
    e: &Matrix,
    weighting: Weighting,
    problem: &EstimationProblem,
    bandwidth: usize,
) -> Result<f64> {
    let (x1, z) = (&fs.x1, &fs.z);
    let n = z.nrows() as f64;
    let (l2, k1) = (z.ncols(), x1.ncols());
    let zz = z.transpose() * z;
    let q_zz = &zz / n;
    let pi = spd_solve(&zz, &(z.transpose() * x1))?;
    let sigma = e.transpose() * e / n;
    let f = psd_sqrt(&q_zz);
    let g = inverse_sqrt(&sigma)?;
    let theta = &f * &pi * &g;

    let s = match weighting {
        Weighting::Robust => {
            let mut h = Matrix::zeros(z.nrows(), k1 * l2);
            for t in 0..z.nrows() {
                for k in 0..k1 {
                    for l in 0..l2 {
                        h[(t, k * l2 + l)] = e[(t, k)] * z[(t, l)];
                    }
                }
            }
            hac_long_run(&h, &problem.unit, &problem.time, bandwidth)?
        }
        Weighting::Homoskedastic => sigma.kronecker(&q_zz),
    };
    let q_inv = spd_inverse(&q_zz)?;
    let iq = Matrix::identity(k1, k1).kronecker(&q_inv);
    let v_pi = &iq * s * &iq;
    let gf = g.kronecker(&f);
    let v_theta = &gf * v_pi * gf.transpose();

    let q = k1 - 1;
    let u = sorted_eigenvectors(&(&theta * theta.transpose()));
    let v = sorted_eigenvectors(&(theta.transpose() * &theta));
    let u2 = u.columns(q, l2 - q).into_owned();
    let u22 = u2.rows(q, l2 - q).into_owned();
    let v2 = v.columns(q, k1 - q).into_owned();
    let v22 = v2.rows(q, k1 - q).into_owned();
    let singular = || Error::Numerical("rank-restriction transform is singular".into());
    let a = &u2 * u22.clone().try_inverse().ok_or_else(singular)? * psd_sqrt(&(&u22 * u22.transpose()));
    let b = psd_sqrt(&(&v22 * v22.transpose())) * v22.transpose().try_inverse().ok_or_else(singular)? * v2.transpose();
    let lambda = a.transpose() * &theta * b.transpose();
    let kron = b.kronecker(&a.transpose());
    let omega = &kron * v_theta * kron.transpose();
    let vec_lambda = Matrix::from_column_slice(lambda.len(), 1, lambda.as_slice());
    let omega_inv = floored_inverse(&omega)?;
    Ok(n * (vec_lambda.transpose() * omega_inv * &vec_lambda)[(0, 0)])
}

/// Underidentification LM test of `rank(Pi) = K1 - 1`, chi-squared with
/// `L2 - K1 + 1` degrees of freedom. Homoskedastic weighting gives the
/// Anderson canonical-correlation LM.
pub fn underidentification_lm(problem: &EstimationProblem, weighting: Weighting) -> Result<TestResult> {
    let fs = first_stage(problem)?;
    let bw = problem.resolved_bandwidth();
    let stat = rk_statistic(&fs, &fs.x1, weighting, problem, bw)?;
    let df = fs.z.ncols() - fs.x1.ncols() + 1;
    let name = match weighting {
        Weighting::Robust => "KP rk LM",
        Weighting::Homoskedastic => "Anderson LM",
    };
    TestResult::chi2(name, stat.max(0.0), df)
}

/// Cragg-Donald Wald F and its HAC-robust Kleibergen-Paap analogue.
pub fn weak_instrument_stats(problem: &EstimationProblem) -> Result<(TestResult, TestResult)> {
    let fs = first_stage(problem)?;
    let n = problem.n() as f64;
    let l2 = fs.z.ncols() as f64;
    let denom_df = problem.n() as i64 - problem.l() as i64 - problem.absorbed as i64;
    if denom_df <= 0 {
        return Err(Error::DegreesOfFreedom(denom_df));
    }
    let denom_df = denom_df as f64;

    let zz = fs.z.transpose() * &fs.z;
    let pi = spd_solve(&zz, &(fs.z.transpose() * &fs.x1))?;
    let fitted = &fs.z * &pi;
    let resid = &fs.x1 - &fitted;
    let explained = fitted.transpose() * &fitted / l2;
    let unexplained = resid.transpose() * &resid / denom_df;
    let g = inverse_sqrt(&unexplained)?;
    let cd = sym_eigen(&(&g * explained * &g)).eigenvalues.min();

    let bw = problem.resolved_bandwidth();
    let rk = rk_statistic(&fs, &resid, Weighting::Robust, problem, bw)?;
    let kp = rk / n * denom_df / l2;
    Ok((
        TestResult::f_without_p("Cragg-Donald F", cd, l2, denom_df),
        TestResult::f_without_p("KP rk Wald F", kp, l2, denom_df),
    ))
}

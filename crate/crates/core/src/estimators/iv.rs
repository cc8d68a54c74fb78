//! Instrumental-variable estimators: 2SLS, two-step efficient GMM and LIML.

use super::ols::{check_rank, scores};
use super::{
    assemble, floored_inverse, hac_long_run, hac_moment_covariance, EstimationProblem, EstimationResult, Estimator,
    Influence,
};
use crate::error::{Error, Result};
use crate::linalg::{hstack, residualize, spd_solve, sym_eigen, Matrix, Vector};

fn check_identification(problem: &EstimationProblem) -> Result<()> {
    if problem.k() == 0 {
        return Err(Error::InvalidArgument("no regressors".into()));
    }
    if problem.l() < problem.k() {
        return Err(Error::OrderCondition { instruments: problem.l(), parameters: problem.k() });
    }
    check_rank(&problem.z, &problem.z_names)?;
    check_rank(&problem.x, &problem.x_names)
}

fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular system in IV estimator".into()))
}

fn lu_inverse(a: &Matrix) -> Result<Matrix> {
    a.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular system in IV estimator".into()))
}

/// Two-stage least squares coefficients `(X'P_Z X)^-1 X'P_Z y`.
pub fn two_sls(problem: &EstimationProblem) -> Result<Vector> {
    check_identification(problem)?;
    two_sls_unchecked(problem)
}

fn two_sls_unchecked(problem: &EstimationProblem) -> Result<Vector> {
    let (x, z) = (&problem.x, &problem.z);
    let zx = z.transpose() * x;
    let zy = z.transpose() * &problem.y;
    if problem.l() == problem.k() {
        return Ok(lu_solve(&zx, &Matrix::from_column_slice(zy.len(), 1, zy.as_slice()))?.column(0).into_owned());
    }
    let zz = z.transpose() * z;
    let pzx = spd_solve(&zz, &zx)?;
    let a = zx.transpose() * &pzx;
    let b = pzx.transpose() * zy;
    Ok(spd_solve(&a, &Matrix::from_column_slice(b.len(), 1, b.as_slice()))?.column(0).into_owned())
}

/// Two-step feasible efficient GMM. The first step is 2SLS; its residuals
/// give the HAC moment covariance `S` that weights the second step.
/// Covariance is `n (X'Z S^-1 Z'X)^-1` times the small-sample factor.
pub fn gmm_two_step(problem: &EstimationProblem) -> Result<EstimationResult> {
    check_identification(problem)?;
    let dof = problem.dof_factor()?;
    let n = problem.n() as f64;
    let (x, z, y) = (&problem.x, &problem.z, &problem.y);
    let beta1 = two_sls_unchecked(problem)?;
    let u1 = y - x * &beta1;
    let bw = problem.resolved_bandwidth();
    let s = hac_moment_covariance(z, &u1, &problem.unit, &problem.time, bw)?;
    let w = floored_inverse(&s)?;
    let zx = z.transpose() * x;
    let zy = z.transpose() * y;
    let xzw = zx.transpose() * &w;
    let a = &xzw * &zx;
    let a_inv = lu_inverse(&crate::linalg::symmetrize(&a))?;
    let beta2 = if problem.l() == problem.k() {
        // the weight cancels when exactly identified
        lu_solve(&zx, &Matrix::from_column_slice(zy.len(), 1, zy.as_slice()))?.column(0).into_owned()
    } else {
        &a_inv * (&xzw * zy)
    };
    let u2 = y - x * &beta2;
    let cov = &a_inv * n * dof;
    let mut result = assemble(problem, Estimator::Gmm2s, &beta2, cov, u2, bw, dof)?;
    result.first_step = Some(beta1.iter().copied().collect());
    result.influence = Some(Influence { score: z.clone(), h: &a_inv * xzw * n });
    result.moment_covariance = Some(s);
    Ok(result)
}

/// Minimum-eigenvalue `kappa` of `(Y'M_Z Y)^-1 (Y'M_exog Y)` with
/// `Y = [y, X_endog]`.
pub fn liml_kappa(problem: &EstimationProblem) -> Result<f64> {
    let ytilde = hstack(&[&Matrix::from_column_slice(problem.n(), 1, problem.y.as_slice()), &problem.x_endog()]);
    let mz = residualize(&ytilde, &problem.z)?;
    let mx = residualize(&ytilde, &problem.x_exog())?;
    let w1 = crate::linalg::symmetrize(&(ytilde.transpose() * mz));
    let w0 = crate::linalg::symmetrize(&(ytilde.transpose() * mx));
    let chol = w1
        .cholesky()
        .ok_or_else(|| Error::Numerical("Y'M_Z Y is not positive definite".into()))?;
    let l_inv = chol
        .l()
        .solve_lower_triangular(&Matrix::identity(w0.nrows(), w0.nrows()))
        .ok_or_else(|| Error::Numerical("Y'M_Z Y is not positive definite".into()))?;
    let c = &l_inv * w0 * l_inv.transpose();
    Ok(sym_eigen(&c).eigenvalues.min())
}

/// Limited-information maximum likelihood as the k-class estimator with the
/// minimum-eigenvalue `kappa`; HAC sandwich covariance on the k-class scores.
pub fn liml(problem: &EstimationProblem) -> Result<EstimationResult> {
    check_identification(problem)?;
    let dof = problem.dof_factor()?;
    let n = problem.n() as f64;
    let (x, z, y) = (&problem.x, &problem.z, &problem.y);
    let kappa = liml_kappa(problem)?;
    if kappa < 1.0 - 1e-9 {
        return Err(Error::KappaBelowOne(kappa));
    }
    let mzx = residualize(x, z)?;
    let xk = x - &mzx * kappa;
    let a = xk.transpose() * x;
    let a_inv = lu_inverse(&a)?;
    let beta = &a_inv * (xk.transpose() * y);
    let u = y - x * &beta;
    let bw = problem.resolved_bandwidth();
    let s_x = hac_long_run(&scores(&xk, &u), &problem.unit, &problem.time, bw)?;
    let cov = &a_inv * (s_x * n) * a_inv.transpose() * dof;
    let mut result = assemble(problem, Estimator::Liml, &beta, cov, u.clone(), bw, dof)?;
    result.kappa = Some(kappa);
    result.influence = Some(Influence { score: xk, h: a_inv * n });
    result.moment_covariance = Some(hac_moment_covariance(z, &u, &problem.unit, &problem.time, bw)?);
    Ok(result)
}

use super::{assemble, hac_long_run, EstimationProblem, EstimationResult, Estimator, Influence};
use crate::error::{Error, Result};
use crate::linalg::{independent_columns, spd_inverse, Matrix};

pub(crate) const RANK_TOL: f64 = 1e-10;

pub(crate) fn check_rank(m: &Matrix, names: &[String]) -> Result<()> {
    let (_, dropped) = independent_columns(m, RANK_TOL);
    if dropped.is_empty() {
        Ok(())
    } else {
        Err(Error::RankDeficient(dropped.into_iter().map(|j| names[j].clone()).collect()))
    }
}

/// Scores `h_t = w_t u_t` for a row-weight matrix `w`.
pub(crate) fn scores(w: &Matrix, u: &crate::linalg::Vector) -> Matrix {
    let mut h = w.clone();
    for (mut row, v) in h.row_iter_mut().zip(u.iter()) {
        row *= *v;
    }
    h
}

/// Least squares with a HAC sandwich covariance
/// `(X'X)^-1 n S(x u) (X'X)^-1`, scaled by the small-sample factor.
pub fn ols(problem: &EstimationProblem) -> Result<EstimationResult> {
    let n = problem.n();
    if problem.k() == 0 {
        return Err(Error::InvalidArgument("no regressors".into()));
    }
    check_rank(&problem.x, &problem.x_names)?;
    let dof = problem.dof_factor()?;
    let x = &problem.x;
    let xtx_inv = spd_inverse(&(x.transpose() * x))?;
    let beta = &xtx_inv * (x.transpose() * &problem.y);
    let u = &problem.y - x * &beta;
    let bw = problem.resolved_bandwidth();
    let s = hac_long_run(&scores(x, &u), &problem.unit, &problem.time, bw)?;
    let cov = &xtx_inv * (s * n as f64) * &xtx_inv * dof;
    let mut result = assemble(problem, Estimator::Ols, &beta, cov, u, bw, dof)?;
    result.influence = Some(Influence { score: x.clone(), h: xtx_inv * n as f64 });
    Ok(result)
}

use super::TestResult;
use crate::error::{Error, Result};
use crate::estimators::{floored_inverse, hac_moment_covariance, EstimationProblem, EstimationResult};

const NEGATIVE_J_TOL: f64 = 1e-8;

/// Hansen's J: `n g' S^-1 g` with `g = Z'u / n` at the final coefficients.
/// Uses the moment covariance stored with the result (the GMM weighting
/// matrix), or one computed from the result's residuals.
pub fn hansen_j(result: &EstimationResult, problem: &EstimationProblem) -> Result<TestResult> {
    let n = problem.n() as f64;
    let s = match &result.moment_covariance {
        Some(s) => s.clone(),
        None => hac_moment_covariance(&problem.z, &result.residuals, &problem.unit, &problem.time, result.bandwidth)?,
    };
    let w = floored_inverse(&s)?;
    let g = problem.z.transpose() * &result.residuals / n;
    let j = n * (g.transpose() * w * &g)[(0, 0)];
    if j < -NEGATIVE_J_TOL {
        return Err(Error::NegativeJ(j));
    }
    TestResult::chi2("Hansen J", j.max(0.0), problem.overid_df())
}

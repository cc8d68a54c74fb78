use serde::{Deserialize, Serialize};

use super::{EstimationProblem, EstimationResult};
use crate::diagnostics::{tail_probability, Distribution};
use crate::error::{Error, Result};
use crate::linalg::{select_cols, spd_solve, Matrix};

/// Goodness-of-fit block of a regression table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    #[serde(with = "super::serde_float::scalar")]
    pub r_squared: f64,
    #[serde(with = "super::serde_float::scalar")]
    pub adj_r_squared: f64,
    #[serde(with = "super::serde_float::scalar")]
    pub rmse: f64,
    #[serde(with = "super::serde_float::scalar")]
    pub rss: f64,
    #[serde(with = "super::serde_float::scalar")]
    pub tss: f64,
    /// Residual degrees of freedom `n - K - absorbed`.
    pub df: i64,
    /// HAC Wald test that every slope coefficient is zero, in F form.
    pub f_stat: Option<f64>,
    pub f_df1: usize,
    pub f_p_value: Option<f64>,
}

/// R-squared on the (transformed) regressand, adjusted for the absorbed
/// fixed effects, RMSE on the residual degrees of freedom and a HAC Wald F
/// over the slope columns.
pub fn fit_statistics(result: &EstimationResult, problem: &EstimationProblem) -> Result<FitStatistics> {
    let n = problem.n();
    let df = problem.residual_df();
    if df <= 0 {
        return Err(Error::DegreesOfFreedom(df));
    }
    let rss = result.residuals.norm_squared();
    let mean = problem.y.mean();
    let tss = problem.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let r_squared = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss == 0.0 {
        1.0
    } else {
        0.0
    };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df as f64;
    let rmse = (rss / df as f64).sqrt();

    let slopes = problem.slope_columns();
    let q = slopes.len();
    let (f_stat, f_p_value) = if q == 0 {
        (None, None)
    } else {
        let b = Matrix::from_fn(q, 1, |i, _| result.coefficients[slopes[i]]);
        let v = select_cols(&crate::linalg::select_rows(&result.covariance, &slopes), &slopes);
        match spd_solve(&v, &b) {
            Ok(vb) => {
                let f = (b.transpose() * vb)[(0, 0)] / q as f64;
                let p = tail_probability(Distribution::F, f.max(0.0), q as f64, Some(df as f64))?;
                (Some(f), Some(p))
            }
            Err(_) => {
                log::warn!("slope covariance is singular; F statistic not reported");
                (None, None)
            }
        }
    };
    Ok(FitStatistics { r_squared, adj_r_squared, rmse, rss, tss, df, f_stat, f_df1: q, f_p_value })
}

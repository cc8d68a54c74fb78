use super::TestResult;
use crate::error::{Error, Result};
use crate::estimators::{floored_inverse, Influence};
use crate::linalg::{Matrix, Vector};

pub const DEFAULT_CH_LAGS: [usize; 13] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13];

/// Cumby-Huizinga test that residual autocovariances at `lags` are jointly
/// zero. Moments are `u_t u_{t-j}` within units; their covariance is
/// heteroscedasticity-robust and, given the regressors and the estimator's
/// influence, corrected for coefficient estimation. Chi-squared with one
/// degree of freedom per lag.
pub fn cumby_huizinga(
    residuals: &Vector,
    unit: &[usize],
    time: &[i64],
    lags: &[usize],
    correction: Option<(&Matrix, &Influence)>,
) -> Result<TestResult> {
    let n = residuals.len();
    if unit.len() != n || time.len() != n {
        return Err(Error::Dimension("panel index length differs from residuals".into()));
    }
    if lags.is_empty() || lags.contains(&0) {
        return Err(Error::InvalidArgument("lag set must be nonempty and positive".into()));
    }
    let blocks = crate::estimators::unit_blocks(unit);
    let shortest = blocks.iter().map(|(a, b)| b - a).min().unwrap_or(0);
    let mut kept: Vec<usize> = Vec::new();
    for &j in lags {
        if j >= shortest {
            log::info!("lag {j} dropped: shortest unit has {shortest} rows");
        } else if !kept.contains(&j) {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(Error::InvalidArgument("every lag reaches the shortest unit length".into()));
    }
    let s = kept.len();
    if residuals.amax() == 0.0 {
        return TestResult::chi2("Cumby-Huizinga", 0.0, s);
    }

    // partner[t][c]: row holding time t - lag_c in the same unit
    let mut partner: Vec<Vec<Option<usize>>> = vec![vec![None; s]; n];
    for &(start, end) in &blocks {
        for t in start..end {
            for (c, &j) in kept.iter().enumerate() {
                let lo = t.saturating_sub(j).max(start);
                partner[t][c] = (lo..t).rev().find(|&b| time[t] - time[b] == j as i64);
            }
        }
    }
    let mut m = Matrix::zeros(n, s);
    for t in 0..n {
        for c in 0..s {
            if let Some(b) = partner[t][c] {
                m[(t, c)] = residuals[t] * residuals[b];
            }
        }
    }
    let mbar = m.row_sum().transpose() / n as f64;

    let mtilde = match correction {
        Some((x, infl)) => {
            let k = x.ncols();
            let mut d = Matrix::zeros(k, s);
            for t in 0..n {
                for c in 0..s {
                    if let Some(b) = partner[t][c] {
                        for r in 0..k {
                            d[(r, c)] += x[(t, r)] * residuals[b] + x[(b, r)] * residuals[t];
                        }
                    }
                }
            }
            d /= n as f64;
            let mut psi = infl.score.clone();
            for (mut row, u) in psi.row_iter_mut().zip(residuals.iter()) {
                row *= *u;
            }
            &m - psi * infl.h.transpose() * d
        }
        None => m,
    };
    let v = mtilde.transpose() * &mtilde / n as f64;
    let stat = n as f64 * (mbar.transpose() * floored_inverse(&v)? * &mbar)[(0, 0)];
    TestResult::chi2("Cumby-Huizinga", stat.max(0.0), s)
}

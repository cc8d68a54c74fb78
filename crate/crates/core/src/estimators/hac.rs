//! Newey-West long-run covariance with a Bartlett kernel. Lags never cross
//! panel units: row pairs contribute only when they share a unit and their
//! time indices differ by the lag.

use super::unit_blocks;
use crate::error::{Error, Result};
use crate::linalg::{select_rows, sym_eigen, symmetrize, Matrix, Vector};

/// Relative eigenvalue floor applied before inverting a moment covariance.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Below this min/max eigenvalue ratio the moment covariance is treated as singular.
pub const SINGULAR_RATIO: f64 = 1e-14;

/// `1 - j / (L + 1)` for `j <= L`, zero beyond; evaluated as
/// `(L + 1 - j) / (L + 1)` so the weights are exact ratios.
pub fn bartlett_weight(j: usize, bandwidth: usize) -> f64 {
    if j > bandwidth {
        0.0
    } else {
        (bandwidth + 1 - j) as f64 / (bandwidth + 1) as f64
    }
}

/// `floor(T^(1/3))`, computed in integers so perfect cubes are exact.
pub fn cube_root_bandwidth(t: usize) -> usize {
    let mut l = (t as f64).cbrt() as usize;
    while (l + 1).pow(3) <= t {
        l += 1;
    }
    while l > 0 && l.pow(3) > t {
        l -= 1;
    }
    l
}

/// Long-run covariance of per-row moment contributions `h` (n x m):
/// `(1/n) [sum_t h_t h_t' + sum_j w(j) sum_t (h_t h_{t-j}' + h_{t-j} h_t')]`.
pub fn hac_long_run(h: &Matrix, unit: &[usize], time: &[i64], bandwidth: usize) -> Result<Matrix> {
    let n = h.nrows();
    if unit.len() != n || time.len() != n {
        return Err(Error::Dimension("panel index length differs from moment rows".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no observations".into()));
    }
    let mut s = h.transpose() * h;
    if bandwidth > 0 {
        let blocks = unit_blocks(unit);
        let shortest = blocks.iter().map(|(a, b)| b - a).min().unwrap_or(0);
        if bandwidth >= shortest {
            log::warn!("bandwidth {bandwidth} reaches the shortest unit ({shortest} rows); its lags are truncated");
        }
        for j in 1..=bandwidth {
            let mut lead = Vec::new();
            let mut lag = Vec::new();
            for &(start, end) in &blocks {
                for a in start..end {
                    // times strictly increase within a unit, so t - j lies at most j rows back
                    let lo = a.saturating_sub(j).max(start);
                    for b in (lo..a).rev() {
                        let gap = time[a] - time[b];
                        if gap == j as i64 {
                            lead.push(a);
                            lag.push(b);
                        }
                        if gap >= j as i64 {
                            break;
                        }
                    }
                }
            }
            if lead.is_empty() {
                continue;
            }
            let g = select_rows(h, &lead).transpose() * select_rows(h, &lag);
            s += (&g + g.transpose()) * bartlett_weight(j, bandwidth);
        }
    }
    Ok(symmetrize(&(s / n as f64)))
}

/// Moment covariance `S` of `z_t u_t`, averaged over `n` rows.
pub fn hac_moment_covariance(
    z: &Matrix,
    residuals: &Vector,
    unit: &[usize],
    time: &[i64],
    bandwidth: usize,
) -> Result<Matrix> {
    if residuals.len() != z.nrows() {
        return Err(Error::Dimension("residual length differs from instrument rows".into()));
    }
    let mut h = z.clone();
    for (mut row, u) in h.row_iter_mut().zip(residuals.iter()) {
        row *= *u;
    }
    hac_long_run(&h, unit, time, bandwidth)
}

/// Inverse of a symmetric PSD moment covariance after flooring its
/// eigenvalues at `EIGEN_FLOOR * trace / m`.
pub fn floored_inverse(s: &Matrix) -> Result<Matrix> {
    let m = s.nrows();
    let eig = sym_eigen(s);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let trace = s.trace();
    if !(trace.is_finite() && trace > 0.0 && max > 0.0) || min / max < SINGULAR_RATIO {
        return Err(Error::SingularMomentCovariance {
            ratio: if max > 0.0 { min / max } else { 0.0 },
        });
    }
    let floor = EIGEN_FLOOR * trace / m as f64;
    let inv = eig.eigenvalues.map(|v| 1.0 / v.max(floor));
    Ok(symmetrize(&(&eig.eigenvectors * Matrix::from_diagonal(&inv) * eig.eigenvectors.transpose())))
}

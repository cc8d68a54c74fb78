use serde::{Deserialize, Serialize};

use super::PanelObservation;
use crate::error::{Error, Result};

/// Univariate statistics and pairwise Pearson correlations of panel columns.
/// Undefined cells (log-odds at p = 0 or 1) are skipped; correlations use
/// pairwise-complete rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub columns: Vec<String>,
    pub count: Vec<usize>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Lower triangle including the diagonal, row-major: `correlation[i][j]` for `j <= i`.
    pub correlation: Vec<Vec<f64>>,
}

/// Sample Pearson correlation; NaN when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn describe(panel: &[PanelObservation], columns: &[&str]) -> Result<Descriptives> {
    if panel.is_empty() {
        return Err(Error::InvalidArgument("empty panel".into()));
    }
    let values: Vec<Vec<Option<f64>>> = columns
        .iter()
        .map(|c| panel.iter().map(|o| o.value(c)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut d = Descriptives {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        count: Vec::new(),
        mean: Vec::new(),
        sd: Vec::new(),
        min: Vec::new(),
        max: Vec::new(),
        correlation: Vec::new(),
    };
    for col in &values {
        let v: Vec<f64> = col.iter().flatten().copied().collect();
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        d.count.push(n);
        d.mean.push(mean);
        d.sd.push(var.sqrt());
        d.min.push(v.iter().copied().fold(f64::INFINITY, f64::min));
        d.max.push(v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    for i in 0..values.len() {
        let mut row = Vec::with_capacity(i + 1);
        for j in 0..=i {
            let (x, y): (Vec<f64>, Vec<f64>) = values[i]
                .iter()
                .zip(&values[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            row.push(if i == j { 1.0 } else { pearson(&x, &y) });
        }
        d.correlation.push(row);
    }
    Ok(d)
}

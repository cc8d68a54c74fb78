//! Panel estimators: fixed-effects transformation, OLS, two-step efficient
//! GMM and LIML, all with Newey-West (Bartlett) covariance computed within
//! panel units.

mod fit;
mod fixed_effects;
mod hac;
mod iv;
mod ols;
mod serde_float;
pub(crate) mod serde_matrix;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Diagnostics;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub use fit::{fit_statistics, FitStatistics};
pub use fixed_effects::apply_fixed_effects;
pub use hac::{bartlett_weight, cube_root_bandwidth, floored_inverse, hac_long_run, hac_moment_covariance};
pub use iv::{gmm_two_step, liml, liml_kappa, two_sls};
pub use ols::ols;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "ols")]
    Ols,
    #[serde(rename = "gmm2s")]
    Gmm2s,
    #[serde(rename = "liml")]
    Liml,
}

impl Estimator {
    pub fn is_iv(&self) -> bool {
        !matches!(self, Self::Ols)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Ols => "OLS",
            Self::Gmm2s => "2SGMM",
            Self::Liml => "LIML",
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ols" => Ok(Self::Ols),
            "gmm2s" | "2sgmm" | "gmm" => Ok(Self::Gmm2s),
            "liml" => Ok(Self::Liml),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedEffectsImpl {
    /// Demean within units and add month dummies (all but the first).
    #[default]
    WithinPlusTimeDummies,
    /// Explicit unit and month dummies, no demeaning (least-squares dummy variables).
    FullDummies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedEffectsSpec {
    pub unit_effects: bool,
    pub time_effects: bool,
    #[serde(default)]
    pub implementation: FixedEffectsImpl,
}

impl FixedEffectsSpec {
    pub const NONE: Self = Self {
        unit_effects: false,
        time_effects: false,
        implementation: FixedEffectsImpl::WithinPlusTimeDummies,
    };

    pub const TWO_WAY: Self = Self {
        unit_effects: true,
        time_effects: true,
        implementation: FixedEffectsImpl::WithinPlusTimeDummies,
    };

    pub fn with_implementation(mut self, implementation: FixedEffectsImpl) -> Self {
        self.implementation = implementation;
        self
    }
}

impl Default for FixedEffectsSpec {
    fn default() -> Self {
        Self::TWO_WAY
    }
}

/// HAC lag truncation: a fixed number of lags, or `floor(T^(1/3))` with `T`
/// the longest unit's time span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bandwidth {
    #[default]
    CubeRoot,
    Fixed(usize),
}

impl Bandwidth {
    pub fn resolve(&self, time: &[i64], unit: &[usize]) -> usize {
        match *self {
            Self::Fixed(l) => l,
            Self::CubeRoot => cube_root_bandwidth(longest_span(unit, time)),
        }
    }
}

impl Serialize for Bandwidth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::CubeRoot => s.serialize_str("auto"),
            Self::Fixed(l) => s.serialize_u64(*l as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Lags(u64),
            Rule(String),
        }
        match Repr::deserialize(d)? {
            Repr::Lags(l) => Ok(Self::Fixed(l as usize)),
            Repr::Rule(s) if s == "auto" => Ok(Self::CubeRoot),
            Repr::Rule(s) => Err(serde::de::Error::custom(format!("bandwidth must be \"auto\" or a lag count, got {s:?}"))),
        }
    }
}

/// Longest time span (`max t - min t + 1`) over units; rows sorted by unit.
pub(crate) fn longest_span(unit: &[usize], time: &[i64]) -> usize {
    unit_blocks(unit)
        .into_iter()
        .map(|(a, b)| (time[b - 1] - time[a] + 1) as usize)
        .max()
        .unwrap_or(0)
}

/// `[start, end)` row ranges of consecutive rows sharing a unit.
pub(crate) fn unit_blocks(unit: &[usize]) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..=unit.len() {
        if i == unit.len() || unit[i] != unit[start] {
            if i > start {
                blocks.push((start, i));
            }
            start = i;
        }
    }
    blocks
}

/// Regressand, regressors and instruments for one estimation, with the
/// panel index of every row.
///
/// `z` holds every instrument, including the exogenous regressors, which
/// instrument themselves. Rows must be sorted by (unit, time).
#[derive(Debug, Clone)]
pub struct EstimationProblem {
    pub y: Vector,
    pub x: Matrix,
    pub z: Matrix,
    pub y_name: String,
    pub x_names: Vec<String>,
    pub z_names: Vec<String>,
    /// Indices of endogenous columns of `x`.
    pub endogenous: Vec<usize>,
    pub unit: Vec<usize>,
    pub time: Vec<i64>,
    pub fe: FixedEffectsSpec,
    pub bandwidth: Bandwidth,
    /// Scale HAC covariances by `n / (n - K - absorbed)`.
    pub small_sample: bool,
    /// Parameters absorbed by a within transformation.
    pub absorbed: usize,
    /// Trailing columns of `x` (and `z`) that are fixed-effect dummies.
    pub fe_columns: usize,
    /// Set once [`apply_fixed_effects`] has run.
    pub fe_applied: bool,
    /// Rows removed by the within transformation (singleton units).
    pub singleton_rows: usize,
}

impl EstimationProblem {
    /// Builds a problem whose instrument set is the exogenous regressors
    /// followed by `excluded` instruments.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        y_name: impl Into<String>,
        y: Vector,
        x_names: Vec<String>,
        x: Matrix,
        endogenous: Vec<usize>,
        excluded_names: Vec<String>,
        excluded: Matrix,
        unit: Vec<usize>,
        time: Vec<i64>,
    ) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n || excluded.nrows() != n || unit.len() != n || time.len() != n {
            return Err(Error::Dimension(format!(
                "y has {n} rows, X {}, excluded instruments {}, unit index {}, time index {}",
                x.nrows(),
                excluded.nrows(),
                unit.len(),
                time.len()
            )));
        }
        if x_names.len() != x.ncols() || excluded_names.len() != excluded.ncols() {
            return Err(Error::Dimension("column names do not match matrix widths".into()));
        }
        let mut endogenous = endogenous;
        endogenous.sort_unstable();
        endogenous.dedup();
        if endogenous.iter().any(|&j| j >= x.ncols()) {
            return Err(Error::Dimension("endogenous index outside X".into()));
        }
        let exog: Vec<usize> = (0..x.ncols()).filter(|j| !endogenous.contains(j)).collect();
        let x_exog = crate::linalg::select_cols(&x, &exog);
        let z = crate::linalg::hstack(&[&x_exog, &excluded]);
        let mut z_names: Vec<String> = exog.iter().map(|&j| x_names[j].clone()).collect();
        z_names.extend(excluded_names);
        let p = Self {
            y,
            x,
            z,
            y_name: y_name.into(),
            x_names,
            z_names,
            endogenous,
            unit,
            time,
            fe: FixedEffectsSpec::NONE,
            bandwidth: Bandwidth::CubeRoot,
            small_sample: true,
            absorbed: 0,
            fe_columns: 0,
            fe_applied: false,
            singleton_rows: 0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Problem without excluded instruments: every regressor is exogenous.
    pub fn exogenous(y: Vector, x_names: Vec<String>, x: Matrix, unit: Vec<usize>, time: Vec<i64>) -> Result<Self> {
        let n = y.len();
        Self::new("y", y, x_names, x, vec![], vec![], Matrix::zeros(n, 0), unit, time)
    }

    /// Cross-section helper: each row its own unit, time all zero.
    pub fn cross_section(y: Vector, x: Matrix, endogenous: Vec<usize>, excluded: Matrix) -> Result<Self> {
        let n = y.len();
        let x_names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        let z_names = (0..excluded.ncols()).map(|j| format!("z{j}")).collect();
        Self::new("y", y, x_names, x, endogenous, z_names, excluded, (0..n).collect(), vec![0; n])
    }

    pub fn with_fixed_effects(mut self, fe: FixedEffectsSpec) -> Self {
        self.fe = fe;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: Bandwidth) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn with_small_sample(mut self, on: bool) -> Self {
        self.small_sample = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |m: &Matrix| m.iter().all(|v| v.is_finite());
        if !self.y.iter().all(|v| v.is_finite()) || !finite(&self.x) || !finite(&self.z) {
            return Err(Error::InvalidArgument("non-finite value in y, X or Z".into()));
        }
        for i in 1..self.n() {
            let prev = (self.unit[i - 1], self.time[i - 1]);
            let cur = (self.unit[i], self.time[i]);
            if cur <= prev {
                return Err(Error::InvalidArgument(format!(
                    "rows must be strictly sorted by (unit, time); row {i} breaks the order"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn l(&self) -> usize {
        self.z.ncols()
    }

    pub fn exogenous_columns(&self) -> Vec<usize> {
        (0..self.k()).filter(|j| !self.endogenous.contains(j)).collect()
    }

    pub fn x_exog(&self) -> Matrix {
        crate::linalg::select_cols(&self.x, &self.exogenous_columns())
    }

    pub fn x_endog(&self) -> Matrix {
        crate::linalg::select_cols(&self.x, &self.endogenous)
    }

    /// Excluded instruments minus endogenous regressors.
    pub fn overid_df(&self) -> usize {
        self.l().saturating_sub(self.k())
    }

    pub fn excluded_count(&self) -> usize {
        self.l().saturating_sub(self.k() - self.endogenous.len())
    }

    pub fn resolved_bandwidth(&self) -> usize {
        self.bandwidth.resolve(&self.time, &self.unit)
    }

    /// Columns of `x` that are ordinary regressors: not fixed-effect dummies
    /// and not constant.
    pub fn slope_columns(&self) -> Vec<usize> {
        let k_main = self.k() - self.fe_columns;
        (0..k_main)
            .filter(|&j| {
                let c = self.x.column(j);
                let first = c[0];
                !(first != 0.0 && c.iter().all(|v| *v == first))
            })
            .collect()
    }

    pub fn residual_df(&self) -> i64 {
        self.n() as i64 - self.k() as i64 - self.absorbed as i64
    }

    pub(crate) fn dof_factor(&self) -> Result<f64> {
        let df = self.residual_df();
        if df <= 0 {
            return Err(Error::DegreesOfFreedom(df));
        }
        Ok(if self.small_sample { self.n() as f64 / df as f64 } else { 1.0 })
    }
}

/// Linearization used by residual tests that correct for coefficient
/// estimation: `beta_hat - beta ~= h * (score' u / n)`.
#[derive(Debug, Clone)]
pub struct Influence {
    pub score: Matrix,
    pub h: Matrix,
}

/// Output of one estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimator: Estimator,
    pub regressand: String,
    pub names: Vec<String>,
    #[serde(with = "serde_float")]
    pub coefficients: Vec<f64>,
    #[serde(with = "serde_matrix")]
    pub covariance: Matrix,
    #[serde(with = "serde_float")]
    pub std_errors: Vec<f64>,
    #[serde(with = "serde_float")]
    pub t_stats: Vec<f64>,
    /// Two-sided normal p-values of the t-ratios.
    #[serde(with = "serde_float")]
    pub p_values: Vec<f64>,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub endogenous: Vec<String>,
    pub instruments: Vec<String>,
    pub overid_df: usize,
    pub bandwidth: usize,
    pub absorbed: usize,
    pub fe_columns: usize,
    pub fe: FixedEffectsSpec,
    pub dof_factor: f64,
    pub fit: FitStatistics,
    /// 2SLS coefficients of the first GMM step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_step: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    #[serde(skip)]
    pub residuals: Vector,
    /// Moment covariance used to weight the second GMM step.
    #[serde(skip)]
    pub moment_covariance: Option<Matrix>,
    #[serde(skip)]
    pub influence: Option<Influence>,
}

impl EstimationResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.std_errors[i])
    }

    pub fn beta(&self) -> Vector {
        Vector::from_column_slice(&self.coefficients)
    }
}

pub(crate) fn normal_two_sided(t: f64) -> f64 {
    statrs::function::erf::erfc(t.abs() / std::f64::consts::SQRT_2)
}

/// Fills the shared result fields from coefficients and a covariance.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    problem: &EstimationProblem,
    estimator: Estimator,
    beta: &Vector,
    covariance: Matrix,
    residuals: Vector,
    bandwidth: usize,
    dof_factor: f64,
) -> Result<EstimationResult> {
    let covariance = crate::linalg::symmetrize(&covariance);
    let std_errors: Vec<f64> = (0..beta.len()).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    let t_stats: Vec<f64> = beta.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let p_values = t_stats.iter().map(|t| normal_two_sided(*t)).collect();
    let mut result = EstimationResult {
        estimator,
        regressand: problem.y_name.clone(),
        names: problem.x_names.clone(),
        coefficients: beta.iter().copied().collect(),
        covariance,
        std_errors,
        t_stats,
        p_values,
        n: problem.n(),
        k: problem.k(),
        l: problem.l(),
        endogenous: problem.endogenous.iter().map(|&j| problem.x_names[j].clone()).collect(),
        instruments: problem.z_names.clone(),
        overid_df: if estimator.is_iv() { problem.overid_df() } else { 0 },
        bandwidth,
        absorbed: problem.absorbed,
        fe_columns: problem.fe_columns,
        fe: problem.fe,
        dof_factor,
        fit: FitStatistics::default(),
        first_step: None,
        kappa: None,
        diagnostics: Diagnostics::default(),
        residuals,
        moment_covariance: None,
        influence: None,
    };
    result.fit = fit_statistics(&result, problem)?;
    Ok(result)
}

/// Applies the problem's fixed effects and runs `estimator`.
pub fn estimate(problem: &EstimationProblem, estimator: Estimator) -> Result<EstimationResult> {
    let transformed = apply_fixed_effects(problem)?;
    match estimator {
        Estimator::Ols => ols(&transformed),
        Estimator::Gmm2s => gmm_two_step(&transformed),
        Estimator::Liml => liml(&transformed),
    }
}

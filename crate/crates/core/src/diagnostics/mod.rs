//! Identification and specification tests reported alongside estimates.

mod autocorrelation;
mod heteroscedasticity;
mod identification;
mod overidentification;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{apply_fixed_effects, estimate, EstimationProblem, EstimationResult, Estimator};

pub use autocorrelation::{cumby_huizinga, DEFAULT_CH_LAGS};
pub use heteroscedasticity::{heteroscedasticity_tests, AuxiliarySet, HetVariant};
pub use identification::{underidentification_lm, weak_instrument_stats, Weighting};
pub use overidentification::hansen_j;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Chi2,
    F,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Chi2 => "chi2",
            Self::F => "F",
        })
    }
}

/// Upper-tail probability of `statistic` under chi-squared(`df`) or
/// F(`df`, `df2`).
pub fn tail_probability(dist: Distribution, statistic: f64, df: f64, df2: Option<f64>) -> Result<f64> {
    if !(df.is_finite() && df > 0.0) {
        return Err(Error::InvalidArgument(format!("degrees of freedom must be positive, got {df}")));
    }
    if statistic.is_nan() || statistic < 0.0 {
        return Err(Error::InvalidArgument(format!("test statistic must be non-negative, got {statistic}")));
    }
    if statistic == 0.0 {
        return Ok(1.0);
    }
    if statistic.is_infinite() {
        return Ok(0.0);
    }
    let p = match dist {
        Distribution::Chi2 => statrs::function::gamma::checked_gamma_ur(df / 2.0, statistic / 2.0)
            .map_err(|e| Error::Numerical(format!("tail probability: {e}")))?,
        Distribution::F => {
            let d2 = df2.ok_or_else(|| Error::InvalidArgument("F distribution needs a denominator df".into()))?;
            if !(d2.is_finite() && d2 > 0.0) {
                return Err(Error::InvalidArgument(format!("denominator df must be positive, got {d2}")));
            }
            statrs::function::beta::checked_beta_reg(d2 / 2.0, df / 2.0, d2 / (d2 + df * statistic))
                .map_err(|e| Error::Numerical(format!("tail probability: {e}")))?
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub distribution: Distribution,
    pub df: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df2: Option<f64>,
    /// Upper-tail probability; absent for statistics compared against
    /// critical-value conventions instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

impl TestResult {
    pub(crate) fn chi2(name: impl Into<String>, statistic: f64, df: usize) -> Result<Self> {
        let p = if df == 0 { 1.0 } else { tail_probability(Distribution::Chi2, statistic, df as f64, None)? };
        Ok(Self {
            name: name.into(),
            statistic,
            distribution: Distribution::Chi2,
            df: df as f64,
            df2: None,
            p_value: Some(p),
        })
    }

    pub(crate) fn f_without_p(name: impl Into<String>, statistic: f64, df: f64, df2: f64) -> Self {
        Self { name: name.into(), statistic, distribution: Distribution::F, df, df2: Some(df2), p_value: None }
    }
}

/// Table diagnostics plus every additional specification test that ran.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(rename = "KP", default)]
    pub kp: Option<f64>,
    #[serde(rename = "KP P-Value", default)]
    pub kp_p_value: Option<f64>,
    #[serde(rename = "J", default)]
    pub j: Option<f64>,
    #[serde(rename = "J P-Value", default)]
    pub j_p_value: Option<f64>,
    #[serde(rename = "Weak CD", default)]
    pub weak_cd: Option<f64>,
    #[serde(rename = "Weak KP", default)]
    pub weak_kp: Option<f64>,
    #[serde(default)]
    pub tests: Vec<TestResult>,
}

/// Which tests [`diagnose`] runs beyond the identification block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryOptions {
    /// Lags of the Cumby-Huizinga test; empty disables it.
    pub ch_lags: Vec<usize>,
    pub heteroscedasticity: Vec<(HetVariant, AuxiliarySet)>,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            ch_lags: DEFAULT_CH_LAGS.to_vec(),
            heteroscedasticity: vec![
                (HetVariant::PaganHall, AuxiliarySet::Levels),
                (HetVariant::WhiteKoenker, AuxiliarySet::Levels),
                (HetVariant::BreuschPagan, AuxiliarySet::Levels),
            ],
        }
    }
}

impl BatteryOptions {
    pub fn none() -> Self {
        Self { ch_lags: vec![], heteroscedasticity: vec![] }
    }
}

/// Fills `result.diagnostics` for a problem whose fixed effects are already
/// applied. Failing tests are logged and left out.
pub fn diagnose(problem: &EstimationProblem, result: &mut EstimationResult, options: &BatteryOptions) -> Result<()> {
    let mut d = Diagnostics::default();
    if result.estimator.is_iv() && !problem.endogenous.is_empty() {
        match hansen_j(result, problem) {
            Ok(t) => {
                d.j = Some(t.statistic);
                d.j_p_value = t.p_value;
                d.tests.push(t);
            }
            Err(e) => log::warn!("Hansen J not computed: {e}"),
        }
        match underidentification_lm(problem, Weighting::Robust) {
            Ok(t) => {
                d.kp = Some(t.statistic);
                d.kp_p_value = t.p_value;
                d.tests.push(t);
            }
            Err(e) => log::warn!("KP LM not computed: {e}"),
        }
        match weak_instrument_stats(problem) {
            Ok((cd, kp)) => {
                d.weak_cd = Some(cd.statistic);
                d.weak_kp = Some(kp.statistic);
                d.tests.push(cd);
                d.tests.push(kp);
            }
            Err(e) => log::warn!("weak-instrument statistics not computed: {e}"),
        }
    }
    if !options.ch_lags.is_empty() {
        match cumby_huizinga(&result.residuals, &problem.unit, &problem.time, &options.ch_lags, result.influence.as_ref().map(|i| (&problem.x, i)))
        {
            Ok(t) => d.tests.push(t),
            Err(e) => log::warn!("Cumby-Huizinga test not computed: {e}"),
        }
    }
    for &(variant, aux) in &options.heteroscedasticity {
        match heteroscedasticity_tests(result, problem, variant, aux) {
            Ok(t) => d.tests.push(t),
            Err(e) => log::warn!("{variant:?} test not computed: {e}"),
        }
    }
    result.diagnostics = d;
    Ok(())
}

/// Fixed effects, estimation and the diagnostics battery in one call.
pub fn estimate_with_diagnostics(
    problem: &EstimationProblem,
    estimator: Estimator,
    options: &BatteryOptions,
) -> Result<EstimationResult> {
    let transformed = apply_fixed_effects(problem)?;
    let mut result = estimate(&transformed, estimator)?;
    diagnose(&transformed, &mut result, options)?;
    Ok(result)
}

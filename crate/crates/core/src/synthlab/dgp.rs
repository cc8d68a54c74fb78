//! Linear panel data-generating processes with one or more endogenous
//! regressors and known parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimationProblem;
use crate::linalg::{Matrix, Vector};

/// Parameters of
/// `y = c + X_endog b + W g + a_i + t_t + u`, `X_endog = Z Pi' + V + 0.5 a_i`,
/// `u = sigma * h * e` where `e` is AR(`ar`) within units with innovations
/// `rho v_1 + sqrt(1 - rho^2) eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpConfig {
    pub n_units: usize,
    pub n_periods: usize,
    /// Structural coefficients of the endogenous regressors.
    pub beta_endog: Vec<f64>,
    /// Structural coefficients of the exogenous regressors `W`.
    pub beta_exog: Vec<f64>,
    /// First-stage loadings, one row per endogenous regressor, one column per
    /// excluded instrument.
    pub first_stage: Vec<Vec<f64>>,
    /// Correlation between the structural error innovation and the first
    /// endogenous regressor's first-stage error.
    pub rho: f64,
    pub error_scale: f64,
    /// AR(1) coefficient of the structural error within units.
    pub ar: f64,
    /// Error standard deviation proportional to `sqrt(1 + w_1^2)` (or
    /// `z_1` without exogenous regressors), normalized to unit mean variance.
    pub heteroskedastic: bool,
    /// Correlation of the last excluded instrument with the structural error.
    pub invalid_instrument_corr: f64,
    pub intercept: f64,
    pub unit_effect_sd: f64,
    pub time_effect_sd: f64,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        standard_scenario()
    }
}

/// Single endogenous regressor, one instrument, `beta = 1`, `pi = 1`,
/// `rho = 0.8`: OLS converges to 1.4.
pub fn standard_scenario() -> DgpConfig {
    DgpConfig {
        n_units: 20,
        n_periods: 100,
        beta_endog: vec![1.0],
        beta_exog: vec![],
        first_stage: vec![vec![1.0]],
        rho: 0.8,
        error_scale: 1.0,
        ar: 0.0,
        heteroskedastic: false,
        invalid_instrument_corr: 0.0,
        intercept: 0.5,
        unit_effect_sd: 0.0,
        time_effect_sd: 0.0,
        seed: 1,
    }
}

/// Positive structural coefficient (0.8) with an error-regressor covariance
/// of -1 per unit of regressor variance: OLS converges to -0.2.
pub fn sign_flip_scenario() -> DgpConfig {
    DgpConfig {
        n_units: 50,
        n_periods: 100,
        beta_endog: vec![0.8],
        first_stage: vec![vec![1.0]],
        rho: -0.8,
        error_scale: 2.5,
        ..standard_scenario()
    }
}

/// Two positively correlated concentration proxies (`cov = 1.0`) with
/// coefficients 0.8 and -1.5. Dropping the second from an IV regression on
/// both instruments moves the first coefficient to
/// `0.8 - 1.5 * (pi_1' pi_2) / (pi_1' pi_1) = -0.4`.
pub fn omitted_proxy_scenario() -> DgpConfig {
    DgpConfig {
        n_units: 50,
        n_periods: 100,
        beta_endog: vec![0.8, -1.5],
        first_stage: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
        rho: -0.5,
        error_scale: 1.0,
        ..standard_scenario()
    }
}

/// Known parameters of a generated panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub names: Vec<String>,
    /// Coefficients aligned with `names`.
    pub beta: Vec<f64>,
    pub rho: f64,
    pub first_stage: Vec<Vec<f64>>,
    pub ar: f64,
    /// Probability limit of OLS for the first endogenous coefficient; set
    /// when it has a closed form (homoskedastic, no effects, valid
    /// instruments, a single endogenous regressor).
    pub ols_plim: Option<f64>,
    /// Probability limit of IV estimators for the same coefficient.
    pub iv_plim: Option<f64>,
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.rho.abs() < 1.0) {
            return bad("|rho| must be below 1");
        }
        if !(self.ar.abs() < 1.0) {
            return bad("|ar| must be below 1");
        }
        if !(self.invalid_instrument_corr.abs() < 1.0) {
            return bad("|invalid_instrument_corr| must be below 1");
        }
        if self.n_units == 0 || self.n_periods == 0 {
            return bad("panel must have at least one unit and one period");
        }
        if self.beta_endog.is_empty() || self.first_stage.len() != self.beta_endog.len() {
            return bad("first_stage needs one row per endogenous regressor");
        }
        let l2 = self.first_stage[0].len();
        if l2 == 0 || self.first_stage.iter().any(|r| r.len() != l2) {
            return bad("first_stage rows must share a positive instrument count");
        }
        if !(self.error_scale > 0.0) || self.unit_effect_sd < 0.0 || self.time_effect_sd < 0.0 {
            return bad("scales must be non-negative and error_scale positive");
        }
        Ok(())
    }

    pub fn excluded_instruments(&self) -> usize {
        self.first_stage.first().map_or(0, |r| r.len())
    }

    pub fn truth(&self) -> Truth {
        let mut names = vec!["const".to_string()];
        let mut beta = vec![self.intercept];
        for (k, b) in self.beta_endog.iter().enumerate() {
            names.push(format!("x{}", k + 1));
            beta.push(*b);
        }
        for (k, b) in self.beta_exog.iter().enumerate() {
            names.push(format!("w{}", k + 1));
            beta.push(*b);
        }
        let closed_form = self.beta_endog.len() == 1
            && !self.heteroskedastic
            && self.unit_effect_sd == 0.0
            && self.time_effect_sd == 0.0
            && self.invalid_instrument_corr == 0.0;
        let (ols_plim, iv_plim) = if closed_form {
            let var_x = self.first_stage[0].iter().map(|p| p * p).sum::<f64>() + 1.0;
            let cov_xu = self.error_scale * self.rho * (1.0 - self.ar * self.ar).sqrt();
            (Some(self.beta_endog[0] + cov_xu / var_x), Some(self.beta_endog[0]))
        } else {
            (None, None)
        };
        Truth {
            names,
            beta,
            rho: self.rho,
            first_stage: self.first_stage.clone(),
            ar: self.ar,
            ols_plim,
            iv_plim,
        }
    }
}

/// Generates a panel from `cfg` with a generator seeded by `cfg.seed`.
pub fn generate_linear_panel(cfg: &DgpConfig) -> Result<(EstimationProblem, Truth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    generate_linear_panel_with(cfg, &mut rng)
}

/// Generates a panel drawing from `rng`. Regressors are ordered
/// `[const, x1.., w1..]`, excluded instruments `z1..`; rows are sorted by
/// (unit, period).
pub fn generate_linear_panel_with<R: Rng>(cfg: &DgpConfig, rng: &mut R) -> Result<(EstimationProblem, Truth)> {
    cfg.validate()?;
    let (g, t_len) = (cfg.n_units, cfg.n_periods);
    let n = g * t_len;
    let k1 = cfg.beta_endog.len();
    let kw = cfg.beta_exog.len();
    let l2 = cfg.excluded_instruments();
    let mut normal = || -> f64 { rng.sample(StandardNormal) };

    let time_effects: Vec<f64> = (0..t_len).map(|_| cfg.time_effect_sd * normal()).collect();
    let mut x = Matrix::zeros(n, 1 + k1 + kw);
    let mut z = Matrix::zeros(n, l2);
    let mut y = Vector::zeros(n);
    let mut unit = Vec::with_capacity(n);
    let mut time = Vec::with_capacity(n);
    let ar_scale = (1.0 - cfg.ar * cfg.ar).sqrt();
    let rho_c = (1.0 - cfg.rho * cfg.rho).sqrt();
    let c = cfg.invalid_instrument_corr;
    let c_c = (1.0 - c * c).sqrt();

    for i in 0..g {
        let alpha = cfg.unit_effect_sd * normal();
        let mut e_prev = 0.0;
        for t in 0..t_len {
            let r = i * t_len + t;
            let v: Vec<f64> = (0..k1).map(|_| normal()).collect();
            let innovation = cfg.rho * v[0] + rho_c * normal();
            // stationary start: the first draw has the same law as later ones
            let carry = if t == 0 { normal() } else { e_prev };
            let e = cfg.ar * carry + ar_scale * innovation;
            e_prev = e;
            let mut zs: Vec<f64> = (0..l2).map(|_| normal()).collect();
            if c != 0.0 {
                zs[l2 - 1] = c * e + c_c * zs[l2 - 1];
            }
            let w: Vec<f64> = (0..kw).map(|_| normal()).collect();
            let h = if cfg.heteroskedastic {
                let s = w.first().copied().unwrap_or(zs[0]);
                ((1.0 + s * s) / 2.0).sqrt()
            } else {
                1.0
            };
            let u = cfg.error_scale * h * e;
            let mut yv = cfg.intercept + alpha + time_effects[t] + u;
            x[(r, 0)] = 1.0;
            for k in 0..k1 {
                let xe = cfg.first_stage[k].iter().zip(&zs).map(|(p, zv)| p * zv).sum::<f64>() + v[k] + 0.5 * alpha;
                x[(r, 1 + k)] = xe;
                yv += cfg.beta_endog[k] * xe;
            }
            for (k, wv) in w.iter().enumerate() {
                x[(r, 1 + k1 + k)] = *wv;
                yv += cfg.beta_exog[k] * wv;
            }
            for (l, zv) in zs.iter().enumerate() {
                z[(r, l)] = *zv;
            }
            y[r] = yv;
            unit.push(i);
            time.push(t as i64);
        }
    }
    let truth = cfg.truth();
    let endogenous = (1..=k1).collect();
    let z_names = (1..=l2).map(|l| format!("z{l}")).collect();
    let problem = EstimationProblem::new("y", y, truth.names.clone(), x, endogenous, z_names, z, unit, time)?;
    Ok((problem, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_plims() {
        let t = standard_scenario().truth();
        assert!((t.ols_plim.unwrap() - 1.4).abs() < 1e-12);
        let t = sign_flip_scenario().truth();
        assert!((t.ols_plim.unwrap() + 0.2).abs() < 1e-12);
        assert_eq!(t.iv_plim, Some(0.8));
        let mut no_endog = sign_flip_scenario();
        no_endog.rho = 0.0;
        assert!((no_endog.truth().ols_plim.unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_panel() {
        let (a, _) = generate_linear_panel(&standard_scenario()).unwrap();
        let (b, _) = generate_linear_panel(&standard_scenario()).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.x, b.x);
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = standard_scenario();
        c.rho = 1.0;
        assert!(generate_linear_panel(&c).is_err());
    }
}

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero when any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 3 7`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use flightdelay::diagnostics::{
    cumby_huizinga, hansen_j, heteroscedasticity_tests, tail_probability, underidentification_lm,
    weak_instrument_stats, AuxiliarySet, Distribution, HetVariant, Weighting, DEFAULT_CH_LAGS,
};
use flightdelay::estimators::{
    apply_fixed_effects, bartlett_weight, cube_root_bandwidth, gmm_two_step, hac_moment_covariance, liml, ols,
    two_sls, Bandwidth, FixedEffectsImpl, FixedEffectsSpec,
};
use flightdelay::linalg::{select_cols, Matrix, Vector};
use flightdelay::panel::logit_odds;
use flightdelay::synthlab::montecarlo::{mean, rejection_rate, run_replications};
use flightdelay::synthlab::oracle::{anderson_lm_oracle, first_stage_f_oracle};
use flightdelay::synthlab::{
    generate_linear_panel_with, sign_flip_scenario, standard_scenario, DgpConfig,
};
use flightdelay::EstimationProblem;

#[path = "acceptance/golden.rs"]
mod golden;
#[path = "acceptance/pipeline.rs"]
mod pipeline;

/// Fixed master seed of every Monte Carlo criterion.
const MASTER: u64 = 20_240_611;

type Check = fn() -> Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    check: Check,
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn distribution_anchor() -> Result<String, String> {
    let p1 = tail_probability(Distribution::Chi2, 3.1132, 3.0, None).map_err(err)?;
    let p2 = tail_probability(Distribution::Chi2, 3.2199, 3.0, None).map_err(err)?;
    ensure(
        (p1 - 0.3745).abs() <= 0.0005 && (p2 - 0.3589).abs() <= 0.0005,
        format!("chi2(3) tails {p1:.6} and {p2:.6}"),
    )
}

fn odds_anchor() -> Result<String, String> {
    let p = 1.0 / (1.0 + 4.90f64.exp());
    let back = logit_odds(p).map_err(err)?;
    ensure(
        p > 0.0 && p < 1.0 && (p - 0.00740).abs() < 0.00005 && (back + 4.90).abs() <= 0.01,
        format!("inverse of -4.90 is {p:.6}, round trip {back:.6}"),
    )
}

fn endogeneity_monte_carlo() -> Result<String, String> {
    let cfg = standard_scenario();
    let reps = run_replications(MASTER, 200, |_, rng| -> Result<(f64, f64, bool), String> {
        let (p, truth) = generate_linear_panel_with(&cfg, rng).map_err(err)?;
        let o = ols(&p).map_err(err)?;
        let g = gmm_two_step(&p).map_err(err)?;
        let (b, se) = (g.coefficients[1], g.std_errors[1]);
        Ok((o.coefficients[1], b, (b - truth.beta[1]).abs() <= 1.959_963_984_540_054 * se))
    });
    let reps: Vec<_> = reps.into_iter().collect::<Result<_, _>>()?;
    let ols_mean = mean(&reps.iter().map(|r| r.0).collect::<Vec<_>>());
    let gmm_mean = mean(&reps.iter().map(|r| r.1).collect::<Vec<_>>());
    let coverage = reps.iter().filter(|r| r.2).count() as f64 / reps.len() as f64;
    ensure(
        (1.38..=1.42).contains(&ols_mean) && (0.98..=1.02).contains(&gmm_mean) && (0.92..=0.98).contains(&coverage),
        format!("n = 2000: mean OLS {ols_mean:.4}, mean 2SGMM {gmm_mean:.4}, coverage {:.1}%", 100.0 * coverage),
    )
}

fn sign_flip() -> Result<String, String> {
    let cfg = sign_flip_scenario();
    let truth = cfg.truth();
    let (ols_plim, iv_plim) = (truth.ols_plim.unwrap_or(f64::NAN), truth.iv_plim.unwrap_or(f64::NAN));
    let reps = run_replications(MASTER + 1, 200, |_, rng| -> Result<(f64, f64), String> {
        let (p, _) = generate_linear_panel_with(&cfg, rng).map_err(err)?;
        Ok((ols(&p).map_err(err)?.coefficients[1], gmm_two_step(&p).map_err(err)?.coefficients[1]))
    });
    let reps: Vec<_> = reps.into_iter().collect::<Result<_, _>>()?;
    let ols_mean = mean(&reps.iter().map(|r| r.0).collect::<Vec<_>>());
    let gmm_mean = mean(&reps.iter().map(|r| r.1).collect::<Vec<_>>());
    ensure(
        ols_mean < 0.0 && gmm_mean > 0.0 && (ols_mean - ols_plim).abs() <= 0.05 && (gmm_mean - iv_plim).abs() <= 0.05,
        format!("n = 5000: mean OLS {ols_mean:.4} (plim {ols_plim:.4}), mean 2SGMM {gmm_mean:.4} (plim {iv_plim:.4})"),
    )
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn identity_instance(i: u64) -> DgpConfig {
    let k1 = 1 + (i % 2) as usize;
    let first_stage = (0..k1)
        .map(|r| (0..k1).map(|c| if r == c { 1.0 } else { 0.3 }).collect())
        .collect();
    DgpConfig {
        n_units: 10,
        n_periods: 30,
        beta_endog: (0..k1).map(|k| 1.0 - 0.5 * k as f64).collect(),
        beta_exog: if i % 3 == 0 { vec![] } else { vec![0.7] },
        first_stage,
        rho: 0.6,
        ar: if i % 4 == 0 { 0.3 } else { 0.0 },
        heteroskedastic: i % 5 == 0,
        ..standard_scenario()
    }
}

fn estimator_identities() -> Result<String, String> {
    let (mut iv_gap, mut ols_gap, mut j_max) = (0.0f64, 0.0f64, 0.0f64);
    let outcomes = run_replications(MASTER + 2, 20, |i, rng| -> Result<(f64, f64, f64), String> {
        let (p, _) = generate_linear_panel_with(&identity_instance(i), rng).map_err(err)?;
        let b = two_sls(&p).map_err(err)?;
        let b: Vec<f64> = b.iter().copied().collect();
        let g = gmm_two_step(&p).map_err(err)?;
        let l = liml(&p).map_err(err)?;
        let iv = max_abs_diff(&g.coefficients, &b).max(max_abs_diff(&l.coefficients, &b));
        let j = hansen_j(&g, &p).map_err(err)?.statistic.abs();
        let q = EstimationProblem::exogenous(p.y.clone(), p.x_names.clone(), p.x.clone(), p.unit.clone(), p.time.clone())
            .map_err(err)?;
        let o = ols(&q).map_err(err)?;
        let og = gmm_two_step(&q).map_err(err)?;
        let ol = liml(&q).map_err(err)?;
        let ols_d = max_abs_diff(&og.coefficients, &o.coefficients).max(max_abs_diff(&ol.coefficients, &o.coefficients));
        Ok((iv, ols_d, j))
    });
    for o in outcomes {
        let (a, b, c) = o?;
        iv_gap = iv_gap.max(a);
        ols_gap = ols_gap.max(b);
        j_max = j_max.max(c);
    }
    ensure(
        iv_gap <= 1e-8 && ols_gap <= 1e-10 && j_max <= 1e-8,
        format!("20 instances: max |2SGMM, LIML - 2SLS| {iv_gap:.2e}, max |Z = X - OLS| {ols_gap:.2e}, max J {j_max:.2e}"),
    )
}

fn hac_correctness() -> Result<String, String> {
    let cfg = DgpConfig { n_units: 6, n_periods: 50, beta_exog: vec![0.5], heteroskedastic: true, ..standard_scenario() };
    let mut rng = flightdelay::synthlab::montecarlo::replication_rng(MASTER + 3, 0);
    let (p, _) = generate_linear_panel_with(&cfg, &mut rng).map_err(err)?;
    let p = p.with_bandwidth(Bandwidth::Fixed(0));
    let o = ols(&p).map_err(err)?;
    let u = &o.residuals;
    let n = p.n();

    // moment covariance against an explicit loop
    let s = hac_moment_covariance(&p.z, u, &p.unit, &p.time, 0).map_err(err)?;
    let l = p.z.ncols();
    let mut white = Matrix::zeros(l, l);
    for t in 0..n {
        for a in 0..l {
            for b in 0..l {
                white[(a, b)] += p.z[(t, a)] * p.z[(t, b)] * u[t] * u[t];
            }
        }
    }
    white /= n as f64;
    let moment_gap = (&s - &white).amax() / white.amax();

    // OLS sandwich against the textbook White covariance
    let x = &p.x;
    let k = x.ncols();
    let bread = (x.transpose() * x).try_inverse().ok_or("singular X'X")?;
    let mut meat = Matrix::zeros(k, k);
    for t in 0..n {
        let row = x.row(t);
        meat += row.transpose() * row * (u[t] * u[t]);
    }
    let white_cov = &bread * meat * &bread * o.dof_factor;
    let cov_gap = (&o.covariance - &white_cov).amax() / white_cov.amax();

    let weights: Vec<f64> = (0..=6).map(|j| bartlett_weight(j, 5)).collect();
    let expected = [1.0, 5.0 / 6.0, 4.0 / 6.0, 3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0, 0.0];
    let rule = cube_root_bandwidth(144);
    ensure(
        moment_gap <= 1e-10 && cov_gap <= 1e-10 && weights == expected && rule == 5,
        format!("relative gap to White: moments {moment_gap:.2e}, OLS covariance {cov_gap:.2e}; weights {weights:?}; L(144) = {rule}"),
    )
}

struct Rates {
    lines: Vec<String>,
    ok: bool,
}

impl Rates {
    fn record(&mut self, label: &str, rate: f64, lo: f64, hi: f64) {
        let ok = rate >= lo && rate <= hi;
        self.ok &= ok;
        self.lines.push(format!("{label} {:.1}%{}", 100.0 * rate, if ok { "" } else { " (out of range)" }));
    }
}

fn p_values<F>(seed: u64, reps: usize, f: F) -> Result<Vec<f64>, String>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64, String> + Sync,
{
    run_replications(seed, reps, |_, rng| f(rng)).into_iter().collect()
}

fn p_of(t: flightdelay::diagnostics::TestResult) -> Result<f64, String> {
    t.p_value.ok_or_else(|| format!("{} has no p-value", t.name))
}

fn test_calibration() -> Result<String, String> {
    let mut r = Rates { lines: vec![], ok: true };
    let overid = DgpConfig { first_stage: vec![vec![0.5, 0.5, 0.5]], rho: 0.5, ..standard_scenario() };

    let j = |cfg: DgpConfig, seed, reps| {
        p_values(seed, reps, move |rng| {
            let (p, _) = generate_linear_panel_with(&cfg, rng).map_err(err)?;
            let g = gmm_two_step(&p).map_err(err)?;
            p_of(hansen_j(&g, &p).map_err(err)?)
        })
    };
    r.record("J size", rejection_rate(&j(overid.clone(), MASTER + 10, 1000)?, 0.05), 0.03, 0.08);
    let invalid = DgpConfig { invalid_instrument_corr: 0.3, ..overid.clone() };
    r.record("power", rejection_rate(&j(invalid, MASTER + 11, 200)?, 0.05), 0.80, 1.0);

    let kp = |cfg: DgpConfig, seed, reps| {
        p_values(seed, reps, move |rng| {
            let (p, _) = generate_linear_panel_with(&cfg, rng).map_err(err)?;
            p_of(underidentification_lm(&p, Weighting::Robust).map_err(err)?)
        })
    };
    let irrelevant = DgpConfig { first_stage: vec![vec![0.0, 0.0, 0.0]], ..overid.clone() };
    r.record("; KP LM size", rejection_rate(&kp(irrelevant, MASTER + 12, 500)?, 0.05), 0.03, 0.08);
    r.record("power", rejection_rate(&kp(overid.clone(), MASTER + 13, 200)?, 0.05), 0.80, 1.0);

    let ch = |cfg: DgpConfig, seed, reps| {
        p_values(seed, reps, move |rng| {
            let (p, _) = generate_linear_panel_with(&cfg, rng).map_err(err)?;
            let o = ols(&p).map_err(err)?;
            let inf = o.influence.as_ref().map(|i| (&p.x, i));
            p_of(cumby_huizinga(&o.residuals, &p.unit, &p.time, &DEFAULT_CH_LAGS, inf).map_err(err)?)
        })
    };
    let iid = DgpConfig { rho: 0.0, beta_exog: vec![1.0], ..standard_scenario() };
    r.record("; CH size", rejection_rate(&ch(iid.clone(), MASTER + 14, 500)?, 0.05), 0.03, 0.08);
    let ar = DgpConfig { ar: 0.5, ..iid.clone() };
    r.record("power", rejection_rate(&ch(ar, MASTER + 15, 200)?, 0.05), 0.80, 1.0);

    let endog = DgpConfig { rho: 0.5, beta_exog: vec![1.0], ..standard_scenario() };
    for (variant, cfg) in [
        (HetVariant::WhiteKoenker, iid.clone()),
        (HetVariant::BreuschPagan, iid.clone()),
        (HetVariant::PaganHall, endog.clone()),
    ] {
        let het = |cfg: DgpConfig, aux, seed, reps| {
            p_values(seed, reps, move |rng| {
                let (p, _) = generate_linear_panel_with(&cfg, rng).map_err(err)?;
                let res = if variant == HetVariant::PaganHall { gmm_two_step(&p) } else { ols(&p) }.map_err(err)?;
                p_of(heteroscedasticity_tests(&res, &p, variant, aux).map_err(err)?)
            })
        };
        let tag = match variant {
            HetVariant::WhiteKoenker => "WK",
            HetVariant::BreuschPagan => "BP",
            HetVariant::PaganHall => "PH",
        };
        for aux in [AuxiliarySet::Levels, AuxiliarySet::LevelsSquaresCross] {
            let label = format!("; {tag} size ({})", if aux == AuxiliarySet::Levels { "levels" } else { "squares" });
            r.record(&label, rejection_rate(&het(cfg.clone(), aux, MASTER + 16, 500)?, 0.05), 0.03, 0.08);
        }
        let alt = DgpConfig { heteroskedastic: true, ..cfg };
        r.record("power", rejection_rate(&het(alt, AuxiliarySet::LevelsSquaresCross, MASTER + 17, 200)?, 0.05), 0.80, 1.0);
    }
    ensure(r.ok, r.lines.join(" ").replace(" ; ", "; "))
}

fn reduction_identities() -> Result<String, String> {
    let mut rng = flightdelay::synthlab::montecarlo::replication_rng(MASTER + 20, 0);
    let (p, _) = generate_linear_panel_with(&standard_scenario(), &mut rng).map_err(err)?;
    let x1: Vector = p.x.column(1).into_owned();
    let exog = select_cols(&p.x, &[0]);
    let excluded = select_cols(&p.z, &[1]);
    let lm = underidentification_lm(&p, Weighting::Homoskedastic).map_err(err)?.statistic;
    let anderson = anderson_lm_oracle(&x1, &excluded, &exog).map_err(err)?;
    let lm_gap = (lm - anderson).abs() / anderson;

    let weak = DgpConfig { n_units: 10, n_periods: 100, first_stage: vec![vec![0.1f64.sqrt()]], rho: 0.5, ..standard_scenario() };
    let (q, _) = generate_linear_panel_with(&weak, &mut rng).map_err(err)?;
    let cd = weak_instrument_stats(&q).map_err(err)?.0.statistic;
    let f = first_stage_f_oracle(&q.x.column(1).into_owned(), &select_cols(&q.z, &[1]), &select_cols(&q.x, &[0]))
        .map_err(err)?;
    let cd_gap = (cd - f).abs() / f;

    let cds = |cfg: DgpConfig, seed| -> Result<f64, String> {
        let v: Vec<f64> = run_replications(seed, 500, |_, rng| -> Result<f64, String> {
            let (p, _) = generate_linear_panel_with(&cfg, rng).map_err(err)?;
            Ok(weak_instrument_stats(&p).map_err(err)?.0.statistic)
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
        Ok(mean(&v))
    };
    let strong_mean = cds(weak.clone(), MASTER + 21)?;
    let null_mean = cds(DgpConfig { first_stage: vec![vec![0.0]], ..weak }, MASTER + 22)?;
    ensure(
        lm_gap <= 0.05 && cd_gap <= 1e-10 && (strong_mean / 101.0 - 1.0).abs() <= 0.10 && (0.7..=1.4).contains(&null_mean),
        format!(
            "homoskedastic LM vs Anderson rel. gap {lm_gap:.2e}; CD vs first-stage F rel. gap {cd_gap:.2e}; \
             mean CD {strong_mean:.2} (target 101), irrelevant {null_mean:.3}"
        ),
    )
}

fn fe_invariance() -> Result<String, String> {
    let cfg = DgpConfig {
        n_units: 50,
        n_periods: 8,
        beta_exog: vec![0.7],
        first_stage: vec![vec![1.0, 0.4]],
        unit_effect_sd: 1.0,
        time_effect_sd: 0.5,
        ..standard_scenario()
    };
    let mut rng = flightdelay::synthlab::montecarlo::replication_rng(MASTER + 30, 0);
    let (p, _) = generate_linear_panel_with(&cfg, &mut rng).map_err(err)?;
    let p = p.with_fixed_effects(FixedEffectsSpec::TWO_WAY);
    let mut shifted = p.clone();
    for (r, u) in p.unit.iter().enumerate() {
        shifted.y[r] += 10.0 * (*u as f64) - 3.0;
    }
    let slopes = ["x1", "w1"];
    let pick = |r: &flightdelay::EstimationResult| -> Vec<f64> {
        slopes.iter().map(|s| r.coefficient(s).unwrap_or(f64::NAN)).collect()
    };
    let within = apply_fixed_effects(&p).map_err(err)?;
    let within_shifted = apply_fixed_effects(&shifted).map_err(err)?;
    let lsdv = apply_fixed_effects(&p.clone().with_fixed_effects(FixedEffectsSpec::TWO_WAY.with_implementation(FixedEffectsImpl::FullDummies)))
        .map_err(err)?;

    let mut shift_gap = 0.0f64;
    for (a, b) in [
        (ols(&within).map_err(err)?, ols(&within_shifted).map_err(err)?),
        (gmm_two_step(&within).map_err(err)?, gmm_two_step(&within_shifted).map_err(err)?),
        (liml(&within).map_err(err)?, liml(&within_shifted).map_err(err)?),
    ] {
        shift_gap = shift_gap.max(max_abs_diff(&pick(&a), &pick(&b)));
    }

    let named = |prob: &EstimationProblem, b: Vector| -> Vec<f64> {
        slopes.iter().map(|s| prob.x_names.iter().position(|n| n == s).map_or(f64::NAN, |j| b[j])).collect()
    };
    let ols_gap = max_abs_diff(&pick(&ols(&within).map_err(err)?), &pick(&ols(&lsdv).map_err(err)?));
    let tsls_gap = max_abs_diff(
        &named(&within, two_sls(&within).map_err(err)?),
        &named(&lsdv, two_sls(&lsdv).map_err(err)?),
    );
    let liml_gap = max_abs_diff(&pick(&liml(&within).map_err(err)?), &pick(&liml(&lsdv).map_err(err)?));
    let gmm_gap = max_abs_diff(&pick(&gmm_two_step(&within).map_err(err)?), &pick(&gmm_two_step(&lsdv).map_err(err)?));
    let mode_gap = ols_gap.max(tsls_gap).max(liml_gap).max(gmm_gap);
    ensure(
        shift_gap <= 1e-8 && mode_gap <= 1e-8,
        format!(
            "unit shifts move slopes by {shift_gap:.2e}; within vs LSDV: OLS {ols_gap:.2e}, 2SLS {tsls_gap:.2e}, \
             LIML {liml_gap:.2e}, 2SGMM {gmm_gap:.2e}"
        ),
    )
}

fn criteria() -> Vec<Criterion> {
    let s = Duration::from_secs;
    vec![
        Criterion { id: 1, title: "distribution anchor", budget: s(1), check: distribution_anchor },
        Criterion { id: 2, title: "odds anchor", budget: s(1), check: odds_anchor },
        Criterion { id: 3, title: "endogeneity Monte Carlo", budget: s(120), check: endogeneity_monte_carlo },
        Criterion { id: 4, title: "sign-flip reproduction", budget: s(180), check: sign_flip },
        Criterion { id: 5, title: "estimator identities", budget: s(10), check: estimator_identities },
        Criterion { id: 6, title: "HAC correctness", budget: s(1), check: hac_correctness },
        Criterion { id: 7, title: "test calibration", budget: s(600), check: test_calibration },
        Criterion { id: 8, title: "reduction identities", budget: s(120), check: reduction_identities },
        Criterion { id: 9, title: "pipeline golden fixture", budget: s(1), check: golden::check },
        Criterion { id: 10, title: "fixed-effects invariance", budget: s(5), check: fe_invariance },
        Criterion { id: 11, title: "end-to-end determinism", budget: s(60), check: pipeline::determinism },
    ]
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria() {
        if !selected.is_empty() && !selected.contains(&c.id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (pass, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let timing = format!("{:.2} s of {} s{}", elapsed.as_secs_f64(), c.budget.as_secs(), if in_time { "" } else { ", over budget" });
        println!("{} criterion {:>2} {}: {detail} [{timing}]", if pass { "PASS" } else { "FAIL" }, c.id, c.title);
        if !pass {
            failed += 1;
        }
    }
    println!("{} of {ran} acceptance criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use proptest::prelude::*;

use flightdelay::estimators::{apply_fixed_effects, estimate, hac_moment_covariance, two_sls, Bandwidth};
use flightdelay::linalg::{asymmetry, min_eigenvalue, select_rows, Matrix, Vector};
use flightdelay::synthlab::{generate_linear_panel, omitted_proxy_scenario, standard_scenario, DgpConfig};
use flightdelay::{EstimationProblem, EstimationResult, Estimator, FixedEffectsImpl, FixedEffectsSpec};

const ALL: [Estimator; 3] = [Estimator::Ols, Estimator::Gmm2s, Estimator::Liml];

fn small(seed: u64, first_stage: Vec<f64>, ar: f64) -> DgpConfig {
    DgpConfig {
        n_units: 8,
        n_periods: 25,
        first_stage: vec![first_stage],
        beta_exog: vec![0.3],
        ar,
        heteroskedastic: true,
        unit_effect_sd: 1.0,
        time_effect_sd: 0.5,
        seed,
        ..standard_scenario()
    }
}

fn fit(p: &EstimationProblem, e: Estimator) -> EstimationResult {
    estimate(p, e).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Reorders whole unit blocks and relabels units so rows stay sorted.
fn permute_units(p: &EstimationProblem, order: &[usize]) -> EstimationProblem {
    let mut rows = Vec::new();
    let mut unit = Vec::new();
    for (new_id, &u) in order.iter().enumerate() {
        for i in (0..p.n()).filter(|&i| p.unit[i] == u) {
            rows.push(i);
            unit.push(new_id);
        }
    }
    let mut q = p.clone();
    q.y = Vector::from_iterator(rows.len(), rows.iter().map(|&i| p.y[i]));
    q.x = select_rows(&p.x, &rows);
    q.z = select_rows(&p.z, &rows);
    q.time = rows.iter().map(|&i| p.time[i]).collect();
    q.unit = unit;
    q
}

fn shuffled(n: usize, mut s: u64) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        v.swap(i, ((s >> 33) % (i as u64 + 1)) as usize);
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exactly_identified_estimators_agree(seed in any::<u64>(), pi in 0.6f64..2.0) {
        let (p, _) = generate_linear_panel(&small(seed, vec![pi], 0.3)).unwrap();
        let p = p.with_fixed_effects(FixedEffectsSpec::TWO_WAY);
        let tsls = two_sls(&apply_fixed_effects(&p).unwrap()).unwrap();
        for e in [Estimator::Gmm2s, Estimator::Liml] {
            let r = fit(&p, e);
            prop_assert_eq!(r.overid_df, 0);
            for (a, b) in r.coefficients.iter().zip(tsls.iter()) {
                prop_assert!(close(*a, *b, 1e-8), "{e}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn unit_shift_leaves_slopes(seed in any::<u64>(), shifts in prop::collection::vec(-50.0f64..50.0, 8)) {
        let (p, _) = generate_linear_panel(&small(seed, vec![1.0, 0.4], 0.0)).unwrap();
        let p = p.with_fixed_effects(FixedEffectsSpec::TWO_WAY);
        let mut q = p.clone();
        for i in 0..q.n() {
            q.y[i] += shifts[q.unit[i]];
        }
        for e in ALL {
            let (a, b) = (fit(&p, e), fit(&q, e));
            for (name, ca) in a.names.iter().zip(&a.coefficients) {
                let cb = b.coefficient(name).unwrap();
                prop_assert!(close(*ca, cb, 1e-8), "{e} {name}: {ca} vs {cb}");
            }
        }
    }

    #[test]
    fn results_ignore_unit_block_order(seed in any::<u64>(), perm in any::<u64>(), lags in 0usize..4) {
        let (p, _) = generate_linear_panel(&small(seed, vec![1.0, 0.4], 0.5)).unwrap();
        let p = p.with_fixed_effects(FixedEffectsSpec::TWO_WAY).with_bandwidth(Bandwidth::Fixed(lags));
        let q = permute_units(&p, &shuffled(8, perm));
        for e in ALL {
            let (a, b) = (fit(&p, e), fit(&q, e));
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!(close(*x, *y, 1e-9));
            }
            for (x, y) in a.covariance.iter().zip(b.covariance.iter()) {
                prop_assert!(close(*x, *y, 1e-9));
            }
        }
    }

    #[test]
    fn hac_moment_covariance_ignores_block_order(seed in any::<u64>(), perm in any::<u64>(), lags in 0usize..6) {
        let (p, _) = generate_linear_panel(&small(seed, vec![1.0], 0.5)).unwrap();
        let u = p.y.clone();
        let s = hac_moment_covariance(&p.z, &u, &p.unit, &p.time, lags).unwrap();
        let q = permute_units(&p, &shuffled(8, perm));
        let s2 = hac_moment_covariance(&q.z, &q.y, &q.unit, &q.time, lags).unwrap();
        for (a, b) in s.iter().zip(s2.iter()) {
            prop_assert!(close(*a, *b, 1e-10));
        }
        prop_assert!(asymmetry(&s) <= 1e-12);
    }

    #[test]
    fn rescaling_a_regressor_rescales_its_coefficient(seed in any::<u64>(), a in prop_oneof![0.01f64..0.5, 2.0f64..100.0]) {
        let (p, _) = generate_linear_panel(&small(seed, vec![1.0, 0.4], 0.2)).unwrap();
        let p = p.with_fixed_effects(FixedEffectsSpec::TWO_WAY);
        let j = p.x_names.iter().position(|n| n == "x1").unwrap();
        let mut q = p.clone();
        q.x.column_mut(j).scale_mut(a);
        for e in ALL {
            let (r, s) = (fit(&p, e), fit(&q, e));
            let (c0, c1) = (r.coefficient("x1").unwrap(), s.coefficient("x1").unwrap());
            let (s0, s1) = (r.std_error("x1").unwrap(), s.std_error("x1").unwrap());
            prop_assert!(close(c1 * a, c0, 1e-8), "{e}: {c0} vs {c1}");
            prop_assert!(close(s1 * a, s0, 1e-8), "{e}: {s0} vs {s1}");
            let i = r.names.iter().position(|n| n == "x1").unwrap();
            prop_assert!(close(r.t_stats[i], s.t_stats[i], 1e-8));
        }
    }

    #[test]
    fn covariance_is_symmetric_psd(seed in any::<u64>(), dummies in any::<bool>(), lags in 0usize..5) {
        let (p, _) = generate_linear_panel(&small(seed, vec![1.0, 0.5, 0.2], 0.4)).unwrap();
        let imp = if dummies { FixedEffectsImpl::FullDummies } else { FixedEffectsImpl::WithinPlusTimeDummies };
        let p = p
            .with_fixed_effects(FixedEffectsSpec::TWO_WAY.with_implementation(imp))
            .with_bandwidth(Bandwidth::Fixed(lags));
        for e in ALL {
            let r = fit(&p, e);
            let slopes: Vec<usize> = (0..r.names.len())
                .filter(|&i| !r.names[i].starts_with("time[") && !r.names[i].starts_with("unit["))
                .collect();
            let v = Matrix::from_fn(slopes.len(), slopes.len(), |a, b| r.covariance[(slopes[a], slopes[b])]);
            prop_assert_eq!(asymmetry(&r.covariance), 0.0);
            prop_assert!(min_eigenvalue(&v) >= -1e-10);
            prop_assert!(r.std_errors.iter().all(|s| s.is_finite() && *s >= 0.0));
        }
    }
}

#[test]
fn within_and_dummy_fixed_effects_agree() {
    let (p, _) = generate_linear_panel(&small(9, vec![1.0, 0.4], 0.3)).unwrap();
    for e in ALL {
        let within = fit(&p.clone().with_fixed_effects(FixedEffectsSpec::TWO_WAY), e);
        let lsdv = fit(
            &p.clone().with_fixed_effects(FixedEffectsSpec::TWO_WAY.with_implementation(FixedEffectsImpl::FullDummies)),
            e,
        );
        for name in ["x1", "w1"] {
            let (a, b) = (within.coefficient(name).unwrap(), lsdv.coefficient(name).unwrap());
            assert!(close(a, b, 1e-8), "{e} {name}: {a} vs {b}");
            let (a, b) = (within.std_error(name).unwrap(), lsdv.std_error(name).unwrap());
            assert!(close(a, b, 1e-8), "{e} {name} se: {a} vs {b}");
        }
    }
}

#[test]
fn dropping_a_correlated_proxy_flips_the_sign() {
    let cfg = omitted_proxy_scenario();
    let (p, truth) = generate_linear_panel(&cfg).unwrap();
    let full = estimate(&p, Estimator::Gmm2s).unwrap();
    let x1 = full.coefficient("x1").unwrap();
    assert!((x1 - truth.beta[1]).abs() < 0.1, "{x1}");

    let keep: Vec<usize> = (0..p.k()).filter(|&j| p.x_names[j] != "x2").collect();
    let excluded: Vec<usize> = (0..p.l()).filter(|&j| p.z_names[j].starts_with('z')).collect();
    let reduced = EstimationProblem::new(
        "y",
        p.y.clone(),
        keep.iter().map(|&j| p.x_names[j].clone()).collect(),
        flightdelay::linalg::select_cols(&p.x, &keep),
        vec![1],
        excluded.iter().map(|&j| p.z_names[j].clone()).collect(),
        flightdelay::linalg::select_cols(&p.z, &excluded),
        p.unit.clone(),
        p.time.clone(),
    )
    .unwrap();
    let r = estimate(&reduced, Estimator::Gmm2s).unwrap();
    let b = r.coefficient("x1").unwrap();
    assert!((b + 0.4).abs() < 0.1, "{b}");
}

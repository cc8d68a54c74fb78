//! Hand-computed two-pair, two-month fixture. Expected values were derived
//! by hand from the CSVs in `tests/fixtures/golden` and cross-checked with an
//! independent script working in exact fractions.

use std::path::PathBuf;

use flightdelay_cli::config::{InputFiles, RunConfig};
use flightdelay_cli::pipeline::{defined_rows, prepare, read_inputs};
use flightdelay_cli::Regressand;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

/// (pair, month, column, value); `None` marks an undefined log-odds.
type Row = (&'static str, &'static str, [(&'static str, Option<f64>); 18]);

fn expected() -> Vec<Row> {
    let ln = f64::ln;
    vec![
        (
            "SAO-BSB",
            "2012-01",
            [
                ("odds", Some(ln(2.0))),
                ("mins", Some(20.0)),
                ("mins_gt_threshold", Some(25.0)),
                ("odds_dep", Some(ln(0.5))),
                ("mins_dep", Some(10.0)),
                ("mins_dep_gt_threshold", Some(20.0)),
                ("n_congested", Some(1.0 / 31.0)),
                ("n_uncongested", Some(2.0 / 31.0)),
                ("prop_weather", Some(1.0 / 3.0)),
                ("prop_incident", Some(0.0)),
                ("prop_connection", Some(1.0 / 3.0)),
                ("max_city_delay_prop", Some(0.6)),
                ("hhi_pair", Some(0.625)),
                ("hhi_max_city", Some(5.0 / 9.0)),
                ("lcc_pair", Some(1.0)),
                ("lcc_max_city", Some(1.0)),
                ("codeshare", Some(0.0)),
                ("n_flights_total", Some(3.0)),
            ],
        ),
        (
            "SAO-BSB",
            "2012-02",
            [
                ("odds", Some(ln(0.5))),
                ("mins", Some(10.0)),
                ("mins_gt_threshold", Some(35.0)),
                ("odds_dep", Some(ln(0.5))),
                ("mins_dep", Some(25.0 / 3.0)),
                ("mins_dep_gt_threshold", Some(25.0)),
                ("n_congested", Some(3.0 / 29.0)),
                ("n_uncongested", Some(1.0 / 29.0)),
                ("prop_weather", Some(0.0)),
                ("prop_incident", Some(1.0 / 3.0)),
                ("prop_connection", Some(0.0)),
                ("max_city_delay_prop", Some(3.0 / 8.0)),
                ("hhi_pair", Some(34.0 / 64.0)),
                ("hhi_max_city", Some(354_400.0 / 846_400.0)),
                ("lcc_pair", Some(0.0)),
                ("lcc_max_city", Some(1.0)),
                ("codeshare", Some(1.0)),
                ("n_flights_total", Some(3.0)),
            ],
        ),
        (
            "SAO-RIO",
            "2012-01",
            [
                ("odds", Some(ln(2.0 / 3.0))),
                ("mins", Some(12.0)),
                ("mins_gt_threshold", Some(27.5)),
                ("odds_dep", Some(ln(2.0 / 3.0))),
                ("mins_dep", Some(10.0)),
                ("mins_dep_gt_threshold", Some(25.0)),
                ("n_congested", Some(3.0 / 31.0)),
                ("n_uncongested", Some(3.0 / 31.0)),
                ("prop_weather", Some(0.2)),
                ("prop_incident", Some(0.2)),
                ("prop_connection", Some(0.0)),
                ("max_city_delay_prop", Some(0.5)),
                ("hhi_pair", Some(0.52)),
                ("hhi_max_city", Some(0.5)),
                ("lcc_pair", Some(0.0)),
                ("lcc_max_city", Some(1.0)),
                ("codeshare", Some(0.0)),
                ("n_flights_total", Some(5.0)),
            ],
        ),
        (
            "SAO-RIO",
            "2012-02",
            [
                ("odds", None),
                ("mins", Some(32.5)),
                ("mins_gt_threshold", Some(32.5)),
                ("odds_dep", None),
                ("mins_dep", Some(25.0)),
                ("mins_dep_gt_threshold", Some(25.0)),
                ("n_congested", Some(1.0 / 29.0)),
                ("n_uncongested", Some(1.0 / 29.0)),
                ("prop_weather", Some(0.5)),
                ("prop_incident", Some(0.0)),
                ("prop_connection", Some(0.0)),
                ("max_city_delay_prop", Some(2.0 / 3.0)),
                ("hhi_pair", Some(0.36)),
                ("hhi_max_city", Some(1_776_900.0 / 4_708_900.0)),
                ("lcc_pair", Some(1.0)),
                ("lcc_max_city", Some(1.0)),
                ("codeshare", Some(0.0)),
                ("n_flights_total", Some(2.0)),
            ],
        ),
    ]
}

pub fn check() -> Result<String, String> {
    let files = InputFiles::in_dir(fixture_dir());
    let inputs = read_inputs(&files).map_err(|e| format!("{e:#}"))?;
    let cfg = RunConfig { inputs: Some(files), ..RunConfig::default() };
    let prepared = prepare(&inputs, &cfg).map_err(|e| format!("{e:#}"))?;
    let obs = &prepared.panel.observations;
    let want = expected();
    if obs.len() != want.len() {
        return Err(format!("panel has {} cells, expected {}", obs.len(), want.len()));
    }
    let mut compared = 0;
    for (o, (pair, month, cols)) in obs.iter().zip(&want) {
        if o.pair_id.to_string() != *pair || o.month.to_string() != *month {
            return Err(format!("cell {} {} where {pair} {month} was expected", o.pair_id, o.month));
        }
        for (col, v) in cols {
            let got = o.value(col).map_err(|e| e.to_string())?;
            let ok = match (got, v) {
                (None, None) => true,
                (Some(g), Some(w)) => (g - w).abs() <= 1e-12,
                _ => false,
            };
            if !ok {
                return Err(format!("{pair} {month} {col}: got {got:?}, expected {v:?}"));
            }
            compared += 1;
        }
    }
    let n_odds = defined_rows(&prepared, Regressand::Odds).map_err(|e| format!("{e:#}"))?.len();
    let n_mins = defined_rows(&prepared, Regressand::Mins).map_err(|e| format!("{e:#}"))?.len();
    if (n_odds, n_mins) != (3, 4) {
        return Err(format!("ODDS/MINS observation counts {n_odds}/{n_mins}, expected 3/4"));
    }
    Ok(format!("{compared} panel values within 1e-12; ODDS uses {n_odds} cells, MINS {n_mins}"))
}

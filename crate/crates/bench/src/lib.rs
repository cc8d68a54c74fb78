//! Fixtures shared by the benchmarks in `benches/`.

use flightdelay::estimators::Bandwidth;
use flightdelay::synthlab::{generate_linear_panel, generate_market, standard_scenario, DgpConfig, MarketData, MarketScenario};
use flightdelay::{EstimationProblem, FixedEffectsSpec};

/// Demo market for panel and instrument benchmarks.
pub fn market(seed: u64) -> MarketData {
    generate_market(&MarketScenario::demo(seed)).expect("demo scenario is valid")
}

/// Overidentified linear panel with two-way effects and AR(1) errors,
/// `units * periods` rows.
pub fn linear_problem(units: usize, periods: usize) -> EstimationProblem {
    let cfg = DgpConfig {
        n_units: units,
        n_periods: periods,
        first_stage: vec![vec![0.8, 0.5, 0.3]],
        beta_exog: vec![0.4],
        ar: 0.4,
        heteroskedastic: true,
        unit_effect_sd: 1.0,
        time_effect_sd: 0.5,
        seed: 17,
        ..standard_scenario()
    };
    let (p, _) = generate_linear_panel(&cfg).expect("benchmark scenario is valid");
    p.with_fixed_effects(FixedEffectsSpec::TWO_WAY).with_bandwidth(Bandwidth::CubeRoot)
}

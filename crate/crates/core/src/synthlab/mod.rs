//! Synthetic data with known parameters, reference oracles and a seeded
//! Monte Carlo harness.

mod dgp;
mod market;
pub mod montecarlo;
pub mod oracle;

pub use dgp::{
    generate_linear_panel, generate_linear_panel_with, omitted_proxy_scenario, sign_flip_scenario, standard_scenario,
    DgpConfig, Truth,
};
pub use market::{
    generate_market, CarrierSpec, CitySpec, MarketData, MarketScenario, RouteSpec, Service, MARKET_FILES,
};
pub use montecarlo::{compensated_sum, rejection_rate, replication_rng, run_replications};
pub use oracle::{anderson_lm_oracle, first_stage_f_oracle, oracle_ols};

use proptest::prelude::*;

use flightdelay::ingest::{
    parse_airports, parse_capacities, parse_cities, parse_codeshare, parse_flights, parse_traffic, write_airports,
    write_capacities, write_cities, write_codeshare, write_flights, write_traffic,
};
use flightdelay::panel::{build_panel, pearson, PanelConfig, PanelInputs};
use flightdelay::synthlab::{generate_linear_panel, generate_market, standard_scenario, DgpConfig, MarketData, MarketScenario};

fn files(m: &MarketData) -> [Vec<u8>; 6] {
    let mut out: [Vec<u8>; 6] = Default::default();
    write_flights(&m.flights, &mut out[0]).unwrap();
    write_traffic(&m.traffic, &mut out[1]).unwrap();
    write_cities(&m.cities, &mut out[2]).unwrap();
    write_airports(&m.cities, &mut out[3]).unwrap();
    write_capacities(&m.capacities, &mut out[4]).unwrap();
    write_codeshare(&m.codeshare, &mut out[5]).unwrap();
    out
}

fn panel_of(m: &MarketData) -> flightdelay::Panel {
    build_panel(
        &PanelInputs { flights: &m.flights, traffic: &m.traffic, capacities: &m.capacities, codeshare: &m.codeshare },
        &PanelConfig::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn market_is_reproducible_and_parses_cleanly(seed in any::<u64>()) {
        let a = generate_market(&MarketScenario::demo(seed)).unwrap();
        let b = generate_market(&MarketScenario::demo(seed)).unwrap();
        let (fa, fb) = (files(&a), files(&b));
        prop_assert_eq!(&fa, &fb);
        prop_assert_eq!(panel_of(&a), panel_of(&b));

        let mut cities = parse_cities(fa[2].as_slice()).unwrap();
        parse_airports(fa[3].as_slice(), &mut cities).unwrap();
        prop_assert_eq!(&cities, &a.cities);
        let flights = parse_flights(fa[0].as_slice(), &cities).unwrap();
        prop_assert!(flights.rejects.is_empty(), "{:?}", &flights.rejects[..flights.rejects.len().min(3)]);
        prop_assert_eq!(flights.records.len(), a.flights.len());
        prop_assert_eq!(&flights.records, &a.flights);
        prop_assert_eq!(parse_traffic(fa[1].as_slice()).unwrap(), a.traffic.clone());
        prop_assert_eq!(parse_capacities(fa[4].as_slice()).unwrap(), a.capacities.clone());
        prop_assert_eq!(parse_codeshare(fa[5].as_slice()).unwrap(), a.codeshare.clone());
    }

    #[test]
    fn linear_panel_is_reproducible(seed in any::<u64>()) {
        let cfg = DgpConfig { seed, n_units: 6, n_periods: 12, ..standard_scenario() };
        let (a, ta) = generate_linear_panel(&cfg).unwrap();
        let (b, tb) = generate_linear_panel(&cfg).unwrap();
        prop_assert_eq!(a.y, b.y);
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(a.z, b.z);
        prop_assert_eq!(ta, tb);
    }
}

#[test]
fn different_seeds_give_different_markets() {
    let a = generate_market(&MarketScenario::demo(1)).unwrap();
    let b = generate_market(&MarketScenario::demo(2)).unwrap();
    assert_ne!(files(&a)[0], files(&b)[0]);
}

#[test]
fn structural_and_first_stage_errors_have_the_configured_correlation() {
    for (seed, rho) in [(11, 0.8), (12, -0.5), (13, 0.0)] {
        let cfg = DgpConfig { n_units: 100, n_periods: 1000, rho, seed, ..standard_scenario() };
        let (p, truth) = generate_linear_panel(&cfg).unwrap();
        let xj = p.x_names.iter().position(|n| n == "x1").unwrap();
        let zj = p.z_names.iter().position(|n| n == "z1").unwrap();
        let pi = truth.first_stage[0][0];
        let v: Vec<f64> = (0..p.n()).map(|i| p.x[(i, xj)] - pi * p.z[(i, zj)]).collect();
        let u: Vec<f64> = (0..p.n()).map(|i| p.y[i] - cfg.intercept - truth.beta[1] * p.x[(i, xj)]).collect();
        let r = pearson(&v, &u);
        assert!((r - rho).abs() < 0.02, "rho {rho}: sample correlation {r}");
    }
}

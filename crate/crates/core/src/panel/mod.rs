//! The (city pair, month) panel: every regressand and regressor of the
//! flight-delay equation, aggregated from flight legs and passenger traffic.

mod describe;
mod measures;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    classify_delay, CapacityRegistry, CarrierClass, CauseCode, CityPair, CodeshareSpan, FlightRecord,
    TrafficRecord, YearMonth, DEFAULT_DELAY_THRESHOLD,
};

pub use describe::{describe, pearson, Descriptives};
pub use measures::{
    cell_mins, congested_hours, congestion_split, corrected_logit_odds, hhi, lcc_presence, logit_odds,
    max_city_delay_prop, mean_delay, pair_and_city_hhi, CityDelayIndex, CongestionMap, TrafficIndex,
    SHARE_SUM_TOLERANCE,
};

/// One (directional city pair, month) cell.
///
/// Delay measures cover operated flights of the configured carrier class;
/// `odds` is `None` when the delayed proportion is 0 or 1 unless the
/// continuity correction is enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub pair_id: CityPair,
    pub month: YearMonth,
    pub odds: Option<f64>,
    pub mins: f64,
    pub mins_gt_threshold: f64,
    pub odds_dep: Option<f64>,
    pub mins_dep: f64,
    pub mins_dep_gt_threshold: f64,
    pub n_congested: f64,
    pub n_uncongested: f64,
    pub prop_weather: f64,
    pub prop_incident: f64,
    pub prop_connection: f64,
    pub max_city_delay_prop: f64,
    pub codeshare: u8,
    pub hhi_pair: f64,
    pub hhi_max_city: f64,
    pub lcc_pair: u8,
    pub lcc_max_city: u8,
    pub n_flights_total: u32,
    pub odds_defined: bool,
    pub prop_delayed: f64,
    pub prop_delayed_dep: f64,
}

/// Numeric panel columns addressable by name (regressands and regressors).
pub const NUMERIC_COLUMNS: [&str; 20] = [
    "odds",
    "mins",
    "mins_gt_threshold",
    "odds_dep",
    "mins_dep",
    "mins_dep_gt_threshold",
    "n_congested",
    "n_uncongested",
    "prop_weather",
    "prop_incident",
    "prop_connection",
    "max_city_delay_prop",
    "codeshare",
    "hhi_pair",
    "hhi_max_city",
    "lcc_pair",
    "lcc_max_city",
    "n_flights_total",
    "prop_delayed",
    "prop_delayed_dep",
];

/// The eleven right-hand-side variables of the baseline delay equation.
pub const REGRESSORS: [&str; 11] = [
    "n_congested",
    "n_uncongested",
    "prop_weather",
    "prop_incident",
    "prop_connection",
    "max_city_delay_prop",
    "codeshare",
    "hhi_pair",
    "hhi_max_city",
    "lcc_pair",
    "lcc_max_city",
];

impl PanelObservation {
    /// Value of a numeric column; `None` for an undefined log-odds cell.
    pub fn value(&self, column: &str) -> Result<Option<f64>> {
        Ok(match column {
            "odds" => self.odds,
            "mins" => Some(self.mins),
            "mins_gt_threshold" => Some(self.mins_gt_threshold),
            "odds_dep" => self.odds_dep,
            "mins_dep" => Some(self.mins_dep),
            "mins_dep_gt_threshold" => Some(self.mins_dep_gt_threshold),
            "n_congested" => Some(self.n_congested),
            "n_uncongested" => Some(self.n_uncongested),
            "prop_weather" => Some(self.prop_weather),
            "prop_incident" => Some(self.prop_incident),
            "prop_connection" => Some(self.prop_connection),
            "max_city_delay_prop" => Some(self.max_city_delay_prop),
            "codeshare" => Some(f64::from(self.codeshare)),
            "hhi_pair" => Some(self.hhi_pair),
            "hhi_max_city" => Some(self.hhi_max_city),
            "lcc_pair" => Some(f64::from(self.lcc_pair)),
            "lcc_max_city" => Some(f64::from(self.lcc_max_city)),
            "n_flights_total" => Some(f64::from(self.n_flights_total)),
            "prop_delayed" => Some(self.prop_delayed),
            "prop_delayed_dep" => Some(self.prop_delayed_dep),
            other => return Err(Error::UnknownColumn(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelConfig {
    /// Minutes; a flight is delayed when its delay is strictly greater.
    pub threshold: i64,
    /// Carriers whose flights define the regressands.
    pub carrier_class: CarrierClass,
    /// Replace dropped 0/1-proportion cells by `(p + 0.5/n) / (1 - p + 0.5/n)` odds.
    pub odds_continuity_correction: bool,
}

impl Default for PanelConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_DELAY_THRESHOLD,
            carrier_class: CarrierClass::Fsc,
            odds_continuity_correction: false,
        }
    }
}

pub struct PanelInputs<'a> {
    pub flights: &'a [FlightRecord],
    pub traffic: &'a [TrafficRecord],
    pub capacities: &'a CapacityRegistry,
    pub codeshare: &'a [CodeshareSpan],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedCell {
    pub pair_id: CityPair,
    pub month: YearMonth,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    /// Sorted by (pair, month).
    pub observations: Vec<PanelObservation>,
    pub dropped: Vec<DroppedCell>,
}

impl Panel {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

struct Shared<'a> {
    config: &'a PanelConfig,
    congestion: CongestionMap,
    city_delays: CityDelayIndex,
    traffic: TrafficIndex,
    codeshare: &'a [CodeshareSpan],
}

fn odds_of(delayed: usize, total: usize, corrected: bool) -> Result<(Option<f64>, bool)> {
    let p = delayed as f64 / total as f64;
    let defined = delayed > 0 && delayed < total;
    let value = if defined {
        Some(logit_odds(p)?)
    } else if corrected {
        Some(corrected_logit_odds(delayed, total)?)
    } else {
        None
    };
    Ok((value, defined))
}

fn build_cell(
    shared: &Shared<'_>,
    pair: &CityPair,
    month: YearMonth,
    flights: &[&FlightRecord],
) -> Result<PanelObservation> {
    let threshold = shared.config.threshold;
    let operated: Vec<&FlightRecord> = flights.iter().copied().filter(|f| !f.cancelled).collect();
    if operated.is_empty() {
        return Err(Error::EmptyCell("every flight cancelled".into()));
    }
    let statuses = operated
        .iter()
        .map(|f| classify_delay(f, threshold))
        .collect::<Result<Vec<_>>>()?;
    let n = statuses.len();
    let delayed = statuses.iter().filter(|s| s.arrival_delayed).count();
    let delayed_dep = statuses.iter().filter(|s| s.departure_delayed).count();
    let corrected = shared.config.odds_continuity_correction;
    let (odds, odds_defined) = odds_of(delayed, n, corrected)?;
    let (odds_dep, _) = odds_of(delayed_dep, n, corrected)?;

    let arr: Vec<i64> = statuses.iter().map(|s| s.arrival_delay_minutes).collect();
    let dep: Vec<i64> = statuses.iter().map(|s| s.departure_delay_minutes).collect();

    // cause shares: delayed operated flights by reported cause over all operated flights
    let cause_share = |cause: CauseCode| {
        operated
            .iter()
            .zip(&statuses)
            .filter(|(f, s)| s.arrival_delayed && f.cause == cause)
            .count() as f64
            / n as f64
    };

    let (n_congested, n_uncongested) = congestion_split(flights.iter().copied(), month, &shared.congestion);
    let (hhi_pair, hhi_max_city) = pair_and_city_hhi(&shared.traffic, pair, month)?;
    let (lcc_pair, lcc_max_city) = lcc_presence(&shared.traffic, pair, month);
    let codeshare = shared.codeshare.iter().any(|c| c.covers(pair, month));

    Ok(PanelObservation {
        pair_id: pair.clone(),
        month,
        odds,
        mins: mean_delay(&arr, None)?,
        mins_gt_threshold: mean_delay(&arr, Some(threshold))?,
        odds_dep,
        mins_dep: mean_delay(&dep, None)?,
        mins_dep_gt_threshold: mean_delay(&dep, Some(threshold))?,
        n_congested,
        n_uncongested,
        prop_weather: cause_share(CauseCode::Weather),
        prop_incident: cause_share(CauseCode::Incident),
        prop_connection: cause_share(CauseCode::Connection),
        max_city_delay_prop: max_city_delay_prop(&shared.city_delays, pair, month)?,
        codeshare: u8::from(codeshare),
        hhi_pair,
        hhi_max_city,
        lcc_pair: u8::from(lcc_pair),
        lcc_max_city: u8::from(lcc_max_city),
        n_flights_total: n as u32,
        odds_defined,
        prop_delayed: delayed as f64 / n as f64,
        prop_delayed_dep: delayed_dep as f64 / n as f64,
    })
}

/// Aggregates flights and traffic into the panel.
///
/// One observation per (directional pair, month) with at least one operated
/// flight of the configured carrier class. Cells whose concentration inputs
/// are missing are dropped and listed with the reason; a city missing from
/// the capacity registry is a hard error.
pub fn build_panel(inputs: &PanelInputs<'_>, config: &PanelConfig) -> Result<Panel> {
    if config.threshold <= 0 {
        return Err(Error::InvalidArgument("delay threshold must be positive".into()));
    }
    let shared = Shared {
        config,
        congestion: CongestionMap::build(inputs.flights, inputs.capacities)?,
        city_delays: CityDelayIndex::build(inputs.flights, config.threshold)?,
        traffic: TrafficIndex::new(inputs.traffic),
        codeshare: inputs.codeshare,
    };

    let mut cells: BTreeMap<(CityPair, YearMonth), Vec<&FlightRecord>> = BTreeMap::new();
    for f in inputs.flights.iter().filter(|f| f.carrier_class == config.carrier_class) {
        cells.entry((f.pair(), f.month())).or_default().push(f);
    }
    let cells: Vec<_> = cells.into_iter().collect();

    let built: Vec<std::result::Result<PanelObservation, DroppedCell>> = cells
        .par_iter()
        .map(|((pair, month), flights)| {
            build_cell(&shared, pair, *month, flights).map_err(|e| DroppedCell {
                pair_id: pair.clone(),
                month: *month,
                reason: e.to_string(),
            })
        })
        .collect();

    let mut panel = Panel::default();
    for cell in built {
        match cell {
            Ok(obs) => panel.observations.push(obs),
            Err(drop) => {
                log::info!("dropping cell {} {}: {}", drop.pair_id, drop.month, drop.reason);
                panel.dropped.push(drop);
            }
        }
    }
    Ok(panel)
}

/// Writes the panel as CSV, one column per observation field.
pub fn write_panel_csv<W: Write>(panel: &[PanelObservation], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for obs in panel {
        w.serialize(obs)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_panel_csv<R: Read>(input: R) -> Result<Vec<PanelObservation>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

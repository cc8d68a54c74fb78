//! Cell-level measures: log-odds, mean delays, concentration, LCC presence,
//! congested hours and endpoint-city delay proportions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::ingest::{
    CapacityRegistry, CarrierClass, CityId, CityPair, DelayStatus, FlightRecord, TrafficRecord, YearMonth,
};

/// Tolerance on the sum of market shares.
pub const SHARE_SUM_TOLERANCE: f64 = 1e-9;

/// `ln(p / (1 - p))`; undefined outside the open unit interval.
pub fn logit_odds(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok((p / (1.0 - p)).ln())
    } else {
        Err(Error::UndefinedOdds(p))
    }
}

/// Log-odds with half-count continuity correction, finite for every `delayed <= total`.
pub fn corrected_logit_odds(delayed: usize, total: usize) -> Result<f64> {
    if total == 0 || delayed > total {
        return Err(Error::InvalidArgument(format!("{delayed} delayed of {total} flights")));
    }
    let n = total as f64;
    let p = delayed as f64 / n;
    Ok(((p + 0.5 / n) / (1.0 - p + 0.5 / n)).ln())
}

/// Mean signed delay in minutes. With a threshold, the mean runs over the
/// delays strictly above it, and a cell without any such delay yields 0.
pub fn mean_delay(minutes: &[i64], threshold: Option<i64>) -> Result<f64> {
    if minutes.is_empty() {
        return Err(Error::EmptyCell("no operated flights".into()));
    }
    let (sum, count) = minutes
        .iter()
        .filter(|&&m| threshold.is_none_or(|t| m > t))
        .fold((0i64, 0usize), |(s, c), &m| (s + m, c + 1));
    Ok(if count == 0 { 0.0 } else { sum as f64 / count as f64 })
}

/// Arrival-delay variant of [`mean_delay`] over classified flights.
pub fn cell_mins(flights: &[DelayStatus], threshold: Option<i64>) -> Result<f64> {
    let m: Vec<i64> = flights.iter().map(|d| d.arrival_delay_minutes).collect();
    mean_delay(&m, threshold)
}

/// Herfindahl-Hirschman index: the sum of squared shares.
pub fn hhi(shares: &[f64]) -> Result<f64> {
    if shares.is_empty() {
        return Err(Error::InvalidArgument("no market shares".into()));
    }
    if let Some(s) = shares.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidArgument(format!("invalid share {s}")));
    }
    let total: f64 = shares.iter().sum();
    if (total - 1.0).abs() > SHARE_SUM_TOLERANCE {
        return Err(Error::SharesNotNormalized(total));
    }
    Ok(shares.iter().map(|s| s * s).sum())
}

fn hhi_of_pax(pax: &BTreeMap<String, u64>) -> Option<f64> {
    let total: u64 = pax.values().sum();
    if total == 0 {
        return None;
    }
    // integer passenger counts: compute exactly, shares sum to one by construction
    let t = total as f64;
    Some(pax.values().map(|&p| (p as f64 / t).powi(2)).sum())
}

/// Carrier passengers indexed by pair-month and by city-month.
#[derive(Debug, Clone, Default)]
pub struct TrafficIndex {
    pair: HashMap<(CityPair, YearMonth), BTreeMap<String, u64>>,
    city: HashMap<(CityId, YearMonth), BTreeMap<String, u64>>,
    lcc_pair: HashMap<(CityPair, YearMonth), bool>,
    lcc_city: HashMap<(CityId, YearMonth), bool>,
}

impl TrafficIndex {
    pub fn new(traffic: &[TrafficRecord]) -> Self {
        let mut idx = Self::default();
        for r in traffic {
            let pair = r.pair();
            *idx.pair
                .entry((pair.clone(), r.month))
                .or_default()
                .entry(r.carrier.clone())
                .or_default() += r.revenue_pax;
            let lcc = r.carrier_class == CarrierClass::Lcc && r.revenue_pax > 0;
            *idx.lcc_pair.entry((pair, r.month)).or_default() |= lcc;
            for city in [&r.origin_city, &r.dest_city] {
                *idx.city
                    .entry((city.clone(), r.month))
                    .or_default()
                    .entry(r.carrier.clone())
                    .or_default() += r.revenue_pax;
                *idx.lcc_city.entry((city.clone(), r.month)).or_default() |= lcc;
            }
        }
        idx
    }

    fn city_hhi(&self, city: &CityId, month: YearMonth) -> Result<f64> {
        self.city
            .get(&(city.clone(), month))
            .and_then(hhi_of_pax)
            .ok_or_else(|| Error::EmptyCell(format!("no revenue passengers at city {city} in {month}")))
    }
}

/// `(hhi_pair, hhi_max_city)`: concentration on the directional pair and the
/// larger of the two endpoint-city concentrations, where city shares pool
/// every pair touching the city.
pub fn pair_and_city_hhi(traffic: &TrafficIndex, pair: &CityPair, month: YearMonth) -> Result<(f64, f64)> {
    let pair_hhi = traffic
        .pair
        .get(&(pair.clone(), month))
        .and_then(hhi_of_pax)
        .ok_or_else(|| Error::EmptyCell(format!("no revenue passengers on {pair} in {month}")))?;
    let o = traffic.city_hhi(&pair.origin, month)?;
    let d = traffic.city_hhi(&pair.destination, month)?;
    Ok((pair_hhi, o.max(d)))
}

/// `(lcc_pair, lcc_max_city)`: an LCC carries passengers on the pair itself,
/// or on any pair touching either endpoint city.
pub fn lcc_presence(traffic: &TrafficIndex, pair: &CityPair, month: YearMonth) -> (bool, bool) {
    let on_pair = traffic.lcc_pair.get(&(pair.clone(), month)).copied().unwrap_or(false);
    let at_city = |c: &CityId| traffic.lcc_city.get(&(c.clone(), month)).copied().unwrap_or(false);
    (on_pair, on_pair || at_city(&pair.origin) || at_city(&pair.destination))
}

/// Scheduled movements (arrivals plus departures, every carrier, cancelled
/// legs included) per city and clock hour, with the declared capacities.
#[derive(Debug, Clone)]
pub struct CongestionMap {
    movements: HashMap<(CityId, NaiveDate, u32), u32>,
    capacity: HashMap<CityId, u32>,
}

impl CongestionMap {
    pub fn build(flights: &[FlightRecord], capacities: &CapacityRegistry) -> Result<Self> {
        let mut movements = HashMap::new();
        let mut capacity = HashMap::new();
        for f in flights {
            for (city, ts) in [(&f.origin_city, f.scheduled_departure), (&f.destination_city, f.scheduled_arrival)] {
                if !capacity.contains_key(city) {
                    let cap = capacities
                        .get(city)
                        .ok_or_else(|| Error::MissingCapacity(city.to_string()))?;
                    capacity.insert(city.clone(), cap);
                }
                *movements.entry((city.clone(), ts.date(), ts.hour())).or_insert(0) += 1;
            }
        }
        Ok(Self { movements, capacity })
    }

    pub fn movements(&self, city: &CityId, day: NaiveDate, hour: u32) -> u32 {
        self.movements.get(&(city.clone(), day, hour)).copied().unwrap_or(0)
    }

    /// An hour is congested when its movements strictly exceed capacity.
    pub fn is_congested(&self, city: &CityId, at: NaiveDateTime) -> bool {
        match self.capacity.get(city) {
            Some(&cap) => self.movements(city, at.date(), at.hour()) > cap,
            None => false,
        }
    }

    pub fn congested_hours(&self, city: &CityId, day: NaiveDate) -> BTreeSet<u32> {
        (0..24)
            .filter(|&h| {
                self.capacity
                    .get(city)
                    .is_some_and(|&cap| self.movements(city, day, h) > cap)
            })
            .collect()
    }
}

/// Clock hours of `day` at `city` whose scheduled movements exceed the
/// declared capacity. `flights` may contain legs of any city or day.
pub fn congested_hours(
    city: &CityId,
    day: NaiveDate,
    flights: &[FlightRecord],
    capacities: &CapacityRegistry,
) -> Result<BTreeSet<u32>> {
    let cap = capacities
        .get(city)
        .ok_or_else(|| Error::MissingCapacity(city.to_string()))?;
    let mut counts = [0u32; 24];
    for f in flights {
        if &f.origin_city == city && f.scheduled_departure.date() == day {
            counts[f.scheduled_departure.hour() as usize] += 1;
        }
        if &f.destination_city == city && f.scheduled_arrival.date() == day {
            counts[f.scheduled_arrival.hour() as usize] += 1;
        }
    }
    Ok((0..24u32).filter(|&h| counts[h as usize] > cap).collect())
}

/// Daily averages of a cell's scheduled flights in congested and uncongested
/// hours. A flight is congested when its scheduled departure hour is
/// congested at the origin or its scheduled arrival hour is congested at
/// the destination.
pub fn congestion_split<'a>(
    flights: impl IntoIterator<Item = &'a FlightRecord>,
    month: YearMonth,
    map: &CongestionMap,
) -> (f64, f64) {
    let (mut congested, mut other) = (0u32, 0u32);
    for f in flights {
        if map.is_congested(&f.origin_city, f.scheduled_departure)
            || map.is_congested(&f.destination_city, f.scheduled_arrival)
        {
            congested += 1;
        } else {
            other += 1;
        }
    }
    let days = f64::from(month.days());
    (f64::from(congested) / days, f64::from(other) / days)
}

/// Operated flights and delayed flights touching each city per month, over
/// every carrier. A flight counts once at its origin and once at its
/// destination; it is delayed when its arrival is.
#[derive(Debug, Clone, Default)]
pub struct CityDelayIndex {
    ops: HashMap<(CityId, YearMonth), (u32, u32)>,
}

impl CityDelayIndex {
    pub fn build(flights: &[FlightRecord], threshold: i64) -> Result<Self> {
        let mut ops: HashMap<(CityId, YearMonth), (u32, u32)> = HashMap::new();
        for f in flights.iter().filter(|f| !f.cancelled) {
            let status = crate::ingest::classify_delay(f, threshold)?;
            let month = f.month();
            for city in [&f.origin_city, &f.destination_city] {
                let e = ops.entry((city.clone(), month)).or_default();
                e.0 += 1;
                e.1 += u32::from(status.arrival_delayed);
            }
        }
        Ok(Self { ops })
    }

    pub fn proportion(&self, city: &CityId, month: YearMonth) -> Result<f64> {
        match self.ops.get(&(city.clone(), month)) {
            Some(&(n, d)) if n > 0 => Ok(f64::from(d) / f64::from(n)),
            _ => Err(Error::EmptyCell(format!("no operations at {city} in {month}"))),
        }
    }
}

/// Larger of the two endpoint cities' delayed-operation proportions.
pub fn max_city_delay_prop(index: &CityDelayIndex, pair: &CityPair, month: YearMonth) -> Result<f64> {
    Ok(index
        .proportion(&pair.origin, month)?
        .max(index.proportion(&pair.destination, month)?))
}

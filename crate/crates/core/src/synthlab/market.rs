//! Synthetic airline markets emitted in the ingest file formats.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::{Duration, NaiveDateTime, NaiveTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    write_airports, write_capacities, write_cities, write_codeshare, write_flights, write_traffic, CapacityRegistry,
    CarrierClass, CauseCode, CityId, CityRegistry, CodeshareSpan, Coordinates, FlightRecord, TrafficRecord, YearMonth,
};
use crate::instruments::great_circle_km;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitySpec {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    /// Airport codes; flights rotate through them.
    pub airports: Vec<String>,
    /// Declared movements per clock hour; `u32::MAX` for unconstrained.
    pub hourly_capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierSpec {
    pub code: String,
    pub class: CarrierClass,
}

/// Daily frequency of one carrier on a route, in each direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub carrier: String,
    pub daily_flights: u32,
    /// First month of operation; `None` for the whole horizon.
    #[serde(default)]
    pub entry: Option<YearMonth>,
}

/// An undirected route served in both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSpec {
    pub a: String,
    pub b: String,
    pub services: Vec<Service>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketScenario {
    pub cities: Vec<CitySpec>,
    pub carriers: Vec<CarrierSpec>,
    pub routes: Vec<RouteSpec>,
    pub start: YearMonth,
    pub months: u32,
    /// Delay probability of a flight with no excess movements.
    pub base_delay_rate: f64,
    /// Log-odds increase per scheduled movement above capacity, summed over
    /// the departure and arrival hours.
    pub congestion_sensitivity: f64,
    /// Relative frequencies of WEATHER, INCIDENT, CONNECTION and OTHER among
    /// delayed flights.
    pub cause_weights: [f64; 4],
    pub cancellation_rate: f64,
    /// Monthly daily frequencies vary uniformly by up to this many flights.
    #[serde(default)]
    pub frequency_jitter: u32,
    /// Probability that a scheduled flight does not run on a given day.
    #[serde(default)]
    pub schedule_gap_rate: f64,
    pub seats_per_flight: u32,
    pub load_factor: f64,
    #[serde(default)]
    pub codeshare: Vec<CodeshareSpan>,
    pub seed: u64,
}

/// Everything the ingest module reads.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketData {
    pub cities: CityRegistry,
    pub capacities: CapacityRegistry,
    pub flights: Vec<FlightRecord>,
    pub traffic: Vec<TrafficRecord>,
    pub codeshare: Vec<CodeshareSpan>,
}

pub const MARKET_FILES: [&str; 6] =
    ["flights.csv", "traffic.csv", "cities.csv", "airports.csv", "capacity.csv", "codeshare.csv"];

impl MarketData {
    /// Writes the six input files into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
        write_flights(&self.flights, open("flights.csv")?)?;
        write_traffic(&self.traffic, open("traffic.csv")?)?;
        write_cities(&self.cities, open("cities.csv")?)?;
        write_airports(&self.cities, open("airports.csv")?)?;
        write_capacities(&self.capacities, open("capacity.csv")?)?;
        write_codeshare(&self.codeshare, open("codeshare.csv")?)?;
        Ok(())
    }
}

impl MarketScenario {
    /// Twelve Brazilian cities, two full-service carriers and one low-cost
    /// carrier entering part of the network mid-sample.
    pub fn demo(seed: u64) -> Self {
        let city = |id: &str, lat: f64, lon: f64, airports: &[&str], cap: u32| CitySpec {
            id: id.into(),
            lat,
            lon,
            airports: airports.iter().map(|s| s.to_string()).collect(),
            hourly_capacity: cap,
        };
        let svc = |c: &str, d: u32, entry: Option<YearMonth>| Service { carrier: c.into(), daily_flights: d, entry };
        let start = YearMonth { year: 2010, month: 1 };
        let entry = Some(YearMonth { year: 2010, month: 7 });
        let late_entry = Some(YearMonth { year: 2010, month: 10 });
        let route = |a: &str, b: &str, services: Vec<Service>| RouteSpec { a: a.into(), b: b.into(), services };
        Self {
            cities: vec![
                city("SAO", -23.55, -46.63, &["GRU", "CGH"], 9),
                city("RIO", -22.91, -43.17, &["GIG", "SDU"], 7),
                city("BSB", -15.79, -47.88, &["BSB"], 6),
                city("BHZ", -19.92, -43.94, &["CNF"], 5),
                city("POA", -30.03, -51.23, &["POA"], 5),
                city("REC", -8.05, -34.88, &["REC"], 4),
                city("SSA", -12.97, -38.50, &["SSA"], 4),
                city("CWB", -25.43, -49.27, &["CWB"], 4),
                city("GYN", -16.69, -49.26, &["GYN"], 3),
                city("NAT", -5.79, -35.21, &["NAT"], 3),
                city("FLN", -27.60, -48.55, &["FLN"], 3),
                city("VCP", -23.01, -47.13, &["VCP"], 4),
            ],
            carriers: vec![
                CarrierSpec { code: "AA1".into(), class: CarrierClass::Fsc },
                CarrierSpec { code: "BB2".into(), class: CarrierClass::Fsc },
                CarrierSpec { code: "LC3".into(), class: CarrierClass::Lcc },
            ],
            routes: vec![
                route("SAO", "RIO", vec![svc("AA1", 6, None), svc("BB2", 5, None), svc("LC3", 2, entry)]),
                route("SAO", "BSB", vec![svc("AA1", 4, None), svc("BB2", 3, None)]),
                route("SAO", "BHZ", vec![svc("AA1", 3, None), svc("BB2", 2, None), svc("LC3", 1, entry)]),
                route("SAO", "POA", vec![svc("AA1", 3, None), svc("BB2", 3, None)]),
                route("SAO", "REC", vec![svc("AA1", 2, None), svc("BB2", 1, None)]),
                route("SAO", "SSA", vec![svc("AA1", 2, None), svc("BB2", 2, None)]),
                route("SAO", "CWB", vec![svc("AA1", 3, None), svc("BB2", 2, None), svc("LC3", 1, None)]),
                route("RIO", "BSB", vec![svc("AA1", 3, None), svc("BB2", 2, None)]),
                route("RIO", "SSA", vec![svc("BB2", 2, None)]),
                route("BSB", "REC", vec![svc("AA1", 2, None), svc("BB2", 1, None)]),
                route("POA", "CWB", vec![svc("BB2", 1, None), svc("AA1", 1, None)]),
                route("REC", "SSA", vec![svc("AA1", 1, None), svc("LC3", 1, entry)]),
                route("SAO", "GYN", vec![svc("AA1", 2, None), svc("BB2", 1, None)]),
                route("BSB", "NAT", vec![svc("AA1", 1, None), svc("LC3", 1, entry)]),
                route("SAO", "NAT", vec![svc("BB2", 2, None)]),
                route("SAO", "FLN", vec![svc("AA1", 2, None), svc("BB2", 2, None), svc("LC3", 1, late_entry)]),
                route("RIO", "FLN", vec![svc("BB2", 1, None), svc("AA1", 1, None)]),
                route("VCP", "RIO", vec![svc("LC3", 2, None), svc("AA1", 1, None)]),
                route("VCP", "POA", vec![svc("AA1", 1, None), svc("LC3", 1, late_entry)]),
            ],
            start,
            months: 12,
            base_delay_rate: 0.18,
            congestion_sensitivity: 0.35,
            cause_weights: [0.3, 0.15, 0.35, 0.2],
            cancellation_rate: 0.01,
            frequency_jitter: 1,
            schedule_gap_rate: 0.05,
            seats_per_flight: 150,
            load_factor: 0.75,
            codeshare: vec![CodeshareSpan {
                origin_city: CityId::new("SAO"),
                dest_city: CityId::new("POA"),
                start_month: YearMonth { year: 2010, month: 4 },
                end_month: YearMonth { year: 2010, month: 9 },
            }],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0 < self.base_delay_rate && self.base_delay_rate < 1.0) {
            return bad("base_delay_rate must lie in (0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.cancellation_rate) || !(self.load_factor > 0.0) {
            return bad("cancellation_rate must lie in [0, 1) and load_factor be positive".into());
        }
        if !(0.0..1.0).contains(&self.schedule_gap_rate) {
            return bad("schedule_gap_rate must lie in [0, 1)".into());
        }
        if self.cause_weights.iter().any(|w| *w < 0.0) || self.cause_weights.iter().sum::<f64>() <= 0.0 {
            return bad("cause weights must be non-negative with a positive sum".into());
        }
        if self.months == 0 {
            return bad("scenario needs at least one month".into());
        }
        for r in &self.routes {
            if r.a == r.b {
                return bad(format!("route {}-{} starts and ends in the same city", r.a, r.b));
            }
            for s in &r.services {
                if !self.carriers.iter().any(|c| c.code == s.carrier) {
                    return bad(format!("route {}-{} uses unknown carrier {}", r.a, r.b, s.carrier));
                }
                if !(1..=60).contains(&s.daily_flights) {
                    return bad(format!("daily_flights must lie in 1..=60 on {}-{}", r.a, r.b));
                }
            }
        }
        Ok(())
    }
}

struct Scheduled {
    carrier: usize,
    origin: usize,
    dest: usize,
    origin_airport: String,
    dest_airport: String,
    number: String,
    dep: NaiveDateTime,
    arr: NaiveDateTime,
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Builds the schedule, then draws delays whose probability rises with the
/// scheduled movements above capacity in the flight's departure and arrival
/// hours. Traffic counts operated flights times seats times load factor.
pub fn generate_market(scenario: &MarketScenario) -> Result<MarketData> {
    scenario.validate()?;
    let mut cities = CityRegistry::new();
    let mut capacities = CapacityRegistry::new();
    let mut index = BTreeMap::new();
    for (i, c) in scenario.cities.iter().enumerate() {
        let id = CityId::new(c.id.clone());
        cities.insert_city(id.clone(), Coordinates::new(c.lat, c.lon)?)?;
        for a in &c.airports {
            cities.insert_airport(a.clone(), id.clone())?;
        }
        capacities.insert(id, c.hourly_capacity)?;
        index.insert(c.id.clone(), i);
    }
    let city_idx = |id: &str| {
        index.get(id).copied().ok_or_else(|| Error::InvalidArgument(format!("route uses unknown city {id}")))
    };
    let carrier_idx = |code: &str| scenario.carriers.iter().position(|c| c.code == code).expect("validated");

    // schedule, drawn from its own stream so delay draws do not shift with it
    let mut schedule_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    schedule_rng.set_stream(1);
    let jitter = i64::from(scenario.frequency_jitter);
    let mut schedule = Vec::new();
    for m in 0..scenario.months {
        let month = YearMonth::from_ordinal(scenario.start.ordinal() + i64::from(m));
        for (ri, route) in scenario.routes.iter().enumerate() {
            let (a, b) = (city_idx(&route.a)?, city_idx(&route.b)?);
            let ca = &scenario.cities[a];
            let cb = &scenario.cities[b];
            let km = great_circle_km(&Coordinates::new(ca.lat, ca.lon)?, &Coordinates::new(cb.lat, cb.lon)?)?;
            let block = Duration::minutes(30 + (km / 12.0).round() as i64);
            for s in &route.services {
                if s.entry.is_some_and(|e| month < e) {
                    continue;
                }
                let c = carrier_idx(&s.carrier);
                for (dir, (o, d)) in [(a, b), (b, a)].into_iter().enumerate() {
                    let shift = if jitter > 0 { schedule_rng.random_range(-jitter..=jitter) } else { 0 };
                    let daily = (i64::from(s.daily_flights) + shift).max(1) as u32;
                    for day in 0..month.days() {
                        let date = month.first_day() + Duration::days(i64::from(day));
                        for f in 0..daily {
                            if scenario.schedule_gap_rate > 0.0 && schedule_rng.random::<f64>() < scenario.schedule_gap_rate {
                                continue;
                            }
                            let minutes = 6 * 60 + (f * 16 * 60) / daily + (c as u32 * 17 + dir as u32 * 29) % 60;
                            let dep = date.and_time(NaiveTime::MIN) + Duration::minutes(i64::from(minutes));
                            let co = &scenario.cities[o];
                            let cd = &scenario.cities[d];
                            schedule.push(Scheduled {
                                carrier: c,
                                origin: o,
                                dest: d,
                                origin_airport: co.airports[f as usize % co.airports.len()].clone(),
                                dest_airport: cd.airports[f as usize % cd.airports.len()].clone(),
                                number: format!("{}", 1000 + ri * 200 + dir * 100 + f as usize),
                                dep,
                                arr: dep + block,
                            });
                        }
                    }
                }
            }
        }
    }

    // scheduled movements per (city, date-hour)
    let mut movements: BTreeMap<(usize, NaiveDateTime), u32> = BTreeMap::new();
    let hour_of = |t: NaiveDateTime| t.date().and_hms_opt(t.hour(), 0, 0).expect("valid hour");
    for s in &schedule {
        *movements.entry((s.origin, hour_of(s.dep))).or_default() += 1;
        *movements.entry((s.dest, hour_of(s.arr))).or_default() += 1;
    }
    let excess = |city: usize, t: NaiveDateTime| {
        let m = movements.get(&(city, hour_of(t))).copied().unwrap_or(0);
        f64::from(m.saturating_sub(scenario.cities[city].hourly_capacity))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let late = Exp::<f64>::new(1.0 / 25.0).expect("positive rate");
    let base = (scenario.base_delay_rate / (1.0 - scenario.base_delay_rate)).ln();
    let causes = [CauseCode::Weather, CauseCode::Incident, CauseCode::Connection, CauseCode::Other];
    let weight_sum: f64 = scenario.cause_weights.iter().sum();
    let mut flights = Vec::with_capacity(schedule.len());
    let mut operated: BTreeMap<(usize, usize, usize, YearMonth), u64> = BTreeMap::new();
    for s in schedule {
        let carrier = &scenario.carriers[s.carrier];
        let cancelled = rng.random::<f64>() < scenario.cancellation_rate;
        let (actual_departure, actual_arrival, cause) = if cancelled {
            (None, None, CauseCode::None)
        } else {
            let pressure = excess(s.origin, s.dep) + excess(s.dest, s.arr);
            let p = logistic(base + scenario.congestion_sensitivity * pressure);
            let (arr_delay, dep_delay, cause) = if rng.random::<f64>() < p {
                let arr = 16 + late.sample(&mut rng).round() as i64;
                let dep = arr - rng.random_range(0..=10);
                let mut pick = rng.random::<f64>() * weight_sum;
                let mut cause = causes[3];
                for (c, w) in causes.iter().zip(scenario.cause_weights) {
                    if pick < w {
                        cause = *c;
                        break;
                    }
                    pick -= w;
                }
                (arr, dep, cause)
            } else {
                (rng.random_range(-10..=15), rng.random_range(-5..=15), CauseCode::None)
            };
            *operated.entry((s.carrier, s.origin, s.dest, YearMonth::of(&s.dep))).or_default() += 1;
            (Some(s.dep + Duration::minutes(dep_delay)), Some(s.arr + Duration::minutes(arr_delay)), cause)
        };
        flights.push(FlightRecord {
            carrier: carrier.code.clone(),
            carrier_class: carrier.class,
            origin_airport: s.origin_airport,
            dest_airport: s.dest_airport,
            origin_city: CityId::new(scenario.cities[s.origin].id.clone()),
            destination_city: CityId::new(scenario.cities[s.dest].id.clone()),
            flight_number: s.number,
            scheduled_departure: s.dep,
            actual_departure,
            scheduled_arrival: s.arr,
            actual_arrival,
            cancelled,
            cause,
        });
    }
    flights.sort_by(|a, b| {
        (a.scheduled_departure, &a.carrier, &a.flight_number).cmp(&(b.scheduled_departure, &b.carrier, &b.flight_number))
    });

    let traffic = operated
        .into_iter()
        .map(|((c, o, d, month), count)| TrafficRecord {
            carrier: scenario.carriers[c].code.clone(),
            carrier_class: scenario.carriers[c].class,
            origin_city: CityId::new(scenario.cities[o].id.clone()),
            dest_city: CityId::new(scenario.cities[d].id.clone()),
            month,
            revenue_pax: (count as f64 * f64::from(scenario.seats_per_flight) * scenario.load_factor).round() as u64,
        })
        .collect();

    Ok(MarketData { cities, capacities, flights, traffic, codeshare: scenario.codeshare.clone() })
}

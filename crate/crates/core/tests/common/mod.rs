//! Small random markets for property tests.

#![allow(dead_code)]

use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

use flightdelay::ingest::{CapacityRegistry, CarrierClass, CauseCode, CityRegistry, Coordinates, TrafficRecord};
use flightdelay::{CityId, FlightRecord, YearMonth};

pub const CITIES: [(&str, f64, f64, &[&str]); 4] = [
    ("AAA", -23.5, -46.6, &["A1", "A2"]),
    ("BBB", -22.9, -43.2, &["B1"]),
    ("CCC", -15.8, -47.9, &["C1"]),
    ("DDD", -30.0, -51.2, &["D1"]),
];

pub const CARRIERS: [(&str, CarrierClass); 3] =
    [("F1", CarrierClass::Fsc), ("F2", CarrierClass::Fsc), ("L1", CarrierClass::Lcc)];

pub const CAUSES: [CauseCode; 5] =
    [CauseCode::None, CauseCode::Weather, CauseCode::Incident, CauseCode::Connection, CauseCode::Other];

pub fn registry() -> CityRegistry {
    let mut r = CityRegistry::new();
    for (id, lat, lon, airports) in CITIES {
        r.insert_city(CityId::new(id), Coordinates::new(lat, lon).unwrap()).unwrap();
        for a in airports {
            r.insert_airport(*a, CityId::new(id)).unwrap();
        }
    }
    r
}

pub fn capacities(caps: &[u32]) -> CapacityRegistry {
    let mut r = CapacityRegistry::new();
    for ((id, ..), c) in CITIES.iter().zip(caps) {
        r.insert(CityId::new(*id), *c).unwrap();
    }
    r
}

/// Compact flight description drawn by proptest.
#[derive(Debug, Clone)]
pub struct FlightSeed {
    pub carrier: usize,
    pub origin: usize,
    pub dest_offset: usize,
    pub month: u32,
    pub day: u32,
    pub minute: u32,
    pub block: i64,
    pub dep_delay: i64,
    pub arr_delay: i64,
    pub cancelled: bool,
    pub cause: usize,
}

pub fn flight_seed() -> impl Strategy<Value = FlightSeed> {
    (
        (0usize..3, 0usize..4, 1usize..4, 1u32..=2, 1u32..=28),
        (360u32..1320, 40i64..200, -15i64..90, -15i64..90, prop::bool::weighted(0.1), 0usize..5),
    )
        .prop_map(|((carrier, origin, dest_offset, month, day), (minute, block, dep_delay, arr_delay, cancelled, cause))| {
            FlightSeed { carrier, origin, dest_offset, month, day, minute, block, dep_delay, arr_delay, cancelled, cause }
        })
}

pub fn flight(i: usize, s: &FlightSeed) -> FlightRecord {
    let dest = (s.origin + s.dest_offset) % 4;
    let (o, d) = (&CITIES[s.origin], &CITIES[dest]);
    let dep = NaiveDate::from_ymd_opt(2015, s.month, s.day).unwrap().and_hms_opt(0, 0, 0).unwrap()
        + Duration::minutes(i64::from(s.minute));
    let arr = dep + Duration::minutes(s.block);
    let (carrier, class) = CARRIERS[s.carrier];
    FlightRecord {
        carrier: carrier.into(),
        carrier_class: class,
        origin_airport: o.3[i % o.3.len()].into(),
        dest_airport: d.3[i % d.3.len()].into(),
        origin_city: CityId::new(o.0),
        destination_city: CityId::new(d.0),
        flight_number: format!("{}", 100 + i),
        scheduled_departure: dep,
        actual_departure: (!s.cancelled).then(|| dep + Duration::minutes(s.dep_delay)),
        scheduled_arrival: arr,
        actual_arrival: (!s.cancelled).then(|| arr + Duration::minutes(s.arr_delay)),
        cancelled: s.cancelled,
        cause: if s.cancelled { CauseCode::None } else { CAUSES[s.cause] },
    }
}

pub fn flights(seeds: &[FlightSeed]) -> Vec<FlightRecord> {
    let mut v: Vec<FlightRecord> = seeds.iter().enumerate().map(|(i, s)| flight(i, s)).collect();
    v.sort_by(|a, b| {
        (a.scheduled_departure, &a.carrier, &a.flight_number).cmp(&(b.scheduled_departure, &b.carrier, &b.flight_number))
    });
    v
}

/// One traffic row per (carrier, directional pair, month) that flew, with
/// the drawn passenger count.
pub fn traffic(flights: &[FlightRecord], pax: &[u64]) -> Vec<TrafficRecord> {
    let mut keys = std::collections::BTreeSet::new();
    for f in flights {
        keys.insert((f.carrier.clone(), f.carrier_class, f.origin_city.clone(), f.destination_city.clone(), f.month()));
    }
    keys.into_iter()
        .enumerate()
        .map(|(i, (carrier, carrier_class, origin_city, dest_city, month))| TrafficRecord {
            carrier,
            carrier_class,
            origin_city,
            dest_city,
            month,
            revenue_pax: 1 + pax[i % pax.len()],
        })
        .collect()
}

pub fn month(m: u32) -> YearMonth {
    YearMonth::new(2015, m).unwrap()
}

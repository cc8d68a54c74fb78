use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CarrierClass, CityId, CityPair, YearMonth};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinates {
    pub lat: f64,
    pub lon: f64,
}

impl Coordinates {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidArgument(format!("coordinates ({lat}, {lon}) out of range")));
        }
        Ok(Self { lat, lon })
    }
}

/// City coordinates plus the airport-code to city map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CityRegistry {
    cities: BTreeMap<CityId, Coordinates>,
    airports: BTreeMap<String, CityId>,
}

impl CityRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_city(&mut self, id: CityId, coords: Coordinates) -> Result<()> {
        if id.0.is_empty() || id.0.contains('-') {
            return Err(Error::InvalidArgument(format!("city id {:?} must be non-empty without '-'", id.0)));
        }
        if self.cities.contains_key(&id) {
            return Err(Error::InvalidArgument(format!("duplicate city id {id}")));
        }
        self.cities.insert(id, coords);
        Ok(())
    }

    pub fn insert_airport(&mut self, code: impl Into<String>, city: CityId) -> Result<()> {
        let code = code.into();
        if !self.cities.contains_key(&city) {
            return Err(Error::InvalidArgument(format!("airport {code} maps to unknown city {city}")));
        }
        if self.airports.contains_key(&code) {
            return Err(Error::InvalidArgument(format!("airport {code} mapped twice")));
        }
        self.airports.insert(code, city);
        Ok(())
    }

    pub fn city_of_airport(&self, code: &str) -> Option<&CityId> {
        self.airports.get(code)
    }

    pub fn coordinates(&self, city: &CityId) -> Option<Coordinates> {
        self.cities.get(city).copied()
    }

    pub fn cities(&self) -> impl Iterator<Item = (&CityId, &Coordinates)> {
        self.cities.iter()
    }

    pub fn airports(&self) -> impl Iterator<Item = (&String, &CityId)> {
        self.airports.iter()
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }
}

/// Declared hourly movement capacity per city.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CapacityRegistry {
    hourly: BTreeMap<CityId, u32>,
}

impl CapacityRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, city: CityId, capacity: u32) -> Result<()> {
        if capacity == 0 {
            return Err(Error::InvalidArgument(format!("capacity of {city} must be positive")));
        }
        if self.hourly.insert(city.clone(), capacity).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate capacity for {city}")));
        }
        Ok(())
    }

    pub fn get(&self, city: &CityId) -> Option<u32> {
        self.hourly.get(city).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CityId, &u32)> {
        self.hourly.iter()
    }
}

/// Revenue passengers carried by one carrier on a directional city pair in a month.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficRecord {
    pub carrier: String,
    pub carrier_class: CarrierClass,
    pub origin_city: CityId,
    pub dest_city: CityId,
    pub month: YearMonth,
    pub revenue_pax: u64,
}

impl TrafficRecord {
    pub fn pair(&self) -> CityPair {
        CityPair {
            origin: self.origin_city.clone(),
            destination: self.dest_city.clone(),
        }
    }
}

/// Months (inclusive) during which the major carriers codeshare on a city pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeshareSpan {
    pub origin_city: CityId,
    pub dest_city: CityId,
    pub start_month: YearMonth,
    pub end_month: YearMonth,
}

impl CodeshareSpan {
    /// Agreements cover both directions of the city pair.
    pub fn covers(&self, pair: &CityPair, month: YearMonth) -> bool {
        let same = (pair.origin == self.origin_city && pair.destination == self.dest_city)
            || (pair.origin == self.dest_city && pair.destination == self.origin_city);
        same && self.start_month <= month && month <= self.end_month
    }
}

fn read_rows<T: DeserializeOwned, R: Read>(file: &str, input: R) -> Result<Vec<(u64, T)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for row in rdr.deserialize::<T>() {
        match row {
            Ok(v) => out.push((out.len() as u64 + 2, v)),
            Err(e) => {
                return Err(Error::Row {
                    file: file.into(),
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

fn row_err(file: &str, line: u64, e: Error) -> Error {
    Error::Row {
        file: file.into(),
        line,
        message: e.to_string(),
    }
}

#[derive(Deserialize, Serialize)]
struct CityRow {
    city_id: String,
    lat: f64,
    lon: f64,
}

pub fn parse_cities<R: Read>(input: R) -> Result<CityRegistry> {
    let mut reg = CityRegistry::new();
    for (line, row) in read_rows::<CityRow, _>("cities.csv", input)? {
        let coords = Coordinates::new(row.lat, row.lon).map_err(|e| row_err("cities.csv", line, e))?;
        reg.insert_city(CityId(row.city_id), coords)
            .map_err(|e| row_err("cities.csv", line, e))?;
    }
    Ok(reg)
}

#[derive(Deserialize, Serialize)]
struct AirportRow {
    airport_code: String,
    city_id: String,
}

/// Adds the airport map to a registry already holding the cities.
pub fn parse_airports<R: Read>(input: R, registry: &mut CityRegistry) -> Result<()> {
    for (line, row) in read_rows::<AirportRow, _>("airports.csv", input)? {
        registry
            .insert_airport(row.airport_code, CityId(row.city_id))
            .map_err(|e| row_err("airports.csv", line, e))?;
    }
    Ok(())
}

#[derive(Deserialize, Serialize)]
struct CapacityRow {
    city_id: String,
    hourly_capacity: u32,
}

pub fn parse_capacities<R: Read>(input: R) -> Result<CapacityRegistry> {
    let mut reg = CapacityRegistry::new();
    for (line, row) in read_rows::<CapacityRow, _>("capacity.csv", input)? {
        reg.insert(CityId(row.city_id), row.hourly_capacity)
            .map_err(|e| row_err("capacity.csv", line, e))?;
    }
    Ok(reg)
}

#[derive(Deserialize, Serialize)]
struct TrafficRow {
    carrier: String,
    carrier_class: CarrierClass,
    origin_city: String,
    dest_city: String,
    month: YearMonth,
    revenue_pax: u64,
}

pub fn parse_traffic<R: Read>(input: R) -> Result<Vec<TrafficRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, r) in read_rows::<TrafficRow, _>("traffic.csv", input)? {
        if !seen.insert((r.carrier.clone(), r.origin_city.clone(), r.dest_city.clone(), r.month)) {
            return Err(Error::Row {
                file: "traffic.csv".into(),
                line,
                message: format!("duplicate record for {} {}-{} {}", r.carrier, r.origin_city, r.dest_city, r.month),
            });
        }
        out.push(TrafficRecord {
            carrier: r.carrier,
            carrier_class: r.carrier_class,
            origin_city: CityId(r.origin_city),
            dest_city: CityId(r.dest_city),
            month: r.month,
            revenue_pax: r.revenue_pax,
        });
    }
    Ok(out)
}

#[derive(Deserialize, Serialize)]
struct CodeshareRow {
    origin_city: String,
    dest_city: String,
    start_month: YearMonth,
    end_month: YearMonth,
}

pub fn parse_codeshare<R: Read>(input: R) -> Result<Vec<CodeshareSpan>> {
    let mut out = Vec::new();
    for (line, r) in read_rows::<CodeshareRow, _>("codeshare.csv", input)? {
        if r.end_month < r.start_month {
            return Err(Error::Row {
                file: "codeshare.csv".into(),
                line,
                message: "end_month precedes start_month".into(),
            });
        }
        out.push(CodeshareSpan {
            origin_city: CityId(r.origin_city),
            dest_city: CityId(r.dest_city),
            start_month: r.start_month,
            end_month: r.end_month,
        });
    }
    Ok(out)
}

fn write_rows<T: Serialize, W: Write>(rows: impl IntoIterator<Item = T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cities<W: Write>(reg: &CityRegistry, out: W) -> Result<()> {
    write_rows(
        reg.cities().map(|(id, c)| CityRow {
            city_id: id.0.clone(),
            lat: c.lat,
            lon: c.lon,
        }),
        out,
    )
}

pub fn write_airports<W: Write>(reg: &CityRegistry, out: W) -> Result<()> {
    write_rows(
        reg.airports().map(|(code, city)| AirportRow {
            airport_code: code.clone(),
            city_id: city.0.clone(),
        }),
        out,
    )
}

pub fn write_capacities<W: Write>(reg: &CapacityRegistry, out: W) -> Result<()> {
    write_rows(
        reg.iter().map(|(c, &cap)| CapacityRow {
            city_id: c.0.clone(),
            hourly_capacity: cap,
        }),
        out,
    )
}

pub fn write_traffic<W: Write>(records: &[TrafficRecord], out: W) -> Result<()> {
    write_rows(records, out)
}

pub fn write_codeshare<W: Write>(spans: &[CodeshareSpan], out: W) -> Result<()> {
    write_rows(spans, out)
}

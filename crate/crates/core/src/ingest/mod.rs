//! Input datasets: flight legs, revenue-passenger traffic, city coordinates,
//! airport-to-city mapping, declared airport capacities and codeshare spans.
//!
//! Every CSV reader here validates the row invariants of its record type.
//! Flight rows that fail validation are collected in a reject report so a
//! partially dirty file can still be used; the smaller reference tables are
//! all-or-nothing.

mod flights;
mod registry;

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use flights::{classify_delay, parse_flights, write_flights, FlightParse, Reject, DEFAULT_DELAY_THRESHOLD};
pub use registry::{
    parse_airports, parse_capacities, parse_cities, parse_codeshare, parse_traffic,
    write_airports, write_capacities, write_cities, write_codeshare, write_traffic,
    CapacityRegistry, CityRegistry, CodeshareSpan, Coordinates, TrafficRecord,
};

/// Timestamp format used by every flight file: ISO-8601 at minute resolution.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CarrierClass {
    #[serde(rename = "FSC")]
    Fsc,
    #[serde(rename = "LCC")]
    Lcc,
}

impl FromStr for CarrierClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "FSC" => Ok(Self::Fsc),
            "LCC" => Ok(Self::Lcc),
            other => Err(Error::InvalidArgument(format!("unknown carrier class {other:?}"))),
        }
    }
}

impl fmt::Display for CarrierClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fsc => "FSC",
            Self::Lcc => "LCC",
        })
    }
}

/// Single reported delay cause; only the most relevant one is recorded per flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CauseCode {
    #[serde(rename = "NONE")]
    None,
    #[serde(rename = "WEATHER")]
    Weather,
    #[serde(rename = "INCIDENT")]
    Incident,
    #[serde(rename = "CONNECTION")]
    Connection,
    #[serde(rename = "OTHER")]
    Other,
}

impl FromStr for CauseCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "NONE" | "" => Ok(Self::None),
            "WEATHER" => Ok(Self::Weather),
            "INCIDENT" => Ok(Self::Incident),
            "CONNECTION" => Ok(Self::Connection),
            "OTHER" => Ok(Self::Other),
            other => Err(Error::InvalidArgument(format!("unknown cause code {other:?}"))),
        }
    }
}

impl fmt::Display for CauseCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "NONE",
            Self::Weather => "WEATHER",
            Self::Incident => "INCIDENT",
            Self::Connection => "CONNECTION",
            Self::Other => "OTHER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CityId(pub String);

impl CityId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Directional origin-destination city pair; the market unit of the panel.
/// Serialized as `ORIGIN-DEST`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CityPair {
    pub origin: CityId,
    pub destination: CityId,
}

impl CityPair {
    pub fn new(origin: impl Into<String>, destination: impl Into<String>) -> Self {
        Self {
            origin: CityId(origin.into()),
            destination: CityId(destination.into()),
        }
    }

    pub fn touches(&self, city: &CityId) -> bool {
        &self.origin == city || &self.destination == city
    }
}

impl fmt::Display for CityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.origin, self.destination)
    }
}

impl FromStr for CityPair {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let (o, d) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidArgument(format!("city pair {s:?} is not ORIGIN-DEST")))?;
        Ok(Self::new(o, d))
    }
}

impl Serialize for CityPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CityPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Calendar month. Ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, Error> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn of(ts: &NaiveDateTime) -> Self {
        Self {
            year: ts.year(),
            month: ts.month(),
        }
    }

    /// Months since year 0; consecutive months differ by one.
    pub fn ordinal(&self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ord: i64) -> Self {
        Self {
            year: ord.div_euclid(12) as i32,
            month: ord.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn succ(&self) -> Self {
        Self::from_ordinal(self.ordinal() + 1)
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid year-month")
    }

    pub fn days(&self) -> u32 {
        let next = self.succ().first_day();
        (next - self.first_day()).num_days() as u32
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidArgument(format!("month {s:?} is not YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        Self::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One scheduled flight leg.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlightRecord {
    pub carrier: String,
    pub carrier_class: CarrierClass,
    pub origin_airport: String,
    pub dest_airport: String,
    pub origin_city: CityId,
    pub destination_city: CityId,
    pub flight_number: String,
    pub scheduled_departure: NaiveDateTime,
    pub actual_departure: Option<NaiveDateTime>,
    pub scheduled_arrival: NaiveDateTime,
    pub actual_arrival: Option<NaiveDateTime>,
    pub cancelled: bool,
    pub cause: CauseCode,
}

impl FlightRecord {
    pub fn pair(&self) -> CityPair {
        CityPair {
            origin: self.origin_city.clone(),
            destination: self.destination_city.clone(),
        }
    }

    /// Month the flight belongs to, by scheduled departure.
    pub fn month(&self) -> YearMonth {
        YearMonth::of(&self.scheduled_departure)
    }

    pub fn label(&self) -> String {
        format!(
            "{}{} {}",
            self.carrier,
            self.flight_number,
            self.scheduled_departure.format(TIMESTAMP_FORMAT)
        )
    }
}

/// Signed delays (actual minus scheduled, whole minutes) and threshold flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayStatus {
    pub arrival_delay_minutes: i64,
    pub departure_delay_minutes: i64,
    pub arrival_delayed: bool,
    pub departure_delayed: bool,
}

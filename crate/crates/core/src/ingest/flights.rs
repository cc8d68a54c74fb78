use std::collections::HashSet;
use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{CarrierClass, CauseCode, CityRegistry, DelayStatus, FlightRecord, TIMESTAMP_FORMAT};
use crate::error::{Error, Result};

pub const DEFAULT_DELAY_THRESHOLD: i64 = 15;

const COLUMNS: [&str; 11] = [
    "carrier",
    "carrier_class",
    "origin_airport",
    "dest_airport",
    "flight_no",
    "sched_dep",
    "actual_dep",
    "sched_arr",
    "actual_arr",
    "cancelled",
    "cause_code",
];

/// A flight row that failed validation. `line` is the 1-based physical
/// line in the source file (the header is line 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlightParse {
    /// Accepted records sorted by (scheduled departure, carrier, flight number).
    pub records: Vec<FlightRecord>,
    pub rejects: Vec<Reject>,
    pub rows: usize,
}

fn parse_ts(field: &str, s: &str) -> std::result::Result<NaiveDateTime, String> {
    NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT)
        .map_err(|_| format!("unparseable {field} timestamp {s:?}"))
}

fn parse_opt_ts(field: &str, s: &str) -> std::result::Result<Option<NaiveDateTime>, String> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_ts(field, s).map(Some)
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "true" | "TRUE" | "1" => Ok(true),
        "false" | "FALSE" | "0" | "" => Ok(false),
        other => Err(format!("unparseable cancelled flag {other:?}")),
    }
}

fn parse_row(f: &[&str], cities: &CityRegistry) -> std::result::Result<FlightRecord, String> {
    let carrier = f[0].trim();
    if carrier.is_empty() {
        return Err("empty carrier".into());
    }
    let carrier_class: CarrierClass = f[1].parse().map_err(|e: Error| e.to_string())?;
    let origin_airport = f[2].trim().to_string();
    let dest_airport = f[3].trim().to_string();
    let origin_city = cities
        .city_of_airport(&origin_airport)
        .ok_or_else(|| format!("unknown airport code {origin_airport:?}"))?
        .clone();
    let destination_city = cities
        .city_of_airport(&dest_airport)
        .ok_or_else(|| format!("unknown airport code {dest_airport:?}"))?
        .clone();
    if origin_city == destination_city {
        return Err(format!("origin and destination both in city {origin_city}"));
    }
    let flight_number = f[4].trim().to_string();
    if flight_number.is_empty() {
        return Err("empty flight number".into());
    }
    let scheduled_departure = parse_ts("sched_dep", f[5])?;
    let actual_departure = parse_opt_ts("actual_dep", f[6])?;
    let scheduled_arrival = parse_ts("sched_arr", f[7])?;
    let actual_arrival = parse_opt_ts("actual_arr", f[8])?;
    let cancelled = parse_bool(f[9])?;
    let cause: CauseCode = f[10].parse().map_err(|e: Error| e.to_string())?;

    if scheduled_arrival <= scheduled_departure {
        return Err("scheduled arrival not after scheduled departure".into());
    }
    match (cancelled, actual_departure.is_some(), actual_arrival.is_some()) {
        (false, true, true) | (true, false, false) => {}
        (false, _, _) => return Err("operated flight is missing an actual timestamp".into()),
        (true, _, _) => return Err("cancelled flight carries actual timestamps".into()),
    }
    Ok(FlightRecord {
        carrier: carrier.to_string(),
        carrier_class,
        origin_airport,
        dest_airport,
        origin_city,
        destination_city,
        flight_number,
        scheduled_departure,
        actual_departure,
        scheduled_arrival,
        actual_arrival,
        cancelled,
        cause,
    })
}

/// Parses a flights CSV, resolving airports to cities through `cities`.
///
/// Malformed rows are rejected with their line number rather than failing the
/// whole file; duplicates of (carrier, flight number, scheduled departure)
/// after the first occurrence are rejected as well. An input with no data
/// rows is an error.
pub fn parse_flights<R: Read>(input: R, cities: &CityRegistry) -> Result<FlightParse> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = COLUMNS
        .iter()
        .map(|c| {
            headers.iter().position(|h| h.trim() == *c).ok_or_else(|| Error::Input {
                file: "flights.csv".into(),
                message: format!("missing column {c}"),
            })
        })
        .collect::<Result<_>>()?;

    let mut out = FlightParse::default();
    let mut seen = HashSet::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = match rdr.read_record(&mut record) {
            Ok(more) => more,
            Err(e) => {
                // Broken quoting or invalid UTF-8: reject and keep going.
                let line = e.position().map_or(0, |p| p.line());
                out.rows += 1;
                out.rejects.push(Reject {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !more {
            break;
        }
        out.rows += 1;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            out.rejects.push(Reject {
                line,
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
            continue;
        }
        let fields: Vec<&str> = idx.iter().map(|&i| &record[i]).collect();
        match parse_row(&fields, cities) {
            Ok(rec) => {
                let key = (rec.carrier.clone(), rec.flight_number.clone(), rec.scheduled_departure);
                if seen.insert(key) {
                    out.records.push(rec);
                } else {
                    out.rejects.push(Reject {
                        line,
                        reason: format!("duplicate flight {}", rec.label()),
                    });
                }
            }
            Err(reason) => out.rejects.push(Reject { line, reason }),
        }
    }
    if out.rows == 0 {
        return Err(Error::Input {
            file: "flights.csv".into(),
            message: "no data rows".into(),
        });
    }
    out.records.sort_by(|a, b| {
        (a.scheduled_departure, &a.carrier, &a.flight_number).cmp(&(
            b.scheduled_departure,
            &b.carrier,
            &b.flight_number,
        ))
    });
    Ok(out)
}

fn fmt_opt(ts: &Option<NaiveDateTime>) -> String {
    ts.map(|t| t.format(TIMESTAMP_FORMAT).to_string()).unwrap_or_default()
}

/// Writes records in the flights CSV schema accepted by [`parse_flights`].
pub fn write_flights<W: Write>(records: &[FlightRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([
            r.carrier.as_str(),
            &r.carrier_class.to_string(),
            &r.origin_airport,
            &r.dest_airport,
            &r.flight_number,
            &r.scheduled_departure.format(TIMESTAMP_FORMAT).to_string(),
            &fmt_opt(&r.actual_departure),
            &r.scheduled_arrival.format(TIMESTAMP_FORMAT).to_string(),
            &fmt_opt(&r.actual_arrival),
            if r.cancelled { "true" } else { "false" },
            &r.cause.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Signed arrival and departure delays with strict threshold flags.
pub fn classify_delay(flight: &FlightRecord, threshold: i64) -> Result<DelayStatus> {
    if threshold <= 0 {
        return Err(Error::InvalidArgument(format!("delay threshold must be positive, got {threshold}")));
    }
    let (Some(dep), Some(arr)) = (flight.actual_departure, flight.actual_arrival) else {
        return Err(Error::CancelledFlight(flight.label()));
    };
    if flight.cancelled {
        return Err(Error::CancelledFlight(flight.label()));
    }
    let arrival_delay_minutes = (arr - flight.scheduled_arrival).num_minutes();
    let departure_delay_minutes = (dep - flight.scheduled_departure).num_minutes();
    Ok(DelayStatus {
        arrival_delay_minutes,
        departure_delay_minutes,
        arrival_delayed: arrival_delay_minutes > threshold,
        departure_delayed: departure_delay_minutes > threshold,
    })
}

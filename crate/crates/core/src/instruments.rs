//! Hausman-type instruments: the mean of a market-structure variable over the
//! other city pairs in the same month whose endpoints all lie at least a
//! cutoff distance away from both endpoints of the instrumented pair.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CityId, CityPair, CityRegistry, Coordinates, YearMonth};
use crate::panel::PanelObservation;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

pub const DEFAULT_CUTOFFS_KM: [f64; 3] = [150.0, 300.0, 500.0];

/// Endogenous market-structure columns instrumented by default.
pub const DEFAULT_TARGETS: [&str; 4] = ["hhi_pair", "hhi_max_city", "lcc_pair", "lcc_max_city"];

/// Haversine distance on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn great_circle_km(a: &Coordinates, b: &Coordinates) -> Result<f64> {
    let a = Coordinates::new(a.lat, a.lon)?;
    let b = Coordinates::new(b.lat, b.lon)?;
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    Ok(2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin())
}

/// Symmetric great-circle distances between every pair of registry cities.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    index: HashMap<CityId, usize>,
    ids: Vec<CityId>,
    km: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_registry(cities: &CityRegistry) -> Result<Self> {
        let entries: Vec<(CityId, Coordinates)> = cities.cities().map(|(id, c)| (id.clone(), *c)).collect();
        let n = entries.len();
        let mut km = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = great_circle_km(&entries[i].1, &entries[j].1)?;
                km[i * n + j] = d;
                km[j * n + i] = d;
            }
        }
        let ids: Vec<CityId> = entries.into_iter().map(|(id, _)| id).collect();
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(Self { index, ids, km })
    }

    pub fn cities(&self) -> &[CityId] {
        &self.ids
    }

    pub fn get(&self, a: &CityId, b: &CityId) -> Option<f64> {
        let n = self.ids.len();
        Some(self.km[self.index.get(a)? * n + self.index.get(b)?])
    }

    /// Smallest of the four endpoint-to-endpoint distances of two pairs.
    pub fn pair_separation(&self, k: &CityPair, other: &CityPair) -> Result<f64> {
        let d = |a: &CityId, b: &CityId| {
            self.get(a, b)
                .ok_or_else(|| Error::InvalidArgument(format!("city {a} or {b} missing from the registry")))
        };
        Ok(d(&k.origin, &other.origin)?
            .min(d(&k.origin, &other.destination)?)
            .min(d(&k.destination, &other.origin)?)
            .min(d(&k.destination, &other.destination)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentSpec {
    pub target: String,
    pub cutoffs_km: Vec<f64>,
}

impl InstrumentSpec {
    pub fn new(target: impl Into<String>, cutoffs_km: Vec<f64>) -> Result<Self> {
        let spec = Self {
            target: target.into(),
            cutoffs_km,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_default_cutoffs(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            cutoffs_km: DEFAULT_CUTOFFS_KM.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoffs_km.is_empty() {
            return Err(Error::InvalidArgument(format!("no cutoffs for instrument target {}", self.target)));
        }
        if self.cutoffs_km.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidArgument("cutoffs must be finite and non-negative".into()));
        }
        if self.cutoffs_km.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("cutoffs must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        self.cutoffs_km.iter().map(|d| instrument_label(&self.target, *d)).collect()
    }
}

pub fn instrument_label(target: &str, cutoff_km: f64) -> String {
    format!("{target}__ge{cutoff_km}km")
}

/// Mean of `target` at the month of `panel[row]` over other pairs separated
/// from it by at least `cutoff_km`. `None` when no pair qualifies.
pub fn hausman_instrument(
    panel: &[PanelObservation],
    distances: &DistanceMatrix,
    target: &str,
    row: usize,
    cutoff_km: f64,
) -> Result<Option<f64>> {
    let obs = panel
        .get(row)
        .ok_or_else(|| Error::InvalidArgument(format!("row {row} outside the panel")))?;
    let same_month: Vec<&PanelObservation> = panel.iter().filter(|o| o.month == obs.month).collect();
    instrument_value(&same_month, distances, target, &obs.pair_id, cutoff_km)
}

fn instrument_value(
    same_month: &[&PanelObservation],
    distances: &DistanceMatrix,
    target: &str,
    pair: &CityPair,
    cutoff_km: f64,
) -> Result<Option<f64>> {
    let (mut sum, mut count) = (0.0, 0usize);
    for other in same_month {
        if &other.pair_id == pair || distances.pair_separation(pair, &other.pair_id)? < cutoff_km {
            continue;
        }
        if let Some(v) = other.value(target)? {
            sum += v;
            count += 1;
        }
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Excluded-instrument columns aligned with panel rows; `None` marks a cell
/// with no qualifying distant pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentMatrix {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl InstrumentMatrix {
    pub fn column(&self, label: &str) -> Option<Vec<Option<f64>>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Rows with at least one missing instrument.
    pub fn incomplete_rows(&self) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.iter().any(Option::is_none))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, panel: &[PanelObservation], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["pair_id".to_string(), "month".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (obs, row) in panel.iter().zip(&self.rows) {
            let mut rec = vec![obs.pair_id.to_string(), obs.month.to_string()];
            rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One column per (target, cutoff), in spec order.
pub fn build_instrument_matrix(
    panel: &[PanelObservation],
    distances: &DistanceMatrix,
    specs: &[InstrumentSpec],
) -> Result<InstrumentMatrix> {
    if let Some(first) = panel.first() {
        for s in specs {
            s.validate()?;
            first.value(&s.target)?;
        }
    }
    let mut by_month: BTreeMap<YearMonth, Vec<&PanelObservation>> = BTreeMap::new();
    for o in panel {
        by_month.entry(o.month).or_default().push(o);
    }
    let labels = specs.iter().flat_map(InstrumentSpec::labels).collect();
    let rows = panel
        .par_iter()
        .map(|obs| {
            let same_month = &by_month[&obs.month];
            let mut row = Vec::new();
            for s in specs {
                for &d in &s.cutoffs_km {
                    row.push(instrument_value(same_month, distances, &s.target, &obs.pair_id, d)?);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = InstrumentMatrix { labels, rows };
    let missing = m.incomplete_rows().len();
    if missing > 0 {
        log::info!("{missing} panel cells lack a qualifying distant pair for some instrument");
    }
    Ok(m)
}

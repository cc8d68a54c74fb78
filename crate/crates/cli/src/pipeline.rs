//! Ingest, panel, instruments, design matrices and estimation for one
//! configuration.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use flightdelay::diagnostics::estimate_with_diagnostics;
use flightdelay::ingest::{
    parse_airports, parse_capacities, parse_cities, parse_codeshare, parse_flights, parse_traffic, CapacityRegistry,
    CityRegistry, CodeshareSpan, Reject,
};
use flightdelay::instruments::{build_instrument_matrix, DistanceMatrix, InstrumentMatrix, InstrumentSpec};
use flightdelay::linalg::{Matrix, Vector};
use flightdelay::panel::{build_panel, PanelConfig, PanelInputs};
use flightdelay::synthlab::{generate_market, MarketScenario};
use flightdelay::{CityPair, EstimationProblem, EstimationResult, Estimator, FlightRecord, Panel, TrafficRecord};

use crate::config::{InputFiles, ModelSpec, Regressand, RunConfig};

/// Parsed input tables.
#[derive(Debug, Clone)]
pub struct MarketInputs {
    pub cities: CityRegistry,
    pub capacities: CapacityRegistry,
    pub flights: Vec<FlightRecord>,
    pub traffic: Vec<TrafficRecord>,
    pub codeshare: Vec<CodeshareSpan>,
    pub rejects: Vec<Reject>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

pub fn read_inputs(files: &InputFiles) -> Result<MarketInputs> {
    let at = |p: &Path| files.resolve(p);
    let mut cities = parse_cities(open(&at(&files.cities))?).context("ingest")?;
    parse_airports(open(&at(&files.airports))?, &mut cities).context("ingest")?;
    let capacities = parse_capacities(open(&at(&files.capacity))?).context("ingest")?;
    let traffic = parse_traffic(open(&at(&files.traffic))?).context("ingest")?;
    let codeshare = match &files.codeshare {
        Some(p) if at(p).exists() => parse_codeshare(open(&at(p))?).context("ingest")?,
        Some(p) => bail!("codeshare file {} not found", at(p).display()),
        None => {
            let p = at(Path::new("codeshare.csv"));
            if p.exists() {
                parse_codeshare(open(&p)?).context("ingest")?
            } else {
                vec![]
            }
        }
    };
    let parsed = parse_flights(open(&at(&files.flights))?, &cities).context("ingest")?;
    for r in &parsed.rejects {
        log::warn!("flights.csv line {}: {}", r.line, r.reason);
    }
    Ok(MarketInputs {
        cities,
        capacities,
        flights: parsed.records,
        traffic,
        codeshare,
        rejects: parsed.rejects,
    })
}

/// The demo market generated from `seed`.
pub fn synth_inputs(seed: u64) -> Result<MarketInputs> {
    let m = generate_market(&MarketScenario::demo(seed)).context("synthlab")?;
    Ok(MarketInputs {
        cities: m.cities,
        capacities: m.capacities,
        flights: m.flights,
        traffic: m.traffic,
        codeshare: m.codeshare,
        rejects: vec![],
    })
}

pub fn load_inputs(cfg: &RunConfig) -> Result<MarketInputs> {
    match (&cfg.inputs, &cfg.synth) {
        (Some(files), _) => read_inputs(files),
        (None, Some(s)) => synth_inputs(s.seed),
        (None, None) => bail!("config needs an [inputs] or a [synth] section"),
    }
}

/// Panel and instrument matrix shared by every column of a run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub panel: Panel,
    pub instruments: InstrumentMatrix,
    pub threshold: i64,
}

pub fn prepare(inputs: &MarketInputs, cfg: &RunConfig) -> Result<Prepared> {
    let panel_cfg = PanelConfig {
        threshold: cfg.panel.threshold,
        odds_continuity_correction: cfg.panel.odds_continuity_correction,
        ..PanelConfig::default()
    };
    let panel = build_panel(
        &PanelInputs {
            flights: &inputs.flights,
            traffic: &inputs.traffic,
            capacities: &inputs.capacities,
            codeshare: &inputs.codeshare,
        },
        &panel_cfg,
    )
    .context("panel")?;
    if panel.is_empty() {
        bail!("panel: no observations");
    }
    let distances = DistanceMatrix::from_registry(&inputs.cities).context("instruments")?;
    let specs = cfg
        .instrument_targets()
        .into_iter()
        .map(|t| InstrumentSpec::new(t, cfg.instruments.cutoffs_km.clone()))
        .collect::<flightdelay::Result<Vec<_>>>()
        .context("instruments")?;
    let instruments = build_instrument_matrix(&panel.observations, &distances, &specs).context("instruments")?;
    Ok(Prepared { panel, instruments, threshold: cfg.panel.threshold })
}

/// Estimation problem of one column and the panel rows it uses.
#[derive(Debug, Clone)]
pub struct Design {
    pub problem: EstimationProblem,
    pub rows: Vec<usize>,
    /// Cells without a defined regressand (log-odds at 0 or 1).
    pub undefined_regressand: usize,
    /// Cells lacking a selected instrument.
    pub missing_instruments: usize,
}

/// Excluded-instrument labels of a column: the explicit selection, or every
/// column built for the declared endogenous regressors.
pub fn instrument_labels(prepared: &Prepared, spec: &ModelSpec) -> Result<Vec<String>> {
    if spec.model.active_endogenous().is_empty() {
        return Ok(vec![]);
    }
    match &spec.instruments {
        Some(sel) => {
            for s in sel {
                if !prepared.instruments.labels.contains(s) {
                    bail!("instruments: {s:?} was not built (available: {})", prepared.instruments.labels.join(", "));
                }
            }
            Ok(sel.clone())
        }
        None => Ok(prepared
            .instruments
            .labels
            .iter()
            .filter(|l| spec.model.endogenous.iter().any(|e| l.starts_with(&format!("{e}__ge"))))
            .cloned()
            .collect()),
    }
}

/// Panel rows usable for `regressand`; the rest have undefined log-odds.
pub fn defined_rows(prepared: &Prepared, regressand: Regressand) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for (i, o) in prepared.panel.observations.iter().enumerate() {
        if o.value(regressand.column())?.is_some() {
            rows.push(i);
        }
    }
    Ok(rows)
}

pub fn build_design(prepared: &Prepared, spec: &ModelSpec, cfg: &RunConfig) -> Result<Design> {
    let m = &spec.model;
    let obs = &prepared.panel.observations;
    let defined = defined_rows(prepared, m.regressand)?;
    let undefined_regressand = obs.len() - defined.len();
    let labels = instrument_labels(prepared, spec)?;
    let cols: Vec<Vec<Option<f64>>> = labels
        .iter()
        .map(|l| prepared.instruments.column(l).ok_or_else(|| anyhow!("instrument column {l} missing")))
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = defined.iter().copied().filter(|&i| cols.iter().all(|c| c[i].is_some())).collect();
    let missing_instruments = defined.len() - rows.len();
    if rows.is_empty() {
        bail!("design: no usable observations for {}", m.regressand);
    }

    let included = m.included();
    let endog = m.active_endogenous();
    let mut x_names = vec!["const".to_string()];
    x_names.extend(included.iter().cloned());
    let n = rows.len();
    let mut x = Matrix::zeros(n, x_names.len());
    let mut y = Vector::zeros(n);
    let mut z = Matrix::zeros(n, labels.len());
    let mut pair_ids: BTreeMap<&CityPair, usize> = BTreeMap::new();
    for &i in &rows {
        let next = pair_ids.len();
        pair_ids.entry(&obs[i].pair_id).or_insert(next);
    }
    let mut unit = Vec::with_capacity(n);
    let mut time = Vec::with_capacity(n);
    for (r, &i) in rows.iter().enumerate() {
        let o = &obs[i];
        y[r] = o.value(m.regressand.column())?.unwrap_or(f64::NAN);
        x[(r, 0)] = 1.0;
        for (j, name) in included.iter().enumerate() {
            x[(r, j + 1)] = o.value(name)?.ok_or_else(|| anyhow!("design: {name} undefined"))?;
        }
        for (j, c) in cols.iter().enumerate() {
            z[(r, j)] = c[i].unwrap_or(f64::NAN);
        }
        unit.push(pair_ids[&o.pair_id]);
        time.push(o.month.ordinal());
    }
    let endogenous = endog.iter().map(|e| x_names.iter().position(|n| n == e).unwrap_or(0)).collect();
    let problem = EstimationProblem::new(m.regressand.to_string(), y, x_names, x, endogenous, labels, z, unit, time)
        .context("design")?
        .with_fixed_effects(cfg.fixed_effects.spec())
        .with_bandwidth(cfg.hac.bandwidth)
        .with_small_sample(cfg.hac.small_sample);
    Ok(Design { problem, rows, undefined_regressand, missing_instruments })
}

/// One column of a results table, successful or not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnReport {
    pub label: String,
    pub heading: String,
    pub regressand: Regressand,
    pub estimator: Estimator,
    #[serde(default)]
    pub result: Option<EstimationResult>,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub undefined_regressand: usize,
    #[serde(default)]
    pub missing_instruments: usize,
}

/// Everything a table renderer needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableDocument {
    pub threshold: i64,
    pub columns: Vec<ColumnReport>,
}

pub fn run_column(prepared: &Prepared, spec: &ModelSpec, cfg: &RunConfig) -> ColumnReport {
    let mut report = ColumnReport {
        label: spec.label.clone(),
        heading: spec.model.regressand.heading(prepared.threshold),
        regressand: spec.model.regressand,
        estimator: spec.model.estimator,
        result: None,
        error: None,
        undefined_regressand: 0,
        missing_instruments: 0,
    };
    let design = match build_design(prepared, spec, cfg) {
        Ok(d) => d,
        Err(e) => {
            report.error = Some(format!("{e:#}"));
            return report;
        }
    };
    report.undefined_regressand = design.undefined_regressand;
    report.missing_instruments = design.missing_instruments;
    match estimate_with_diagnostics(&design.problem, spec.model.estimator, &cfg.diagnostics.battery()) {
        Ok(r) => report.result = Some(r),
        Err(e) => report.error = Some(format!("estimators: {e}")),
    }
    report
}

/// Runs every column in parallel; failures are recorded per column.
pub fn replicate_suite(prepared: &Prepared, specs: &[ModelSpec], cfg: &RunConfig) -> Result<TableDocument> {
    if specs.is_empty() {
        bail!("suite has no columns");
    }
    let columns = specs.par_iter().map(|s| run_column(prepared, s, cfg)).collect();
    Ok(TableDocument { threshold: prepared.threshold, columns })
}

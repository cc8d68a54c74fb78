//! Command-line driver: configuration, the ingest-to-table pipeline and
//! rendering.

pub mod config;
pub mod pipeline;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use flightdelay::panel::{describe, write_panel_csv, Descriptives, REGRESSORS};

pub use config::{ColumnSpec, Format, ModelSpec, Regressand, RunConfig};
pub use pipeline::{ColumnReport, MarketInputs, Prepared, TableDocument};

/// The six delay measures, in table order.
pub const REGRESSANDS: [Regressand; 6] = [
    Regressand::Odds,
    Regressand::Mins,
    Regressand::MinsGt,
    Regressand::OddsDep,
    Regressand::MinsDep,
    Regressand::MinsDepGt,
];

/// Columns summarized in `descriptives.txt`: delay measures then regressors.
pub fn descriptive_columns() -> Vec<&'static str> {
    REGRESSANDS.iter().map(|r| r.column()).chain(REGRESSORS.iter().copied()).collect()
}

/// `[[columns]]` of the config, or the `[model]` design once per delay
/// measure when none are given.
pub fn suite_specs(cfg: &RunConfig) -> Vec<ModelSpec> {
    if !cfg.columns.is_empty() {
        return cfg.column_specs();
    }
    let base = cfg.base_spec();
    REGRESSANDS
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut s = base.clone();
            s.label = format!("({})", i + 1);
            s.model.regressand = *r;
            s
        })
        .collect()
}

/// Everything one invocation produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub document: TableDocument,
    pub descriptives: Descriptives,
}

/// Runs the given columns on the configured data.
pub fn execute(cfg: &RunConfig, specs: &[ModelSpec]) -> Result<RunOutput> {
    let inputs = pipeline::load_inputs(cfg)?;
    let prepared = pipeline::prepare(&inputs, cfg)?;
    log::info!(
        "panel: {} cells ({} dropped), {} instrument columns",
        prepared.panel.len(),
        prepared.panel.dropped.len(),
        prepared.instruments.labels.len()
    );
    let document = pipeline::replicate_suite(&prepared, specs, cfg)?;
    let descriptives = describe(&prepared.panel.observations, &descriptive_columns()).context("panel")?;
    Ok(RunOutput { prepared, document, descriptives })
}

/// Pretty JSON with a trailing newline.
pub fn render_json(doc: &TableDocument) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_json(text: &str) -> Result<TableDocument> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| anyhow::anyhow!("result field `{}`: {}", e.path(), e.inner()))
}

/// Table text: the regression table followed by the full test list.
pub fn render_text(doc: &TableDocument) -> String {
    let mut s = table::render_table(doc);
    let tests = table::render_tests(doc);
    if !tests.is_empty() {
        s.push('\n');
        s.push_str(&tests);
    }
    s
}

/// Writes the artifacts selected by `formats` into `dir`; returns their paths.
pub fn write_outputs(out: &RunOutput, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let wants = |f: Format| formats.iter().any(|g| g.includes(f));
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
        Ok(())
    };
    if wants(Format::Text) {
        put("table.txt", render_text(&out.document).as_bytes())?;
        put("descriptives.txt", table::render_descriptives(&out.descriptives).as_bytes())?;
    }
    if wants(Format::Json) {
        put("result.json", render_json(&out.document)?.as_bytes())?;
    }
    if wants(Format::Csv) {
        put("table.csv", table::render_csv(&out.document).as_bytes())?;
        let mut panel = Vec::new();
        write_panel_csv(&out.prepared.panel.observations, &mut panel).context("panel")?;
        put("panel.csv", &panel)?;
        let mut inst = Vec::new();
        out.prepared.instruments.write_csv(&out.prepared.panel.observations, &mut inst).context("instruments")?;
        put("instruments.csv", &inst)?;
    }
    Ok(written)
}

/// Sample single-model configuration reading the files in its directory.
pub const SAMPLE_RUN_CONFIG: &str = r#"# Single regression on the CSV files next to this file.
[inputs]
dir = "."

[panel]
threshold = 15

[model]
regressand = "ODDS"
estimator = "gmm2s"

[instruments]
cutoffs_km = [150.0, 300.0, 500.0]

[fixed_effects]
unit = true
time = true

[hac]
bandwidth = "auto"

[output]
dir = "out"
formats = ["all"]
"#;

/// Sample suite: one column per delay measure, plus LIML and OLS variants.
pub const SAMPLE_SUITE_CONFIG: &str = r#"# Results table on the CSV files next to this file.
[inputs]
dir = "."

[model]
estimator = "gmm2s"

[output]
dir = "out-suite"

[[columns]]
regressand = "ODDS"

[[columns]]
regressand = "MINS"

[[columns]]
regressand = "MINS_GT"

[[columns]]
regressand = "ODDS"
estimator = "liml"

[[columns]]
regressand = "ODDS"
estimator = "ols"

[[columns]]
regressand = "ODDS"
drop = ["hhi_max_city"]
"#;

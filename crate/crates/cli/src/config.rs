//! Run configuration read from TOML. Unknown keys are rejected and every
//! error names the offending field path.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use flightdelay::diagnostics::{AuxiliarySet, BatteryOptions, HetVariant, DEFAULT_CH_LAGS};
use flightdelay::estimators::Bandwidth;
use flightdelay::instruments::{DEFAULT_CUTOFFS_KM, DEFAULT_TARGETS};
use flightdelay::panel::{NUMERIC_COLUMNS, REGRESSORS};
use flightdelay::{Estimator, FixedEffectsImpl, FixedEffectsSpec};

/// Delay measure on the left-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regressand {
    #[serde(rename = "ODDS")]
    Odds,
    #[serde(rename = "MINS")]
    Mins,
    #[serde(rename = "MINS_GT")]
    MinsGt,
    #[serde(rename = "ODDSD")]
    OddsDep,
    #[serde(rename = "MINSD")]
    MinsDep,
    #[serde(rename = "MINSD_GT")]
    MinsDepGt,
}

impl Regressand {
    /// Panel column holding the measure.
    pub fn column(&self) -> &'static str {
        match self {
            Self::Odds => "odds",
            Self::Mins => "mins",
            Self::MinsGt => "mins_gt_threshold",
            Self::OddsDep => "odds_dep",
            Self::MinsDep => "mins_dep",
            Self::MinsDepGt => "mins_dep_gt_threshold",
        }
    }

    /// Column heading, e.g. `MINS > 15`.
    pub fn heading(&self, threshold: i64) -> String {
        match self {
            Self::Odds => "ODDS".into(),
            Self::Mins => "MINS".into(),
            Self::MinsGt => format!("MINS > {threshold}"),
            Self::OddsDep => "ODDSD".into(),
            Self::MinsDep => "MINSD".into(),
            Self::MinsDepGt => format!("MINSD > {threshold}"),
        }
    }
}

impl fmt::Display for Regressand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Odds => "ODDS",
            Self::Mins => "MINS",
            Self::MinsGt => "MINS_GT",
            Self::OddsDep => "ODDSD",
            Self::MinsDep => "MINSD",
            Self::MinsDepGt => "MINSD_GT",
        })
    }
}

/// Input CSV files. Relative paths resolve against `dir`, which itself
/// resolves against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFiles {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_flights")]
    pub flights: PathBuf,
    #[serde(default = "default_traffic")]
    pub traffic: PathBuf,
    #[serde(default = "default_cities")]
    pub cities: PathBuf,
    #[serde(default = "default_airports")]
    pub airports: PathBuf,
    #[serde(default = "default_capacity")]
    pub capacity: PathBuf,
    /// Defaults to `codeshare.csv` when that file exists; no agreements
    /// otherwise.
    #[serde(default)]
    pub codeshare: Option<PathBuf>,
}

fn default_flights() -> PathBuf {
    "flights.csv".into()
}
fn default_traffic() -> PathBuf {
    "traffic.csv".into()
}
fn default_cities() -> PathBuf {
    "cities.csv".into()
}
fn default_airports() -> PathBuf {
    "airports.csv".into()
}
fn default_capacity() -> PathBuf {
    "capacity.csv".into()
}

impl InputFiles {
    /// Files in `dir` under their standard names.
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            flights: default_flights(),
            traffic: default_traffic(),
            cities: default_cities(),
            airports: default_airports(),
            capacity: default_capacity(),
            codeshare: Some("codeshare.csv".into()),
        }
    }

    pub fn resolve(&self, file: &Path) -> PathBuf {
        match &self.dir {
            Some(d) => d.join(file),
            None => file.to_path_buf(),
        }
    }
}

/// Generate the demo market in memory instead of reading files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSection {
    #[serde(default = "default_threshold")]
    pub threshold: i64,
    #[serde(default)]
    pub odds_continuity_correction: bool,
}

fn default_threshold() -> i64 {
    flightdelay::ingest::DEFAULT_DELAY_THRESHOLD
}

impl Default for PanelSection {
    fn default() -> Self {
        Self { threshold: default_threshold(), odds_continuity_correction: false }
    }
}

/// One regression: left-hand side, estimator and design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_regressand")]
    pub regressand: Regressand,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default = "default_regressors")]
    pub regressors: Vec<String>,
    /// Removed from `regressors`; drop-column designs.
    #[serde(default)]
    pub drop: Vec<String>,
    #[serde(default = "default_endogenous")]
    pub endogenous: Vec<String>,
}

fn default_regressand() -> Regressand {
    Regressand::Odds
}
fn default_estimator() -> Estimator {
    Estimator::Gmm2s
}
fn default_regressors() -> Vec<String> {
    REGRESSORS.iter().map(|s| s.to_string()).collect()
}
fn default_endogenous() -> Vec<String> {
    DEFAULT_TARGETS.iter().map(|s| s.to_string()).collect()
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            regressand: default_regressand(),
            estimator: default_estimator(),
            regressors: default_regressors(),
            drop: vec![],
            endogenous: default_endogenous(),
        }
    }
}

impl ModelSection {
    /// Regressors after drops, in declared order.
    pub fn included(&self) -> Vec<String> {
        self.regressors.iter().filter(|r| !self.drop.contains(r)).cloned().collect()
    }

    /// Endogenous regressors still included; empty for OLS.
    pub fn active_endogenous(&self) -> Vec<String> {
        if self.estimator == Estimator::Ols {
            return vec![];
        }
        let inc = self.included();
        self.endogenous.iter().filter(|e| inc.contains(e)).cloned().collect()
    }

    pub fn validate(&self) -> Result<()> {
        let measures = ["odds", "mins", "mins_gt_threshold", "odds_dep", "mins_dep", "mins_dep_gt_threshold"];
        for r in self.regressors.iter().chain(&self.drop).chain(&self.endogenous) {
            if !NUMERIC_COLUMNS.contains(&r.as_str()) {
                bail!("model: unknown panel column {r:?}");
            }
            if measures.contains(&r.as_str()) {
                bail!("model: delay measure {r:?} cannot be a regressor");
            }
        }
        let included = self.included();
        if included.is_empty() {
            bail!("model: no regressors left after drops");
        }
        for (i, r) in included.iter().enumerate() {
            if included[..i].contains(r) {
                bail!("model.regressors: {r:?} listed twice");
            }
        }
        for e in &self.endogenous {
            if !self.regressors.contains(e) {
                bail!("model.endogenous: {e:?} is not among the regressors");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentSection {
    #[serde(default = "default_cutoffs")]
    pub cutoffs_km: Vec<f64>,
    /// Instrumented columns; defaults to the endogenous set.
    #[serde(default)]
    pub targets: Option<Vec<String>>,
    /// Explicit `<target>__ge<D>km` subset; defaults to every column built.
    #[serde(default)]
    pub select: Option<Vec<String>>,
}

fn default_cutoffs() -> Vec<f64> {
    DEFAULT_CUTOFFS_KM.to_vec()
}

impl Default for InstrumentSection {
    fn default() -> Self {
        Self { cutoffs_km: default_cutoffs(), targets: None, select: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedEffectsSection {
    #[serde(default = "yes")]
    pub unit: bool,
    #[serde(default = "yes")]
    pub time: bool,
    #[serde(default)]
    pub implementation: FixedEffectsImpl,
}

fn yes() -> bool {
    true
}

impl Default for FixedEffectsSection {
    fn default() -> Self {
        Self { unit: true, time: true, implementation: FixedEffectsImpl::default() }
    }
}

impl FixedEffectsSection {
    pub fn spec(&self) -> FixedEffectsSpec {
        FixedEffectsSpec { unit_effects: self.unit, time_effects: self.time, implementation: self.implementation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HacSection {
    #[serde(default)]
    pub bandwidth: Bandwidth,
    #[serde(default = "yes")]
    pub small_sample: bool,
}

impl Default for HacSection {
    fn default() -> Self {
        Self { bandwidth: Bandwidth::CubeRoot, small_sample: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HetTest {
    pub variant: HetVariant,
    #[serde(default = "default_aux")]
    pub auxiliary: AuxiliarySet,
}

fn default_aux() -> AuxiliarySet {
    AuxiliarySet::Levels
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "default_ch_lags")]
    pub ch_lags: Vec<usize>,
    #[serde(default = "default_het")]
    pub heteroscedasticity: Vec<HetTest>,
}

fn default_ch_lags() -> Vec<usize> {
    DEFAULT_CH_LAGS.to_vec()
}

fn default_het() -> Vec<HetTest> {
    BatteryOptions::default()
        .heteroscedasticity
        .into_iter()
        .map(|(variant, auxiliary)| HetTest { variant, auxiliary })
        .collect()
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { ch_lags: default_ch_lags(), heteroscedasticity: default_het() }
    }
}

impl DiagnosticsSection {
    pub fn battery(&self) -> BatteryOptions {
        BatteryOptions {
            ch_lags: self.ch_lags.clone(),
            heteroscedasticity: self.heteroscedasticity.iter().map(|h| (h.variant, h.auxiliary)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
    All,
}

impl Format {
    pub fn includes(&self, other: Format) -> bool {
        *self == Format::All || *self == other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_out() -> PathBuf {
    "out".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::All]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out(), formats: default_formats() }
    }
}

/// Column overrides of a suite, applied on top of `[model]` and
/// `[instruments]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub regressand: Option<Regressand>,
    #[serde(default)]
    pub estimator: Option<Estimator>,
    #[serde(default)]
    pub regressors: Option<Vec<String>>,
    #[serde(default)]
    pub drop: Option<Vec<String>>,
    #[serde(default)]
    pub endogenous: Option<Vec<String>>,
    #[serde(default)]
    pub instruments: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub inputs: Option<InputFiles>,
    #[serde(default)]
    pub synth: Option<SynthSection>,
    #[serde(default)]
    pub panel: PanelSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub instruments: InstrumentSection,
    #[serde(default)]
    pub fixed_effects: FixedEffectsSection,
    #[serde(default)]
    pub hac: HacSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Suite columns; `run` ignores them.
    #[serde(default)]
    pub columns: Vec<ColumnSpec>,
}

/// A fully specified regression column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub label: String,
    pub model: ModelSection,
    pub instruments: Option<Vec<String>>,
}

impl RunConfig {
    /// Parses TOML, reporting the field path of any error.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).context("config is not valid TOML")?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("config field `{path}`: {}", e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`; relative input and output paths become relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(inputs) = &mut cfg.inputs {
            inputs.dir = Some(match &inputs.dir {
                Some(d) => base.join(d),
                None => base.to_path_buf(),
            });
        }
        cfg.output.dir = base.join(&cfg.output.dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.inputs, &self.synth) {
            (None, None) => bail!("config needs an [inputs] or a [synth] section"),
            (Some(_), Some(_)) => bail!("config has both [inputs] and [synth]; choose one"),
            _ => {}
        }
        if self.panel.threshold <= 0 {
            bail!("panel.threshold must be positive, got {}", self.panel.threshold);
        }
        self.model.validate()?;
        if self.instruments.cutoffs_km.is_empty() || self.instruments.cutoffs_km.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            bail!("instruments.cutoffs_km must be a non-empty list of non-negative distances");
        }
        if let Some(t) = &self.instruments.targets {
            for c in t {
                if !NUMERIC_COLUMNS.contains(&c.as_str()) {
                    bail!("instruments.targets: unknown panel column {c:?}");
                }
            }
        }
        if self.diagnostics.ch_lags.contains(&0) {
            bail!("diagnostics.ch_lags: lags start at 1");
        }
        if self.output.formats.is_empty() {
            bail!("output.formats is empty");
        }
        for (i, c) in self.columns.iter().enumerate() {
            self.column_model(c)
                .validate()
                .with_context(|| format!("columns[{i}]"))?;
        }
        Ok(())
    }

    fn column_model(&self, c: &ColumnSpec) -> ModelSection {
        let mut m = self.model.clone();
        if let Some(r) = c.regressand {
            m.regressand = r;
        }
        if let Some(e) = c.estimator {
            m.estimator = e;
        }
        if let Some(r) = &c.regressors {
            m.regressors = r.clone();
        }
        if let Some(d) = &c.drop {
            m.drop = d.clone();
        }
        if let Some(e) = &c.endogenous {
            m.endogenous = e.clone();
        }
        m
    }

    /// The `[model]` section as a single column.
    pub fn base_spec(&self) -> ModelSpec {
        ModelSpec { label: "(1)".into(), model: self.model.clone(), instruments: self.instruments.select.clone() }
    }

    /// One spec per `[[columns]]` entry, labelled `(1)`, `(2)`, ... unless
    /// given a label.
    pub fn column_specs(&self) -> Vec<ModelSpec> {
        self.columns
            .iter()
            .enumerate()
            .map(|(i, c)| ModelSpec {
                label: c.label.clone().unwrap_or_else(|| format!("({})", i + 1)),
                model: self.column_model(c),
                instruments: c.instruments.clone().or_else(|| self.instruments.select.clone()),
            })
            .collect()
    }

    /// Instrumented columns: explicit targets or the union of every
    /// column's endogenous set.
    pub fn instrument_targets(&self) -> Vec<String> {
        if let Some(t) = &self.instruments.targets {
            return t.clone();
        }
        let mut out: Vec<String> = Vec::new();
        let specs = std::iter::once(self.base_spec()).chain(self.column_specs());
        for s in specs {
            for e in &s.model.endogenous {
                if !out.contains(e) {
                    out.push(e.clone());
                }
            }
        }
        out
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.iter().any(|g| g.includes(f))
    }
}

//! End-to-end determinism: identical inputs give byte-identical artifacts
//! across repeated runs and thread counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use flightdelay::synthlab::{generate_market, MarketScenario};
use flightdelay_cli::config::{InputFiles, RunConfig};
use flightdelay_cli::{execute, suite_specs, write_outputs, Format};

type Artifacts = BTreeMap<String, Vec<u8>>;

fn run_once(cfg: &RunConfig, out: &Path) -> Result<Artifacts, String> {
    let specs = suite_specs(cfg);
    let result = execute(cfg, &specs).map_err(|e| format!("{e:#}"))?;
    if let Some(c) = result.document.columns.iter().find(|c| c.result.is_none()) {
        return Err(format!("column {} failed: {}", c.label, c.error.clone().unwrap_or_default()));
    }
    let paths = write_outputs(&result, out, &[Format::All]).map_err(|e| format!("{e:#}"))?;
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            fs::read(&p).map(|b| (name, b)).map_err(|e| e.to_string())
        })
        .collect()
}

fn in_pool(threads: usize, cfg: &RunConfig, out: &Path) -> Result<Artifacts, String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
    pool.install(|| run_once(cfg, out))
}

pub fn determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    fs::create_dir_all(&data).map_err(|e| e.to_string())?;
    let market = generate_market(&MarketScenario::demo(super::MASTER)).map_err(|e| e.to_string())?;
    market.write_csvs(&data).map_err(|e| e.to_string())?;
    let cfg = RunConfig { inputs: Some(InputFiles::in_dir(&data)), ..RunConfig::default() };

    let runs = [
        ("default pool", None),
        ("default pool again", None),
        ("1 thread", Some(1)),
        ("4 threads", Some(4)),
    ];
    let mut reference: Option<Artifacts> = None;
    for (i, (name, threads)) in runs.iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let artifacts = match threads {
            Some(n) => in_pool(*n, &cfg, &out)?,
            None => run_once(&cfg, &out)?,
        };
        match &reference {
            None => reference = Some(artifacts),
            Some(r) => {
                for (file, bytes) in r {
                    if artifacts.get(file) != Some(bytes) {
                        return Err(format!("{file} differs under {name}"));
                    }
                }
            }
        }
    }
    let r = reference.unwrap_or_default();
    let bytes: usize = r.values().map(Vec::len).sum();
    Ok(format!(
        "{} artifacts ({bytes} bytes) identical over 2 runs and 1/4-thread pools: {}",
        r.len(),
        r.keys().cloned().collect::<Vec<_>>().join(", ")
    ))
}

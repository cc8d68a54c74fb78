use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use flightdelay::synthlab::{generate_market, MarketScenario};
use flightdelay_cli::{
    execute, parse_json, render_text, suite_specs, write_outputs, Format, RunConfig, SAMPLE_RUN_CONFIG,
    SAMPLE_SUITE_CONFIG,
};

#[derive(Parser)]
#[command(name = "flightdelay", version, about = "Route-month delay panels and panel IV estimation")]
struct Cli {
    /// Worker threads for the estimation pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Artifacts to write; overrides `[output] formats`.
    #[arg(long, value_enum)]
    format: Vec<Format>,
    /// Generate the demo market from this seed instead of the configured
    /// data source.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the `[model]` specification.
    Run(RunArgs),
    /// Estimate every `[[columns]]` entry (or one column per delay measure)
    /// into one table.
    Suite(RunArgs),
    /// Write a seeded synthetic market and sample configurations.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Re-render a `result.json` as a text table.
    Render {
        json: PathBuf,
        /// Write here instead of standard output.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn load(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.inputs = None;
        cfg.synth = Some(flightdelay_cli::config::SynthSection { seed });
    }
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    if !args.format.is_empty() {
        cfg.output.formats = args.format.clone();
    }
    Ok(cfg)
}

fn estimate(args: &RunArgs, suite: bool) -> Result<bool> {
    let cfg = load(args)?;
    let specs = if suite { suite_specs(&cfg) } else { vec![cfg.base_spec()] };
    let out = execute(&cfg, &specs)?;
    let written = write_outputs(&out, &cfg.output.dir, &cfg.output.formats)?;
    print!("{}", flightdelay_cli::table::render_table(&out.document));
    for p in written {
        log::info!("wrote {}", p.display());
    }
    let failed = out.document.columns.iter().filter(|c| c.result.is_none()).count();
    if failed == out.document.columns.len() {
        bail!("every column failed to estimate");
    }
    Ok(failed == 0)
}

fn synth(seed: u64, out: &PathBuf) -> Result<()> {
    let market = generate_market(&MarketScenario::demo(seed)).context("synthlab")?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    market.write_csvs(out).context("synthlab")?;
    fs::write(out.join("run.toml"), SAMPLE_RUN_CONFIG)?;
    fs::write(out.join("suite.toml"), SAMPLE_SUITE_CONFIG)?;
    println!(
        "wrote {} flights, {} traffic rows and sample configs to {}",
        market.flights.len(),
        market.traffic.len(),
        out.display()
    );
    Ok(())
}

fn render(json: &PathBuf, out: Option<&PathBuf>) -> Result<()> {
    let text = fs::read_to_string(json).with_context(|| format!("reading {}", json.display()))?;
    let doc = parse_json(&text)?;
    let rendered = render_text(&doc);
    match out {
        Some(p) => fs::write(p, rendered).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Run(a) => estimate(a, false),
        Command::Suite(a) => estimate(a, true),
        Command::Synth { seed, out } => synth(*seed, out).map(|_| true),
        Command::Render { json, out } => render(json, out.as_ref()).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: some columns failed; see the table footnotes");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

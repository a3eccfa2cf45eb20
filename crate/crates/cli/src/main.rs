//! `wsi`: command-line driver for the wave / floating-body solvers.
//!
//! Exit status: 0 success, 1 runtime failure (or failed checks in `verify`),
//! 2 configuration rejected before any compute, 3 terminal event (bottom
//! contact, shock, depth loss) with partial artifacts on disk.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod nonlocal;
mod output;
mod scenarios;
mod signals;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use output::{invalid, other, terminal_json, write_manifest, CliError, ManifestInput, OutDir};

#[derive(Parser)]
#[command(name = "wsi", version, about = "Wave / floating-structure interaction solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fully coupled body / exterior simulation
    Simulate(CommonArgs),
    /// Transmission problem with prescribed boundary discharges
    Toy(CommonArgs),
    /// Return-to-equilibrium runs with decay diagnostics
    Decay(CommonArgs),
    /// Nonlocal transport problem from a JSON problem file
    Nonlocal(CommonArgs),
    /// Cartesian parameter sweep over another scenario
    Sweep(CommonArgs),
    /// Run the acceptance checks and print a pass/fail table
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration (a JSON problem file is also accepted by `nonlocal`)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $WSI_OUT_DIR or ./wsi-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and parallel loops
    #[arg(long)]
    threads: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let (scenario, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Toy(a) => ("toy", a),
        Command::Decay(a) => ("decay", a),
        Command::Nonlocal(a) => ("nonlocal", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Verify(a) => ("verify", a),
    };
    let code = match run(scenario, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn out_dir(args: &CommonArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("WSI_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("wsi-out"))
}

struct Loaded {
    text: String,
    raw: toml::Value,
    config: RunConfig,
    base_dir: PathBuf,
}

fn load(path: Option<&Path>) -> Result<Loaded, CliError> {
    let Some(path) = path else {
        return Ok(Loaded {
            text: String::new(),
            raw: toml::Value::Table(Default::default()),
            config: RunConfig::default(),
            base_dir: PathBuf::from("."),
        });
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(invalid)?;
    let raw: toml::Value = toml::from_str(&text).with_context(|| format!("parsing {}", path.display())).map_err(invalid)?;
    let config: RunConfig = raw.clone().try_into().with_context(|| format!("parsing {}", path.display())).map_err(invalid)?;
    let base_dir = path.parent().map(Path::to_path_buf).filter(|p| !p.as_os_str().is_empty()).unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded { text, raw, config, base_dir })
}

fn run(scenario: &str, args: &CommonArgs) -> Result<i32, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(invalid(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(other)?;
    }
    let out = out_dir(args);
    let is_json = args.config.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let (loaded, job) = if scenario == "nonlocal" && is_json {
        let path = args.config.as_deref().unwrap_or(Path::new(""));
        let spec = nonlocal::ProblemSpec::load(path).map_err(invalid)?;
        let base_dir = path.parent().map(Path::to_path_buf).filter(|p| !p.as_os_str().is_empty()).unwrap_or_else(|| PathBuf::from("."));
        let text = fs::read_to_string(path).map_err(other)?;
        let job = nonlocal::prepare_spec(spec.clone(), &base_dir)?;
        let raw = toml::Value::try_from(&spec).map_err(other)?;
        (Loaded { text, raw, config: RunConfig::default(), base_dir }, job)
    } else {
        let loaded = load(args.config.as_deref())?;
        if scenario == "sweep" {
            return sweep::run(&loaded.raw, &loaded.config, &loaded.base_dir, &out);
        }
        let job = scenarios::prepare(scenario, &loaded.config, &loaded.base_dir)?;
        (loaded, job)
    };
    let mut dir = OutDir::create(&out).map_err(other)?;
    let outcome = job(&mut dir)?;
    let config_json = if is_json {
        serde_json::to_value(&loaded.raw).map_err(other)?
    } else {
        serde_json::to_value(&loaded.config).map_err(other)?
    };
    let input = ManifestInput { scenario, config_text: &loaded.text, config: &config_json, overrides: None };
    write_manifest(&out, &input, &outcome).map_err(other)?;
    if let Some(t) = &outcome.terminal {
        eprintln!("{}", terminal_json(t));
    }
    Ok(outcome.exit_code())
}

// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

//! `vibron-lab`: run named vibron transport scenarios and write datasets.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;
use vibron::constants::to_hz;
use vibron::experiments::{preset_names, preset_text, run, CoolingBeam, ScenarioName, SpeciesName};
use vibron::io::{apply_override, config_from_value, write_run};

#[derive(Parser, Debug)]
#[command(name = "vibron-lab", version, about = "Vibron transport scenarios in trapped-ion chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its datasets and manifest.
    Run(RunArgs),
    /// List the bundled presets.
    Presets,
    /// Print a preset configuration.
    Show {
        name: String,
    },
    /// Doppler cooling rate and occupation of one beam.
    Cool(CoolArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Scenario name, e.g. `tqd` or `tqw_dephasing`.
    scenario: String,
    /// Preset to start from; defaults to the scenario's own preset.
    #[arg(long, env = "VIBRONLAB_PRESET", conflicts_with = "config")]
    preset: Option<String>,
    /// Configuration file to start from instead of a preset.
    #[arg(long, env = "VIBRONLAB_CONFIG")]
    config: Option<PathBuf>,
    /// Override a parameter: `params.left.rabi_gamma=1.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, env = "VIBRONLAB_OUT")]
    out: PathBuf,
    #[arg(long, env = "VIBRONLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads for sweeps and ensembles (default: all cores).
    #[arg(long, env = "VIBRONLAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Species {
    Mg24,
    Mg25,
    Be9,
}

#[derive(clap::Args, Debug)]
struct CoolArgs {
    /// Detuning in linewidths (negative cools).
    #[arg(long, allow_hyphen_values = true)]
    detuning: f64,
    /// Rabi frequency in linewidths.
    #[arg(long)]
    rabi: f64,
    #[arg(long, value_enum, default_value = "mg24")]
    species: Species,
    #[arg(long, default_value_t = 5e6)]
    transverse_hz: f64,
}

fn starting_tree(args: &RunArgs) -> Result<Value> {
    let text = match (&args.config, &args.preset) {
        (Some(path), _) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(p)) => preset_text(p)?.to_string(),
        (None, None) => preset_text(&args.scenario)?.to_string(),
    };
    serde_json::from_str(&text)
        .map_err(|e| vibron::Error::Parse { line: e.line(), column: e.column(), msg: e.to_string() }.into())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let scenario: ScenarioName = args.scenario.parse()?;
    let mut tree = starting_tree(&args)?;
    for s in &args.set {
        apply_override(&mut tree, s).with_context(|| format!("applying --set {s}"))?;
    }
    if let Some(seed) = args.seed {
        tree["seed"] = Value::from(seed);
    }
    let cfg = config_from_value(tree)?;
    if cfg.scenario != scenario {
        bail!("configuration is for scenario `{}`, not `{scenario}`", cfg.scenario);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads.unwrap_or(0)).build()?;
    let out = pool.install(|| run(&cfg))?;
    let written = write_run(&args.out, &out)?;
    println!("scenario {} finished in {:.2} s", cfg.scenario, out.manifest.timings.get("wall_time").copied().unwrap_or(0.0));
    for c in &out.manifest.comparisons {
        println!(
            "  {} {}: max relative error {:.3e} (tolerance {:.0e})",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.max_rel_error,
            c.rel_tol
        );
    }
    for w in &out.manifest.warnings {
        println!("  warning: {w}");
    }
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn cmd_cool(a: CoolArgs) -> Result<()> {
    let name = match a.species {
        Species::Mg24 => SpeciesName::Mg24,
        Species::Mg25 => SpeciesName::Mg25,
        Species::Be9 => SpeciesName::Be9,
    };
    let r = CoolingBeam { detuning_gamma: a.detuning, rabi_gamma: a.rabi }.reservoir(&name.species(a.transverse_hz))?;
    println!("gamma/2pi = {:.4} kHz", to_hz(r.gamma) / 1e3);
    println!("delta/2pi = {:.4} kHz", to_hz(r.delta) / 1e3);
    println!("nbar      = {:.4}", r.nbar);
    if r.heating {
        println!("warning: this beam heats");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Presets => {
            for n in preset_names() {
                println!("{n}");
            }
            Ok(())
        }
        Command::Show { name } => preset_text(&name).map(|t| print!("{t}")).map_err(Into::into),
        Command::Cool(a) => cmd_cool(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

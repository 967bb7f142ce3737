//! Command-line front end: spectra, states, bound states, scaling studies and
//! verification runs, exported as CSV or JSON data files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::commands::Outcome;
use crate::config::{Command, ConfigMap, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::Bundle;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "nhscatter", version, about = "Emitter scattering in non-Hermitian lattice baths")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Exact spectrum, band curve samples and bound-state markers.
    Spectrum(Flags),
    /// One eigenstate compared against the exact-diagonalization oracle.
    State(Flags),
    /// Bound states with their matched oracle eigenvalues.
    Bound(Flags),
    /// Finite-size scaling of Im k and of the self-energy.
    Scaling(Flags),
    /// Property checks of every module; exit status 0 iff all pass.
    Verify(Flags),
}

impl Cmd {
    pub fn split(&self) -> (Command, &Flags) {
        match self {
            Cmd::Spectrum(f) => (Command::Spectrum, f),
            Cmd::State(f) => (Command::State, f),
            Cmd::Bound(f) => (Command::Bound, f),
            Cmd::Scaling(f) => (Command::Scaling, f),
            Cmd::Verify(f) => (Command::Verify, f),
        }
    }
}

/// Flags override the values of `--config`.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// hn, nnn or custom.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappap: Option<String>,
    /// Bath file for the custom model.
    #[arg(long = "bath-file")]
    pub bath_file: Option<String>,
    /// Emitter-bath coupling.
    #[arg(long = "J", allow_hyphen_values = true)]
    pub coupling: Option<String>,
    /// Emitter detuning.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// Lattice size, or a comma-separated list for scaling.
    #[arg(long = "L")]
    pub size: Option<String>,
    /// pbc or obc.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// State selector: m, m:<m>, k:<k>, random, si[:<n>], so:<mode>[@<k>].
    #[arg(long, allow_hyphen_values = true)]
    pub mode: Option<String>,
    /// Analytic form for scattering states: closed, ls or formal.
    #[arg(long)]
    pub form: Option<String>,
    /// greater or less.
    #[arg(long)]
    pub branch: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Random instances per verification check.
    #[arg(long)]
    pub samples: Option<String>,
    /// Base momentum followed by the scaling study.
    #[arg(long = "k", allow_hyphen_values = true)]
    pub momentum: Option<String>,
    /// Off-band energy `re,im` of the self-energy convergence series.
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<String>,
    /// Largest matrix dimension the oracle accepts.
    #[arg(long = "max-dim")]
    pub max_dim: Option<String>,
}

impl Flags {
    pub fn config_map(&self) -> CliResult<ConfigMap> {
        let mut map = match &self.config {
            Some(p) => ConfigMap::load(p)?,
            None => ConfigMap::default(),
        };
        let pairs = [
            ("model.kind", "model", &self.model),
            ("model.u", "u", &self.u),
            ("model.kappa", "kappa", &self.kappa),
            ("model.kappap", "kappap", &self.kappap),
            ("model.bath_file", "bath-file", &self.bath_file),
            ("emitter.J", "J", &self.coupling),
            ("emitter.delta", "delta", &self.delta),
            ("lattice.L", "L", &self.size),
            ("lattice.boundary", "boundary", &self.boundary),
            ("lattice.max_dim", "max-dim", &self.max_dim),
            ("output.dir", "out", &self.out),
            ("output.format", "format", &self.format),
            ("state.mode", "mode", &self.mode),
            ("state.form", "form", &self.form),
            ("state.branch", "branch", &self.branch),
            ("run.seed", "seed", &self.seed),
            ("run.samples", "samples", &self.samples),
            ("scaling.k", "k", &self.momentum),
            ("scaling.energy", "energy", &self.energy),
        ];
        for (key, flag, value) in pairs {
            if let Some(v) = value {
                map.set_flag(key, flag, v.trim().to_string());
            }
        }
        Ok(map)
    }
}

/// Files written and the summary of a completed command.
#[derive(Debug)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Value,
    pub passed: bool,
}

pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    match cfg.command {
        Command::Spectrum => commands::spectrum(cfg),
        Command::State => commands::state(cfg),
        Command::Bound => commands::bound(cfg),
        Command::Scaling => commands::scaling(cfg),
        Command::Verify => commands::verify(cfg),
    }
}

/// Runs the command and writes its files; nothing is written if it fails.
pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    let outcome = execute(cfg)?;
    let mut bundle = Bundle::default();
    for t in &outcome.tables {
        bundle.add_table(t, cfg.format);
    }
    if cfg.command == Command::Verify {
        bundle.add_json("report.json", &outcome.results);
    }
    let mut files = bundle.names();
    files.push("summary.json".into());
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command.name(),
        "status": if outcome.passed { "ok" } else { "failed" },
        "models": cfg.models.iter().map(|m| m.to_json()).collect::<Vec<_>>(),
        "parameters": cfg.parameters_json(),
        "files": files,
        "results": outcome.results,
    });
    bundle.add_json("summary.json", &summary);
    let written = bundle.commit(&cfg.out)?;
    Ok(Report { files: written, summary, passed: outcome.passed })
}

/// Parses flags and config, runs, and maps the result to an exit status.
pub fn main_with(cli: &Cli) -> u8 {
    let (command, flags) = cli.command.split();
    let result = flags
        .config_map()
        .and_then(|map| RunConfig::from_map(command, &map))
        .and_then(|cfg| run(&cfg).map(|r| (cfg, r)));
    match result {
        Ok((cfg, report)) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            if report.passed {
                0
            } else {
                let e = CliError::numerical(format!(
                    "{} verification checks failed; see {}",
                    report.summary["results"]["counts"]["fail"],
                    cfg.out.join("report.json").display()
                ));
                eprintln!("nhscatter: {e}");
                e.exit_code()
            }
        }
        Err(e) => {
            eprintln!("nhscatter: {e}");
            e.exit_code()
        }
    }
}

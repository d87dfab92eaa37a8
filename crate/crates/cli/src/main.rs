//! `surfharm` command-line front end.

mod commands;
mod common;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use commands::{dock, fields, fixture, spectrum};
use common::{CliError, CliResult};
use config::Config;

/// Harmonic analysis on triangulated surfaces.
///
/// Every command writes machine-readable outputs: CSV with 9 significant
/// digits, binary basis containers, and a report.json whose `timing` object is
/// the only run-dependent part. Exit codes: 0 ok, 1 computation error, 2 input,
/// parse or usage error.
#[derive(Parser, Debug)]
#[command(name = "surfharm", version)]
struct Cli {
    /// Print errors to stderr as `{"error":{"category":...,"message":...}}`.
    #[arg(long, global = true)]
    json_errors: bool,
    /// key=value defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Laplace-Beltrami eigenpairs of one or more meshes.
    Spectrum(spectrum::SpectrumCmd),
    /// Gaussian-window and heat filtering of a per-vertex field.
    Filter(fields::FilterCmd),
    /// Fit filter parameters mapping one field onto another.
    Fit(fields::FitCmd),
    /// Heat kernel signatures.
    Hks(fields::HksCmd),
    /// Gaussian and mean curvature with vertex normals.
    Curvature(fields::CurvatureCmd),
    /// Low-pass reconstruction of vertex coordinates.
    Smooth(fields::SmoothCmd),
    /// Geometric and atom-derived input features.
    Features(fields::FeaturesCmd),
    /// Rigid docking through a functional map between interfaces.
    Dock(dock::DockCmd),
    /// Generate test meshes.
    #[command(subcommand)]
    Fixture(fixture::FixtureCmd),
    /// Print the command-line reference as Markdown.
    Reference,
}

fn reference() -> String {
    fn walk(cmd: &mut clap::Command, path: &str, out: &mut String) {
        let name = if path.is_empty() {
            cmd.get_name().to_string()
        } else {
            format!("{path} {}", cmd.get_name())
        };
        let level = "#".repeat(name.split(' ').count().min(3) + 1);
        out.push_str(&format!("{level} `{name}`\n\n```text\n"));
        out.push_str(cmd.render_long_help().to_string().trim_end());
        out.push_str("\n```\n\n");
        let subs: Vec<clap::Command> = cmd.get_subcommands().cloned().collect();
        for mut s in subs {
            if s.get_name() != "help" {
                walk(&mut s, &name, out);
            }
        }
    }
    let mut out = String::from("# Command-line reference\n\nGenerated by `surfharm reference`.\n\n");
    let mut cmd = Cli::command().term_width(100);
    cmd.build();
    walk(&mut cmd, "", &mut out);
    out
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = cfg.pick(cli.jobs, "jobs")? {
        if n == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Spectrum(c) => spectrum::run(c, &cfg),
        Command::Filter(c) => fields::filter(c, &cfg),
        Command::Fit(c) => fields::fit(c, &cfg),
        Command::Hks(c) => fields::hks(c, &cfg),
        Command::Curvature(c) => fields::curvature(c, &cfg),
        Command::Smooth(c) => fields::smooth(c, &cfg),
        Command::Features(c) => fields::features(c, &cfg),
        Command::Dock(c) => dock::run(c, &cfg),
        Command::Fixture(c) => fixture::run(c, &cfg),
        Command::Reference => {
            print!("{}", reference());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let json_errors = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            if json_errors {
                let msg = e.kind().to_string();
                let detail = e.to_string();
                let first = detail.lines().next().unwrap_or(&msg).trim_start_matches("error: ");
                eprintln!("{}", CliError::usage(first).to_json());
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.json_errors {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error ({}): {}", e.category, e.message);
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `modesub` — simulation and analysis of multimode coherent single-photon
//! subtraction from the command line.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use config::{CalibrateCfg, MetricsCfg, NegativityCfg, SfgCfg, TomoCfg};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "modesub",
    version,
    about = "Simulate and analyze mode-selective single-photon subtraction",
    after_help = "Exit codes: 0 success, 2 config/schema error, 3 numerical failure, 4 resolution/truncation error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; every field has a default, so the flag may be
    /// omitted entirely.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's RNG seed (commands with stochastic stages).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts; reruns overwrite bitwise-identically.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Format of the stdout summary.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the SFG subtractor: transfer function, Schmidt weights,
    /// induced χ, and metrics.
    Sfg,
    /// Coherent-state process tomography.
    Tomo {
        #[command(subcommand)]
        mode: TomoMode,
    },
    /// Fit the realistic-subtractor weights from a rate-vs-intensity curve.
    Calibrate,
    /// Heralded-state Wigner negativity under loss.
    Negativity,
    /// Figures of merit of a stored subtraction matrix.
    Metrics,
}

#[derive(Subcommand)]
enum TomoMode {
    /// Simulate detector records for the standard probe set.
    Synth,
    /// Reconstruct χ from a records CSV.
    Reconstruct,
    /// Chain synth and reconstruct, reporting the fidelity to the truth.
    RoundTrip,
}

/// Flat key/value summary printed to stdout as JSON or CSV.
pub struct Summary {
    command: &'static str,
    fields: Vec<(&'static str, f64)>,
}

impl Summary {
    fn new(command: &'static str) -> Self {
        Self { command, fields: Vec::new() }
    }

    fn field(mut self, name: &'static str, value: f64) -> Self {
        self.fields.push((name, value));
        self
    }

    fn field_opt(self, name: &'static str, value: Option<f64>) -> Self {
        match value {
            Some(v) => self.field(name, v),
            None => self,
        }
    }

    fn print(&self, format: Format) {
        match format {
            Format::Json => {
                let mut map = serde_json::Map::new();
                map.insert("command".into(), self.command.into());
                for (k, v) in &self.fields {
                    map.insert(
                        (*k).into(),
                        serde_json::Number::from_f64(*v)
                            .map(serde_json::Value::Number)
                            .unwrap_or(serde_json::Value::Null),
                    );
                }
                println!("{}", serde_json::Value::Object(map));
            }
            Format::Csv => {
                let header: Vec<&str> =
                    std::iter::once("command").chain(self.fields.iter().map(|(k, _)| *k)).collect();
                let values: Vec<String> = std::iter::once(self.command.to_string())
                    .chain(self.fields.iter().map(|(_, v)| v.to_string()))
                    .collect();
                println!("{}", header.join(","));
                println!("{}", values.join(","));
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            summary.print(cli.format);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: &Cli) -> Result<Summary, CliError> {
    // MODESUB_THREADS caps parallelism; all stages here are sequential and
    // deterministic, so any positive cap is honored. Garbage is still a
    // config error.
    if let Ok(raw) = std::env::var("MODESUB_THREADS") {
        let threads: usize = raw
            .parse()
            .map_err(|_| CliError::config(format!("MODESUB_THREADS must be a positive integer, got {raw:?}")))?;
        if threads == 0 {
            return Err(CliError::config("MODESUB_THREADS must be at least 1"));
        }
    }
    std::fs::create_dir_all(&cli.out).map_err(error::io_err(&cli.out))?;

    match &cli.command {
        Command::Sfg => {
            let cfg: SfgCfg = load_or_default(cli)?;
            commands::cmd_sfg(&cfg, &cli.out)
        }
        Command::Tomo { mode } => {
            let mut cfg: TomoCfg = load_or_default(cli)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            match mode {
                TomoMode::Synth => commands::cmd_tomo_synth(&cfg, &cli.out),
                TomoMode::Reconstruct => commands::cmd_tomo_reconstruct(&cfg, &cli.out),
                TomoMode::RoundTrip => commands::cmd_tomo_round_trip(&cfg, &cli.out),
            }
        }
        Command::Calibrate => {
            let mut cfg: CalibrateCfg = load_or_default(cli)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            commands::cmd_calibrate(&cfg, &cli.out)
        }
        Command::Negativity => {
            let cfg: NegativityCfg = load_or_default(cli)?;
            commands::cmd_negativity(&cfg, &cli.out)
        }
        Command::Metrics => {
            let cfg: MetricsCfg = match &cli.config {
                Some(path) => config::load(path)?,
                None => return Err(CliError::config("metrics needs --config naming the χ file")),
            };
            commands::cmd_metrics(&cfg, &cli.out)
        }
    }
}

fn load_or_default<T: Default + for<'de> serde::Deserialize<'de>>(cli: &Cli) -> Result<T, CliError> {
    match &cli.config {
        Some(path) => config::load(path),
        None => Ok(T::default()),
    }
}

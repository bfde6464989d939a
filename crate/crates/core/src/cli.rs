//! `meshfl` command line: single runs, experiment suites and dataset export.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::experiments::{run_suite, RunCache, SuiteKind, DEFAULT_SEEDS};
use crate::metrics::write_metrics_csv;
use crate::protocol::{deploy, run_simulation, SimulationReport};
use crate::rng::{stream, Domain};
use crate::signal::{generate_sensor_dataset, save_dataset};
use crate::topology::TopologyKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_DISCONNECTED: i32 = 5;

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "MESHFL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "meshfl",
    version,
    about = "Serverless federated learning over multi-hop sensor networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write metrics, summary, topology and models.
    Run(Overrides),
    /// Run a one-factor study over several seeds and write comparison tables.
    Suite {
        #[arg(value_enum)]
        suite: SuiteKind,
        /// Comma-separated master seeds.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SEEDS.to_vec())]
        seeds: Vec<u64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write each sensor's generated samples as CSV.
    GenData(Overrides),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub topology: Option<TopologyKind>,
    #[arg(long)]
    pub loss_prob: Option<f64>,
    #[arg(long)]
    pub broadcast_prob: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Loads the config (or defaults) and applies every flag given.
    pub fn resolve(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::load(path)?,
            None => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(kind) = self.topology {
            cfg.topology.kind = kind;
            cfg.topology.import = None;
        }
        if let Some(p) = self.loss_prob {
            cfg.link.packet_loss_prob = p;
        }
        if let Some(p) = self.broadcast_prob {
            cfg.link.broadcast_prob = p;
        }
        if let Some(n) = self.max_rounds {
            cfg.max_rounds = n;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        if cfg.output_dir.is_none() {
            cfg.output_dir = Some(PathBuf::from("meshfl-out"));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NotConverged(_) => EXIT_NOT_CONVERGED,
        Error::Io { .. } | Error::Csv(_) => EXIT_IO,
        Error::Disconnected | Error::LayoutInfeasible { .. } => EXIT_DISCONNECTED,
        _ => EXIT_CONFIG,
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn out_dir(cfg: &SimConfig) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("meshfl-out"))
}

/// Writes every artifact of a run (converged or not) under `dir`.
pub fn write_run_artifacts(dir: &Path, report: &SimulationReport) -> Result<()> {
    create_dir(dir)?;
    write_file(&dir.join("effective_config.toml"), report.config.to_toml_string())?;
    let mut metrics = Vec::new();
    write_metrics_csv(&mut metrics, &report.metrics_rows())?;
    write_file(&dir.join("metrics.csv"), metrics)?;
    write_file(
        &dir.join("summary.json"),
        serde_json::to_string_pretty(&report.summary())?,
    )?;
    write_file(
        &dir.join("topology.json"),
        serde_json::to_string_pretty(&report.topology.to_json())?,
    )?;
    let models = dir.join("models");
    create_dir(&models)?;
    for (id, m) in report.final_models.iter().enumerate() {
        write_file(&models.join(format!("sensor_{id:02}.bin")), m.to_bytes())?;
    }
    Ok(())
}

pub fn cmd_run(overrides: &Overrides) -> Result<SimulationReport> {
    let cfg = overrides.resolve()?;
    let dir = out_dir(&cfg);
    // Snapshot first so a failed run still leaves its effective config behind.
    create_dir(&dir)?;
    write_file(&dir.join("effective_config.toml"), cfg.to_toml_string())?;
    match run_simulation(&cfg) {
        Ok(report) => {
            write_run_artifacts(&dir, &report)?;
            Ok(report)
        }
        Err(Error::NotConverged(report)) => {
            write_run_artifacts(&dir, &report)?;
            Err(Error::NotConverged(report))
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_suite(kind: SuiteKind, seeds: &[u64], overrides: &Overrides) -> Result<crate::experiments::SuiteTable> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let base = overrides.resolve()?;
    let dir = out_dir(&base);
    create_dir(&dir)?;
    write_file(
        &dir.join(format!("suite_{}_config.toml", kind.name())),
        base.to_toml_string(),
    )?;
    let table = run_suite(kind, &base, seeds, &RunCache::new())?;
    write_file(&dir.join(format!("suite_{}.md", kind.name())), table.to_markdown())?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    write_file(&dir.join(format!("suite_{}.csv", kind.name())), csv)?;
    let mut curves = Vec::new();
    table.write_curves_csv(&mut curves)?;
    write_file(&dir.join(format!("suite_{}_curves.csv", kind.name())), curves)?;
    write_file(
        &dir.join(format!("suite_{}.json", kind.name())),
        serde_json::to_string_pretty(&table)?,
    )?;
    Ok(table)
}

/// One CSV per sensor with all of its generated samples, in generation order.
pub fn cmd_gen_data(overrides: &Overrides) -> Result<Vec<PathBuf>> {
    let cfg = overrides.resolve()?;
    let dir = out_dir(&cfg);
    create_dir(&dir)?;
    let topology = deploy(&cfg)?.topology;
    let mut written = Vec::new();
    for (id, &pos) in topology.positions().iter().enumerate() {
        let samples = generate_sensor_dataset(
            pos,
            &cfg.channel,
            cfg.data.samples_per_sensor,
            cfg.data.target_fraction,
            &mut stream(cfg.seed, Domain::Data, id as u64),
        )?;
        let path = dir.join(format!("sensor_{id:02}.csv"));
        save_dataset(&path, &samples)?;
        written.push(path);
    }
    write_file(
        &dir.join("topology.json"),
        serde_json::to_string_pretty(&topology.to_json())?,
    )?;
    write_file(&dir.join("effective_config.toml"), cfg.to_toml_string())?;
    Ok(written)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Run(o) => cmd_run(o).map(|r| {
            print_report(&r);
        }),
        Command::Suite {
            suite,
            seeds,
            overrides,
        } => cmd_suite(*suite, seeds, overrides).map(|t| {
            println!("{}", t.to_markdown());
        }),
        Command::GenData(o) => cmd_gen_data(o).map(|files| {
            println!("wrote {} datasets", files.len());
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if let Error::NotConverged(r) = &e {
                print_report(r);
            }
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn print_report(r: &SimulationReport) {
    let s = r.summary();
    match s.converged_at {
        Some(t) => println!(
            "converged_at: {t} (detected at round {})",
            t + r.config.convergence.window
        ),
        None => println!("converged_at: none after {} rounds", s.rounds_run),
    }
    println!("best_accuracy: {:.4}", s.best_accuracy);
    println!("initial_accuracy: {:.4}", s.initial_accuracy);
    println!("total_broadcasts: {}", s.total_broadcasts);
}

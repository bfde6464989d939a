//! Canned one-factor studies: topology, packet loss and broadcast
//! probability, each repeated over a list of master seeds.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::Result;
use crate::protocol::{into_report, run_simulation, SimulationReport};
use crate::topology::TopologyKind;

pub const LOSS_LEVELS: [f64; 4] = [0.0, 0.05, 0.20, 0.50];
pub const BROADCAST_LEVELS: [f64; 4] = [1.0, 0.5, 0.25, 0.10];
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Topology,
    Loss,
    Broadcast,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Topology => "topology",
            SuiteKind::Loss => "loss",
            SuiteKind::Broadcast => "broadcast",
        }
    }
}

/// What one finished run contributes to a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub seed: u64,
    pub converged_at: Option<usize>,
    pub rounds_run: usize,
    pub best_accuracy: f64,
    pub initial_accuracy: f64,
    pub total_broadcasts: u64,
    /// Running best of the average accuracy, round 1 first.
    pub best_curve: Vec<f64>,
}

impl RunStats {
    pub fn from_report(seed: u64, r: &SimulationReport) -> Self {
        Self {
            seed,
            converged_at: r.converged_at,
            rounds_run: r.rounds_run(),
            best_accuracy: r.best_accuracy(),
            initial_accuracy: r.initial.average_accuracy,
            total_broadcasts: r.overhead.total_broadcasts,
            best_curve: r.trace.best().to_vec(),
        }
    }

    /// Convergence round, or the number of rounds run if the rule never fired.
    pub fn time(&self) -> usize {
        self.converged_at.unwrap_or(self.rounds_run)
    }

    pub fn broadcasts_per_round(&self) -> f64 {
        self.total_broadcasts as f64 / self.rounds_run.max(1) as f64
    }
}

/// Memoizes finished runs by their full config, so suites sharing a cell
/// (e.g. the random topology at 0% loss) compute it once.
#[derive(Default)]
pub struct RunCache {
    runs: Mutex<HashMap<String, RunStats>>,
}

impl RunCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn run(&self, config: &SimConfig) -> Result<RunStats> {
        let mut key_cfg = config.clone();
        key_cfg.parallel = false;
        key_cfg.output_dir = None;
        let key = key_cfg.to_toml_string();
        if let Some(hit) = self.runs.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let report = into_report(run_simulation(config))?;
        let stats = RunStats::from_report(config.seed, &report);
        self.runs.lock().expect("cache lock").insert(key, stats.clone());
        Ok(stats)
    }

    pub fn len(&self) -> usize {
        self.runs.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Configs that differ in one factor, each to be run under every seed.
#[derive(Debug, Clone)]
pub struct ExperimentSuite {
    pub name: String,
    pub factor: String,
    pub cells: Vec<(String, SimConfig)>,
    pub seeds: Vec<u64>,
}

impl ExperimentSuite {
    pub fn new(kind: SuiteKind, base: &SimConfig, seeds: &[u64]) -> Self {
        let (factor, cells): (&str, Vec<(String, SimConfig)>) = match kind {
            SuiteKind::Topology => (
                "topology",
                TopologyKind::ALL
                    .iter()
                    .map(|&k| (capitalize(k.name()), base.clone().with_topology(k)))
                    .collect(),
            ),
            SuiteKind::Loss => (
                "loss probability",
                LOSS_LEVELS
                    .iter()
                    .map(|&p| {
                        let mut c = base.clone().with_topology(TopologyKind::Random);
                        c.link.packet_loss_prob = p;
                        (percent(p), c)
                    })
                    .collect(),
            ),
            SuiteKind::Broadcast => (
                "broadcast probability",
                BROADCAST_LEVELS
                    .iter()
                    .map(|&p| {
                        let mut c = base.clone().with_topology(TopologyKind::Random);
                        c.link.broadcast_prob = p;
                        (percent(p), c)
                    })
                    .collect(),
            ),
        };
        Self {
            name: kind.name().to_string(),
            factor: factor.to_string(),
            cells,
            seeds: seeds.to_vec(),
        }
    }

    /// Every (cell, seed) config, cell-major.
    pub fn configs(&self) -> Vec<(usize, SimConfig)> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(k, (_, c))| self.seeds.iter().map(move |&s| (k, c.clone().with_seed(s))))
            .collect()
    }

    pub fn run(&self, cache: &RunCache) -> Result<SuiteTable> {
        let jobs = self.configs();
        let results: Vec<RunStats> = jobs.par_iter().map(|(_, c)| cache.run(c)).collect::<Result<_>>()?;
        let mut rows: Vec<SuiteRow> = self
            .cells
            .iter()
            .map(|(label, _)| SuiteRow {
                label: label.clone(),
                runs: Vec::new(),
            })
            .collect();
        for ((cell, _), stats) in jobs.iter().zip(results) {
            rows[*cell].runs.push(stats);
        }
        Ok(SuiteTable {
            name: self.name.clone(),
            factor: self.factor.clone(),
            rows,
        })
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn percent(p: f64) -> String {
    format!("{}%", (p * 100.0).round())
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub label: String,
    pub runs: Vec<RunStats>,
}

impl SuiteRow {
    pub fn time(&self) -> (f64, f64) {
        mean_std(&self.runs.iter().map(|r| r.time() as f64).collect::<Vec<_>>())
    }

    pub fn best_accuracy(&self) -> (f64, f64) {
        mean_std(&self.runs.iter().map(|r| r.best_accuracy).collect::<Vec<_>>())
    }

    pub fn broadcasts_per_round(&self) -> f64 {
        mean_std(&self.runs.iter().map(RunStats::broadcasts_per_round).collect::<Vec<_>>()).0
    }

    pub fn converged(&self) -> usize {
        self.runs.iter().filter(|r| r.converged_at.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteTable {
    pub name: String,
    pub factor: String,
    pub rows: Vec<SuiteRow>,
}

impl SuiteTable {
    pub fn row(&self, label: &str) -> Option<&SuiteRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "| {} | Time | Best average accuracy | Broadcasts/round | Converged |",
            capitalize(&self.factor)
        );
        let _ = writeln!(out, "|---|---|---|---|---|");
        for row in &self.rows {
            let (t, ts) = row.time();
            let (a, as_) = row.best_accuracy();
            let _ = writeln!(
                out,
                "| {} | {:.0} ± {:.0} | {:.4} ± {:.4} | {:.2} | {}/{} |",
                row.label,
                t,
                ts,
                a,
                as_,
                row.broadcasts_per_round(),
                row.converged(),
                row.runs.len()
            );
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "factor",
            "time_mean",
            "time_std",
            "best_accuracy_mean",
            "best_accuracy_std",
            "broadcasts_per_round",
            "converged_runs",
            "runs",
        ])?;
        for row in &self.rows {
            let (t, ts) = row.time();
            let (a, as_) = row.best_accuracy();
            w.write_record([
                row.label.clone(),
                t.to_string(),
                ts.to_string(),
                a.to_string(),
                as_.to_string(),
                row.broadcasts_per_round().to_string(),
                row.converged().to_string(),
                row.runs.len().to_string(),
            ])?;
        }
        w.flush().map_err(|e| crate::error::Error::io("<suite csv>", e))?;
        Ok(())
    }

    /// Mean running-best accuracy per round, one column per row, for plotting.
    /// Runs that stopped early hold their last value.
    pub fn write_curves_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["round".to_string()];
        header.extend(self.rows.iter().map(|r| r.label.clone()));
        w.write_record(&header)?;
        let len = self
            .rows
            .iter()
            .flat_map(|r| r.runs.iter().map(|x| x.best_curve.len()))
            .max()
            .unwrap_or(0);
        for t in 0..len {
            let mut rec = vec![(t + 1).to_string()];
            for row in &self.rows {
                let vals: Vec<f64> = row
                    .runs
                    .iter()
                    .filter_map(|r| r.best_curve.get(t).or(r.best_curve.last()).copied())
                    .collect();
                rec.push(mean_std(&vals).0.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| crate::error::Error::io("<curves csv>", e))?;
        Ok(())
    }
}

pub fn run_suite(kind: SuiteKind, base: &SimConfig, seeds: &[u64], cache: &RunCache) -> Result<SuiteTable> {
    ExperimentSuite::new(kind, base, seeds).run(cache)
}

pub fn run_topology_suite(base: &SimConfig, seeds: &[u64]) -> Result<SuiteTable> {
    run_suite(SuiteKind::Topology, base, seeds, &RunCache::new())
}

pub fn run_loss_suite(base: &SimConfig, seeds: &[u64]) -> Result<SuiteTable> {
    run_suite(SuiteKind::Loss, base, seeds, &RunCache::new())
}

pub fn run_broadcast_suite(base: &SimConfig, seeds: &[u64]) -> Result<SuiteTable> {
    run_suite(SuiteKind::Broadcast, base, seeds, &RunCache::new())
}

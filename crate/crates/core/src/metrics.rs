//! Accuracy traces, the best-so-far convergence rule and broadcast
//! accounting.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transmit-energy cost charged per broadcast.
pub const ENERGY_PER_BROADCAST: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub epsilon: f64,
    pub window: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            window: 100,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-round average accuracies (round 1 first) and their running maximum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTrace {
    averages: Vec<f64>,
    best: Vec<f64>,
}

impl AccuracyTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_averages(averages: &[f64]) -> Result<Self> {
        let mut t = Self::new();
        for &a in averages {
            t.push(a)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, avg_accuracy: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&avg_accuracy) {
            return Err(Error::InvalidParameter(format!(
                "accuracy {avg_accuracy} outside [0, 1]"
            )));
        }
        let best = self.best.last().map_or(avg_accuracy, |&b| b.max(avg_accuracy));
        self.averages.push(avg_accuracy);
        self.best.push(best);
        Ok(())
    }

    pub fn averages(&self) -> &[f64] {
        &self.averages
    }

    pub fn best(&self) -> &[f64] {
        &self.best
    }

    pub fn best_accuracy(&self) -> Option<f64> {
        self.best.last().copied()
    }

    pub fn len(&self) -> usize {
        self.averages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.averages.is_empty()
    }
}

pub fn update_trace(trace: &mut AccuracyTrace, avg_accuracy: f64) -> Result<()> {
    trace.push(avg_accuracy)
}

/// Smallest 1-based round `t` whose best accuracy gains less than `epsilon`
/// over each of the next `window` rounds, or `None` if no window has closed.
pub fn check_convergence(trace: &AccuracyTrace, cfg: &ConvergenceConfig) -> Option<usize> {
    let best = trace.best();
    let m = cfg.window;
    if best.len() <= m {
        return None;
    }
    // best is non-decreasing, so the last round of the window decides.
    (0..best.len() - m)
        .find(|&t| best[t + m] - best[t] < cfg.epsilon)
        .map(|t| t + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub total_broadcasts: u64,
    pub per_sensor: Vec<u64>,
    pub bytes: u64,
    pub energy: f64,
}

impl OverheadReport {
    pub fn new(sensors: usize) -> Self {
        Self {
            total_broadcasts: 0,
            per_sensor: vec![0; sensors],
            bytes: 0,
            energy: 0.0,
        }
    }

    /// Adds one round. `broadcast[s]` says whether sensor `s` transmitted.
    pub fn record(&mut self, broadcast: &[bool], packet_bytes: usize) {
        assert_eq!(broadcast.len(), self.per_sensor.len(), "one flag per sensor");
        let mut round = 0u64;
        for (count, &sent) in self.per_sensor.iter_mut().zip(broadcast) {
            if sent {
                *count += 1;
                round += 1;
            }
        }
        self.total_broadcasts += round;
        self.bytes += round * packet_bytes as u64;
        self.energy += round as f64 * ENERGY_PER_BROADCAST;
    }
}

pub fn record_overhead(report: &mut OverheadReport, broadcast: &[bool], packet_bytes: usize) {
    report.record(broadcast, packet_bytes);
}

/// One line of the per-round metrics export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub round: usize,
    pub avg_accuracy: f64,
    pub best_accuracy: f64,
    pub broadcasts: usize,
    pub received_total: usize,
}

pub fn write_metrics_csv<W: Write>(writer: W, rows: &[RoundRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["round", "avg_accuracy", "best_accuracy", "broadcasts", "received_total"])?;
    }
    w.flush().map_err(|e| Error::io("<metrics>", e))?;
    Ok(())
}

/// Run summary. `converged_at` is the anchor round of the closing window,
/// `detected_at` the round at which the window closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub converged_at: Option<usize>,
    pub detected_at: Option<usize>,
    pub best_accuracy: f64,
    pub initial_accuracy: f64,
    pub final_accuracy: f64,
    pub rounds_run: usize,
    pub total_broadcasts: u64,
    pub bytes: u64,
    pub energy: f64,
}

//! The round engine.
//!
//! A round is: every sensor trains on its own samples; each sensor may
//! broadcast its trained model, and each copy to a neighbour may be lost;
//! every sensor replaces its model with the mean of its own and whatever it
//! received. All training finishes before any averaging, and averaging reads
//! only the trained snapshot, so the order sensors are visited in is
//! irrelevant. The client/server baseline replaces the neighbour exchange
//! with one global mean that every sensor adopts.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics::{check_convergence, AccuracyTrace, OverheadReport, RoundRow, Summary};
use crate::nn::{
    evaluate, packet_bytes, train_local, Mlp, ModelParams, OptimizerState, Real, SampleMatrix, TrainConfig,
};
use crate::rng::{stream, Domain, SimRng};
use crate::signal::{generate_sensor_dataset, split_stratified};
use crate::topology::{is_connected, SensorId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkModel {
    /// Independent loss probability of each directed neighbour delivery.
    pub packet_loss_prob: f64,
    /// Probability that a sensor transmits its model in a given round.
    pub broadcast_prob: f64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            packet_loss_prob: 0.0,
            broadcast_prob: 1.0,
        }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.packet_loss_prob) {
            return Err(Error::InvalidParameter("packet_loss_prob must lie in [0, 1]".into()));
        }
        if !(self.broadcast_prob > 0.0 && self.broadcast_prob <= 1.0) {
            return Err(Error::InvalidParameter("broadcast_prob must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SensorState {
    pub id: SensorId,
    pub model: ModelParams,
    pub optimizer: OptimizerState<f32>,
    pub train_data: SampleMatrix<f32>,
    pub test_data: SampleMatrix<f32>,
    /// Private stream for shuffling and dropout.
    pub rng: SimRng,
}

impl SensorState {
    pub fn new(
        id: SensorId,
        model: ModelParams,
        train_data: SampleMatrix<f32>,
        test_data: SampleMatrix<f32>,
        rng: SimRng,
    ) -> Self {
        Self {
            id,
            optimizer: OptimizerState::for_model(&model),
            model,
            train_data,
            test_data,
            rng,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    /// 0 for the untrained initial models.
    pub round: usize,
    pub broadcast: Vec<bool>,
    /// Models each sensor received this round (its own not included).
    pub received: Vec<usize>,
    pub accuracies: Vec<f64>,
    pub average_accuracy: f64,
}

impl RoundOutcome {
    pub fn broadcasts(&self) -> usize {
        self.broadcast.iter().filter(|&&b| b).count()
    }

    pub fn received_total(&self) -> usize {
        self.received.iter().sum()
    }
}

/// How per-sensor work inside a round is scheduled. Results are identical
/// for every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// Serial, visiting sensors from the highest id down.
    Reversed,
    Parallel,
}

impl Execution {
    fn for_each<T: Send, F>(self, items: &mut [T], f: F) -> Result<()>
    where
        F: Fn(&mut T) -> Result<()> + Sync + Send,
    {
        match self {
            Execution::Serial => items.iter_mut().try_for_each(f),
            Execution::Reversed => items.iter_mut().rev().try_for_each(f),
            Execution::Parallel => items.par_iter_mut().try_for_each(f),
        }
    }

    fn map<T: Sync, U: Send, F>(self, items: &[T], f: F) -> Result<Vec<U>>
    where
        F: Fn(&T) -> Result<U> + Sync + Send,
    {
        match self {
            Execution::Serial => items.iter().map(f).collect(),
            Execution::Reversed => {
                let mut out = items.iter().rev().map(f).collect::<Result<Vec<U>>>()?;
                out.reverse();
                Ok(out)
            }
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }
}

/// Shared, read-only inputs of a round.
#[derive(Clone, Copy)]
pub struct RoundEnv<'a> {
    pub topology: &'a Topology,
    pub link: LinkModel,
    pub train: &'a TrainConfig,
    pub global_test: &'a SampleMatrix<f32>,
    pub execution: Execution,
}

fn lexicographic<A: Real>(a: &Mlp<A>, b: &Mlp<A>) -> Ordering {
    for (x, y) in a.params().zip(b.params()) {
        let (x, y) = (x.to_f64().unwrap_or(f64::NAN), y.to_f64().unwrap_or(f64::NAN));
        match x.total_cmp(&y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Element-wise mean of `own` and every received model, with equal weights.
///
/// Sums are accumulated in `f64` in a canonical order (own first, then the
/// received models sorted by content), so the result is bit-identical for
/// every ordering of `received`.
pub fn federated_average<A: Real>(own: &Mlp<A>, received: &[&Mlp<A>]) -> Result<Mlp<A>> {
    if let Some(bad) = received.iter().position(|m| !m.same_shape(own)) {
        return Err(Error::ShapeMismatch(format!(
            "received model {bad} has shape {:?}, own model {:?}",
            received[bad].sizes(),
            own.sizes()
        )));
    }
    if received.is_empty() {
        return Ok(own.clone());
    }
    let mut sorted = received.to_vec();
    sorted.sort_by(|a, b| lexicographic(a, b));

    let mut acc: Vec<f64> = own.params().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    for m in sorted {
        for (a, v) in acc.iter_mut().zip(m.params()) {
            *a += v.to_f64().unwrap_or(f64::NAN);
        }
    }
    let count = (received.len() + 1) as f64;
    let mut out = own.clone();
    for (p, a) in out.params_mut().zip(acc) {
        *p = A::from_f64(a / count).unwrap_or_else(A::nan);
    }
    Ok(out)
}

/// Who hears whom in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct Deliveries {
    pub broadcast: Vec<bool>,
    /// `senders[r]`: sensors whose model reached `r`, ascending.
    pub senders: Vec<Vec<usize>>,
}

/// Draws broadcast decisions and per-link losses. Every sender consumes one
/// draw for its broadcast decision and one per neighbour for loss, whether
/// or not it transmits, so runs that differ only in probabilities share
/// their random numbers.
pub fn draw_deliveries<R: Rng + ?Sized>(topology: &Topology, link: &LinkModel, rng: &mut R) -> Deliveries {
    let n = topology.len();
    let mut broadcast = vec![false; n];
    let mut senders = vec![Vec::new(); n];
    for (s, sent) in broadcast.iter_mut().enumerate() {
        let u: f64 = rng.random();
        *sent = u < link.broadcast_prob;
        for &r in topology.neighbors(s) {
            let lost = rng.random::<f64>() < link.packet_loss_prob;
            if *sent && !lost {
                senders[r].push(s);
            }
        }
    }
    Deliveries { broadcast, senders }
}

fn check_sizes(sensors: &[SensorState], topology: &Topology) -> Result<()> {
    if sensors.len() != topology.len() {
        return Err(Error::SensorCountMismatch {
            sensors: sensors.len(),
            nodes: topology.len(),
        });
    }
    Ok(())
}

fn local_training(sensors: &mut [SensorState], env: &RoundEnv<'_>) -> Result<()> {
    env.execution.for_each(sensors, |s| {
        train_local(&mut s.model, &mut s.optimizer, &s.train_data, env.train, &mut s.rng)
    })
}

fn evaluate_all(sensors: &[SensorState], env: &RoundEnv<'_>) -> Result<Vec<f64>> {
    env.execution.map(sensors, |s| evaluate(&s.model, env.global_test))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Accuracy of the current models, with no training or exchange.
pub fn evaluate_round(sensors: &[SensorState], env: &RoundEnv<'_>, round: usize) -> Result<RoundOutcome> {
    let accuracies = evaluate_all(sensors, env)?;
    Ok(RoundOutcome {
        round,
        broadcast: vec![false; sensors.len()],
        received: vec![0; sensors.len()],
        average_accuracy: mean(&accuracies),
        accuracies,
    })
}

/// One synchronous round of distributed federated learning.
pub fn run_round<R: Rng + ?Sized>(
    sensors: &mut [SensorState],
    env: &RoundEnv<'_>,
    link_rng: &mut R,
    round: usize,
) -> Result<RoundOutcome> {
    check_sizes(sensors, env.topology)?;
    if !is_connected(env.topology) {
        return Err(Error::Disconnected);
    }
    local_training(sensors, env)?;

    let deliveries = draw_deliveries(env.topology, &env.link, link_rng);
    let trained: Vec<ModelParams> = sensors.iter().map(|s| s.model.clone()).collect();
    let ids: Vec<usize> = (0..sensors.len()).collect();
    let averaged = env.execution.map(&ids, |&r| {
        let inbox: Vec<&ModelParams> = deliveries.senders[r].iter().map(|&s| &trained[s]).collect();
        federated_average(&trained[r], &inbox)
    })?;
    for (s, m) in sensors.iter_mut().zip(averaged) {
        s.model = m;
    }

    let accuracies = evaluate_all(sensors, env)?;
    Ok(RoundOutcome {
        round,
        broadcast: deliveries.broadcast,
        received: deliveries.senders.iter().map(Vec::len).collect(),
        average_accuracy: mean(&accuracies),
        accuracies,
    })
}

/// One client/server round: every client uploads its trained model and
/// adopts the global mean. Links are ideal.
pub fn run_centralized_round(sensors: &mut [SensorState], env: &RoundEnv<'_>, round: usize) -> Result<RoundOutcome> {
    local_training(sensors, env)?;
    let (first, rest) = sensors.split_first().ok_or(Error::EmptyDataset)?;
    let others: Vec<&ModelParams> = rest.iter().map(|s| &s.model).collect();
    let global = federated_average(&first.model, &others)?;
    let accuracy = evaluate(&global, env.global_test)?;
    for s in sensors.iter_mut() {
        s.model = global.clone();
    }
    Ok(RoundOutcome {
        round,
        broadcast: vec![true; sensors.len()],
        received: vec![1; sensors.len()],
        accuracies: vec![accuracy; sensors.len()],
        average_accuracy: accuracy,
    })
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub config: SimConfig,
    pub topology: Topology,
    pub initial: RoundOutcome,
    pub rounds: Vec<RoundOutcome>,
    pub trace: AccuracyTrace,
    pub overhead: OverheadReport,
    pub converged_at: Option<usize>,
    pub final_models: Vec<ModelParams>,
}

impl SimulationReport {
    pub fn rounds_run(&self) -> usize {
        self.rounds.len()
    }

    pub fn best_accuracy(&self) -> f64 {
        self.trace.best_accuracy().unwrap_or(self.initial.average_accuracy)
    }

    /// Best average accuracy over rounds `1..=limit`.
    pub fn best_accuracy_within(&self, limit: usize) -> f64 {
        self.trace.best()[..limit.min(self.trace.len())]
            .last()
            .copied()
            .unwrap_or(self.initial.average_accuracy)
    }

    pub fn detected_at(&self) -> Option<usize> {
        self.converged_at.map(|t| t + self.config.convergence.window)
    }

    pub fn metrics_rows(&self) -> Vec<RoundRow> {
        self.rounds
            .iter()
            .zip(self.trace.best())
            .map(|(o, &best)| RoundRow {
                round: o.round,
                avg_accuracy: o.average_accuracy,
                best_accuracy: best,
                broadcasts: o.broadcasts(),
                received_total: o.received_total(),
            })
            .collect()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            converged_at: self.converged_at,
            detected_at: self.detected_at(),
            best_accuracy: self.best_accuracy(),
            initial_accuracy: self.initial.average_accuracy,
            final_accuracy: self.rounds.last().unwrap_or(&self.initial).average_accuracy,
            rounds_run: self.rounds_run(),
            total_broadcasts: self.overhead.total_broadcasts,
            bytes: self.overhead.bytes,
            energy: self.overhead.energy,
        }
    }
}

/// Sensors with their datasets and untrained models, plus the pooled test set.
pub struct Deployment {
    pub topology: Topology,
    pub sensors: Vec<SensorState>,
    pub global_test: SampleMatrix<f32>,
}

/// Builds the layout, each sensor's samples and an independent random model
/// per sensor. The pooled test set is every sensor's test split, in id order.
pub fn deploy(config: &SimConfig) -> Result<Deployment> {
    config.validate()?;
    let topology = config.build_topology()?;
    if !is_connected(&topology) {
        return Err(Error::Disconnected);
    }
    let mut sensors = Vec::with_capacity(topology.len());
    for (id, &pos) in topology.positions().iter().enumerate() {
        let samples = generate_sensor_dataset(
            pos,
            &config.channel,
            config.data.samples_per_sensor,
            config.data.target_fraction,
            &mut stream(config.seed, Domain::Data, id as u64),
        )?;
        let (train, test) = split_stratified(&samples, config.data.train_fraction);
        if train.is_empty() || test.is_empty() {
            return Err(Error::Config("train/test split leaves an empty side".into()));
        }
        let model = ModelParams::init_model(&mut stream(config.seed, Domain::Init, id as u64));
        sensors.push(SensorState::new(
            SensorId(id),
            model,
            SampleMatrix::from_samples(&train),
            SampleMatrix::from_samples(&test),
            stream(config.seed, Domain::Train, id as u64),
        ));
    }
    let parts: Vec<&SampleMatrix<f32>> = sensors.iter().map(|s| &s.test_data).collect();
    let global_test = SampleMatrix::concat(&parts);
    Ok(Deployment {
        topology,
        sensors,
        global_test,
    })
}

fn drive<F>(config: &SimConfig, mut step: F) -> Result<SimulationReport>
where
    F: FnMut(&mut [SensorState], &RoundEnv<'_>, &mut SimRng, usize) -> Result<RoundOutcome>,
{
    let Deployment {
        topology,
        mut sensors,
        global_test,
    } = deploy(config)?;
    let env = RoundEnv {
        topology: &topology,
        link: config.link,
        train: &config.train,
        global_test: &global_test,
        execution: if config.parallel {
            Execution::Parallel
        } else {
            Execution::Serial
        },
    };
    let packet = packet_bytes(&sensors[0].model.sizes());
    let initial = evaluate_round(&sensors, &env, 0)?;
    let mut link_rng = stream(config.seed, Domain::Link, 0);
    let mut trace = AccuracyTrace::new();
    let mut overhead = OverheadReport::new(sensors.len());
    let mut rounds = Vec::new();
    let mut converged_at = None;
    for t in 1..=config.max_rounds {
        let outcome = step(&mut sensors, &env, &mut link_rng, t)?;
        trace.push(outcome.average_accuracy)?;
        overhead.record(&outcome.broadcast, packet);
        rounds.push(outcome);
        converged_at = check_convergence(&trace, &config.convergence);
        if converged_at.is_some() {
            break;
        }
    }
    let report = SimulationReport {
        config: config.clone(),
        topology: topology.clone(),
        initial,
        rounds,
        trace,
        overhead,
        converged_at,
        final_models: sensors.into_iter().map(|s| s.model).collect(),
    };
    if report.converged_at.is_none() {
        return Err(Error::NotConverged(Box::new(report)));
    }
    Ok(report)
}

/// Runs distributed rounds until the convergence rule fires. A run that
/// hits `max_rounds` first is returned inside [`Error::NotConverged`].
pub fn run_simulation(config: &SimConfig) -> Result<SimulationReport> {
    drive(config, run_round)
}

/// Same data and stopping rule, with server-side averaging every round.
pub fn run_centralized_baseline(config: &SimConfig) -> Result<SimulationReport> {
    drive(config, |sensors, env, _, t| run_centralized_round(sensors, env, t))
}

/// Returns the report whether or not the run converged.
pub fn into_report(result: Result<SimulationReport>) -> Result<SimulationReport> {
    match result {
        Ok(r) => Ok(r),
        Err(Error::NotConverged(r)) => Ok(*r),
        Err(e) => Err(e),
    }
}

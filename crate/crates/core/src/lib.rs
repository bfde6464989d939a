//! Deterministic simulation of serverless federated learning over multi-hop
//! wireless sensor networks.
//!
//! Sensors observe BPSK/QPSK transmissions through location-dependent
//! channels, train a small feedforward classifier on their own samples and
//! exchange models with radio neighbours only. Each round every sensor
//! averages whatever neighbour models reached it with its own. The crate
//! covers the whole pipeline: signal synthesis ([`signal`]), the classifier
//! ([`nn`]), network layouts ([`topology`]), the round engine
//! ([`protocol`]), accuracy/convergence/overhead bookkeeping ([`metrics`]),
//! canned experiment suites ([`experiments`]) and the command line
//! ([`cli`]).

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod nn;
pub mod protocol;
pub mod rng;
pub mod signal;
pub mod topology;

pub use config::SimConfig;
pub use error::{Error, Result};

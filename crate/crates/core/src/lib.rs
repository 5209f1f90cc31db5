//! Degree laws of the single-edge preferential-attachment growth process.
//!
//! A node born at time `m` starts with degree 1. At every later time `t` a new
//! node arrives and the tracked node gains an edge with probability
//! `X / (2t - 1)`, where `X` is its current degree. This crate evaluates the
//! resulting degree distribution three ways and cross-checks them:
//!
//! * [`recurrence`]: exact dynamic programming over the master equation,
//! * [`closed_form`]: the explicit solution, exactly and in log space,
//! * [`simulator`]: Monte Carlo realizations of the process and of full graph
//!   growth.
//!
//! [`validation`] ties the three together.

pub mod closed_form;
pub mod combinatorics;
mod error;
pub mod recurrence;
pub mod simulator;
pub mod validation;

pub use closed_form::ClosedFormValue;
pub use combinatorics::{ExactInteger, ExactRational, LogFloat};
pub use error::{Error, Result};
pub use recurrence::{DegreeDistribution, DistributionTable, ScaledTable};
pub use simulator::{EmpiricalDistribution, GraphState, SimulationConfig, SimulationMode};
pub use validation::{EquivalenceReport, StatReport, Verdict};

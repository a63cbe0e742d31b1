//! Distributed interference management for small-cell uplinks.
//!
//! The pipeline builds an interference graph over UE-SBS pairs, colors it
//! into maximal independent sets with a randomized distributed algorithm,
//! optimizes the time share of each set with consensus ADMM, and turns the
//! shares into a cyclic TDMA schedule.

pub mod baselines;
pub mod dynamics;
pub mod fractopt;
pub mod harness;
pub mod intgraph;
pub mod lp;
pub mod miscolor;
pub mod objective;
pub mod rng;
pub mod scheduler;
pub mod topology;

pub use intgraph::{BoundParams, InterferenceGraph};
pub use miscolor::{MisFamily, MisParams};
pub use objective::Objective;
pub use rng::StreamKey;
pub use scheduler::Schedule;
pub use topology::{GainMatrix, LinkParams, PowerProfile, Scenario};

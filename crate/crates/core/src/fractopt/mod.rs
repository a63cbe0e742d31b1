//! Optimal time shares of the MIS classes.
//!
//! [`admm_solve`] is the distributed solver: every UE keeps its own copy of
//! the share vector and neighbors are driven to agreement by consensus
//! ADMM. [`centralized_oracle`] solves the same problem directly and is used
//! to validate it.

mod admm;
mod incidence;
mod local;
mod oracle;
mod rates;

use thiserror::Error;

pub use admm::{admm_solve, AdmmConfig, AdmmOutcome, FractionState, IterationRecord};
pub use incidence::{build_incidence, consensus_edges, IncidenceMatrices};
pub use local::{project_feasible, project_simplex, solve_local_subproblem, LocalProblem, LocalUtility};
pub use oracle::{centralized_oracle, optimize_time_sharing, OracleSolution, MAX_PF_COLUMNS};
pub use rates::{compute_rates, measure_rates, RateMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum FractError {
    #[error("UE {ue} cannot reach its minimum {rmin} (best class rate {max_rate})")]
    LocalInfeasible { ue: usize, max_rate: f64, rmin: f64 },
    #[error("no time-share vector satisfies every minimum throughput")]
    Infeasible,
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    BadInput(String),
}

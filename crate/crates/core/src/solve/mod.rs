//! Solving backends. All of them consume a [`ConstrainedModel`] (annealing
//! goes through the QUBO lowering) and return a [`Solution`].

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Allocation, ConstrainedModel};
use crate::qubo::QuboError;

pub mod anneal;
pub mod exact;
pub mod greedy;
pub mod remote;

pub use anneal::{anneal_read, solve_sa, AnnealSchedule, ReadOutcome, SlackMode};
pub use exact::{solve_exact, solve_exact_from, ExactLimits};
pub use greedy::solve_greedy;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Proven optimal (exact backend only).
    Optimal,
    /// Satisfies every model constraint; optimality unknown.
    Feasible,
    /// Violates a constraint, or proven to have no feasible point.
    Infeasible,
    /// Search stopped before any feasible point was found.
    Unknown,
}

impl Status {
    pub fn is_feasible(self) -> bool {
        matches!(self, Status::Optimal | Status::Feasible)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unknown => "unknown",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub nodes: u64,
    /// `(node, objective)` each time the exact incumbent improves.
    pub incumbent_trace: Vec<(u64, f64)>,
    /// Upper bound at the root of the exact search.
    pub root_bound: Option<f64>,
    pub reads: usize,
    pub sweeps: usize,
    pub best_energy: Option<f64>,
    pub best_read: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub solver: String,
    pub status: Status,
    /// Decision values in model variable order.
    pub bits: Vec<bool>,
    pub allocation: Allocation,
    /// Objective recomputed from `bits`, in bits/s for scenario models.
    pub objective: f64,
    pub wall_time: Duration,
    pub stats: SolverStats,
}

impl Solution {
    /// Builds a solution whose status follows from feasibility of `bits`.
    pub(crate) fn judged(model: &ConstrainedModel, solver: &str, bits: Vec<bool>, wall_time: Duration, stats: SolverStats) -> Self {
        let status = if model.is_feasible(&bits) { Status::Feasible } else { Status::Infeasible };
        Self::with_status(model, solver, bits, status, wall_time, stats)
    }

    pub(crate) fn with_status(
        model: &ConstrainedModel,
        solver: &str,
        bits: Vec<bool>,
        status: Status,
        wall_time: Duration,
        stats: SolverStats,
    ) -> Self {
        Self {
            solver: solver.to_string(),
            status,
            objective: model.objective_value(&bits),
            allocation: model.allocation_of(&bits),
            bits,
            wall_time,
            stats,
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-read seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

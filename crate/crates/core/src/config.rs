use serde::{Deserialize, Serialize};

/// How the variational compression chooses its starting state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Start from the one-shot truncation of the target.
    Truncation,
    /// Start from a seeded random MPS of the requested bond dimension.
    Random,
}

/// Sweep schedule and restart policy shared by the compression and
/// sequential-generation optimizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    /// Convergence threshold on the change of the cost over one full sweep.
    /// Relative for compression, absolute for sequential generation.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Independent runs; the best result is returned.
    pub restarts: usize,
    pub seed: u64,
    pub init: InitStrategy,
    /// Skip the remaining restarts once `1 - F` drops below this value.
    pub stop_below: f64,
    /// Treat the initial ancilla state as a variational vector.
    pub optimize_phi_i: bool,
}

impl OptimizationConfig {
    /// Defaults for variational MPS compression.
    pub fn compression() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 200,
            restarts: 1,
            seed: 0,
            init: InitStrategy::Truncation,
            stop_below: 0.0,
            optimize_phi_i: false,
        }
    }

    /// Defaults for constrained sequential generation.
    pub fn generation() -> Self {
        Self {
            tol: 1e-12,
            max_sweeps: 500,
            restarts: 5,
            seed: 0,
            init: InitStrategy::Random,
            stop_below: 1e-14,
            optimize_phi_i: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self::generation()
    }
}

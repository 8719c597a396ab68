//! A genetic algorithm whose fitness is perturbed by pairwise social
//! interactions between cooperator and cheater chromosomes, applied to single
//! and multidimensional 0/1 knapsack problems.
//!
//! Modules:
//! - [`game`]: the seven symmetric 2×2 games and their payoff matrices.
//! - [`knapsack`]: instances, cooperative/cheater fitness, OR-library and JSON I/O.
//! - [`ga`]: the generation cycle and its operators.
//! - [`experiments`]: seeded replica batches, τ-sweeps and noise controls.
//! - [`stats`]: linear regression with ANOVA and the Mann-Whitney test.

pub mod error;
pub mod experiments;
pub mod ga;
pub mod game;
pub mod knapsack;
pub mod stats;

pub use error::{Error, Result};
pub use experiments::{ExperimentPlan, RunSummary};
pub use ga::{GaConfig, NoiseKind, RunResult};
pub use game::{GameModel, GameParams, PayoffMatrix, Role};
pub use knapsack::{CheatConfig, CheatMode, KnapsackInstance, Solution};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

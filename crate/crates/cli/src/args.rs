use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use gagt::{CheatMode, GameModel, GameParams, NoiseKind};

/// Genetic algorithm with game-theoretic social interactions for 0/1 knapsack problems.
///
/// Instances are read from OR-library mknap files or from `.json` documents.
/// Results go to standard output, or to `--out`, as CSV with a `#` manifest
/// header or as a JSON object `{manifest, records}`.
///
/// Exit status: 0 on success, 1 on usage errors, 2 on data or parse errors.
#[derive(Debug, Parser)]
#[command(name = "gagt", version, propagate_version = true)]
pub struct Cli {
    /// Print progress to standard error (repeat for more detail).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single GA run; one output row per generation.
    Run(RunArgs),
    /// Replicas of each game next to standard-GA controls; one row per replica.
    Batch(BatchArgs),
    /// Replicas of one game at several cheating degrees.
    Sweep(SweepArgs),
    /// Replicas with the payoff matrix replaced by random noise.
    Noise(NoiseArgs),
    /// Regression and rank tests over CSV columns.
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
    /// Check payoff matrices against the ordering of their game.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output format [default: csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Write results to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReportArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,

    /// Write the report to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GaArgs {
    /// Knapsack instance: `.json` document or OR-library mknap file.
    #[arg(long, value_name = "PATH")]
    pub instance: Option<PathBuf>,

    /// Problem to use from a multi-problem mknap file, counting from 1 [default: 1].
    #[arg(long, value_name = "I")]
    pub instance_index: Option<usize>,

    /// TOML plan file; flags given on the command line override its values.
    #[arg(long, value_name = "PATH")]
    pub plan: Option<PathBuf>,

    /// Population size N, even [default: 500].
    #[arg(long, value_name = "N")]
    pub pop: Option<usize>,

    /// Number of generations G [default: 1000].
    #[arg(long, value_name = "G")]
    pub gens: Option<usize>,

    /// Initial fraction of cheaters [default: 0.1].
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,

    /// Crossover probability [default: 0.75].
    #[arg(long, value_name = "X")]
    pub pc: Option<f64>,

    /// Per-bit mutation probability [default: 1/number of items].
    #[arg(long, value_name = "Y")]
    pub pm: Option<f64>,

    /// Cheating degree in percent, 0 to 100 [default: 50].
    #[arg(long, value_name = "T")]
    pub tau: Option<f64>,

    /// Weight of the genetic term [default: 0.8].
    #[arg(long, value_name = "B1")]
    pub beta_ga: Option<f64>,

    /// Weight of the social term [default: 0.2].
    #[arg(long, value_name = "B2")]
    pub beta_gt: Option<f64>,

    /// Game model: pd, cg, mp, fof, fd, bs or sh [default: pd].
    #[arg(long, value_name = "M", conflicts_with = "control")]
    pub game: Option<GameModel>,

    /// Custom payoff parameters `k,s1,s2,c` for the selected game.
    #[arg(long, value_name = "K,S1,S2,C", allow_hyphen_values = true)]
    pub game_params: Option<GameParams>,

    /// Run the standard GA without social interactions.
    #[arg(long)]
    pub control: bool,

    /// Cheating rule: proportional (Δ = x·τ/100) or absolute (Δ = τ/100) [default: proportional].
    #[arg(long, value_name = "MODE")]
    pub cheat_mode: Option<CheatMode>,

    /// Base random seed; falls back to $GAGT_SEED, then to 1.
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReplicaArgs {
    /// Replicas per arm [default: 10].
    #[arg(long, value_name = "R")]
    pub replicas: Option<usize>,

    /// Replicas of the control arm [default: same as --replicas].
    #[arg(long, value_name = "R")]
    pub control_replicas: Option<usize>,

    /// Maximum replicas run in parallel [default: 1]. Output does not depend on it.
    #[arg(long, value_name = "K")]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub ga: GaArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub ga: GaArgs,

    #[command(flatten)]
    pub replicas: ReplicaArgs,

    /// Comma-separated games to run [default: --game, else all seven].
    #[arg(long, value_name = "LIST", value_delimiter = ',', conflicts_with_all = ["game", "control"])]
    pub games: Option<Vec<GameModel>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub ga: GaArgs,

    #[command(flatten)]
    pub replicas: ReplicaArgs,

    /// Comma-separated cheating degrees, e.g. 10,20,30.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub tau_list: Option<Vec<f64>>,

    /// Emit one averaged row per cheating degree instead of one per replica.
    #[arg(long)]
    pub aggregate: bool,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub ga: GaArgs,

    #[command(flatten)]
    pub replicas: ReplicaArgs,

    /// Noise distribution replacing the payoffs: uniform or gaussian.
    #[arg(long, value_name = "KIND")]
    pub kind: Option<NoiseKind>,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Least-squares fit of one column on another, with an ANOVA table.
    Regress {
        /// Column holding the regressor.
        #[arg(long, value_name = "COL")]
        x: String,
        /// Column holding the response.
        #[arg(long, value_name = "COL")]
        y: String,
        /// CSV file; lines starting with `#` are ignored.
        file: PathBuf,
        #[command(flatten)]
        output: ReportArgs,
    },
    /// Mann-Whitney rank test between two groups of rows.
    Mwu {
        /// Column holding the group label.
        #[arg(long, value_name = "COL")]
        group: String,
        /// Column holding the measurement.
        #[arg(long, value_name = "COL")]
        value: String,
        /// The two groups to compare, `A,B` [default: the only two present].
        #[arg(long, value_name = "A,B", value_delimiter = ',', num_args = 1)]
        groups: Option<Vec<String>>,
        /// Read empty value cells as this number instead of skipping the row
        /// (e.g. 0 for a run that never held a feasible solution).
        #[arg(long, value_name = "X", allow_hyphen_values = true)]
        fill_empty: Option<f64>,
        /// CSV file; lines starting with `#` are ignored.
        file: PathBuf,
        #[command(flatten)]
        output: ReportArgs,
    },
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Game to check [default: all seven].
    #[arg(long, value_name = "M")]
    pub game: Option<GameModel>,

    /// Custom payoff parameters `k,s1,s2,c`; requires --game.
    #[arg(
        long,
        value_name = "K,S1,S2,C",
        requires = "game",
        allow_hyphen_values = true
    )]
    pub game_params: Option<GameParams>,

    #[command(flatten)]
    pub output: ReportArgs,
}

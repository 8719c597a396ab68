//! Replica orchestration: per-game batches with standard-GA controls,
//! cheating-degree sweeps and noise controls.
//!
//! Replica `i` of any arm runs with seed `base.seed + i`, so arms share
//! random streams replica by replica and every summary can be recomputed
//! from the plan and its replica index alone.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::{self, GaConfig, NoiseKind};
use crate::game::GameModel;
use crate::knapsack::KnapsackInstance;
use crate::stats;

/// One configuration family within an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    Game(GameModel),
    Control,
    Noise(GameModel, NoiseKind),
}

impl Arm {
    pub fn label(&self) -> String {
        match self {
            Arm::Game(g) => g.tag().to_string(),
            Arm::Control => "control".to_string(),
            Arm::Noise(g, kind) => format!("{}-{}", g.tag(), kind),
        }
    }

    fn configure(&self, base: &GaConfig) -> GaConfig {
        let mut config = base.clone();
        match *self {
            Arm::Game(g) => {
                config.game = Some(g);
                config.noise = NoiseKind::Off;
            }
            Arm::Control => {
                config.game = None;
                config.noise = NoiseKind::Off;
            }
            Arm::Noise(g, kind) => {
                config.game = Some(g);
                config.noise = kind;
            }
        }
        config
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Path of the instance file, when the plan came from a file.
    #[serde(default)]
    pub instance: Option<String>,
    pub games: Vec<GameModel>,
    pub replicas_per_game: usize,
    pub control_replicas: usize,
    pub base: GaConfig,
    #[serde(default)]
    pub tau_values: Option<Vec<f64>>,
    /// Upper bound on replicas run in parallel; 1 runs sequentially.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl ExperimentPlan {
    pub fn new(
        games: Vec<GameModel>,
        replicas_per_game: usize,
        control_replicas: usize,
        base: GaConfig,
    ) -> Self {
        ExperimentPlan {
            instance: None,
            games,
            replicas_per_game,
            control_replicas,
            base,
            tau_values: None,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas_per_game < 1 {
            return Err(Error::Config("replicas per game must be at least 1".into()));
        }
        if self.control_replicas < 1 {
            return Err(Error::Config("control replicas must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        let mut base = self.base.clone();
        base.noise = NoiseKind::Off;
        base.validate()
    }

    /// Game used by sweeps and noise controls: the first listed, else PD.
    pub fn primary_game(&self) -> GameModel {
        self.games.first().copied().unwrap_or(GameModel::Pd)
    }
}

/// End-of-run record of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub replica: usize,
    pub seed: u64,
    pub tau: f64,
    /// Best feasible honest value seen during the run.
    pub best_feasible_value: Option<f64>,
    /// Feasible members of the final population.
    pub feasible_count: usize,
    /// Mean honest value of the feasible final members.
    pub mean_feasible_fitness: Option<f64>,
    /// Largest honest value among the feasible final members.
    pub max_feasible_fitness: Option<f64>,
    pub final_cheater_fraction: f64,
}

/// Runs a single replica of `arm` and condenses it into a summary.
pub fn run_replica(
    arm: Arm,
    base: &GaConfig,
    replica: usize,
    instance: &KnapsackInstance,
) -> Result<RunSummary> {
    let mut config = arm.configure(base);
    config.seed = base.seed.wrapping_add(replica as u64);
    let result = ga::run(&config, instance)?;
    let feasible: Vec<f64> = result
        .final_population
        .iter()
        .filter(|c| c.feasible)
        .map(|c| c.true_value)
        .collect();
    Ok(RunSummary {
        label: arm.label(),
        replica,
        seed: config.seed,
        tau: config.tau,
        best_feasible_value: result.best_value,
        feasible_count: feasible.len(),
        mean_feasible_fitness: stats::mean(&feasible),
        max_feasible_fitness: feasible.iter().copied().reduce(f64::max),
        final_cheater_fraction: ga::cheater_fraction(&result.final_population),
    })
}

type Job = (Arm, GaConfig, usize);

fn execute(jobs: Vec<Job>, instance: &KnapsackInstance, workers: usize) -> Result<Vec<RunSummary>> {
    let work = |(arm, base, replica): &Job| run_replica(*arm, base, *replica, instance);
    if workers <= 1 {
        return jobs.iter().map(work).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    // Indexed parallel collection keeps job order.
    pool.install(|| jobs.par_iter().map(work).collect())
}

/// All selected games followed by the controls, replicas in index order.
pub fn run_batch(plan: &ExperimentPlan, instance: &KnapsackInstance) -> Result<Vec<RunSummary>> {
    plan.validate()?;
    let mut jobs: Vec<Job> = Vec::new();
    for &game in &plan.games {
        jobs.extend((0..plan.replicas_per_game).map(|r| (Arm::Game(game), plan.base.clone(), r)));
    }
    jobs.extend((0..plan.control_replicas).map(|r| (Arm::Control, plan.base.clone(), r)));
    execute(jobs, instance, plan.workers)
}

/// Per-τ averages over replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauAggregate {
    pub tau: f64,
    pub replicas: usize,
    pub mean_feasible_count: f64,
    pub mean_feasible_fitness: Option<f64>,
    pub mean_max_feasible_fitness: Option<f64>,
    pub mean_best_feasible_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub game: GameModel,
    pub rows: Vec<TauAggregate>,
    pub runs: Vec<RunSummary>,
}

pub fn aggregate(tau: f64, runs: &[&RunSummary]) -> TauAggregate {
    let present = |f: fn(&RunSummary) -> Option<f64>| -> Vec<f64> {
        runs.iter().filter_map(|r| f(r)).collect()
    };
    let counts: Vec<f64> = runs.iter().map(|r| r.feasible_count as f64).collect();
    TauAggregate {
        tau,
        replicas: runs.len(),
        mean_feasible_count: stats::mean(&counts).unwrap_or(0.0),
        mean_feasible_fitness: stats::mean(&present(|r| r.mean_feasible_fitness)),
        mean_max_feasible_fitness: stats::mean(&present(|r| r.max_feasible_fitness)),
        mean_best_feasible_value: stats::mean(&present(|r| r.best_feasible_value)),
    }
}

/// Runs `plan.replicas_per_game` replicas of the plan's primary game at every
/// cheating degree and averages them, rows ordered by τ.
pub fn tau_sweep(
    plan: &ExperimentPlan,
    tau_values: &[f64],
    instance: &KnapsackInstance,
) -> Result<SweepResult> {
    plan.validate()?;
    if tau_values.is_empty() {
        return Err(Error::Config("cheating-degree list is empty".into()));
    }
    if let Some(t) = tau_values.iter().find(|t| !(0.0..=100.0).contains(*t)) {
        return Err(Error::Config(format!(
            "cheating degree {t} outside [0, 100]"
        )));
    }
    let mut taus = tau_values.to_vec();
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let game = plan.primary_game();
    let mut jobs = Vec::new();
    for &tau in &taus {
        let base = GaConfig {
            tau,
            ..plan.base.clone()
        };
        jobs.extend((0..plan.replicas_per_game).map(|r| (Arm::Game(game), base.clone(), r)));
    }
    let runs = execute(jobs, instance, plan.workers)?;
    let rows = taus
        .iter()
        .map(|&tau| {
            let group: Vec<&RunSummary> = runs.iter().filter(|r| r.tau == tau).collect();
            aggregate(tau, &group)
        })
        .collect();
    Ok(SweepResult { game, rows, runs })
}

/// Replicas of every selected game (PD when none) with the social term
/// replaced by `kind` noise anchored to that game's payoff matrix.
pub fn noise_control(
    plan: &ExperimentPlan,
    kind: NoiseKind,
    instance: &KnapsackInstance,
) -> Result<Vec<RunSummary>> {
    plan.validate()?;
    if kind == NoiseKind::Off {
        return Err(Error::Config(
            "noise control needs uniform or gaussian noise".into(),
        ));
    }
    let games = if plan.games.is_empty() {
        vec![GameModel::Pd]
    } else {
        plan.games.clone()
    };
    let jobs = games
        .iter()
        .flat_map(|&g| (0..plan.replicas_per_game).map(move |r| (Arm::Noise(g, kind), r)))
        .map(|(arm, r)| (arm, plan.base.clone(), r))
        .collect();
    execute(jobs, instance, plan.workers)
}

/// Groups incumbent-best values by label. A run that never met a feasible
/// solution counts as 0, the value of the always-feasible empty knapsack.
pub fn best_values_by_label(summaries: &[RunSummary]) -> BTreeMap<String, Vec<f64>> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in summaries {
        groups
            .entry(s.label.clone())
            .or_default()
            .push(s.best_feasible_value.unwrap_or(0.0));
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knapsack::generate_single_sack;

    fn quick_base() -> GaConfig {
        GaConfig {
            population_size: 10,
            generations: 5,
            seed: 100,
            ..GaConfig::default()
        }
    }

    #[test]
    fn batch_counts_and_labels() {
        let inst = generate_single_sack("b", 12, 1);
        let plan = ExperimentPlan::new(vec![GameModel::Pd, GameModel::Fd], 3, 6, quick_base());
        let out = run_batch(&plan, &inst).unwrap();
        assert_eq!(out.len(), 12);
        assert_eq!(out.iter().filter(|s| s.label == "control").count(), 6);
        assert!(out
            .iter()
            .filter(|s| s.label == "control")
            .all(|s| s.final_cheater_fraction == 0.0));
        assert_eq!(out[0].seed, 100);
        assert_eq!(out[2].seed, 102);
    }

    #[test]
    fn summary_invariants() {
        let inst = generate_single_sack("b", 12, 2);
        let plan = ExperimentPlan::new(vec![GameModel::Pd], 4, 4, quick_base());
        for s in run_batch(&plan, &inst).unwrap() {
            match (s.mean_feasible_fitness, s.max_feasible_fitness) {
                (Some(mean), Some(max)) => assert!(mean <= max),
                (None, None) => assert_eq!(s.feasible_count, 0),
                other => panic!("inconsistent summary {other:?}"),
            }
        }
    }

    #[test]
    fn plan_validation() {
        let inst = generate_single_sack("b", 12, 1);
        let plan = ExperimentPlan::new(vec![GameModel::Pd], 0, 1, quick_base());
        assert!(run_batch(&plan, &inst).is_err());
        let plan = ExperimentPlan::new(vec![GameModel::Pd], 1, 0, quick_base());
        assert!(run_batch(&plan, &inst).is_err());
    }

    #[test]
    fn sweep_rows_sorted() {
        let inst = generate_single_sack("b", 12, 1);
        let plan = ExperimentPlan::new(vec![GameModel::Pd], 2, 1, quick_base());
        let sweep = tau_sweep(&plan, &[50.0, 10.0, 25.0], &inst).unwrap();
        let taus: Vec<f64> = sweep.rows.iter().map(|r| r.tau).collect();
        assert_eq!(taus, vec![10.0, 25.0, 50.0]);
        assert_eq!(sweep.runs.len(), 6);
        assert_eq!(tau_sweep(&plan, &[30.0], &inst).unwrap().rows.len(), 1);
        assert!(tau_sweep(&plan, &[], &inst).is_err());
        assert!(tau_sweep(&plan, &[101.0], &inst).is_err());
    }

    #[test]
    fn aggregate_is_order_invariant() {
        let inst = generate_single_sack("b", 12, 3);
        let plan = ExperimentPlan::new(vec![GameModel::Pd], 5, 1, quick_base());
        let runs = run_batch(&plan, &inst).unwrap();
        let forward: Vec<&RunSummary> = runs.iter().filter(|r| r.label == "pd").collect();
        let mut backward = forward.clone();
        backward.reverse();
        let a = aggregate(50.0, &forward);
        let b = aggregate(50.0, &backward);
        assert_eq!(a.replicas, b.replicas);
        assert!((a.mean_feasible_count - b.mean_feasible_count).abs() < 1e-12);
    }

    #[test]
    fn noise_labels() {
        let inst = generate_single_sack("b", 12, 1);
        let plan = ExperimentPlan::new(vec![], 2, 1, quick_base());
        let out = noise_control(&plan, NoiseKind::Gaussian, &inst).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|s| s.label == "pd-gaussian"));
        assert!(noise_control(&plan, NoiseKind::Off, &inst).is_err());
    }
}

//! Merging of plan files, flags and defaults into solver configuration.

use std::path::{Path, PathBuf};

use gagt::knapsack::{parse_json_instance, parse_orlib_mknap};
use gagt::{CheatMode, GaConfig, GameModel, GameParams, KnapsackInstance, NoiseKind};
use serde::Deserialize;

use crate::args::{Format, GaArgs, OutputArgs, ReplicaArgs};
use crate::error::CliError;

pub const DEFAULT_REPLICAS: usize = 10;

/// Contents of a `--plan` TOML file. Keys mirror the long flag names with
/// underscores; all are optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub instance: Option<PathBuf>,
    pub instance_index: Option<usize>,
    pub pop: Option<usize>,
    pub gens: Option<usize>,
    pub alpha: Option<f64>,
    pub pc: Option<f64>,
    pub pm: Option<f64>,
    pub tau: Option<f64>,
    pub beta_ga: Option<f64>,
    pub beta_gt: Option<f64>,
    pub game: Option<String>,
    pub game_params: Option<String>,
    pub control: Option<bool>,
    pub cheat_mode: Option<String>,
    pub seed: Option<u64>,
    pub games: Option<Vec<String>>,
    pub replicas: Option<usize>,
    pub control_replicas: Option<usize>,
    pub workers: Option<usize>,
    pub tau_list: Option<Vec<f64>>,
    pub kind: Option<String>,
    pub format: Option<String>,
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_file(path)?;
        let mut plan: PlanFile = toml::from_str(&text)
            .map_err(|e| CliError::Data(format!("{}: {}", path.display(), e.message())))?;
        // Instance paths in a plan are relative to the plan file.
        if let (Some(inst), Some(dir)) = (plan.instance.as_mut(), path.parent()) {
            if inst.is_relative() {
                *inst = dir.join(&*inst);
            }
        }
        Ok(plan)
    }

    pub fn games(&self, path: &Path) -> Result<Option<Vec<GameModel>>, CliError> {
        self.games
            .as_ref()
            .map(|list| list.iter().map(|g| plan_value(path, "games", g)).collect())
            .transpose()
    }

    pub fn kind(&self, path: &Path) -> Result<Option<NoiseKind>, CliError> {
        self.kind
            .as_deref()
            .map(|k| plan_value(path, "kind", k))
            .transpose()
    }
}

fn plan_value<T: std::str::FromStr>(path: &Path, key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e: T::Err| CliError::Data(format!("{}: key `{key}`: {e}", path.display())))
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Flags and plan together, with the plan path kept for error messages.
pub struct Resolved {
    pub plan: PlanFile,
    pub plan_path: PathBuf,
}

impl Resolved {
    pub fn new(args: &GaArgs) -> Result<Self, CliError> {
        match &args.plan {
            Some(path) => Ok(Resolved {
                plan: PlanFile::load(path)?,
                plan_path: path.clone(),
            }),
            None => Ok(Resolved {
                plan: PlanFile::default(),
                plan_path: PathBuf::from("<no plan>"),
            }),
        }
    }

    /// Builds the GA configuration. Precedence: flag, plan, `$GAGT_SEED` (seed
    /// only), built-in default.
    pub fn ga_config(&self, args: &GaArgs) -> Result<GaConfig, CliError> {
        let plan = &self.plan;
        let path = &self.plan_path;
        let defaults = GaConfig::default();

        let plan_game: Option<GameModel> = plan
            .game
            .as_deref()
            .map(|g| plan_value(path, "game", g))
            .transpose()?;
        let plan_params: Option<GameParams> = plan
            .game_params
            .as_deref()
            .map(|p| plan_value(path, "game_params", p))
            .transpose()?;
        let plan_cheat: Option<CheatMode> = plan
            .cheat_mode
            .as_deref()
            .map(|m| plan_value(path, "cheat_mode", m))
            .transpose()?;
        if plan_game.is_some() && plan.control == Some(true) {
            return Err(CliError::Data(format!(
                "{}: keys `game` and `control` cannot both be set",
                path.display()
            )));
        }

        let game = if args.control {
            None
        } else if let Some(g) = args.game {
            Some(g)
        } else if plan.control == Some(true) {
            None
        } else {
            Some(plan_game.unwrap_or(GameModel::Pd))
        };
        let game_params = args.game_params.or(plan_params);
        if game.is_none() && game_params.is_some() {
            return Err(CliError::Usage(
                "--game-params: has no effect with --control".into(),
            ));
        }

        let config = GaConfig {
            population_size: args.pop.or(plan.pop).unwrap_or(defaults.population_size),
            generations: args.gens.or(plan.gens).unwrap_or(defaults.generations),
            cheater_rate: args.alpha.or(plan.alpha).unwrap_or(defaults.cheater_rate),
            crossover_rate: args.pc.or(plan.pc).unwrap_or(defaults.crossover_rate),
            mutation_rate: args.pm.or(plan.pm),
            tau: args.tau.or(plan.tau).unwrap_or(defaults.tau),
            cheat_mode: args
                .cheat_mode
                .or(plan_cheat)
                .unwrap_or(defaults.cheat_mode),
            beta_ga: args.beta_ga.or(plan.beta_ga).unwrap_or(defaults.beta_ga),
            beta_gt: args.beta_gt.or(plan.beta_gt).unwrap_or(defaults.beta_gt),
            game,
            game_params,
            noise: NoiseKind::Off,
            seed: match args.seed.or(plan.seed) {
                Some(s) => s,
                None => env_seed()?.unwrap_or(defaults.seed),
            },
        };
        check_config(&config)?;
        Ok(config)
    }

    pub fn replicas(&self, args: &ReplicaArgs) -> (usize, usize, usize) {
        let replicas = args
            .replicas
            .or(self.plan.replicas)
            .unwrap_or(DEFAULT_REPLICAS);
        let control = args
            .control_replicas
            .or(self.plan.control_replicas)
            .unwrap_or(replicas);
        let workers = args.workers.or(self.plan.workers).unwrap_or(1);
        (replicas, control, workers)
    }

    pub fn format(&self, output: &OutputArgs) -> Result<Format, CliError> {
        if let Some(f) = output.format {
            return Ok(f);
        }
        match self.plan.format.as_deref() {
            None | Some("csv") => Ok(Format::Csv),
            Some("json") => Ok(Format::Json),
            Some(other) => Err(CliError::Data(format!(
                "{}: key `format`: expected csv or json, got {other:?}",
                self.plan_path.display()
            ))),
        }
    }

    /// Loads the instance named by `--instance` or the plan.
    pub fn instance(&self, args: &GaArgs) -> Result<(PathBuf, KnapsackInstance), CliError> {
        let path = args
            .instance
            .clone()
            .or_else(|| self.plan.instance.clone())
            .ok_or_else(|| CliError::Usage("--instance: an instance file is required".into()))?;
        let index = args
            .instance_index
            .or(self.plan.instance_index)
            .unwrap_or(1);
        let instance = load_instance(&path, index)?;
        Ok((path, instance))
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("GAGT_SEED") {
        Ok(raw) => raw.trim().parse().map(Some).map_err(|_| {
            CliError::Usage(format!(
                "GAGT_SEED: expected an unsigned integer, got {raw:?}"
            ))
        }),
        Err(_) => Ok(None),
    }
}

/// Range checks with messages naming the flag at fault.
fn check_config(c: &GaConfig) -> Result<(), CliError> {
    let fail = |flag: &str, msg: String| Err(CliError::Usage(format!("{flag}: {msg}")));
    if c.population_size < 2 || !c.population_size.is_multiple_of(2) {
        return fail(
            "--pop",
            format!(
                "population size must be an even number of at least 2 (social pairing needs a perfect matching), got {}",
                c.population_size
            ),
        );
    }
    if c.generations < 1 {
        return fail("--gens", "must be at least 1".into());
    }
    if !(0.0..=1.0).contains(&c.cheater_rate) {
        return fail(
            "--alpha",
            format!("must lie in [0, 1], got {}", c.cheater_rate),
        );
    }
    if !(0.0..=1.0).contains(&c.crossover_rate) {
        return fail(
            "--pc",
            format!("must lie in [0, 1], got {}", c.crossover_rate),
        );
    }
    if let Some(pm) = c.mutation_rate {
        if !(pm > 0.0 && pm <= 1.0) {
            return fail("--pm", format!("must lie in (0, 1], got {pm}"));
        }
    }
    if !(0.0..=100.0).contains(&c.tau) {
        return fail("--tau", format!("must lie in [0, 100], got {}", c.tau));
    }
    if c.beta_ga.is_nan() || c.beta_ga < 0.0 {
        return fail(
            "--beta-ga",
            format!("must be non-negative, got {}", c.beta_ga),
        );
    }
    if c.beta_gt.is_nan() || c.beta_gt < 0.0 {
        return fail(
            "--beta-gt",
            format!("must be non-negative, got {}", c.beta_gt),
        );
    }
    if c.beta_ga + c.beta_gt <= 0.0 {
        return fail(
            "--beta-ga/--beta-gt",
            "at least one weight must be positive".into(),
        );
    }
    if let Some(p) = c.game_params {
        if let Err(e) = p.validate() {
            return fail("--game-params", e.to_string());
        }
    }
    c.validate().map_err(|e| CliError::Usage(e.to_string()))
}

/// Reads a `.json` instance document or problem `index` (from 1) of an
/// OR-library mknap file.
pub fn load_instance(path: &Path, index: usize) -> Result<KnapsackInstance, CliError> {
    let text = read_file(path)?;
    let at = |e: gagt::Error| CliError::Data(format!("{}: {e}", path.display()));
    let is_json = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
    if is_json {
        return parse_json_instance(&text).map_err(at);
    }
    let mut problems = parse_orlib_mknap(&text).map_err(at)?;
    if index == 0 || index > problems.len() {
        return Err(CliError::Usage(format!(
            "--instance-index: {} holds {} problem(s), got index {index}",
            path.display(),
            problems.len()
        )));
    }
    Ok(problems.swap_remove(index - 1))
}

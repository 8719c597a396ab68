//! The social genetic algorithm.
//!
//! One generation runs, in order: social pairing, evaluation of the combined
//! fitness, binary tournament selection, two-point crossover and bit-flip
//! mutation. With `game = None` the social step is skipped and the engine is
//! a plain generational GA over the cooperative fitness.
//!
//! All randomness for a run comes from one [`GaRng`] seeded with the run seed,
//! consumed in a fixed order: pairing, evaluation noise, then per offspring
//! pair: selection, crossover, mutation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameModel, GameParams, PayoffMatrix, Role};
use crate::knapsack::{CheatConfig, CheatMode, KnapsackInstance, Solution};

/// The random stream type used by every run.
pub type GaRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> GaRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Source of the social term during evaluation.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Payoffs come from the game matrix.
    #[default]
    Off,
    /// Uniform on [min payoff, max payoff].
    Uniform,
    /// Normal with the mean and standard deviation of the four payoffs.
    Gaussian,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "off" | "none" => Ok(NoiseKind::Off),
            "uniform" => Ok(NoiseKind::Uniform),
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            other => Err(Error::Config(format!(
                "unknown noise kind {other:?}; expected uniform or gaussian"
            ))),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Off => "off",
            NoiseKind::Uniform => "uniform",
            NoiseKind::Gaussian => "gaussian",
        })
    }
}

/// Parameters of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Fraction of cheaters in the initial population.
    pub cheater_rate: f64,
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means 1/L.
    pub mutation_rate: Option<f64>,
    pub tau: f64,
    pub cheat_mode: CheatMode,
    pub beta_ga: f64,
    pub beta_gt: f64,
    /// `None` runs the standard GA control.
    pub game: Option<GameModel>,
    /// Overrides the model's default payoff parameters.
    pub game_params: Option<GameParams>,
    pub noise: NoiseKind,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 500,
            generations: 1000,
            cheater_rate: 0.1,
            crossover_rate: 0.75,
            mutation_rate: None,
            tau: 50.0,
            cheat_mode: CheatMode::Proportional,
            beta_ga: 0.8,
            beta_gt: 0.2,
            game: Some(GameModel::Pd),
            game_params: None,
            noise: NoiseKind::Off,
            seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return bad(format!(
                "population size must be even and at least 2, got {}",
                self.population_size
            ));
        }
        if self.generations < 1 {
            return bad("number of generations must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.cheater_rate) {
            return bad(format!(
                "cheater rate must lie in [0, 1], got {}",
                self.cheater_rate
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover_rate
            ));
        }
        if let Some(pm) = self.mutation_rate {
            if !(pm > 0.0 && pm <= 1.0) {
                return bad(format!("mutation rate must lie in (0, 1], got {pm}"));
            }
        }
        CheatConfig::new(self.tau, self.cheat_mode)?;
        if !(self.beta_ga >= 0.0 && self.beta_gt >= 0.0 && self.beta_ga + self.beta_gt > 0.0) {
            return bad(format!(
                "weights must be non-negative with a positive sum, got beta_ga={} beta_gt={}",
                self.beta_ga, self.beta_gt
            ));
        }
        if self.game.is_none() && self.noise != NoiseKind::Off {
            return bad("noise replaces game payoffs and needs a game model".into());
        }
        if let Some(params) = self.game_params {
            params.validate()?;
        }
        Ok(())
    }

    pub fn is_control(&self) -> bool {
        self.game.is_none()
    }

    /// Payoff matrix of the active game, honoring custom parameters.
    pub fn matrix(&self) -> Option<PayoffMatrix> {
        self.game.map(|g| {
            PayoffMatrix::from_params(self.game_params.unwrap_or_else(|| g.default_params()))
        })
    }

    pub fn cheat(&self) -> CheatConfig {
        CheatConfig {
            tau: self.tau,
            mode: self.cheat_mode,
        }
    }

    pub fn mutation_rate_for(&self, n_items: usize) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / n_items as f64)
    }

    /// Number of cheaters placed in the initial population.
    pub fn initial_cheaters(&self) -> usize {
        if self.is_control() {
            0
        } else {
            (self.cheater_rate * self.population_size as f64).round() as usize
        }
    }
}

/// An individual: a bitstring with a social role and its evaluation terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub bits: Solution,
    pub role: Role,
    /// Role-dependent genetic fitness (cooperative or cheater formula).
    pub genetic_term: f64,
    /// Payoff received in the social interaction.
    pub social_term: f64,
    pub combined_fitness: f64,
    /// Feasibility under the true weights.
    pub feasible: bool,
    /// Honest cooperative fitness, regardless of role.
    pub true_value: f64,
}

impl Chromosome {
    pub fn new(bits: Solution, role: Role) -> Self {
        Chromosome {
            bits,
            role,
            genetic_term: 0.0,
            social_term: 0.0,
            combined_fitness: 0.0,
            feasible: false,
            true_value: 0.0,
        }
    }

    fn offspring(bits: Vec<bool>, role: Role) -> Self {
        Chromosome::new(Solution::new(bits), role)
    }
}

/// Per-generation trace entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation_index: usize,
    /// Best feasible cooperative value seen so far in the run.
    pub best_feasible_value: Option<f64>,
    /// Feasible members of this generation's population.
    pub feasible_count: usize,
    /// Largest genetic term in this generation (the unadjusted normalizer).
    pub max_genetic_term: f64,
    pub cheater_fraction: f64,
    pub mean_combined_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub generations: Vec<GenerationStats>,
    pub best_solution: Option<Solution>,
    pub best_value: Option<f64>,
    /// Population left after the last generation's reproduction. Its genetic
    /// terms are evaluated; no social step is applied to it.
    pub final_population: Vec<Chromosome>,
}

/// Builds `N` random chromosomes with exactly `round(α·N)` cheaters at
/// random positions (none in control mode).
pub fn init_population<R: Rng + ?Sized>(
    config: &GaConfig,
    instance: &KnapsackInstance,
    rng: &mut R,
) -> Vec<Chromosome> {
    let n = config.population_size;
    let len = instance.n_items();
    let mut population: Vec<Chromosome> = (0..n)
        .map(|_| {
            let bits: Vec<bool> = (0..len).map(|_| rng.random()).collect();
            Chromosome::offspring(bits, Role::Cooperator)
        })
        .collect();
    let cheaters = config.initial_cheaters().min(n);
    for i in index::sample(rng, n, cheaters) {
        population[i].role = Role::Cheater;
    }
    population
}

/// A uniformly random perfect matching of `0..n` (n even).
pub fn social_pairing<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    if !n.is_multiple_of(2) {
        return Err(Error::Contract(format!(
            "cannot pair an odd population of {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Ok(order.chunks_exact(2).map(|p| (p[0], p[1])).collect())
}

#[derive(Debug, Clone, Copy)]
enum SocialSource {
    None,
    Matrix(PayoffMatrix),
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, std: f64 },
}

/// Evaluates populations for one run configuration.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    instance: &'a KnapsackInstance,
    cheat: CheatConfig,
    beta_ga: f64,
    beta_gt: f64,
    source: SocialSource,
    max_payoff: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a KnapsackInstance, config: &GaConfig) -> Self {
        let matrix = config.matrix();
        let source = match (matrix, config.noise) {
            (None, _) => SocialSource::None,
            (Some(m), NoiseKind::Off) => SocialSource::Matrix(m),
            (Some(m), NoiseKind::Uniform) => SocialSource::Uniform {
                low: m.min_payoff(),
                high: m.max_payoff(),
            },
            (Some(m), NoiseKind::Gaussian) => SocialSource::Gaussian {
                mean: m.mean_payoff(),
                std: m.std_payoff(),
            },
        };
        Evaluator {
            instance,
            cheat: config.cheat(),
            beta_ga: config.beta_ga,
            beta_gt: config.beta_gt,
            source,
            max_payoff: matrix.map_or(1.0, |m| m.max_payoff()),
        }
    }

    pub fn has_social_step(&self) -> bool {
        !matches!(self.source, SocialSource::None)
    }

    /// Fills the genetic terms and feasibility of every chromosome and
    /// returns the generation's largest genetic term.
    pub fn genetic_terms(&self, population: &mut [Chromosome]) -> f64 {
        let mut f_max = f64::NEG_INFINITY;
        for c in population.iter_mut() {
            let packing = self.instance.pack_unchecked(c.bits.bits());
            c.feasible = packing.is_feasible(self.instance);
            c.true_value = packing.cooperative_fitness(self.instance);
            c.genetic_term = match c.role {
                Role::Cooperator => c.true_value,
                Role::Cheater => packing.cheater_fitness(self.instance, self.cheat),
            };
            f_max = f_max.max(c.genetic_term);
        }
        f_max
    }

    /// Assigns the social term to both members of every pair.
    pub fn social_terms<R: Rng + ?Sized>(
        &self,
        population: &mut [Chromosome],
        pairing: &[(usize, usize)],
        rng: &mut R,
    ) {
        for &(a, b) in pairing {
            let (ra, rb) = (population[a].role, population[b].role);
            let (pa, pb) = match self.source {
                SocialSource::None => (0.0, 0.0),
                SocialSource::Matrix(m) => (m.payoff(ra, rb), m.payoff(rb, ra)),
                SocialSource::Uniform { low, high } => (
                    sample_uniform(low, high, rng),
                    sample_uniform(low, high, rng),
                ),
                SocialSource::Gaussian { mean, std } => {
                    (sample_normal(mean, std, rng), sample_normal(mean, std, rng))
                }
            };
            population[a].social_term = pa;
            population[b].social_term = pb;
        }
    }

    /// Full evaluation: genetic terms, social terms and the weighted,
    /// normalized combined fitness. Returns the largest genetic term.
    pub fn evaluate<R: Rng + ?Sized>(
        &self,
        population: &mut [Chromosome],
        pairing: &[(usize, usize)],
        rng: &mut R,
    ) -> f64 {
        let f_max = self.genetic_terms(population);
        if !self.has_social_step() {
            for c in population.iter_mut() {
                c.social_term = 0.0;
                c.combined_fitness = c.genetic_term;
            }
            return f_max;
        }
        self.social_terms(population, pairing, rng);
        let norm = adjusted_normalizer(f_max, population.iter().map(|c| c.genetic_term));
        for c in population.iter_mut() {
            c.combined_fitness = self.beta_ga * c.genetic_term / norm
                + self.beta_gt * c.social_term / self.max_payoff;
        }
        f_max
    }
}

fn sample_uniform<R: Rng + ?Sized>(low: f64, high: f64, rng: &mut R) -> f64 {
    if high > low {
        rng.random_range(low..=high)
    } else {
        low
    }
}

fn sample_normal<R: Rng + ?Sized>(mean: f64, std: f64, rng: &mut R) -> f64 {
    if std > 0.0 {
        Normal::new(mean, std)
            .expect("finite parameters")
            .sample(rng)
    } else {
        mean
    }
}

/// The genetic-term normalizer: the population maximum when positive,
/// otherwise the largest magnitude, otherwise 1.
pub fn adjusted_normalizer(f_max: f64, terms: impl Iterator<Item = f64>) -> f64 {
    if f_max > 0.0 {
        return f_max;
    }
    let largest = terms.map(f64::abs).fold(0.0, f64::max);
    if largest > 0.0 {
        largest
    } else {
        1.0
    }
}

/// Evaluates `population` in place; convenience wrapper over [`Evaluator`].
pub fn evaluate<R: Rng + ?Sized>(
    population: &mut [Chromosome],
    instance: &KnapsackInstance,
    config: &GaConfig,
    pairing: &[(usize, usize)],
    rng: &mut R,
) -> f64 {
    Evaluator::new(instance, config).evaluate(population, pairing, rng)
}

/// Binary tournament between two given contestants; ties are a coin flip.
pub fn tournament_between<R: Rng + ?Sized>(
    population: &[Chromosome],
    i: usize,
    j: usize,
    rng: &mut R,
) -> usize {
    match population[i]
        .combined_fitness
        .partial_cmp(&population[j].combined_fitness)
        .unwrap_or(Ordering::Equal)
    {
        Ordering::Greater => i,
        Ordering::Less => j,
        Ordering::Equal => {
            if rng.random::<bool>() {
                i
            } else {
                j
            }
        }
    }
}

/// Draws two indices with replacement and returns the fitter one.
pub fn binary_tournament<R: Rng + ?Sized>(population: &[Chromosome], rng: &mut R) -> usize {
    let n = population.len();
    let i = rng.random_range(0..n);
    let j = rng.random_range(0..n);
    tournament_between(population, i, j, rng)
}

/// Swaps `[start, end)` between two equal-length bit vectors.
pub fn swap_segment(a: &mut [bool], b: &mut [bool], start: usize, end: usize) {
    a[start..end].swap_with_slice(&mut b[start..end]);
}

/// Draws cut points `0 ≤ u < v ≤ len` uniformly over all valid pairs.
pub fn cut_points<R: Rng + ?Sized>(len: usize, rng: &mut R) -> (usize, usize) {
    loop {
        let u = rng.random_range(0..=len);
        let v = rng.random_range(0..=len);
        match u.cmp(&v) {
            Ordering::Less => return (u, v),
            Ordering::Greater => return (v, u),
            Ordering::Equal => continue,
        }
    }
}

/// Two-point crossover applied with probability `rate`. Each child keeps the
/// role of the parent whose outer segments it carries.
pub fn two_point_crossover<R: Rng + ?Sized>(
    parent_a: &Chromosome,
    parent_b: &Chromosome,
    rate: f64,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let len = parent_a.bits.len();
    if parent_b.bits.len() != len {
        return Err(Error::Contract(format!(
            "crossover parents differ in length: {} vs {}",
            len,
            parent_b.bits.len()
        )));
    }
    let mut a = parent_a.bits.bits().to_vec();
    let mut b = parent_b.bits.bits().to_vec();
    if rng.random::<f64>() < rate {
        let (u, v) = cut_points(len, rng);
        swap_segment(&mut a, &mut b, u, v);
    }
    Ok((
        Chromosome::offspring(a, parent_a.role),
        Chromosome::offspring(b, parent_b.role),
    ))
}

/// Flips each bit independently with probability `rate`. The role is untouched.
pub fn bit_mutation<R: Rng + ?Sized>(chromosome: &mut Chromosome, rate: f64, rng: &mut R) {
    for bit in chromosome.bits.bits_mut() {
        if rng.random::<f64>() < rate {
            *bit = !*bit;
        }
    }
}

/// Incumbent bookkeeping: best feasible solution by honest value.
#[derive(Debug, Default)]
struct Incumbent {
    value: Option<f64>,
    solution: Option<Solution>,
}

impl Incumbent {
    fn observe(&mut self, population: &[Chromosome]) {
        for c in population.iter().filter(|c| c.feasible) {
            if self.value.is_none_or(|best| c.true_value > best) {
                self.value = Some(c.true_value);
                self.solution = Some(c.bits.clone());
            }
        }
    }
}

/// Runs the GA for exactly `config.generations` generations.
pub fn run(config: &GaConfig, instance: &KnapsackInstance) -> Result<RunResult> {
    config.validate()?;
    instance.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let evaluator = Evaluator::new(instance, config);
    let n = config.population_size;
    let p_m = config.mutation_rate_for(instance.n_items());

    let mut population = init_population(config, instance, &mut rng);
    let mut incumbent = Incumbent::default();
    let mut trace = Vec::with_capacity(config.generations);

    for generation_index in 0..config.generations {
        let pairing = if evaluator.has_social_step() {
            social_pairing(n, &mut rng)?
        } else {
            Vec::new()
        };
        let f_max = evaluator.evaluate(&mut population, &pairing, &mut rng);
        incumbent.observe(&population);
        trace.push(GenerationStats {
            generation_index,
            best_feasible_value: incumbent.value,
            feasible_count: population.iter().filter(|c| c.feasible).count(),
            max_genetic_term: f_max,
            cheater_fraction: cheater_fraction(&population),
            mean_combined_fitness: population.iter().map(|c| c.combined_fitness).sum::<f64>()
                / n as f64,
        });

        let mut offspring = Vec::with_capacity(n);
        for _ in 0..n / 2 {
            let a = binary_tournament(&population, &mut rng);
            let b = binary_tournament(&population, &mut rng);
            let (mut c1, mut c2) = two_point_crossover(
                &population[a],
                &population[b],
                config.crossover_rate,
                &mut rng,
            )?;
            bit_mutation(&mut c1, p_m, &mut rng);
            bit_mutation(&mut c2, p_m, &mut rng);
            offspring.push(c1);
            offspring.push(c2);
        }
        population = offspring;
    }

    let f_max = evaluator.genetic_terms(&mut population);
    let norm = adjusted_normalizer(f_max, population.iter().map(|c| c.genetic_term));
    for c in population.iter_mut() {
        c.social_term = 0.0;
        c.combined_fitness = if evaluator.has_social_step() {
            config.beta_ga * c.genetic_term / norm
        } else {
            c.genetic_term
        };
    }
    incumbent.observe(&population);

    Ok(RunResult {
        generations: trace,
        best_solution: incumbent.solution,
        best_value: incumbent.value,
        final_population: population,
    })
}

pub fn cheater_fraction(population: &[Chromosome]) -> f64 {
    if population.is_empty() {
        return 0.0;
    }
    population.iter().filter(|c| c.role.is_cheater()).count() as f64 / population.len() as f64
}

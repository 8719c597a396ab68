//! Run-level properties of the GA engine.

use gagt::ga::{evaluate, init_population, rng_from_seed, run, social_pairing, GaConfig};
use gagt::knapsack::generate_single_sack;
use gagt::{GameModel, NoiseKind};

fn small_config(seed: u64) -> GaConfig {
    GaConfig {
        population_size: 30,
        generations: 40,
        seed,
        ..GaConfig::default()
    }
}

#[test]
fn same_seed_same_result() {
    let inst = generate_single_sack("d", 40, 3);
    let a = run(&small_config(9), &inst).unwrap();
    let b = run(&small_config(9), &inst).unwrap();
    assert_eq!(a, b);
    let c = run(&small_config(10), &inst).unwrap();
    assert_ne!(a.final_population, c.final_population);
}

#[test]
fn incumbent_trace_is_monotone_and_fitness_finite() {
    let inst = generate_single_sack("m", 60, 4);
    for game in GameModel::ALL.into_iter().map(Some).chain([None]) {
        for noise in [NoiseKind::Off, NoiseKind::Uniform, NoiseKind::Gaussian] {
            if game.is_none() && noise != NoiseKind::Off {
                continue;
            }
            let cfg = GaConfig {
                game,
                noise,
                ..small_config(21)
            };
            let result = run(&cfg, &inst).unwrap();
            assert_eq!(result.generations.len(), cfg.generations);
            let trace: Vec<f64> = result
                .generations
                .iter()
                .map(|g| g.best_feasible_value.unwrap_or(f64::NEG_INFINITY))
                .collect();
            assert!(trace.windows(2).all(|w| w[0] <= w[1]), "{game:?} {noise}");
            assert!(result
                .generations
                .iter()
                .all(|g| g.mean_combined_fitness.is_finite()));
            assert!(result
                .final_population
                .iter()
                .all(|c| c.combined_fitness.is_finite()));
            assert!(result
                .generations
                .iter()
                .all(|g| (0.0..=1.0).contains(&g.cheater_fraction)));
            if let (Some(best), Some(last)) = (result.best_value, trace.last()) {
                assert!(best >= *last);
            }
            if game.is_none() {
                assert!(result.generations.iter().all(|g| g.cheater_fraction == 0.0));
            }
        }
    }
}

#[test]
fn zero_social_weight_preserves_genetic_ranking() {
    let inst = generate_single_sack("r", 30, 8);
    let cfg = GaConfig {
        population_size: 40,
        beta_ga: 1.0,
        beta_gt: 0.0,
        ..GaConfig::default()
    };
    let mut rng = rng_from_seed(3);
    let mut pop = init_population(&cfg, &inst, &mut rng);
    let pairing = social_pairing(pop.len(), &mut rng).unwrap();
    evaluate(&mut pop, &inst, &cfg, &pairing, &mut rng);
    let order = |key: &dyn Fn(usize) -> f64| {
        let mut idx: Vec<usize> = (0..pop.len()).collect();
        idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        idx
    };
    assert_eq!(
        order(&|i| pop[i].combined_fitness),
        order(&|i| pop[i].genetic_term)
    );
}

#[test]
fn normalized_genetic_term_peaks_at_one() {
    let inst = generate_single_sack("n", 30, 12);
    let cfg = GaConfig {
        population_size: 40,
        beta_ga: 1.0,
        beta_gt: 0.0,
        ..GaConfig::default()
    };
    let mut rng = rng_from_seed(4);
    let mut pop = init_population(&cfg, &inst, &mut rng);
    // Empty the knapsacks so that some members are feasible with positive value.
    for c in pop.iter_mut().take(5) {
        for b in c.bits.bits_mut().iter_mut().skip(3) {
            *b = false;
        }
    }
    let pairing = social_pairing(pop.len(), &mut rng).unwrap();
    let f_max = evaluate(&mut pop, &inst, &cfg, &pairing, &mut rng);
    assert!(f_max > 0.0);
    for c in &pop {
        assert!(c.combined_fitness <= 1.0 + 1e-15);
        if c.genetic_term == f_max {
            assert_eq!(c.combined_fitness, 1.0);
        }
    }
}

#[test]
fn initial_cheater_count_is_exact() {
    let inst = generate_single_sack("c", 20, 1);
    for (n, alpha, expected) in [(500, 0.1, 50), (30, 0.5, 15), (10, 0.25, 3), (10, 0.0, 0)] {
        let cfg = GaConfig {
            population_size: n,
            cheater_rate: alpha,
            generations: 1,
            ..GaConfig::default()
        };
        let pop = init_population(&cfg, &inst, &mut rng_from_seed(n as u64));
        assert_eq!(
            pop.iter().filter(|c| c.role.is_cheater()).count(),
            expected,
            "n={n} a={alpha}"
        );
    }
}

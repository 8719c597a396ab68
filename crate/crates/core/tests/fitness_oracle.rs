//! Fitness functions against independent brute-force oracles.

use gagt::knapsack::{
    generate_multi_sack, generate_single_sack, parse_orlib_mknap, write_orlib_mknap, CheatConfig,
    KnapsackInstance, Solution,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive optimum computed with its own per-item summation.
fn brute_force_optimum(inst: &KnapsackInstance) -> f64 {
    let n = inst.values.len();
    let mut best = 0.0f64;
    for mask in 0u64..(1 << n) {
        let chosen = |j: usize| mask >> j & 1 == 1;
        let fits = inst.weights.iter().zip(&inst.capacities).all(|(row, cap)| {
            let load: f64 = (0..n).filter(|&j| chosen(j)).map(|j| row[j]).sum();
            load <= *cap
        });
        if fits {
            let value: f64 = (0..n).filter(|&j| chosen(j)).map(|j| inst.values[j]).sum();
            best = best.max(value);
        }
    }
    best
}

/// Classic 0/1 DP over integer capacity, single sack only.
fn dp_optimum(inst: &KnapsackInstance) -> f64 {
    let cap = inst.capacities[0] as usize;
    let mut table = vec![0.0f64; cap + 1];
    for (v, w) in inst.values.iter().zip(&inst.weights[0]) {
        let w = *w as usize;
        for c in (w..=cap).rev() {
            table[c] = table[c].max(table[c - w] + v);
        }
    }
    table[cap]
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> KnapsackInstance {
    let values = (0..n).map(|_| rng.random_range(1..=50) as f64).collect();
    let weights: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(1..=30) as f64).collect())
        .collect();
    let capacities = weights
        .iter()
        .map(|row| {
            (row.iter().sum::<f64>() * rng.random_range(0.2..0.7))
                .floor()
                .max(1.0)
        })
        .collect();
    KnapsackInstance::new("rand", values, weights, capacities, None).unwrap()
}

fn implementation_optimum(inst: &KnapsackInstance) -> f64 {
    let n = inst.n_items();
    (0u64..(1 << n))
        .map(|mask| Solution::from_mask(mask, n))
        .filter(|s| inst.is_feasible(s).unwrap())
        .map(|s| inst.genetic_fitness_cooperative(&s).unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn cooperative_optimum_matches_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..30 {
        let n = rng.random_range(1..=12);
        let m = if case % 2 == 0 { 1 } else { 3 };
        let inst = random_instance(&mut rng, n, m);
        let oracle = brute_force_optimum(&inst);
        assert_eq!(implementation_optimum(&inst), oracle, "case {case}");
        if m == 1 {
            assert_eq!(dp_optimum(&inst), oracle, "dp case {case}");
        }
    }
}

#[test]
fn single_sack_fitness_by_direct_formula() {
    let inst = generate_single_sack("f", 10, 5);
    let cheat = CheatConfig::proportional(30.0).unwrap();
    let (v, w, cap) = (&inst.values, &inst.weights[0], inst.capacities[0]);
    for mask in 0u64..(1 << 10) {
        let s = Solution::from_mask(mask, 10);
        let x: Vec<f64> = s
            .bits()
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect();
        let load: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let value: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum();
        let (coop, cheater) = if load <= cap {
            let inflated: f64 = v.iter().zip(&x).map(|(vj, xj)| (vj + vj * 0.3) * xj).sum();
            (value, inflated)
        } else {
            let deflated: f64 = w.iter().zip(&x).map(|(wj, xj)| (wj - wj * 0.3) * xj).sum();
            (cap - load, cap - deflated)
        };
        assert_eq!(inst.genetic_fitness_cooperative(&s).unwrap(), coop);
        let got = inst.genetic_fitness_cheater(&s, cheat).unwrap();
        assert!(
            (got - cheater).abs() <= 1e-9 * cheater.abs().max(1.0),
            "{got} vs {cheater}"
        );
    }
}

#[test]
fn multi_sack_cheater_uses_most_violated_sack() {
    let inst = generate_multi_sack("m", 8, 4, 17);
    let cheat = CheatConfig::proportional(50.0).unwrap();
    for mask in 0u64..(1 << 8) {
        let s = Solution::from_mask(mask, 8);
        let loads: Vec<f64> = inst
            .weights
            .iter()
            .map(|row| {
                row.iter()
                    .zip(s.bits())
                    .filter(|(_, &b)| b)
                    .map(|(w, _)| w)
                    .sum()
            })
            .collect();
        let excess: Vec<f64> = loads
            .iter()
            .zip(&inst.capacities)
            .map(|(l, c)| l - c)
            .collect();
        if excess.iter().all(|e| *e <= 0.0) {
            continue;
        }
        let mut worst = 0;
        for m in 1..excess.len() {
            if excess[m] > excess[worst] {
                worst = m;
            }
        }
        let expected = inst.capacities[worst] - loads[worst] * 0.5;
        assert_eq!(inst.genetic_fitness_cooperative(&s).unwrap(), 0.0);
        assert!((inst.genetic_fitness_cheater(&s, cheat).unwrap() - expected).abs() < 1e-9);
    }
}

fn instance_strategy() -> impl Strategy<Value = (KnapsackInstance, Vec<bool>)> {
    (1usize..12, 1usize..4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(0u32..100, n),
            prop::collection::vec(prop::collection::vec(0u32..50, n), m),
            prop::collection::vec(1u32..300, m),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(v, w, c, bits)| {
                let inst = KnapsackInstance::new(
                    "p",
                    v.into_iter().map(f64::from).collect(),
                    w.into_iter()
                        .map(|r| r.into_iter().map(f64::from).collect())
                        .collect(),
                    c.into_iter().map(f64::from).collect(),
                    None,
                )
                .unwrap();
                (inst, bits)
            })
    })
}

proptest! {
    #[test]
    fn cheater_scales_feasible_fitness((inst, bits) in instance_strategy(), tau in 0u32..=100) {
        let s = Solution::new(bits);
        let cheat = CheatConfig::proportional(tau as f64).unwrap();
        if inst.is_feasible(&s).unwrap() {
            let coop = inst.genetic_fitness_cooperative(&s).unwrap();
            prop_assert_eq!(inst.genetic_fitness_cheater(&s, cheat).unwrap(), coop * (1.0 + tau as f64 / 100.0));
        }
    }

    #[test]
    fn single_sack_sign_rule((inst, bits) in instance_strategy()) {
        prop_assume!(inst.n_sacks() == 1);
        let s = Solution::new(bits);
        let f = inst.genetic_fitness_cooperative(&s).unwrap();
        if inst.is_feasible(&s).unwrap() {
            prop_assert!(f >= 0.0);
        } else {
            prop_assert!(f <= 0.0);
        }
    }

    #[test]
    fn orlib_round_trip((inst, _bits) in instance_strategy(), opt in 0u32..1000) {
        let mut inst = inst;
        inst.best_known = (opt > 0).then_some(opt as f64);
        let text = write_orlib_mknap(std::slice::from_ref(&inst));
        let parsed = parse_orlib_mknap(&text).unwrap();
        prop_assert_eq!(parsed.len(), 1);
        prop_assert_eq!(&parsed[0].values, &inst.values);
        prop_assert_eq!(&parsed[0].weights, &inst.weights);
        prop_assert_eq!(&parsed[0].capacities, &inst.capacities);
        prop_assert_eq!(parsed[0].best_known, inst.best_known);
    }
}

//! 0/1 knapsack instances (single-sack is the one-constraint case of the
//! multidimensional problem), genetic fitness for cooperators and cheaters,
//! and instance I/O.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A knapsack instance. Weights are stored row-major by sack: `weights[m][j]`
/// is the weight item `j` contributes to sack `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub name: String,
    pub values: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    pub capacities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_known: Option<f64>,
}

impl KnapsackInstance {
    pub fn new(
        name: impl Into<String>,
        values: Vec<f64>,
        weights: Vec<Vec<f64>>,
        capacities: Vec<f64>,
        best_known: Option<f64>,
    ) -> Result<Self> {
        let instance = KnapsackInstance {
            name: name.into(),
            values,
            weights,
            capacities,
            best_known,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<()> {
        let schema = |key: &str, message: String| Error::Schema {
            key: key.to_string(),
            message,
        };
        if self.values.is_empty() {
            return Err(schema("values", "at least one item is required".into()));
        }
        if self.capacities.is_empty() {
            return Err(schema("capacities", "at least one sack is required".into()));
        }
        if self.weights.len() != self.capacities.len() {
            return Err(schema(
                "weights",
                format!(
                    "{} weight rows for {} capacities",
                    self.weights.len(),
                    self.capacities.len()
                ),
            ));
        }
        for (j, v) in self.values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(schema(
                    "values",
                    format!("values[{j}] = {v} must be a non-negative number"),
                ));
            }
        }
        for (m, row) in self.weights.iter().enumerate() {
            if row.len() != self.values.len() {
                return Err(schema(
                    "weights",
                    format!(
                        "row {m} has {} entries, expected {}",
                        row.len(),
                        self.values.len()
                    ),
                ));
            }
            for (j, w) in row.iter().enumerate() {
                if !w.is_finite() || *w < 0.0 {
                    return Err(schema(
                        "weights",
                        format!("weights[{m}][{j}] = {w} must be a non-negative number"),
                    ));
                }
            }
        }
        for (m, cap) in self.capacities.iter().enumerate() {
            if !cap.is_finite() || *cap <= 0.0 {
                return Err(schema(
                    "capacities",
                    format!("capacities[{m}] = {cap} must be positive"),
                ));
            }
        }
        if let Some(b) = self.best_known {
            if !b.is_finite() {
                return Err(schema("best_known", format!("{b} is not finite")));
            }
        }
        Ok(())
    }

    /// Number of items, which is also the chromosome length.
    pub fn n_items(&self) -> usize {
        self.values.len()
    }

    pub fn n_sacks(&self) -> usize {
        self.capacities.len()
    }

    fn check_len(&self, sol: &Solution) -> Result<()> {
        if sol.len() != self.n_items() {
            return Err(Error::Contract(format!(
                "solution has {} bits, instance {:?} has {} items",
                sol.len(),
                self.name,
                self.n_items()
            )));
        }
        Ok(())
    }

    /// Computes the packed value and per-sack loads in one pass.
    pub fn pack(&self, sol: &Solution) -> Result<Packing> {
        self.check_len(sol)?;
        Ok(self.pack_unchecked(sol.bits()))
    }

    pub(crate) fn pack_unchecked(&self, bits: &[bool]) -> Packing {
        let mut value = 0.0;
        let mut selected = 0usize;
        for (v, _) in self.values.iter().zip(bits).filter(|(_, &b)| b) {
            value += v;
            selected += 1;
        }
        let loads = self
            .weights
            .iter()
            .map(|row| {
                row.iter()
                    .zip(bits)
                    .filter(|(_, &b)| b)
                    .map(|(w, _)| w)
                    .sum()
            })
            .collect();
        Packing {
            value,
            loads,
            selected,
        }
    }

    pub fn is_feasible(&self, sol: &Solution) -> Result<bool> {
        Ok(self.pack(sol)?.is_feasible(self))
    }

    pub fn genetic_fitness_cooperative(&self, sol: &Solution) -> Result<f64> {
        Ok(self.pack(sol)?.cooperative_fitness(self))
    }

    pub fn genetic_fitness_cheater(&self, sol: &Solution, cheat: CheatConfig) -> Result<f64> {
        Ok(self.pack(sol)?.cheater_fitness(self, cheat))
    }
}

/// Aggregates of a solution against an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Packing {
    /// Σ v_j x_j
    pub value: f64,
    /// Σ_j w_mj x_j for every sack m.
    pub loads: Vec<f64>,
    /// Number of packed items.
    pub selected: usize,
}

impl Packing {
    pub fn is_feasible(&self, instance: &KnapsackInstance) -> bool {
        self.loads
            .iter()
            .zip(&instance.capacities)
            .all(|(load, cap)| load <= cap)
    }

    /// Index of the sack with the largest overload; lowest index on ties.
    pub fn most_violated_sack(&self, instance: &KnapsackInstance) -> usize {
        let mut best = 0;
        let mut best_excess = f64::NEG_INFINITY;
        for (m, (load, cap)) in self.loads.iter().zip(&instance.capacities).enumerate() {
            let excess = load - cap;
            if excess > best_excess {
                best = m;
                best_excess = excess;
            }
        }
        best
    }

    pub fn cooperative_fitness(&self, instance: &KnapsackInstance) -> f64 {
        if self.is_feasible(instance) {
            self.value
        } else if instance.n_sacks() == 1 {
            instance.capacities[0] - self.loads[0]
        } else {
            0.0
        }
    }

    /// Cheater fitness. Feasibility is always judged on the true weights.
    pub fn cheater_fitness(&self, instance: &KnapsackInstance, cheat: CheatConfig) -> f64 {
        let degree = cheat.tau / 100.0;
        let count = self.selected as f64;
        if self.is_feasible(instance) {
            match cheat.mode {
                CheatMode::Proportional => self.value * (1.0 + degree),
                CheatMode::Absolute => self.value + degree * count,
            }
        } else {
            let m = self.most_violated_sack(instance);
            let reported_load = match cheat.mode {
                CheatMode::Proportional => self.loads[m] * (1.0 - degree),
                CheatMode::Absolute => self.loads[m] - degree * count,
            };
            instance.capacities[m] - reported_load
        }
    }
}

/// How the cheating degree turns into value and weight adjustments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheatMode {
    /// Δv_j = v_j·τ/100 and Δw_j = w_j·τ/100.
    #[default]
    Proportional,
    /// Δv_j = Δw_j = τ/100 for every item.
    Absolute,
}

impl FromStr for CheatMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proportional" => Ok(CheatMode::Proportional),
            "absolute" => Ok(CheatMode::Absolute),
            other => Err(Error::Config(format!(
                "unknown cheat mode {other:?}; expected proportional or absolute"
            ))),
        }
    }
}

impl fmt::Display for CheatMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheatMode::Proportional => "proportional",
            CheatMode::Absolute => "absolute",
        })
    }
}

/// Cheating degree τ ∈ [0, 100] plus the adjustment mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheatConfig {
    pub tau: f64,
    pub mode: CheatMode,
}

impl CheatConfig {
    pub fn new(tau: f64, mode: CheatMode) -> Result<Self> {
        if !(0.0..=100.0).contains(&tau) {
            return Err(Error::Config(format!(
                "cheating degree must lie in [0, 100], got {tau}"
            )));
        }
        Ok(CheatConfig { tau, mode })
    }

    pub fn proportional(tau: f64) -> Result<Self> {
        Self::new(tau, CheatMode::Proportional)
    }
}

/// A 0/1 assignment of items to the knapsack.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Solution(Vec<bool>);

impl Solution {
    pub fn new(bits: Vec<bool>) -> Self {
        Solution(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Solution(vec![false; len])
    }

    /// Decodes the low `len` bits of `mask`, bit `j` giving item `j`.
    pub fn from_mask(mask: u64, len: usize) -> Self {
        Solution((0..len).map(|j| mask >> j & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl From<Vec<bool>> for Solution {
    fn from(bits: Vec<bool>) -> Self {
        Solution(bits)
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Solution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Contract(format!(
                    "invalid bit {other:?} in solution string"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Solution)
    }
}

impl Serialize for Solution {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Solution {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct Tokens<'a> {
    iter: std::str::SplitAsciiWhitespace<'a>,
    position: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens {
            iter: text.split_ascii_whitespace(),
            position: 0,
        }
    }

    fn next_number(&mut self, what: &str) -> Result<f64> {
        self.position += 1;
        let token = self.iter.next().ok_or_else(|| Error::Parse {
            position: self.position,
            message: format!("unexpected end of input while reading {what}"),
        })?;
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse {
                position: self.position,
                message: format!("{what}: {token:?} is not a number"),
            }),
        }
    }

    fn next_count(&mut self, what: &str) -> Result<usize> {
        let v = self.next_number(what)?;
        if v < 1.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::Parse {
                position: self.position,
                message: format!("{what} must be a positive integer, got {v}"),
            });
        }
        Ok(v as usize)
    }

    fn next_non_negative(&mut self, what: &str) -> Result<f64> {
        let v = self.next_number(what)?;
        if v < 0.0 {
            return Err(Error::Parse {
                position: self.position,
                message: format!("{what} must be non-negative, got {v}"),
            });
        }
        Ok(v)
    }
}

/// Parses an OR-library `mknap` file: the problem count, then for each
/// problem `n m optimum`, `n` profits, `m` rows of `n` weights and `m`
/// capacities. An optimum of 0 means unknown. Line breaks carry no meaning.
pub fn parse_orlib_mknap(text: &str) -> Result<Vec<KnapsackInstance>> {
    let mut tokens = Tokens::new(text);
    let count = tokens.next_count("problem count")?;
    let mut instances = Vec::with_capacity(count);
    for p in 0..count {
        let n = tokens.next_count("number of items")?;
        let m = tokens.next_count("number of constraints")?;
        let optimum = tokens.next_non_negative("optimum")?;
        let values = (0..n)
            .map(|_| tokens.next_non_negative("profit"))
            .collect::<Result<Vec<_>>>()?;
        let weights = (0..m)
            .map(|_| (0..n).map(|_| tokens.next_non_negative("weight")).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let mut capacities = Vec::with_capacity(m);
        for _ in 0..m {
            let cap = tokens.next_number("capacity")?;
            if cap <= 0.0 {
                return Err(Error::Parse {
                    position: tokens.position,
                    message: format!("capacity must be positive, got {cap}"),
                });
            }
            capacities.push(cap);
        }
        instances.push(KnapsackInstance {
            name: format!("problem-{}", p + 1),
            values,
            weights,
            capacities,
            best_known: (optimum != 0.0).then_some(optimum),
        });
    }
    Ok(instances)
}

/// Writes instances back out in the OR-library `mknap` layout.
pub fn write_orlib_mknap(instances: &[KnapsackInstance]) -> String {
    fn line(values: &[f64]) -> String {
        values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
    let mut out = format!("{}\n", instances.len());
    for inst in instances {
        out.push_str(&format!(
            "{} {} {}\n",
            inst.n_items(),
            inst.n_sacks(),
            inst.best_known.unwrap_or(0.0)
        ));
        out.push_str(&line(&inst.values));
        out.push('\n');
        for row in &inst.weights {
            out.push_str(&line(row));
            out.push('\n');
        }
        out.push_str(&line(&inst.capacities));
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct InstanceDocument {
    name: Option<String>,
    values: Option<Vec<f64>>,
    weights: Option<Vec<Vec<f64>>>,
    capacities: Option<Vec<f64>>,
    best_known: Option<f64>,
}

/// Parses the JSON instance format:
/// `{"name": ..., "values": [...], "weights": [[...]], "capacities": [...], "best_known": ...}`.
pub fn parse_json_instance(text: &str) -> Result<KnapsackInstance> {
    let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| Error::Schema {
        key: "<document>".into(),
        message: e.to_string(),
    })?;
    let missing = |key: &str| Error::Schema {
        key: key.to_string(),
        message: "missing".into(),
    };
    KnapsackInstance::new(
        doc.name.unwrap_or_else(|| "unnamed".into()),
        doc.values.ok_or_else(|| missing("values"))?,
        doc.weights.ok_or_else(|| missing("weights"))?,
        doc.capacities.ok_or_else(|| missing("capacities"))?,
        doc.best_known,
    )
}

pub fn to_json(instance: &KnapsackInstance) -> String {
    serde_json::to_string_pretty(instance).expect("instance serializes")
}

/// Random single-sack instance: integer values and weights uniform in
/// [10, 100], capacity half the total weight (rounded down).
pub fn generate_single_sack(name: &str, n_items: usize, seed: u64) -> KnapsackInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n_items)
        .map(|_| rng.random_range(10..=100) as f64)
        .collect();
    let weights: Vec<f64> = (0..n_items)
        .map(|_| rng.random_range(10..=100) as f64)
        .collect();
    let capacity = (weights.iter().sum::<f64>() / 2.0).floor();
    KnapsackInstance {
        name: name.to_string(),
        values,
        weights: vec![weights],
        capacities: vec![capacity],
        best_known: None,
    }
}

/// Random multidimensional instance in the correlated style common in the
/// MKP literature: weights uniform in [0, 1000], capacities a quarter of
/// each row's total, value of item j = mean weight of j + 500·U(0,1), rounded.
pub fn generate_multi_sack(
    name: &str,
    n_items: usize,
    n_sacks: usize,
    seed: u64,
) -> KnapsackInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<Vec<f64>> = (0..n_sacks)
        .map(|_| {
            (0..n_items)
                .map(|_| rng.random_range(0..=1000) as f64)
                .collect()
        })
        .collect();
    let capacities = weights
        .iter()
        .map(|row| (row.iter().sum::<f64>() / 4.0).floor().max(1.0))
        .collect();
    let values = (0..n_items)
        .map(|j| {
            let mean = weights.iter().map(|row| row[j]).sum::<f64>() / n_sacks as f64;
            (mean + 500.0 * rng.random::<f64>()).round()
        })
        .collect();
    KnapsackInstance {
        name: name.to_string(),
        values,
        weights,
        capacities,
        best_known: None,
    }
}

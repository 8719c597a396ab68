//! Symmetric 2×2 games used for the social interaction step.
//!
//! A game is parameterized by `(k, s1, s2, c)` which expand into the usual
//! reward / sucker / temptation / punishment payoffs:
//!
//! ```text
//!          C         D
//!   C      k         k - s1
//!   D      k + s2    k - c
//! ```
//!
//! Payoffs are always read from the row player's perspective.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when testing equalities in ordering chains.
pub const ORDERING_TOLERANCE: f64 = 1e-9;

/// Payoff parameters `(k, s1, s2, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub k: f64,
    pub s1: f64,
    pub s2: f64,
    pub c: f64,
}

impl GameParams {
    pub fn new(k: f64, s1: f64, s2: f64, c: f64) -> Result<Self> {
        let params = GameParams { k, s1, s2, c };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k", self.k),
            ("s1", self.s1),
            ("s2", self.s2),
            ("c", self.c),
        ];
        if let Some((name, value)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!(
                "game parameter {name} is not finite: {value}"
            )));
        }
        if self.k <= 0.0 {
            return Err(Error::Config(format!(
                "game parameter k must be > 0, got {}",
                self.k
            )));
        }
        Ok(())
    }
}

impl FromStr for GameParams {
    type Err = Error;

    /// Parses `k,s1,s2,c`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!(
                "expected four comma-separated values k,s1,s2,c, got {:?}",
                s
            )));
        }
        let mut values = [0.0; 4];
        for (slot, part) in values.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| Error::Config(format!("game parameter {:?} is not a number", part)))?;
        }
        GameParams::new(values[0], values[1], values[2], values[3])
    }
}

/// The two social roles a chromosome can play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Cooperator,
    Cheater,
}

impl Role {
    pub fn is_cheater(self) -> bool {
        matches!(self, Role::Cheater)
    }
}

/// The seven interaction models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameModel {
    /// Prisoner's dilemma.
    Pd,
    /// Chicken game.
    Cg,
    /// Mixed polymorphism.
    Mp,
    /// Friend or foe.
    Fof,
    /// Facultative defection.
    Fd,
    /// Battle of the sexes.
    Bs,
    /// Stag hunt.
    Sh,
}

impl GameModel {
    pub const ALL: [GameModel; 7] = [
        GameModel::Pd,
        GameModel::Cg,
        GameModel::Mp,
        GameModel::Fof,
        GameModel::Fd,
        GameModel::Bs,
        GameModel::Sh,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            GameModel::Pd => "pd",
            GameModel::Cg => "cg",
            GameModel::Mp => "mp",
            GameModel::Fof => "fof",
            GameModel::Fd => "fd",
            GameModel::Bs => "bs",
            GameModel::Sh => "sh",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GameModel::Pd => "prisoner's dilemma",
            GameModel::Cg => "chicken game",
            GameModel::Mp => "mixed polymorphism",
            GameModel::Fof => "friend or foe",
            GameModel::Fd => "facultative defection",
            GameModel::Bs => "battle of sexes",
            GameModel::Sh => "stag hunt",
        }
    }

    /// Published default payoff parameters for each model.
    pub fn default_params(self) -> GameParams {
        let (k, s1, s2, c) = match self {
            GameModel::Pd => (1.0, 0.4, 1.0, 0.2),
            GameModel::Cg => (1.0, 0.5, 9.0, 0.17),
            GameModel::Mp => (1.0, 0.5, 0.5, 1.0),
            GameModel::Fof => (1.0, 1.0, 0.5, 1.0),
            GameModel::Fd => (1.0, 0.3, 0.3, 0.0),
            GameModel::Bs => (1.0, 1.0, -1.0, 0.3),
            GameModel::Sh => (1.0, 0.7, -0.2, 1.0),
        };
        GameParams { k, s1, s2, c }
    }

    /// The ordering chain a payoff matrix should satisfy for this model.
    fn chain(self) -> &'static [Relation] {
        use Operand::*;
        use Relation::{Eq as E, Gt as G};
        match self {
            GameModel::Pd => &[G(T, R), G(R, P), G(P, S)],
            GameModel::Cg => &[G(T, R), G(R, S), G(S, P)],
            GameModel::Mp => &[G(T, R), G(R, S), G(S, P), E(P, Zero)],
            GameModel::Fof => &[G(T, R), G(R, P), E(P, S), E(S, Zero)],
            GameModel::Fd => &[G(T, R), E(R, P), G(P, S)],
            GameModel::Bs => &[G(R, P), G(P, T), E(T, S), E(S, Zero)],
            GameModel::Sh => &[G(R, T), G(T, P), G(P, S)],
        }
    }
}

pub fn default_params(model: GameModel) -> GameParams {
    model.default_params()
}

impl fmt::Display for GameModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GameModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GameModel::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown game model {:?}; expected one of pd, cg, mp, fof, fd, bs, sh",
                    s
                ))
            })
    }
}

/// Row-player payoffs of a symmetric 2×2 game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    /// Reward, cooperator meets cooperator.
    pub r: f64,
    /// Sucker's payoff, cooperator meets cheater.
    pub s: f64,
    /// Temptation, cheater meets cooperator.
    pub t: f64,
    /// Punishment, cheater meets cheater.
    pub p: f64,
}

impl PayoffMatrix {
    pub fn from_params(params: GameParams) -> Self {
        let GameParams { k, s1, s2, c } = params;
        PayoffMatrix {
            r: k,
            s: k - s1,
            t: k + s2,
            p: k - c,
        }
    }

    pub fn payoff(&self, own: Role, other: Role) -> f64 {
        match (own, other) {
            (Role::Cooperator, Role::Cooperator) => self.r,
            (Role::Cooperator, Role::Cheater) => self.s,
            (Role::Cheater, Role::Cooperator) => self.t,
            (Role::Cheater, Role::Cheater) => self.p,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.r, self.s, self.t, self.p]
    }

    /// Largest entry of the matrix; the normalizer of the social term.
    pub fn max_payoff(&self) -> f64 {
        self.values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_payoff(&self) -> f64 {
        self.values().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Mean of the four entries.
    pub fn mean_payoff(&self) -> f64 {
        self.values().iter().sum::<f64>() / 4.0
    }

    /// Population standard deviation of the four entries.
    pub fn std_payoff(&self) -> f64 {
        let mean = self.mean_payoff();
        let var = self
            .values()
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / 4.0;
        var.sqrt()
    }
}

pub fn build_matrix(params: GameParams) -> PayoffMatrix {
    PayoffMatrix::from_params(params)
}

pub fn payoff(matrix: &PayoffMatrix, own: Role, other: Role) -> f64 {
    matrix.payoff(own, other)
}

#[derive(Debug, Clone, Copy)]
enum Operand {
    R,
    S,
    T,
    P,
    Zero,
}

impl Operand {
    fn symbol(self) -> &'static str {
        match self {
            Operand::R => "R",
            Operand::S => "S",
            Operand::T => "T",
            Operand::P => "P",
            Operand::Zero => "0",
        }
    }

    fn value(self, m: &PayoffMatrix) -> f64 {
        match self {
            Operand::R => m.r,
            Operand::S => m.s,
            Operand::T => m.t,
            Operand::P => m.p,
            Operand::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Relation {
    Gt(Operand, Operand),
    Eq(Operand, Operand),
}

impl Relation {
    fn check(self, m: &PayoffMatrix) -> Option<String> {
        match self {
            Relation::Gt(a, b) => {
                let (x, y) = (a.value(m), b.value(m));
                (x - y <= ORDERING_TOLERANCE).then(|| {
                    format!(
                        "{}>{} fails: {} ≤ {}",
                        a.symbol(),
                        b.symbol(),
                        fmt_payoff(x),
                        fmt_payoff(y)
                    )
                })
            }
            Relation::Eq(a, b) => {
                let (x, y) = (a.value(m), b.value(m));
                ((x - y).abs() > ORDERING_TOLERANCE).then(|| {
                    format!(
                        "{}={} fails: {} ≠ {}",
                        a.symbol(),
                        b.symbol(),
                        fmt_payoff(x),
                        fmt_payoff(y)
                    )
                })
            }
        }
    }

    fn describe(self) -> String {
        match self {
            Relation::Gt(a, b) => format!("{}>{}", a.symbol(), b.symbol()),
            Relation::Eq(a, b) => format!("{}={}", a.symbol(), b.symbol()),
        }
    }
}

/// Formats a payoff with at most 9 decimals and no trailing zeros, so
/// `1.0 - 0.17` prints as `0.83`.
pub fn fmt_payoff(v: f64) -> String {
    let s = format!("{:.9}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Outcome of checking a matrix against a model's ordering chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub model: GameModel,
    pub chain: String,
    pub satisfied: bool,
    pub violations: Vec<String>,
}

pub fn validate_ordering(model: GameModel, matrix: &PayoffMatrix) -> OrderingReport {
    let chain = model.chain();
    let violations: Vec<String> = chain.iter().filter_map(|rel| rel.check(matrix)).collect();
    OrderingReport {
        model,
        chain: chain
            .iter()
            .map(|r| r.describe())
            .collect::<Vec<_>>()
            .join(", "),
        satisfied: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix_of(model: GameModel) -> PayoffMatrix {
        build_matrix(default_params(model))
    }

    #[test]
    fn default_params_rows() {
        assert_eq!(
            default_params(GameModel::Pd),
            GameParams {
                k: 1.0,
                s1: 0.4,
                s2: 1.0,
                c: 0.2
            }
        );
        assert_eq!(
            default_params(GameModel::Bs),
            GameParams {
                k: 1.0,
                s1: 1.0,
                s2: -1.0,
                c: 0.3
            }
        );
        assert_eq!(
            default_params(GameModel::Sh),
            GameParams {
                k: 1.0,
                s1: 0.7,
                s2: -0.2,
                c: 1.0
            }
        );
    }

    #[test]
    fn pd_matrix() {
        let m = matrix_of(GameModel::Pd);
        assert_eq!((m.r, m.s, m.t, m.p), (1.0, 0.6, 2.0, 0.8));
        assert_eq!(m.max_payoff(), 2.0);
    }

    #[test]
    fn uniform_matrix() {
        let m = build_matrix(GameParams {
            k: 1.0,
            s1: 0.0,
            s2: 0.0,
            c: 0.0,
        });
        assert_eq!(m.values(), [1.0; 4]);
        for a in [Role::Cooperator, Role::Cheater] {
            for b in [Role::Cooperator, Role::Cheater] {
                assert_eq!(payoff(&m, a, b), 1.0);
            }
        }
        assert_eq!(m.std_payoff(), 0.0);
    }

    #[test]
    fn mp_matrix() {
        let m = matrix_of(GameModel::Mp);
        assert_eq!((m.r, m.s, m.t, m.p), (1.0, 0.5, 1.5, 0.0));
    }

    #[test]
    fn pd_payoffs() {
        let m = matrix_of(GameModel::Pd);
        assert_eq!(payoff(&m, Role::Cooperator, Role::Cooperator), 1.0);
        assert_eq!(payoff(&m, Role::Cheater, Role::Cooperator), 2.0);
        assert_eq!(payoff(&m, Role::Cooperator, Role::Cheater), 0.6);
        assert_eq!(payoff(&m, Role::Cheater, Role::Cheater), 0.8);
    }

    #[test]
    fn pd_side_condition() {
        let p = default_params(GameModel::Pd);
        assert!(p.c < p.s1);
    }

    #[test]
    fn ordering_pd_satisfied() {
        let report = validate_ordering(GameModel::Pd, &matrix_of(GameModel::Pd));
        assert!(report.satisfied, "{:?}", report.violations);
    }

    // CG row: R=1, S=1-0.5=0.5, T=1+9=10, P=1-0.17=0.83.
    // T>R holds, R>S holds, S>P fails (0.5 <= 0.83).
    #[test]
    fn ordering_cg_violation() {
        let report = validate_ordering(GameModel::Cg, &matrix_of(GameModel::Cg));
        assert!(!report.satisfied);
        assert_eq!(report.violations, vec!["S>P fails: 0.5 ≤ 0.83".to_string()]);
    }

    // SH row: R=1, S=0.3, T=0.8, P=0. R>T holds, T>P holds, P>S fails (0 <= 0.3).
    #[test]
    fn ordering_sh_violation() {
        let report = validate_ordering(GameModel::Sh, &matrix_of(GameModel::Sh));
        assert!(!report.satisfied);
        assert_eq!(report.violations, vec!["P>S fails: 0 ≤ 0.3".to_string()]);
    }

    #[test]
    fn ordering_other_defaults() {
        for model in [GameModel::Mp, GameModel::Fof, GameModel::Fd, GameModel::Bs] {
            let report = validate_ordering(model, &matrix_of(model));
            assert!(report.satisfied, "{model}: {:?}", report.violations);
        }
    }

    #[test]
    fn report_lists_every_violation() {
        let m = build_matrix(GameParams {
            k: 1.0,
            s1: 0.0,
            s2: 0.0,
            c: 0.0,
        });
        let report = validate_ordering(GameModel::Pd, &m);
        assert_eq!(report.violations.len(), 3);
        assert!(!report.satisfied);
    }

    #[test]
    fn parse_params() {
        let p: GameParams = "1, 0.4,1.0,0.2".parse().unwrap();
        assert_eq!(p, default_params(GameModel::Pd));
        assert!("1,2,3".parse::<GameParams>().is_err());
        assert!("0,1,1,1".parse::<GameParams>().is_err());
        assert!("1,x,1,1".parse::<GameParams>().is_err());
        assert!("1,NaN,1,1".parse::<GameParams>().is_err());
    }

    #[test]
    fn parse_model_tags() {
        for m in GameModel::ALL {
            assert_eq!(m.tag().parse::<GameModel>().unwrap(), m);
            assert_eq!(m.tag().to_uppercase().parse::<GameModel>().unwrap(), m);
        }
        assert!("pdx".parse::<GameModel>().is_err());
    }

    #[test]
    fn symmetric_game_property() {
        // Column player's payoff for (row=a, col=b) is the row payoff with roles swapped.
        for model in GameModel::ALL {
            let m = matrix_of(model);
            let roles = [Role::Cooperator, Role::Cheater];
            for a in roles {
                for b in roles {
                    let column_view = m.payoff(b, a);
                    let transposed = [[m.r, m.t], [m.s, m.p]];
                    let (ia, ib) = (a as usize, b as usize);
                    assert_eq!(column_view, transposed[ia][ib]);
                    assert!(m.max_payoff() >= m.payoff(a, b));
                }
            }
        }
    }
}

//! Simple linear regression with an ANOVA table, the Mann-Whitney rank-sum
//! test, and the special functions they need.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Reported p-values never go below this floor.
pub const P_VALUE_FLOOR: f64 = 1e-300;

/// Samples up to this combined size without ties use the exact null distribution.
pub const EXACT_MAX_TOTAL: usize = 12;

const BETA_EPS: f64 = 1e-10;
const BETA_MAX_ITER: usize = 1000;

fn floor_p(p: f64) -> f64 {
    p.clamp(P_VALUE_FLOOR, 1.0)
}

pub fn median(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Contract("median of an empty sample".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

pub fn mean(sample: &[f64]) -> Option<f64> {
    (!sample.is_empty()).then(|| sample.iter().sum::<f64>() / sample.len() as f64)
}

/// Natural log of the gamma function (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fast for x < (a + 1) / (a + b + 2).
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < BETA_EPS {
            break;
        }
    }
    h
}

/// Upper tail P(F > f) of the F distribution with (d1, d2) degrees of freedom.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    regularized_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0)
}

/// Upper tail of the standard normal distribution.
pub fn normal_survival(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Ordinary least squares fit with its ANOVA decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub ss_model: f64,
    pub ss_residual: f64,
    pub ss_total: f64,
    pub df_model: usize,
    pub df_residual: usize,
    pub ms_model: f64,
    pub ms_residual: f64,
    pub f_ratio: f64,
    pub p_value: f64,
    pub correlation_coefficient: f64,
    pub r_square_percent: f64,
}

pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!(
            "regression needs paired samples, got {} x and {} y values",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Contract(format!(
            "regression needs at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|xi| (xi - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("regressor x is constant".into()));
    }
    let sxy: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - mean_x) * (yi - mean_y))
        .sum();
    let ss_total: f64 = y.iter().map(|yi| (yi - mean_y).powi(2)).sum();

    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_residual: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - (intercept + slope * xi)).powi(2))
        .sum();
    // Regression sum of squares from the fitted line; equals ss_total - ss_residual.
    let ss_model = slope * sxy;

    let df_model = 1;
    let df_residual = n - 2;
    let ms_model = ss_model / df_model as f64;
    let ms_residual = ss_residual / df_residual as f64;
    let (f_ratio, p_value) = if ss_total == 0.0 {
        (0.0, 1.0)
    } else if ms_residual == 0.0 {
        (f64::INFINITY, P_VALUE_FLOOR)
    } else {
        let f = ms_model / ms_residual;
        (
            f,
            floor_p(f_survival(f, df_model as f64, df_residual as f64)),
        )
    };
    let r_square = if ss_total == 0.0 {
        0.0
    } else {
        (ss_model / ss_total).clamp(0.0, 1.0)
    };
    let correlation_coefficient = if slope == 0.0 {
        0.0
    } else {
        slope.signum() * r_square.sqrt()
    };

    Ok(RegressionResult {
        n,
        slope,
        intercept,
        ss_model,
        ss_residual,
        ss_total,
        df_model,
        df_residual,
        ms_model,
        ms_residual,
        f_ratio,
        p_value,
        correlation_coefficient,
        r_square_percent: 100.0 * r_square,
    })
}

/// Mann-Whitney (Wilcoxon rank-sum) test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyResult {
    /// U for sample a: pairs with a > b, plus half the ties.
    pub u_statistic: f64,
    pub z_score: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// One-sided p-value for the alternative "a tends to be larger than b".
    pub p_greater: f64,
    /// One-sided p-value for the alternative "a tends to be smaller than b".
    pub p_less: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Whether p-values come from the exact null distribution.
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample plus the tie group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

/// Number of ways to pick `k` of the ranks 1..=n with each possible U value,
/// indexed by U = rank sum - k(k+1)/2.
fn exact_u_counts(n: usize, k: usize) -> Vec<f64> {
    let max_sum = n * (n + 1) / 2;
    // ways[j][s]: subsets of size j with rank sum s.
    let mut ways = vec![vec![0.0f64; max_sum + 1]; k + 1];
    ways[0][0] = 1.0;
    for r in 1..=n {
        for j in (1..=k.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                ways[j][s] += ways[j - 1][s - r];
            }
        }
    }
    let offset = k * (k + 1) / 2;
    let max_u = k * (n - k);
    (0..=max_u).map(|u| ways[k][u + offset]).collect()
}

pub fn mann_whitney(sample_a: &[f64], sample_b: &[f64]) -> Result<MannWhitneyResult> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::Contract(
            "Mann-Whitney test needs two non-empty samples".into(),
        ));
    }
    let (n_a, n_b) = (sample_a.len(), sample_b.len());
    let n = n_a + n_b;
    let pooled: Vec<f64> = sample_a.iter().chain(sample_b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n_a].iter().sum();
    let u = rank_sum_a - (n_a * (n_a + 1)) as f64 / 2.0;

    let (na, nb, nf) = (n_a as f64, n_b as f64, n as f64);
    let mu = na * nb / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let variance = na * nb / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let sigma = variance.max(0.0).sqrt();
    let z_score = if sigma > 0.0 {
        let d = u - mu;
        d.signum() * (d.abs() - 0.5).max(0.0) / sigma
    } else {
        0.0
    };

    let exact = ties.is_empty() && n <= EXACT_MAX_TOTAL;
    let (p_value, p_greater, p_less) = if exact {
        let counts = exact_u_counts(n, n_a);
        let total: f64 = counts.iter().sum();
        let u_idx = u.round() as usize;
        let lower: f64 = counts[..=u_idx].iter().sum::<f64>() / total;
        let upper: f64 = counts[u_idx..].iter().sum::<f64>() / total;
        ((2.0 * lower.min(upper)).min(1.0), upper, lower)
    } else if sigma > 0.0 {
        let two_sided = 2.0 * normal_survival(z_score.abs());
        let greater = normal_survival((u - mu - 0.5) / sigma);
        let less = normal_survival((mu - u - 0.5) / sigma);
        (two_sided.min(1.0), greater, less)
    } else {
        (1.0, 1.0, 1.0)
    };

    Ok(MannWhitneyResult {
        u_statistic: u,
        z_score,
        p_value: floor_p(p_value),
        p_greater: floor_p(p_greater),
        p_less: floor_p(p_less),
        n_a,
        n_b,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median(&[7.0]).unwrap(), 7.0);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 - (1 - x)^b.
        for x in [0.05, 0.3, 0.5, 0.77, 0.99] {
            assert!((regularized_beta(x, 1.0, 1.0) - x).abs() < 1e-12);
            assert!((regularized_beta(x, 3.0, 1.0) - x.powi(3)).abs() < 1e-12);
            assert!((regularized_beta(x, 1.0, 4.0) - (1.0 - (1.0 - x).powi(4))).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_line() {
        let r = linear_regression(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12);
        assert!(r.intercept.abs() < 1e-12);
        assert!((r.r_square_percent - 100.0).abs() < 1e-9);
        assert_eq!(r.ss_residual, 0.0);
        assert_eq!(r.p_value, P_VALUE_FLOOR);
    }

    #[test]
    fn flat_line() {
        let r = linear_regression(&[0.0, 1.0, 2.0, 3.0], &[1.0; 4]).unwrap();
        assert_eq!(r.slope, 0.0);
        assert_eq!(r.intercept, 1.0);
        assert_eq!(r.correlation_coefficient, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    // x = 1..5, y = [2,1,4,3,6]: Σx=15, Σy=16, Σxy=2+2+12+12+30=58, Σx²=55, n=5.
    // Sxx = 55 - 225/5 = 10, Sxy = 58 - 15·16/5 = 10 → slope 1, intercept 16/5 - 3 = 0.2.
    // Σy² = 4+1+16+9+36 = 66, SST = 66 - 256/5 = 14.8, SSM = slope·Sxy = 10,
    // SSE = 4.8, F = 10 / (4.8/3) = 6.25, R² = 10/14.8.
    #[test]
    fn hand_computed_regression() {
        let r = linear_regression(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 6.0]).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-12);
        assert!((r.intercept - 0.2).abs() < 1e-12);
        assert!((r.ss_total - 14.8).abs() < 1e-12);
        assert!((r.ss_model - 10.0).abs() < 1e-12);
        assert!((r.ss_residual - 4.8).abs() < 1e-12);
        assert!((r.f_ratio - 6.25).abs() < 1e-12);
        assert_eq!((r.df_model, r.df_residual), (1, 3));
        assert!((r.r_square_percent - 1000.0 / 14.8).abs() < 1e-9);
        // F(1, 3) = t(3)² with t = 2.5; two-sided t tail from the closed-form t(3) CDF.
        let t: f64 = 2.5;
        let theta = (t / 3f64.sqrt()).atan();
        let cdf = 0.5 + (theta + theta.sin() * theta.cos()) / std::f64::consts::PI;
        assert!(
            (r.p_value - 2.0 * (1.0 - cdf)).abs() < 1e-10,
            "{}",
            r.p_value
        );
    }

    #[test]
    fn regression_errors() {
        assert!(matches!(
            linear_regression(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            linear_regression(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            linear_regression(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn mwu_identical_samples() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(r.p_value >= 0.99);
        assert_eq!(r.u_statistic, 4.5);
    }

    #[test]
    fn mwu_separated_small() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
        assert!(r.exact);
        assert_eq!(r.u_statistic, 0.0);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        assert!((r.p_less - 0.05).abs() < 1e-12);
        assert!((r.p_greater - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mwu_shifted_large() {
        let a: Vec<f64> = (0..30).map(|i| i as f64 * 0.01).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 10.0).collect();
        let r = mann_whitney(&a, &b).unwrap();
        assert!(!r.exact);
        assert!(r.p_value < 0.001);
        assert!(r.p_less < 0.001);
    }

    #[test]
    fn mwu_all_tied() {
        let r = mann_whitney(&[2.0; 20], &[2.0; 20]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.z_score, 0.0);
    }

    #[test]
    fn mwu_empty() {
        assert!(mann_whitney(&[], &[1.0]).is_err());
    }

    #[test]
    fn exact_counts_total() {
        let counts = exact_u_counts(6, 3);
        assert_eq!(counts.iter().sum::<f64>(), 20.0);
        assert_eq!(counts.len(), 10);
    }
}

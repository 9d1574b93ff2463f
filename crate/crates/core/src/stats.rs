//! Descriptive statistics used by the evaluation and analytics reports.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::StatsError;

/// Count, mean and sample standard deviation of a sample.
///
/// Values are summed in sorted order so the result does not depend on the
/// order observations arrive in. Fewer than two observations give `sd = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return SummaryStats::default();
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / n as f64;
        SummaryStats { n, mean, sd: sample_variance_sorted(&sorted, mean).sqrt() }
    }

    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }
}

fn sample_variance_sorted(sorted: &[f64], mean: f64) -> f64 {
    if sorted.len() < 2 {
        return 0.0;
    }
    let mut deviations: Vec<f64> = sorted.iter().map(|x| (x - mean) * (x - mean)).collect();
    deviations.sort_by(f64::total_cmp);
    deviations.iter().sum::<f64>() / (sorted.len() - 1) as f64
}

pub fn mean(values: &[f64]) -> f64 {
    SummaryStats::from_values(values).mean
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let s = SummaryStats::from_values(values);
    s.variance()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    /// `None` when chance agreement is 1 and the statistic is undefined.
    pub kappa: Option<f64>,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Cohen's kappa for a k×k confusion matrix (rows: rater A, columns: rater B).
pub fn cohen_kappa(matrix: &[Vec<u64>]) -> Result<KappaResult, StatsError> {
    let k = matrix.len();
    if matrix.iter().any(|row| row.len() != k) {
        return Err(StatsError::NotSquare);
    }
    let total: u64 = matrix.iter().flatten().sum();
    if total == 0 {
        return Err(StatsError::EmptyMatrix);
    }
    let n = total as f64;
    let diagonal: u64 = (0..k).map(|i| matrix[i][i]).sum();
    let observed = diagonal as f64 / n;
    let expected: f64 = (0..k)
        .map(|i| {
            let row: u64 = matrix[i].iter().sum();
            let col: u64 = matrix.iter().map(|r| r[i]).sum();
            (row as f64 / n) * (col as f64 / n)
        })
        .sum();
    // Chance agreement of exactly one means both raters used a single category.
    let degenerate = (0..k).any(|i| {
        let row: u64 = matrix[i].iter().sum();
        let col: u64 = matrix.iter().map(|r| r[i]).sum();
        row == total && col == total
    });
    if degenerate {
        return Ok(KappaResult {
            kappa: None,
            observed_agreement: observed,
            expected_agreement: 1.0,
            total,
            note: Some("both raters used a single category; kappa is undefined".into()),
        });
    }
    Ok(KappaResult {
        kappa: Some((observed - expected) / (1.0 - expected)),
        observed_agreement: observed,
        expected_agreement: expected,
        total,
        note: None,
    })
}

/// 2×2 confusion matrix from paired binary labels.
pub fn binary_confusion(pairs: impl IntoIterator<Item = (bool, bool)>) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; 2]; 2];
    for (a, b) in pairs {
        m[a as usize][b as usize] += 1;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub a: SummaryStats,
    pub b: SummaryStats,
    /// `mean(a) - mean(b)`.
    pub difference: f64,
    /// `None` when both samples have zero variance.
    pub t: Option<f64>,
    pub df: Option<f64>,
    /// Two-sided.
    pub p_value: Option<f64>,
}

/// Welch's unequal-variance two-sample t statistic from summary statistics.
pub fn welch_from_summaries(a: SummaryStats, b: SummaryStats) -> Result<WelchResult, StatsError> {
    if a.n < 2 || b.n < 2 {
        return Err(StatsError::TooFewObservations(a.n, b.n));
    }
    let difference = a.mean - b.mean;
    let va = a.variance() / a.n as f64;
    let vb = b.variance() / b.n as f64;
    let se2 = va + vb;
    if se2 <= 0.0 {
        return Ok(WelchResult { a, b, difference, t: None, df: None, p_value: None });
    }
    let t = difference / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64);
    let p_value = StudentsT::new(0.0, 1.0, df).ok().map(|dist| (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0));
    Ok(WelchResult { a, b, difference, t: Some(t), df: Some(df), p_value })
}

pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    welch_from_summaries(SummaryStats::from_values(a), SummaryStats::from_values(b))
}

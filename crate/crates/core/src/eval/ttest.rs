use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided;
use super::{EvalError, EvalReport, Metric};

/// Two-sided p below this marks a difference as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub metric: Metric,
    pub baseline: String,
    pub queries: usize,
    /// Mean of `system - baseline`.
    pub mean_difference: f64,
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub significant: bool,
}

/// Classic paired t on per-query differences, `n - 1` degrees of freedom.
/// Returns `(t, p)`.
pub fn paired_ttest_differences(diffs: &[f64]) -> Result<(f64, f64), EvalError> {
    let n = diffs.len();
    if n < 2 {
        return Err(EvalError::TooFewQueries(n));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let var = ss / (nf - 1.0);
    // Differences that are all equal up to rounding carry no spread.
    if var <= f64::EPSILON * f64::EPSILON * mean.abs().max(1.0) {
        return Err(EvalError::ZeroVariance);
    }
    let t = mean / (var / nf).sqrt();
    Ok((t, student_t_two_sided(t, nf - 1.0)))
}

/// Paired t-test of `a - b` on `metric`. Both reports must cover the same
/// queries.
pub fn paired_ttest(a: &EvalReport, b: &EvalReport, metric: Metric) -> Result<TTest, EvalError> {
    if a.per_query.len() != b.per_query.len() || a.per_query.iter().zip(&b.per_query).any(|(x, y)| x.qid != y.qid) {
        return Err(EvalError::MismatchedQueries);
    }
    let diffs: Vec<f64> = a
        .per_query
        .iter()
        .zip(&b.per_query)
        .map(|(x, y)| x.value(metric) - y.value(metric))
        .collect();
    let (t, p) = paired_ttest_differences(&diffs)?;
    Ok(TTest {
        metric,
        baseline: b.system.clone(),
        queries: diffs.len(),
        mean_difference: diffs.iter().sum::<f64>() / diffs.len() as f64,
        t,
        p,
        significant: p < SIGNIFICANCE_LEVEL,
    })
}

//! Effect sizes, fit statistics and rank correlation.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::glm::fit::{DesignMatrix, Family, FitResult};
use crate::order_stats::midranks;

pub fn sample_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with the n−1 denominator; 0 for fewer than two values.
pub fn sample_var(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = sample_mean(values);
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_sd(values: &[f64]) -> f64 {
    sample_var(values).sqrt()
}

/// Percent change in the expected outcome (or odds) for a one-standard-
/// deviation increase of the predictor: 100·(exp(β·sd) − 1).
pub fn percent_change(beta: f64, sd: f64) -> f64 {
    100.0 * ((beta * sd).exp() - 1.0)
}

/// McFadden pseudo-R², as a percentage.
pub fn mcfadden_r2(fit: &FitResult) -> Result<f64> {
    if fit.null_log_likelihood == 0.0 {
        return Err(Error::Degenerate("null log-likelihood is zero".into()));
    }
    Ok(100.0 * (1.0 - fit.log_likelihood / fit.null_log_likelihood))
}

/// Fully standardized probit coefficient: β·sd(x) / √(var(Xβ) + 1), with
/// variances over the estimation sample.
pub fn std_coef_probit(fit: &FitResult, design: &DesignMatrix, column: &str) -> Result<f64> {
    fit.require_converged()?;
    if fit.family != Family::Probit {
        return Err(Error::Design("standardized coefficients are defined for probit fits".into()));
    }
    let j = design
        .column_index(column)
        .ok_or_else(|| Error::Design(format!("no column {column:?}")))?;
    let x = design.column(j);
    let sd_x = sample_sd(&x);
    if sd_x == 0.0 {
        return Err(Error::Degenerate(format!("column {column:?} has zero variance")));
    }
    let n = design.n();
    let eta: Vec<f64> = (0..n)
        .map(|i| {
            (0..design.k())
                .map(|c| design.matrix()[(i, c)] * fit.coefficients[c])
                .sum()
        })
        .collect();
    let sigma_latent = (sample_var(&eta) + 1.0).sqrt();
    Ok(fit.coefficients[j] * sd_x / sigma_latent)
}

/// Two-sided Wald p-value for z = β / se.
pub fn wald_p_value(beta: f64, se: f64) -> f64 {
    if se == 0.0 {
        return if beta == 0.0 { 1.0 } else { 0.0 };
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    2.0 * (1.0 - normal.cdf((beta / se).abs()))
}

/// Significance stars at the 0.05 / 0.01 / 0.001 thresholds.
pub fn stars_for_p(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountDiagRow {
    pub count: u64,
    pub observed: f64,
    pub predicted: f64,
}

/// Observed relative frequencies for k = 0..max(y) against the Poisson pmf
/// at the intercept-only MLE mean (the sample mean).
pub fn poisson_count_diagnostics(y: &[u64]) -> Result<Vec<CountDiagRow>> {
    if y.is_empty() {
        return Err(Error::EmptyInput("no counts".into()));
    }
    let n = y.len() as f64;
    let max = *y.iter().max().unwrap();
    let lambda = y.iter().sum::<u64>() as f64 / n;
    let mut observed = vec![0u64; (max + 1) as usize];
    for &v in y {
        observed[v as usize] += 1;
    }
    Ok((0..=max)
        .map(|k| {
            let log_pmf = k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0);
            CountDiagRow {
                count: k,
                observed: observed[k as usize] as f64 / n,
                predicted: if lambda == 0.0 {
                    if k == 0 { 1.0 } else { 0.0 }
                } else {
                    log_pmf.exp()
                },
            }
        })
        .collect())
}

/// Spearman rank correlation: Pearson correlation of midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Invalid("length mismatch".into()));
    }
    if x.len() < 2 {
        return Err(Error::Degenerate("need at least two observations".into()));
    }
    let rx = midranks(x);
    let ry = midranks(y);
    let (mx, my) = (sample_mean(&rx), sample_mean(&ry));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..rx.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero rank variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

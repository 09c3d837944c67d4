//! Newton/IRLS fitting with observed-information weights.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Poisson,
    Logistic,
    Probit,
}

/// Outcome vector plus a named predictor matrix. Construction validates
/// shape only; family-specific outcome checks happen at fit time.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    outcome: Vec<f64>,
    columns: Vec<String>,
    x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(outcome: Vec<f64>, predictors: Vec<(String, Vec<f64>)>) -> Result<DesignMatrix> {
        let n = outcome.len();
        if n == 0 {
            return Err(Error::Design("empty outcome".into()));
        }
        if predictors.is_empty() {
            return Err(Error::Design("no predictor columns".into()));
        }
        let k = predictors.len();
        let mut columns = Vec::with_capacity(k);
        let mut x = DMatrix::zeros(n, k);
        for (j, (name, col)) in predictors.into_iter().enumerate() {
            if col.len() != n {
                return Err(Error::Design(format!(
                    "column {name:?} has {} rows, outcome has {n}",
                    col.len()
                )));
            }
            if columns.contains(&name) {
                return Err(Error::Design(format!("duplicate column name {name:?}")));
            }
            for (i, v) in col.iter().enumerate() {
                x[(i, j)] = *v;
            }
            columns.push(name);
        }
        Ok(DesignMatrix { outcome, columns, x })
    }

    /// Convenience: an intercept column plus the given predictors.
    pub fn with_intercept(
        outcome: Vec<f64>,
        predictors: Vec<(String, Vec<f64>)>,
    ) -> Result<DesignMatrix> {
        let n = outcome.len();
        let mut cols = vec![("intercept".to_string(), vec![1.0; n])];
        cols.extend(predictors);
        DesignMatrix::new(outcome, cols)
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.column(j).iter().copied().collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    fn intercept_column(&self) -> Option<usize> {
        (0..self.k()).find(|&j| self.x.column(j).iter().all(|&v| v == 1.0))
    }

    /// Columns of an exactly rank-deficient Gram matrix, by name.
    fn check_full_rank(&self) -> Result<()> {
        let k = self.k();
        let mut g = self.x.transpose() * &self.x;
        let scale = (0..k).map(|j| g[(j, j)].abs()).fold(0.0, f64::max).max(1.0);
        let tol = 1e-10 * scale;
        let mut eliminated = vec![false; k];
        for _ in 0..k {
            // largest remaining pivot
            let pivot = (0..k)
                .filter(|&j| !eliminated[j])
                .max_by(|&a, &b| g[(a, a)].abs().partial_cmp(&g[(b, b)].abs()).unwrap());
            let Some(p) = pivot else { break };
            if g[(p, p)].abs() < tol {
                let collinear: Vec<String> = (0..k)
                    .filter(|&j| !eliminated[j])
                    .map(|j| self.columns[j].clone())
                    .collect();
                return Err(Error::Collinear(collinear));
            }
            eliminated[p] = true;
            let gp = g.row(p).clone_owned();
            let dp = g[(p, p)];
            for r in 0..k {
                if r == p || eliminated[r] {
                    continue;
                }
                let f = g[(r, p)] / dp;
                for c in 0..k {
                    g[(r, c)] -= f * gp[c];
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Convergence: max |Δβ| below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Diverging ‖β‖∞ beyond this is reported as non-convergence
    /// (perfect separation in the binary families).
    pub separation_norm: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-10,
            max_iter: 100,
            separation_norm: 1e3,
        }
    }
}

/// A fitted model. `converged == false` results carry a diagnostic and NaN
/// standard errors; downstream consumers must check before use.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub family: Family,
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub model_se: Vec<f64>,
    /// Sandwich SEs with the n/(n−k) finite-sample correction.
    pub robust_se: Vec<f64>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub n: usize,
    pub converged: bool,
    pub diagnostic: Option<String>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.coefficients[i])
    }

    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence(
                self.diagnostic.clone().unwrap_or_else(|| "unknown".into()),
            ))
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Per-observation score factor (dℓ/dη) and observed-information weight
/// (−d²ℓ/dη²) at the linear predictor `eta`.
fn obs_score_weight(family: Family, y: f64, eta: f64, normal: &Normal) -> (f64, f64) {
    match family {
        Family::Poisson => {
            let mu = eta.clamp(-500.0, 500.0).exp();
            (y - mu, mu)
        }
        Family::Logistic => {
            let p = 1.0 / (1.0 + (-eta).exp());
            (y - p, (p * (1.0 - p)).max(1e-300))
        }
        Family::Probit => {
            let phi = normal.pdf(eta);
            let cap = normal.cdf(eta).clamp(1e-12, 1.0 - 1e-12);
            let g = if y > 0.5 {
                phi / cap
            } else {
                -phi / (1.0 - cap)
            };
            let w = g * g + g * eta;
            (g, w.max(1e-300))
        }
    }
}

fn obs_log_likelihood(family: Family, y: f64, eta: f64, normal: &Normal) -> f64 {
    match family {
        Family::Poisson => {
            let mu = eta.clamp(-500.0, 500.0).exp();
            y * eta - mu - ln_gamma(y + 1.0)
        }
        Family::Logistic => {
            // y*eta − log(1 + e^eta), stably
            let log1pe = if eta > 0.0 {
                eta + (-eta).exp().ln_1p()
            } else {
                eta.exp().ln_1p()
            };
            y * eta - log1pe
        }
        Family::Probit => {
            let cap = normal.cdf(eta).clamp(1e-12, 1.0 - 1e-12);
            if y > 0.5 {
                cap.ln()
            } else {
                (1.0 - cap).ln()
            }
        }
    }
}

/// Mean response at the fitted coefficients.
pub fn mean_response(fit: &FitResult, design: &DesignMatrix) -> Vec<f64> {
    let normal = std_normal();
    let beta = DVector::from_vec(fit.coefficients.clone());
    let eta = design.matrix() * beta;
    eta.iter()
        .map(|&e| match fit.family {
            Family::Poisson => e.clamp(-500.0, 500.0).exp(),
            Family::Logistic => 1.0 / (1.0 + (-e).exp()),
            Family::Probit => normal.cdf(e),
        })
        .collect()
}

/// Score vector Xᵀ(dℓ/dη) at the given coefficients.
pub fn gradient(family: Family, design: &DesignMatrix, coefficients: &[f64]) -> Vec<f64> {
    let normal = std_normal();
    let beta = DVector::from_vec(coefficients.to_vec());
    let eta = design.matrix() * beta;
    let mut grad = vec![0.0; design.k()];
    for i in 0..design.n() {
        let (g, _) = obs_score_weight(family, design.outcome()[i], eta[i], &normal);
        for j in 0..design.k() {
            grad[j] += design.matrix()[(i, j)] * g;
        }
    }
    grad
}

fn validate_outcome(family: Family, y: &[f64]) -> Result<()> {
    match family {
        Family::Poisson => {
            if y.iter().any(|&v| v < 0.0 || v.fract() != 0.0 || !v.is_finite()) {
                return Err(Error::Design(
                    "count outcome must be non-negative integers".into(),
                ));
            }
            if y.iter().all(|&v| v == 0.0) {
                return Err(Error::Degenerate("outcome is identically zero".into()));
            }
        }
        Family::Logistic | Family::Probit => {
            if y.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::Design("binary outcome must be 0/1".into()));
            }
            let ones = y.iter().filter(|&&v| v == 1.0).count();
            if ones == 0 || ones == y.len() {
                return Err(Error::Degenerate(
                    "binary outcome has a single class".into(),
                ));
            }
        }
    }
    Ok(())
}

fn null_log_likelihood(family: Family, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    match family {
        Family::Poisson => y
            .iter()
            .map(|&v| {
                let term = if v > 0.0 { v * ybar.ln() } else { 0.0 };
                term - ybar - ln_gamma(v + 1.0)
            })
            .sum(),
        Family::Logistic | Family::Probit => {
            let ones = y.iter().sum::<f64>();
            ones * ybar.ln() + (n - ones) * (1.0 - ybar).ln()
        }
    }
}

fn observed_information(
    family: Family,
    design: &DesignMatrix,
    beta: &DVector<f64>,
    normal: &Normal,
) -> DMatrix<f64> {
    let eta = design.matrix() * beta;
    let k = design.k();
    let mut a = DMatrix::zeros(k, k);
    for i in 0..design.n() {
        let (_, w) = obs_score_weight(family, design.outcome()[i], eta[i], normal);
        for r in 0..k {
            let xr = design.matrix()[(i, r)] * w;
            for c in r..k {
                a[(r, c)] += xr * design.matrix()[(i, c)];
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            a[(r, c)] = a[(c, r)];
        }
    }
    a
}

/// Maximum-likelihood fit by Newton iteration with observed-information
/// weights. Converges when max |Δβ| < `opts.tol`.
pub fn fit(family: Family, design: &DesignMatrix, opts: FitOptions) -> Result<FitResult> {
    validate_outcome(family, design.outcome())?;
    design.check_full_rank()?;
    let normal = std_normal();
    let n = design.n();
    let k = design.k();

    let mut beta = DVector::zeros(k);
    if let Some(j) = design.intercept_column() {
        let ybar = design.outcome().iter().sum::<f64>() / n as f64;
        beta[j] = match family {
            Family::Poisson => ybar.max(1e-8).ln(),
            Family::Logistic => {
                let p = ybar.clamp(1e-8, 1.0 - 1e-8);
                (p / (1.0 - p)).ln()
            }
            Family::Probit => normal.inverse_cdf(ybar.clamp(1e-8, 1.0 - 1e-8)),
        };
    }

    let log_lik = |b: &DVector<f64>| -> f64 {
        let eta = design.matrix() * b;
        (0..n)
            .map(|i| obs_log_likelihood(family, design.outcome()[i], eta[i], &normal))
            .sum()
    };

    let mut converged = false;
    let mut diagnostic = None;
    let mut ll_old = log_lik(&beta);
    for _ in 0..opts.max_iter {
        let eta = design.matrix() * &beta;
        let mut a = DMatrix::zeros(k, k);
        let mut score = DVector::zeros(k);
        for i in 0..n {
            let (g, w) = obs_score_weight(family, design.outcome()[i], eta[i], &normal);
            for r in 0..k {
                let xir = design.matrix()[(i, r)];
                score[r] += xir * g;
                for c in r..k {
                    a[(r, c)] += xir * w * design.matrix()[(i, c)];
                }
            }
        }
        for r in 0..k {
            for c in 0..r {
                a[(r, c)] = a[(c, r)];
            }
        }
        let Some(delta) = a.lu().solve(&score) else {
            // The design has full rank, so this is numerical saturation of
            // the weights (e.g. fitted probabilities pinned at 0/1).
            diagnostic = Some(
                "information matrix became singular; no convergence (likely separation)".into(),
            );
            break;
        };
        // Step-halve until the log-likelihood stops decreasing, so a Newton
        // overshoot cannot send the iterates into saturated regions.
        let mut step = 1.0;
        let mut candidate = &beta + &delta;
        let mut ll_new = log_lik(&candidate);
        for _ in 0..32 {
            if ll_new.is_finite() && ll_new >= ll_old - 1e-10 {
                break;
            }
            step *= 0.5;
            candidate = &beta + step * &delta;
            ll_new = log_lik(&candidate);
        }
        beta = candidate;
        if beta.amax() > opts.separation_norm {
            diagnostic = Some(format!(
                "coefficient norm exceeded {}; likely perfect separation",
                opts.separation_norm
            ));
            break;
        }
        if (step * delta.amax()) < opts.tol {
            converged = true;
            break;
        }
        ll_old = ll_new;
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!("no convergence in {} iterations", opts.max_iter));
    }

    let eta = design.matrix() * &beta;
    let log_likelihood = (0..n)
        .map(|i| obs_log_likelihood(family, design.outcome()[i], eta[i], &normal))
        .sum();
    let null_ll = null_log_likelihood(family, design.outcome());

    let mut result = FitResult {
        family,
        columns: design.columns().to_vec(),
        coefficients: beta.iter().copied().collect(),
        model_se: vec![f64::NAN; k],
        robust_se: vec![f64::NAN; k],
        log_likelihood,
        null_log_likelihood: null_ll,
        n,
        converged,
        diagnostic,
    };
    if converged {
        let a = observed_information(family, design, &beta, &normal);
        let a_inv = a
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Design("singular information matrix".into()))?;
        result.model_se = (0..k).map(|j| a_inv[(j, j)].max(0.0).sqrt()).collect();
        result.robust_se = robust_se(&result, design, SandwichCorrection::DfAdjusted)?;
    }
    Ok(result)
}

pub fn fit_poisson(design: &DesignMatrix) -> Result<FitResult> {
    fit(Family::Poisson, design, FitOptions::default())
}

pub fn fit_logistic(design: &DesignMatrix) -> Result<FitResult> {
    fit(Family::Logistic, design, FitOptions::default())
}

pub fn fit_probit(design: &DesignMatrix) -> Result<FitResult> {
    fit(Family::Probit, design, FitOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SandwichCorrection {
    /// Plain A⁻¹BA⁻¹.
    Hc0,
    /// Scaled by n/(n−k).
    DfAdjusted,
}

/// Sandwich standard errors A⁻¹BA⁻¹ with A the observed information and B
/// the sum of per-observation score outer products.
pub fn robust_se(
    fit: &FitResult,
    design: &DesignMatrix,
    correction: SandwichCorrection,
) -> Result<Vec<f64>> {
    fit.require_converged()?;
    let normal = std_normal();
    let beta = DVector::from_vec(fit.coefficients.clone());
    let eta = design.matrix() * &beta;
    let k = design.k();
    let n = design.n();
    let a = observed_information(fit.family, design, &beta, &normal);
    let mut b = DMatrix::zeros(k, k);
    for i in 0..n {
        let (g, _) = obs_score_weight(fit.family, design.outcome()[i], eta[i], &normal);
        for r in 0..k {
            let sr = design.matrix()[(i, r)] * g;
            for c in r..k {
                b[(r, c)] += sr * design.matrix()[(i, c)] * g;
            }
        }
    }
    for r in 0..k {
        for c in 0..r {
            b[(r, c)] = b[(c, r)];
        }
    }
    let a_inv = a
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Design("singular information matrix".into()))?;
    let mut v = &a_inv * b * &a_inv;
    if correction == SandwichCorrection::DfAdjusted {
        if n <= k {
            return Err(Error::Design(format!(
                "finite-sample correction undefined for n={n}, k={k}"
            )));
        }
        v *= n as f64 / (n - k) as f64;
    }
    Ok((0..k).map(|j| v[(j, j)].max(0.0).sqrt()).collect())
}

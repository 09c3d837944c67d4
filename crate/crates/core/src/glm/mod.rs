//! Maximum-likelihood GLMs (Poisson, logistic, probit) with robust
//! sandwich standard errors and the derived effect statistics used by the
//! study harness.

mod diagnostics;
mod fit;

pub use diagnostics::{
    mcfadden_r2, percent_change, poisson_count_diagnostics, sample_mean, sample_sd, sample_var,
    spearman, stars_for_p, std_coef_probit, wald_p_value, CountDiagRow,
};
pub use fit::{
    fit, fit_logistic, fit_poisson, fit_probit, gradient, mean_response, robust_se, DesignMatrix,
    Family, FitOptions, FitResult, SandwichCorrection,
};

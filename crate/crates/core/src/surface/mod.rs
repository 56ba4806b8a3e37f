//! Least-squares response surfaces on coded designs.

mod canonical;
mod fdist;
mod fit;
mod model;

use serde::{Deserialize, Serialize};

pub use canonical::{canonical_analysis, QuadraticForm, StationaryKind, SINGULAR_RATIO};
pub use fdist::{f_distribution_cdf, ln_gamma, overall_f_test, regularized_incomplete_beta, FTest};
pub use fit::{fit_least_squares, predict, FitResult, MAX_CONDITION};
pub use model::{column_labels, design_matrix, model_vector, DesignMatrixView, ModelOrder};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledCoefficient {
    pub label: String,
    pub value: f64,
}

/// JSON-ready summary of a fit. Non-finite statistics are written as null.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub order: u8,
    pub n: usize,
    pub d: usize,
    pub coefficients: Vec<LabeledCoefficient>,
    pub sse: f64,
    pub sigma2_hat: Option<f64>,
    pub f: Option<f64>,
    pub p_value: Option<f64>,
    pub exact_fit: bool,
    pub eigenvalues: Option<Vec<f64>>,
    pub stationary_kind: Option<StationaryKind>,
}

impl FitReport {
    pub fn new(fit: &FitResult) -> Result<Self> {
        let test = overall_f_test(fit).ok();
        let canonical = match fit.order {
            ModelOrder::Second => Some(canonical_analysis(fit)?),
            ModelOrder::First => None,
        };
        Ok(Self {
            order: fit.order.degree(),
            n: fit.n,
            d: fit.d,
            coefficients: fit
                .labels
                .iter()
                .zip(&fit.coefficients)
                .map(|(label, value)| LabeledCoefficient { label: label.clone(), value: *value })
                .collect(),
            sse: fit.sse,
            sigma2_hat: fit.sigma2_hat,
            f: test.map(|t| t.f).filter(|f| f.is_finite()),
            p_value: test.map(|t| t.p_value),
            exact_fit: test.is_some_and(|t| t.exact_fit),
            eigenvalues: canonical.as_ref().map(|q| q.eigenvalues.clone()),
            stationary_kind: canonical.map(|q| q.kind),
        })
    }
}

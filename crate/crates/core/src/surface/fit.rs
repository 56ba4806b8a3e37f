use serde::{Deserialize, Serialize};

use super::model::{model_vector, DesignMatrixView, ModelOrder};
use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, Cholesky, Matrix};

/// Largest accepted condition estimate of XᵀX.
pub const MAX_CONDITION: f64 = 1e12;

/// Least-squares fit of a first- or second-order surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub order: ModelOrder,
    pub n: usize,
    pub d: usize,
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub sse: f64,
    /// Centered total sum of squares of the observations.
    pub sst: f64,
    /// Sum of squared observations, kept to judge whether `sst` is round-off.
    pub sum_y2: f64,
    /// `sse / (n - m)`; absent when n = m.
    pub sigma2_hat: Option<f64>,
    pub xtx_inverse: Matrix,
    pub condition: f64,
}

impl FitResult {
    pub fn m(&self) -> usize {
        self.coefficients.len()
    }

    /// Linear coefficients `β̂_1..β̂_d`.
    pub fn gradient(&self) -> &[f64] {
        &self.coefficients[1..=self.d]
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }
}

pub fn fit_least_squares(xv: &DesignMatrixView, y: &[f64]) -> Result<FitResult> {
    let (n, m) = (xv.n(), xv.m());
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if n < m {
        return Err(Error::TooFewObservations { n, m });
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite response at row {}", i + 1)));
    }
    let xtx = xv.entries.gram();
    let chol = Cholesky::new(&xtx).map_err(|pivot| Error::RankDeficient(xv.labels[pivot].clone()))?;
    let eig = symmetric_eigen(&xtx)?;
    let (lo, hi) = (eig.values[0], eig.values[m - 1]);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let coefficients = chol.solve(&xv.entries.tmul_vec(y)?);
    let fitted = xv.entries.mul_vec(&coefficients)?;
    let sse: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(FitResult {
        order: xv.order,
        n,
        d: xv.d(),
        labels: xv.labels.clone(),
        coefficients,
        sse,
        sst,
        sum_y2: y.iter().map(|v| v * v).sum(),
        sigma2_hat: (n > m).then(|| sse / (n - m) as f64),
        xtx_inverse: chol.inverse(),
        condition,
    })
}

/// Prediction `f(x)ᵀβ̂` and its variance `σ̂² f(x)ᵀ(XᵀX)⁻¹f(x)` (NaN when
/// σ̂² is undefined).
pub fn predict(fit: &FitResult, coded_point: &[f64]) -> Result<(f64, f64)> {
    if coded_point.len() != fit.d {
        return Err(Error::DimensionMismatch { expected: fit.d, actual: coded_point.len() });
    }
    let f = model_vector(coded_point, fit.order);
    let y_hat = dot(&f, &fit.coefficients);
    let leverage = dot(&f, &fit.xtx_inverse.mul_vec(&f)?);
    Ok((y_hat, fit.sigma2_hat.unwrap_or(f64::NAN) * leverage))
}

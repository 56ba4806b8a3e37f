use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::doe::{AlphaPolicy, CcdSpec, FactorialPart, DEFAULT_CCD_CENTER_POINTS};
use crate::error::{Error, Result};

/// Settings of one optimization run. Defaults follow the simulated study:
/// d = 8, PLS basis, full 2^d first-order design, rotatable CCD with 8
/// centers, λ ∈ {0.1, ..., 1.0} with 2 replicates and a 5-point refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RsmConfig {
    pub d: usize,
    pub basis: BasisKind,
    /// Two-level design used to estimate the gradient.
    pub first_order: FactorialPart,
    pub ccd_n0: usize,
    pub ccd_alpha: AlphaPolicy,
    pub ccd_factorial: FactorialPart,
    /// Coded-to-physical factor of the first-order designs.
    pub scale: f64,
    /// Coded-to-physical factor of the CCD.
    pub ccd_scale: f64,
    pub lambdas: Vec<f64>,
    /// λ values of the refined line-search pass.
    pub refine_points: usize,
    /// Evaluations per line-search λ.
    pub replicates: usize,
    /// Evaluations behind each reported center response.
    pub center_replicates: usize,
    /// Stationary when the overall F-test p-value exceeds this.
    pub stationarity_threshold: f64,
    pub max_steps: usize,
    /// When false every point is evaluated once, replicates are skipped.
    pub noisy: bool,
    /// Drop lifted design points that are not positive everywhere.
    pub positivity_filter: bool,
    pub seed: u64,
}

impl Default for RsmConfig {
    fn default() -> Self {
        Self {
            d: 8,
            basis: BasisKind::Pls,
            first_order: FactorialPart::Full,
            ccd_n0: DEFAULT_CCD_CENTER_POINTS,
            ccd_alpha: AlphaPolicy::Rotatable,
            ccd_factorial: FactorialPart::Full,
            scale: 1.0,
            ccd_scale: 2.0,
            lambdas: (1..=10).map(|k| k as f64 / 10.0).collect(),
            refine_points: 5,
            replicates: 2,
            center_replicates: 5,
            stationarity_threshold: 0.8,
            max_steps: 1,
            noisy: true,
            positivity_filter: false,
            seed: 1,
        }
    }
}

impl RsmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.d == 0 {
            return bad("d must be >= 1".into());
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) || !(self.ccd_scale > 0.0 && self.ccd_scale.is_finite()) {
            return bad(format!("scales must be > 0, got {} and {}", self.scale, self.ccd_scale));
        }
        if self.lambdas.is_empty() {
            return bad("the line-search grid is empty".into());
        }
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("line-search λ values must be finite and >= 0".into());
        }
        if self.lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return bad("line-search λ values must be increasing".into());
        }
        if self.replicates == 0 || self.center_replicates == 0 {
            return bad("replicate counts must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.stationarity_threshold) {
            return bad(format!("stationarity threshold must lie in [0, 1], got {}", self.stationarity_threshold));
        }
        if let FactorialPart::Fractional { p } = self.first_order {
            if p == 0 || p >= self.d {
                return bad(format!("fractional first-order design needs 1 <= p < d, got p = {p}"));
            }
        }
        self.ccd_spec().validate()
    }

    pub fn ccd_spec(&self) -> CcdSpec {
        CcdSpec { d: self.d, factorial: self.ccd_factorial, n0: self.ccd_n0, alpha: self.ccd_alpha }
    }

    pub(crate) fn replicates(&self) -> usize {
        if self.noisy {
            self.replicates
        } else {
            1
        }
    }

    pub(crate) fn center_replicates(&self) -> usize {
        if self.noisy {
            self.center_replicates
        } else {
            1
        }
    }
}

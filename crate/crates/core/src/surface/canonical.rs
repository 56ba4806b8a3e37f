use std::fmt;

use serde::{Deserialize, Serialize};

use super::fit::FitResult;
use super::model::ModelOrder;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};

/// Eigenvalues smaller than this fraction of the largest one make Ĥ singular.
pub const SINGULAR_RATIO: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationaryKind {
    Minimum,
    Maximum,
    Saddle,
    /// Some eigenvalue is zero relative to the largest.
    Singular,
}

impl fmt::Display for StationaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StationaryKind::Minimum => "minimum",
            StationaryKind::Maximum => "maximum",
            StationaryKind::Saddle => "saddle",
            StationaryKind::Singular => "singular",
        })
    }
}

/// The fitted surface read as `c + bᵀx + ½ xᵀHx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub b: Vec<f64>,
    pub h: Matrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `-H⁻¹b`, absent when H is singular.
    pub stationary_offset: Option<Vec<f64>>,
    pub kind: StationaryKind,
}

impl QuadraticForm {
    /// Builds the form from `b` and a symmetric `h`.
    pub fn new(b: Vec<f64>, h: Matrix) -> Result<Self> {
        let d = b.len();
        if h.rows() != d || h.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: h.rows() });
        }
        let eig = symmetric_eigen(&h)?;
        let scale = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let singular = scale == 0.0 || eig.values.iter().any(|v| v.abs() <= SINGULAR_RATIO * scale);
        let kind = if singular {
            StationaryKind::Singular
        } else if eig.values[0] > 0.0 {
            StationaryKind::Minimum
        } else if eig.values[d - 1] < 0.0 {
            StationaryKind::Maximum
        } else {
            StationaryKind::Saddle
        };
        let stationary_offset = (!singular).then(|| {
            // -V Λ⁻¹ Vᵀ b
            let v = &eig.vectors;
            let mut s = vec![0.0; d];
            for k in 0..d {
                let proj: f64 = (0..d).map(|i| v[(i, k)] * b[i]).sum::<f64>() / eig.values[k];
                for (i, si) in s.iter_mut().enumerate() {
                    *si -= v[(i, k)] * proj;
                }
            }
            s
        });
        Ok(Self { b, h, eigenvalues: eig.values, stationary_offset, kind })
    }

    pub fn is_minimum(&self) -> bool {
        self.kind == StationaryKind::Minimum
    }
}

/// Recovers `b` and `H` from a second-order fit (pure-quadratic coefficients
/// doubled, cross coefficients copied) and analyses `H`.
pub fn canonical_analysis(fit: &FitResult) -> Result<QuadraticForm> {
    if fit.order != ModelOrder::Second {
        return Err(Error::InvalidArgument("canonical analysis needs a second-order fit".into()));
    }
    let d = fit.d;
    let c = &fit.coefficients;
    let b = c[1..=d].to_vec();
    let mut h = Matrix::zeros(d, d);
    for j in 0..d {
        h[(j, j)] = 2.0 * c[1 + d + j];
    }
    let mut idx = 1 + 2 * d;
    for j in 0..d {
        for k in (j + 1)..d {
            h[(j, k)] = c[idx];
            h[(k, j)] = c[idx];
            idx += 1;
        }
    }
    QuadraticForm::new(b, h)
}

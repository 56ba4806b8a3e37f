use std::fmt;

use serde::{Deserialize, Serialize};

use crate::doe::MultivariateDesign;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Polynomial order of a response surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelOrder {
    First,
    Second,
}

impl ModelOrder {
    pub fn from_degree(degree: u8) -> Result<Self> {
        match degree {
            1 => Ok(ModelOrder::First),
            2 => Ok(ModelOrder::Second),
            other => Err(Error::InvalidArgument(format!("model order must be 1 or 2, got {other}"))),
        }
    }

    pub fn degree(self) -> u8 {
        match self {
            ModelOrder::First => 1,
            ModelOrder::Second => 2,
        }
    }

    /// Number of model columns for `d` factors.
    pub fn columns(self, d: usize) -> usize {
        match self {
            ModelOrder::First => 1 + d,
            ModelOrder::Second => 1 + d + d * (d + 1) / 2,
        }
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.degree())
    }
}

/// Column labels in model order: intercept, `x1..xd`, then for order 2
/// `x1^2..xd^2` followed by the crosses `x1*x2, x1*x3, ..., x(d-1)*xd`.
pub fn column_labels(d: usize, order: ModelOrder) -> Vec<String> {
    let mut labels = vec!["intercept".to_string()];
    labels.extend((1..=d).map(|j| format!("x{j}")));
    if order == ModelOrder::Second {
        labels.extend((1..=d).map(|j| format!("x{j}^2")));
        for j in 1..=d {
            for k in (j + 1)..=d {
                labels.push(format!("x{j}*x{k}"));
            }
        }
    }
    labels
}

/// Model vector `f(x)` of a coded point.
pub fn model_vector(point: &[f64], order: ModelOrder) -> Vec<f64> {
    let d = point.len();
    let mut row = Vec::with_capacity(order.columns(d));
    row.push(1.0);
    row.extend_from_slice(point);
    if order == ModelOrder::Second {
        row.extend(point.iter().map(|x| x * x));
        for j in 0..d {
            for k in (j + 1)..d {
                row.push(point[j] * point[k]);
            }
        }
    }
    row
}

/// The model matrix of a design together with its column labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrixView {
    pub entries: Matrix,
    pub order: ModelOrder,
    pub labels: Vec<String>,
}

impl DesignMatrixView {
    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn m(&self) -> usize {
        self.entries.cols()
    }

    pub fn d(&self) -> usize {
        match self.order {
            ModelOrder::First => self.m() - 1,
            // m = 1 + d + d(d+1)/2  =>  d = (-3 + sqrt(1 + 8m)) / 2
            ModelOrder::Second => ((((8 * self.m() + 1) as f64).sqrt() - 3.0) / 2.0).round() as usize,
        }
    }
}

pub fn design_matrix(design: &MultivariateDesign, order: ModelOrder) -> DesignMatrixView {
    let d = design.d();
    let rows: Vec<Vec<f64>> = (0..design.n()).map(|i| model_vector(design.point(i), order)).collect();
    let entries = if rows.is_empty() {
        Matrix::zeros(0, order.columns(d))
    } else {
        Matrix::from_rows(&rows).expect("model rows share one length")
    };
    DesignMatrixView { entries, order, labels: column_labels(d, order) }
}

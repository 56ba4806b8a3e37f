use serde::{Deserialize, Serialize};

use super::MultivariateDesign;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::rng::{standard_normal, StreamKey};
use crate::surface::{design_matrix, model_vector, ModelOrder};

/// Off-diagonal magnitude below which XᵀX counts as diagonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    /// Verdict on XᵀX with the pure-quadratic columns centered (order 2).
    /// Equal to the raw verdict for order 1.
    pub orthogonal: bool,
    pub max_off_diagonal: f64,
    pub raw_orthogonal: bool,
    pub raw_max_off_diagonal: f64,
}

fn max_off_diagonal(m: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

pub fn is_orthogonal(design: &MultivariateDesign, order: ModelOrder) -> OrthogonalityReport {
    let x = design_matrix(design, order).entries;
    let raw = max_off_diagonal(&x.gram());
    let centered = match order {
        ModelOrder::First => raw,
        ModelOrder::Second => {
            let d = design.d();
            let mut xc = x.clone();
            let n = x.rows() as f64;
            for col in (1 + d)..(1 + 2 * d) {
                let mean = x.column(col).iter().sum::<f64>() / n;
                for i in 0..x.rows() {
                    xc[(i, col)] -= mean;
                }
            }
            max_off_diagonal(&xc.gram())
        }
    };
    OrthogonalityReport {
        orthogonal: centered < ORTHOGONALITY_TOL,
        max_off_diagonal: centered,
        raw_orthogonal: raw < ORTHOGONALITY_TOL,
        raw_max_off_diagonal: raw,
    }
}

/// Relative spread `(max v - min v) / mean v` of the unscaled prediction
/// variance `v(x) = f(x)ᵀ(XᵀX)⁻¹f(x)` over `n_probe` uniform points on the
/// sphere of the given radius.
pub fn rotatability_spread(
    design: &MultivariateDesign,
    order: ModelOrder,
    radius: f64,
    n_probe: usize,
    seed: u64,
) -> Result<f64> {
    if n_probe == 0 {
        return Err(Error::InvalidArgument("need at least one probe point".into()));
    }
    let xtx = design_matrix(design, order).entries.gram();
    let inv = Cholesky::new(&xtx).map_err(|_| Error::Singular)?.inverse();
    let d = design.d();
    let mut rng = StreamKey::new(seed).rng();
    let mut values = Vec::with_capacity(n_probe);
    for _ in 0..n_probe {
        let mut u: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v *= radius / norm);
        let f = model_vector(&u, order);
        let w = inv.mul_vec(&f)?;
        values.push(f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>());
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok((max - min) / mean)
}

/// `det(XᵀX)^(1/m)`; zero when XᵀX is singular.
pub fn d_criterion(design: &MultivariateDesign, order: ModelOrder) -> f64 {
    let x = design_matrix(design, order).entries;
    let m = x.cols();
    match Cholesky::new(&x.gram()) {
        Ok(ch) => (ch.log_det() / m as f64).exp(),
        Err(_) => 0.0,
    }
}

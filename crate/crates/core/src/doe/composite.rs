use serde::{Deserialize, Serialize};

use super::factorial::{fractional_rows, two_level_rows};
use super::{DesignFamily, DesignMetadata, MultivariateDesign, PointRole};
use crate::error::{Error, Result};

/// Center points of a CCD unless stated otherwise (gives 280 runs at d = 8).
pub const DEFAULT_CCD_CENTER_POINTS: usize = 8;
pub const DEFAULT_BBD_CENTER_POINTS: usize = 3;

/// How the axial distance α of a CCD is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPolicy {
    /// α = F^(1/4).
    Rotatable,
    /// α = sqrt((sqrt(F (F + 2d + n0)) - F) / 2).
    Orthogonal,
    Explicit(f64),
}

impl std::str::FromStr for AlphaPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rotatable" => Ok(AlphaPolicy::Rotatable),
            "orthogonal" => Ok(AlphaPolicy::Orthogonal),
            other => other
                .parse::<f64>()
                .map(AlphaPolicy::Explicit)
                .map_err(|_| Error::Parse(format!("alpha must be rotatable, orthogonal or a number, got `{s}`"))),
        }
    }
}

/// Two-level part of a CCD.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorialPart {
    Full,
    Fractional { p: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcdSpec {
    pub d: usize,
    pub factorial: FactorialPart,
    pub n0: usize,
    pub alpha: AlphaPolicy,
}

impl CcdSpec {
    /// Full factorial part.
    pub fn new(d: usize, n0: usize, alpha: AlphaPolicy) -> Self {
        Self { d, factorial: FactorialPart::Full, n0, alpha }
    }

    pub fn fractional(d: usize, p: usize, n0: usize, alpha: AlphaPolicy) -> Self {
        Self { d, factorial: FactorialPart::Fractional { p }, n0, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=20).contains(&self.d) {
            return Err(Error::InvalidArgument(format!("ccd needs 1 <= d <= 20, got {}", self.d)));
        }
        if let AlphaPolicy::Explicit(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!("explicit alpha must be > 0, got {a}")));
            }
        }
        Ok(())
    }

    /// Size of the two-level part.
    pub fn factorial_runs(&self) -> usize {
        match self.factorial {
            FactorialPart::Full => 1 << self.d,
            FactorialPart::Fractional { p } => 1 << (self.d - p),
        }
    }

    pub fn runs(&self) -> usize {
        self.factorial_runs() + 2 * self.d + self.n0
    }

    pub fn alpha_value(&self) -> f64 {
        let f = self.factorial_runs() as f64;
        match self.alpha {
            AlphaPolicy::Rotatable => f.powf(0.25),
            AlphaPolicy::Orthogonal => {
                let n = self.runs() as f64;
                (((f * n).sqrt() - f) / 2.0).sqrt()
            }
            AlphaPolicy::Explicit(a) => a,
        }
    }
}

/// Central composite design: factorial points, then ±α on each axis, then
/// `n0` center points.
pub fn ccd(spec: &CcdSpec) -> Result<MultivariateDesign> {
    spec.validate()?;
    let d = spec.d;
    let (mut rows, p, generators) = match spec.factorial {
        FactorialPart::Full => (two_level_rows(d), 0, Vec::new()),
        FactorialPart::Fractional { p } => {
            let (rows, generators) = fractional_rows(d, p)?;
            (rows, p, generators)
        }
    };
    let f = rows.len();
    let alpha = spec.alpha_value();
    let mut roles = vec![PointRole::Factorial; f];
    for j in 0..d {
        for sign in [-1.0, 1.0] {
            let mut row = vec![0.0; d];
            row[j] = sign * alpha;
            rows.push(row);
            roles.push(PointRole::Axial);
        }
    }
    for _ in 0..spec.n0 {
        rows.push(vec![0.0; d]);
        roles.push(PointRole::Center);
    }
    MultivariateDesign::build(
        rows,
        roles,
        DesignFamily::Ccd,
        DesignMetadata::Ccd { factorial_runs: f, fraction_p: p, generators, n0: spec.n0, alpha, policy: spec.alpha },
    )
}

/// Factor groups (1-based) varied together in each Box–Behnken block.
fn bbd_blocks(d: usize) -> Result<Vec<Vec<usize>>> {
    let all_pairs = |d: usize| {
        let mut v = Vec::new();
        for a in 1..=d {
            for b in (a + 1)..=d {
                v.push(vec![a, b]);
            }
        }
        v
    };
    Ok(match d {
        2 => return Err(Error::BoxBehnkenTwoFactors),
        3..=5 => all_pairs(d),
        6 => vec![vec![1, 2, 4], vec![2, 3, 5], vec![3, 4, 6], vec![1, 4, 5], vec![2, 5, 6], vec![1, 3, 6]],
        7 => vec![
            vec![4, 5, 6],
            vec![1, 6, 7],
            vec![2, 5, 7],
            vec![1, 2, 4],
            vec![3, 4, 7],
            vec![1, 3, 5],
            vec![2, 3, 6],
        ],
        other => {
            return Err(Error::InvalidArgument(format!("Box-Behnken designs are tabulated for 3 <= d <= 7, got {other}")))
        }
    })
}

/// Box–Behnken design: within each block the listed factors run through a
/// two-level factorial while the others stay at 0; then `n0` centers.
pub fn bbd(d: usize, n0: usize) -> Result<MultivariateDesign> {
    let blocks = bbd_blocks(d)?;
    let mut rows = Vec::new();
    let mut roles = Vec::new();
    for block in &blocks {
        for levels in two_level_rows(block.len()) {
            let mut row = vec![0.0; d];
            for (factor, level) in block.iter().zip(levels) {
                row[factor - 1] = level;
            }
            rows.push(row);
            roles.push(PointRole::Factorial);
        }
    }
    for _ in 0..n0 {
        rows.push(vec![0.0; d]);
        roles.push(PointRole::Center);
    }
    MultivariateDesign::build(rows, roles, DesignFamily::Bbd, DesignMetadata::Bbd { n0 })
}

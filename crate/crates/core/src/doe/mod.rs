//! Coded multivariate designs, their diagnostics, and lifting into the
//! function space.
//!
//! Rows are ordered deterministically: factorial points in lexicographic
//! order (first factor varies slowest, `-1` before `+1`), then axial points
//! axis by axis (`-α` before `+α`), then center points.

mod composite;
mod factorial;
mod lift;
mod properties;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{fmt_f64, parse_f64};
use crate::linalg::Matrix;

pub use composite::{bbd, ccd, AlphaPolicy, CcdSpec, FactorialPart, DEFAULT_BBD_CENTER_POINTS, DEFAULT_CCD_CENTER_POINTS};
pub use factorial::{
    fractional_factorial, full_factorial_2, full_factorial_3, generator_words, supported_fractions,
};
pub use lift::{lift_design, lift_design_scaled, positivity_filter, LiftedDesign};
pub use properties::{d_criterion, is_orthogonal, rotatability_spread, OrthogonalityReport, ORTHOGONALITY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignFamily {
    Factorial2,
    Fractional2,
    Factorial3,
    Ccd,
    Bbd,
    /// Read from a file or built from raw points.
    Custom,
}

impl DesignFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignFamily::Factorial2 => "factorial2",
            DesignFamily::Fractional2 => "fractional2",
            DesignFamily::Factorial3 => "factorial3",
            DesignFamily::Ccd => "ccd",
            DesignFamily::Bbd => "bbd",
            DesignFamily::Custom => "custom",
        }
    }
}

impl fmt::Display for DesignFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "factorial2" => Ok(DesignFamily::Factorial2),
            "fractional2" | "fractional" => Ok(DesignFamily::Fractional2),
            "factorial3" => Ok(DesignFamily::Factorial3),
            "ccd" => Ok(DesignFamily::Ccd),
            "bbd" => Ok(DesignFamily::Bbd),
            "custom" => Ok(DesignFamily::Custom),
            other => Err(Error::Parse(format!("unknown design family `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointRole {
    Factorial,
    Axial,
    Center,
}

impl PointRole {
    pub fn as_str(self) -> &'static str {
        match self {
            PointRole::Factorial => "factorial",
            PointRole::Axial => "axial",
            PointRole::Center => "center",
        }
    }
}

impl FromStr for PointRole {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "factorial" => Ok(PointRole::Factorial),
            "axial" => Ok(PointRole::Axial),
            "center" => Ok(PointRole::Center),
            other => Err(Error::Parse(format!("unknown point role `{other}`"))),
        }
    }
}

/// Family-specific construction record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DesignMetadata {
    None,
    Fractional {
        p: usize,
        generators: Vec<String>,
    },
    Ccd {
        factorial_runs: usize,
        fraction_p: usize,
        generators: Vec<String>,
        n0: usize,
        alpha: f64,
        policy: AlphaPolicy,
    },
    Bbd {
        n0: usize,
    },
}

/// n×d matrix of coded coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MultivariateDesign {
    points: Matrix,
    roles: Vec<PointRole>,
    family: DesignFamily,
    metadata: DesignMetadata,
}

impl MultivariateDesign {
    pub(crate) fn build(
        rows: Vec<Vec<f64>>,
        roles: Vec<PointRole>,
        family: DesignFamily,
        metadata: DesignMetadata,
    ) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidArgument("a design needs n >= 1 and d >= 1".into()));
        }
        debug_assert_eq!(rows.len(), roles.len());
        let points = Matrix::from_rows(&rows)?;
        Ok(Self { points, roles, family, metadata })
    }

    /// Free-form design; every row is tagged factorial.
    pub fn from_points(rows: Vec<Vec<f64>>) -> Result<Self> {
        let roles = vec![PointRole::Factorial; rows.len()];
        Self::build(rows, roles, DesignFamily::Custom, DesignMetadata::None)
    }

    pub fn n(&self) -> usize {
        self.points.rows()
    }

    pub fn d(&self) -> usize {
        self.points.cols()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn roles(&self) -> &[PointRole] {
        &self.roles
    }

    pub fn family(&self) -> DesignFamily {
        self.family
    }

    pub fn metadata(&self) -> &DesignMetadata {
        &self.metadata
    }

    /// Keeps the listed rows, preserving family and metadata.
    pub fn select_rows(&self, keep: &[usize]) -> Result<Self> {
        let rows = keep.iter().map(|&i| self.point(i).to_vec()).collect();
        let roles = keep.iter().map(|&i| self.roles[i]).collect();
        Self::build(rows, roles, self.family, self.metadata.clone())
    }

    /// Every coordinate multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        let points = Matrix::from_fn(self.n(), self.d(), |i, j| scale * self.points[(i, j)]);
        Self { points, ..self.clone() }
    }

    /// CSV with columns `x1..xd,role`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.d()).map(|j| format!("x{j}")).collect();
        header.push("role".into());
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.point(i).iter().map(|v| fmt_f64(*v)).collect();
            rec.push(self.roles[i].as_str().into());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `x1..xd,role` CSV. The result has the `Custom` family.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let has_role = headers.iter().last() == Some("role");
        let d = headers.len() - usize::from(has_role);
        let mut rows = Vec::new();
        let mut roles = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            rows.push(rec.iter().take(d).map(parse_f64).collect::<Result<Vec<_>>>()?);
            roles.push(if has_role { rec[d].parse()? } else { PointRole::Factorial });
        }
        Self::build(rows, roles, DesignFamily::Custom, DesignMetadata::None)
    }
}

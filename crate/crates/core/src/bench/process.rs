use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Grid, GridFunction};
use crate::rng::{standard_normal, StreamKey};

pub const DEFAULT_PROCESS_TERMS: usize = 50;

/// Truncated Karhunen–Loève process `X = Σ_{j≤J} √λ_j ξ_j ψ_j` with
/// `λ_j = e^{-j}` and `ψ_j(t) = √2 sin(π(j - 1/2)t)`.
#[derive(Clone, Debug)]
pub struct ProcessModel {
    grid: Arc<Grid>,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<GridFunction>,
}

impl ProcessModel {
    pub fn new(terms: usize, grid: &Arc<Grid>) -> Result<Self> {
        if terms == 0 {
            return Err(Error::InvalidArgument("the process needs at least one term".into()));
        }
        let (a, w) = (grid.start(), grid.end() - grid.start());
        let eigenvalues = (1..=terms).map(|j| (-(j as f64)).exp()).collect();
        let eigenfunctions = (1..=terms)
            .map(|j| {
                let freq = PI * (j as f64 - 0.5);
                GridFunction::from_fn(grid, |t| SQRT_2 / w.sqrt() * (freq * (t - a) / w).sin())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: grid.clone(), eigenvalues, eigenfunctions })
    }

    pub fn terms(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[GridFunction] {
        &self.eigenfunctions
    }

    /// One draw from the stream of `key`.
    pub fn draw(&self, key: StreamKey) -> GridFunction {
        let mut rng = key.rng();
        let mut values = vec![0.0; self.grid.len()];
        for (lambda, psi) in self.eigenvalues.iter().zip(&self.eigenfunctions) {
            let c = lambda.sqrt() * standard_normal(&mut rng);
            for (v, p) in values.iter_mut().zip(psi.values()) {
                *v += c * p;
            }
        }
        GridFunction::new(self.grid.clone(), values).expect("values match the grid")
    }
}

/// `n` independent draws; draw `i` uses the substream `key.derive(i)`.
pub fn simulate_process(model: &ProcessModel, n: usize, key: StreamKey) -> Result<Vec<GridFunction>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    Ok((0..n as u64).map(|i| model.draw(key.derive(i))).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    F1,
    F2,
}

impl Target {
    /// f1(t) = cos 4πt + 3 sin πt + 10, f2(t) = cos(8.5πt) ln(4t² + 10).
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Target::F1 => (4.0 * PI * t).cos() + 3.0 * (PI * t).sin() + 10.0,
            Target::F2 => (8.5 * PI * t).cos() * (4.0 * t * t + 10.0).ln(),
        }
    }

    pub fn realize(self, grid: &Arc<Grid>) -> Result<TargetFunction> {
        Ok(TargetFunction { id: self, values: GridFunction::from_fn(grid, |t| self.eval(t))? })
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::F1 => "f1",
            Target::F2 => "f2",
        })
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Target::F1),
            "f2" => Ok(Target::F2),
            other => Err(Error::Parse(format!("unknown target `{other}` (expected f1 or f2)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TargetFunction {
    pub id: Target,
    pub values: GridFunction,
}

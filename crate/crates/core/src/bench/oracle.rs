use serde::{Deserialize, Serialize};

use crate::basis::{build_basis, Basis, BasisKind, TrainingSample};
use crate::error::{Error, Result};
use crate::hilbert::{Grid, GridFunction, DEFAULT_GRID_LEN};
use crate::optimizer::Oracle;
use crate::rng::{labels, standard_normal, StreamKey};

use super::process::{simulate_process, ProcessModel, Target, DEFAULT_PROCESS_TERMS};

/// `m(x) = ‖x − f‖² + ε` with `ε ~ N(0, noise_variance)`.
///
/// Evaluation `k` (1-based) draws its noise from `key.derive(k)`, so the
/// sequence of responses only depends on the key and the call order.
#[derive(Clone, Debug)]
pub struct QuadraticOracle {
    target: GridFunction,
    sd: f64,
    key: StreamKey,
    count: usize,
}

impl QuadraticOracle {
    pub fn new(target: GridFunction, noise_variance: f64, key: StreamKey) -> Result<Self> {
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {noise_variance}")));
        }
        Ok(Self { target, sd: noise_variance.sqrt(), key, count: 0 })
    }

    pub fn target(&self) -> &GridFunction {
        &self.target
    }

    pub fn noise_variance(&self) -> f64 {
        self.sd * self.sd
    }

    fn distance(&self, x: &GridFunction) -> Result<f64> {
        Ok(x.sub(&self.target)?.norm().powi(2))
    }
}

impl Oracle for QuadraticOracle {
    fn evaluate(&mut self, x: &GridFunction) -> Result<f64> {
        let m = self.distance(x)?;
        self.count += 1;
        if self.sd == 0.0 {
            return Ok(m);
        }
        let mut rng = self.key.derive(self.count as u64).rng();
        Ok(m + self.sd * standard_normal(&mut rng))
    }

    fn evaluations(&self) -> usize {
        self.count
    }

    fn noiseless(&self, x: &GridFunction) -> Option<f64> {
        self.distance(x).ok()
    }
}

/// The training curve with the smallest response; the first one on ties.
pub fn starting_point(x: &[GridFunction], y: &[f64]) -> Result<(usize, GridFunction)> {
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    let mut best = 0;
    for (i, v) in y.iter().enumerate() {
        if *v < y[best] {
            best = i;
        }
    }
    Ok((best, x[best].clone()))
}

/// Relative improvement `(before − after) / before`.
pub fn improvement(before: f64, after: f64) -> Result<f64> {
    if before == 0.0 {
        return Err(Error::InvalidArgument("improvement is undefined for a zero starting response".into()));
    }
    Ok((before - after) / before)
}

/// One simulated setting: target, training-sample size, noise and grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub target: Target,
    pub n: usize,
    pub noise_variance: f64,
    pub grid_len: usize,
    pub process_terms: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            target: Target::F1,
            n: 500,
            noise_variance: 0.01,
            grid_len: DEFAULT_GRID_LEN,
            process_terms: DEFAULT_PROCESS_TERMS,
        }
    }
}

/// Everything a run needs before the first experiment.
#[derive(Clone, Debug)]
pub struct ScenarioDraw {
    pub target: GridFunction,
    pub sample: TrainingSample,
    pub start_index: usize,
    pub start: GridFunction,
}

impl ScenarioDraw {
    /// An oracle on this draw's target with its own noise stream.
    pub fn oracle(&self, noise_variance: f64, key: StreamKey) -> Result<QuadraticOracle> {
        QuadraticOracle::new(self.target.clone(), noise_variance, key)
    }
}

/// A single benchmark optimization, ready to run.
#[derive(Clone, Debug)]
pub struct BenchmarkRun {
    pub draw: ScenarioDraw,
    pub basis: Basis,
    pub oracle: QuadraticOracle,
}

impl Scenario {
    /// Draws the training sample of `seed`, builds the basis on it and keys
    /// the oracle noise off the same seed.
    pub fn prepare(&self, kind: BasisKind, d: usize, seed: u64) -> Result<BenchmarkRun> {
        let key = StreamKey::new(seed);
        let draw = self.draw(key)?;
        let basis = build_basis(kind, d, &draw.sample)?;
        let oracle = draw.oracle(self.noise_variance, key.derive(labels::ORACLE))?;
        Ok(BenchmarkRun { draw, basis, oracle })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("training sample size must be >= 2, got {}", self.n)));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise variance must be >= 0, got {}", self.noise_variance)));
        }
        Ok(())
    }

    /// Training sample `Y_i = m(X_i) + ε_i` and the starting point, drawn
    /// from the substreams of `key`.
    pub fn draw(&self, key: StreamKey) -> Result<ScenarioDraw> {
        self.validate()?;
        let grid = Grid::unit(self.grid_len)?;
        let target = self.target.realize(&grid)?.values;
        let model = ProcessModel::new(self.process_terms, &grid)?;
        let x = simulate_process(&model, self.n, key.derive(labels::TRAINING_X))?;
        let mut noise = QuadraticOracle::new(target.clone(), self.noise_variance, key.derive(labels::TRAINING_NOISE))?;
        let y = noise.evaluate_batch(&x)?;
        let (start_index, start) = starting_point(&x, &y)?;
        let sample = TrainingSample::new(x, Some(y))?;
        Ok(ScenarioDraw { target, sample, start_index, start })
    }
}

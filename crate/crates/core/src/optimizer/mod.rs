//! The response-surface loop: gradient estimation on a lifted first-order
//! design, steepest-descent line search, a stationarity decision, and a final
//! second-order step with canonical analysis.

mod config;
mod steps;
mod trace;

pub use config::RsmConfig;
pub use steps::{
    descent_step, estimate_gradient, line_search, measure_center, run_rsm, second_order_step, stationarity_test,
};
pub use trace::{
    CenterRecord, Decision, DescentRecord, LinePoint, LineSearchResult, RsmError, RsmTrace, SecondOrderRecord,
    StopReason,
};

use crate::error::Result;
use crate::hilbert::GridFunction;

/// A noisy black-box response on the function space.
pub trait Oracle {
    fn evaluate(&mut self, x: &GridFunction) -> Result<f64>;

    /// Evaluates a batch in order. Implementations backed by external
    /// experiments override this to submit the whole batch at once.
    fn evaluate_batch(&mut self, xs: &[GridFunction]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.evaluate(x)).collect()
    }

    /// Evaluations performed so far.
    fn evaluations(&self) -> usize;

    /// The response without noise, when the oracle knows it. Does not count
    /// as an evaluation.
    fn noiseless(&self, _x: &GridFunction) -> Option<f64> {
        None
    }
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn evaluate(&mut self, x: &GridFunction) -> Result<f64> {
        (**self).evaluate(x)
    }

    fn evaluate_batch(&mut self, xs: &[GridFunction]) -> Result<Vec<f64>> {
        (**self).evaluate_batch(xs)
    }

    fn evaluations(&self) -> usize {
        (**self).evaluations()
    }

    fn noiseless(&self, x: &GridFunction) -> Option<f64> {
        (**self).noiseless(x)
    }
}

/// Wraps a closure as a noise-free oracle.
pub struct FnOracle<F> {
    f: F,
    count: usize,
}

impl<F: FnMut(&GridFunction) -> f64> FnOracle<F> {
    pub fn new(f: F) -> Self {
        Self { f, count: 0 }
    }
}

impl<F: FnMut(&GridFunction) -> f64> Oracle for FnOracle<F> {
    fn evaluate(&mut self, x: &GridFunction) -> Result<f64> {
        self.count += 1;
        Ok((self.f)(x))
    }

    fn evaluations(&self) -> usize {
        self.count
    }
}

//! Discretized L² numerics: uniform grids, sampled functions, trapezoid inner
//! products and finite products of such spaces.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of grid points (2^10 + 1).
pub const DEFAULT_GRID_LEN: usize = 1025;

/// Uniform grid on `[start, end]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    start: f64,
    end: f64,
    len: usize,
}

impl Grid {
    pub fn new(start: f64, end: f64, len: usize) -> Result<Arc<Self>> {
        if len < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {len}")));
        }
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::InvalidGrid(format!("bad domain [{start}, {end}]")));
        }
        Ok(Arc::new(Self { start, end, len }))
    }

    /// `len` points on `[0, 1]`.
    pub fn unit(len: usize) -> Result<Arc<Self>> {
        Self::new(0.0, 1.0, len)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.len - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.len {
            self.end
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }

    /// Trapezoid quadrature of the pointwise product of two sample vectors.
    pub fn quadrature(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len);
        debug_assert_eq!(b.len(), self.len);
        let n = self.len - 1;
        let interior: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        self.step() * (interior - 0.5 * (a[0] * b[0] + a[n] * b[n]))
    }
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A function sampled on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), actual: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check(other)?;
        Ok(self.grid.quadrature(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        self.grid.quadrature(&self.values, &self.values).max(0.0).sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| alpha * v).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        axpy(-1.0, other, self)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        axpy(1.0, other, self)
    }

    /// In-place `self += alpha * f`.
    pub fn add_scaled(&mut self, alpha: f64, f: &Self) -> Result<()> {
        self.check(f)?;
        for (s, v) in self.values.iter_mut().zip(&f.values) {
            *s += alpha * v;
        }
        Ok(())
    }

    /// `base + Σ_j coefficients[j] * functions[j]`.
    pub fn combination(base: &Self, coefficients: &[f64], functions: &[Self]) -> Result<Self> {
        if coefficients.len() != functions.len() {
            return Err(Error::DimensionMismatch {
                expected: functions.len(),
                actual: coefficients.len(),
            });
        }
        let mut out = base.clone();
        for (c, f) in coefficients.iter().zip(functions) {
            if *c != 0.0 {
                out.add_scaled(*c, f)?;
            }
        }
        Ok(out)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes the `t,value` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "value"])?;
        for (t, v) in self.grid.points().zip(&self.values) {
            w.write_record([fmt_f64(t), fmt_f64(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!("expected 2 columns, got {}", rec.len())));
            }
            ts.push(parse_f64(&rec[0])?);
            vs.push(parse_f64(&rec[1])?);
        }
        let grid = grid_from_points(&ts)?;
        Self::new(grid, vs)
    }
}

/// Rebuilds a uniform grid from its sample locations.
pub fn grid_from_points(ts: &[f64]) -> Result<Arc<Grid>> {
    if ts.len() < 2 {
        return Err(Error::InvalidGrid(format!("need at least 2 points, got {}", ts.len())));
    }
    let grid = Grid::new(ts[0], ts[ts.len() - 1], ts.len())?;
    let tol = 1e-9 * grid.step();
    for (i, t) in ts.iter().enumerate() {
        if (t - grid.point(i)).abs() > tol.max(1e-15) {
            return Err(Error::InvalidGrid(format!("non-uniform grid at index {i}")));
        }
    }
    Ok(grid)
}

/// Shortest representation that round-trips exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.inner(g)
}

pub fn norm(f: &GridFunction) -> f64 {
    f.norm()
}

/// Pointwise `alpha * f + g`.
pub fn axpy(alpha: f64, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    let mut out = g.clone();
    out.add_scaled(alpha, f)?;
    Ok(out)
}

/// Element of a finite product of L² spaces, with the sum of the component
/// inner products as scalar product.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    components: Vec<GridFunction>,
}

impl ProductPoint {
    pub fn new(components: Vec<GridFunction>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("a product point needs at least one component".into()));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[GridFunction] {
        &self.components
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.components.len() != other.components.len() {
            return Err(Error::ComponentMismatch {
                left: self.components.len(),
                right: other.components.len(),
            });
        }
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check(other)?;
        self.components.iter().zip(&other.components).map(|(a, b)| a.inner(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn axpy(alpha: f64, f: &Self, g: &Self) -> Result<Self> {
        f.check(g)?;
        let components = f
            .components
            .iter()
            .zip(&g.components)
            .map(|(a, b)| axpy(alpha, a, b))
            .collect::<Result<_>>()?;
        Ok(Self { components })
    }

    /// True when every sample of every component is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.components.iter().all(|c| c.values().iter().all(|v| *v > 0.0))
    }
}

pub fn product_inner_product(a: &ProductPoint, b: &ProductPoint) -> Result<f64> {
    a.inner(b)
}

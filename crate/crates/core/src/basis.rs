//! Optimization directions φ_1..φ_d: the fixed Fourier family and the
//! data-driven PCA and PLS bases.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{fmt_f64, grid_from_points, parse_f64, Grid, GridFunction};
use crate::linalg::{symmetric_eigen, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Fourier,
    Pca,
    Pls,
}

impl BasisKind {
    pub const ALL: [BasisKind; 3] = [BasisKind::Fourier, BasisKind::Pca, BasisKind::Pls];

    pub fn as_str(self) -> &'static str {
        match self {
            BasisKind::Fourier => "fourier",
            BasisKind::Pca => "pca",
            BasisKind::Pls => "pls",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BasisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fourier" => Ok(BasisKind::Fourier),
            "pca" => Ok(BasisKind::Pca),
            "pls" => Ok(BasisKind::Pls),
            other => Err(Error::Parse(format!("unknown basis kind `{other}`"))),
        }
    }
}

/// d directions on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    kind: BasisKind,
    functions: Vec<GridFunction>,
    /// Full empirical covariance spectrum (descending) for PCA bases.
    spectrum: Option<Vec<f64>>,
}

impl Basis {
    pub fn new(kind: BasisKind, functions: Vec<GridFunction>) -> Result<Self> {
        let first = functions
            .first()
            .ok_or_else(|| Error::InvalidArgument("a basis needs at least one function".into()))?;
        if functions.iter().any(|f| !f.same_grid(first)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { kind, functions, spectrum: None })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> &[GridFunction] {
        &self.functions
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.functions[0].grid()
    }

    pub fn spectrum(&self) -> Option<&[f64]> {
        self.spectrum.as_deref()
    }

    /// The first `d` directions. PCA and PLS bases are nested, so this equals
    /// the basis computed directly with dimension `d`.
    pub fn truncated(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.d() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate a {}-dimensional basis to {d}",
                self.d()
            )));
        }
        Ok(Self {
            kind: self.kind,
            functions: self.functions[..d].to_vec(),
            spectrum: self.spectrum.clone(),
        })
    }

    /// `⟨φ_i, φ_j⟩`.
    pub fn gram(&self) -> Matrix {
        let d = self.d();
        let mut g = Matrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = self.grid().quadrature(self.functions[i].values(), self.functions[j].values());
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Coordinates `⟨f, φ_j⟩`.
    pub fn coordinates(&self, f: &GridFunction) -> Result<Vec<f64>> {
        self.functions.iter().map(|phi| f.inner(phi)).collect()
    }

    /// `Σ_j c_j φ_j`.
    pub fn combine(&self, coefficients: &[f64]) -> Result<GridFunction> {
        GridFunction::combination(&GridFunction::zeros(self.grid()), coefficients, &self.functions)
    }

    /// CSV with a `# kind=... d=...` line, then `t,phi1,...,phid`.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "# kind={} d={}", self.kind, self.d())?;
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.d()).map(|j| format!("phi{j}")));
        w.write_record(&header)?;
        for (i, t) in self.grid().points().enumerate() {
            let mut rec = vec![fmt_f64(t)];
            rec.extend(self.functions.iter().map(|f| fmt_f64(f.values()[i])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let mut meta = String::new();
        reader.read_line(&mut meta)?;
        let kind = meta
            .trim_start_matches('#')
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("kind="))
            .ok_or_else(|| Error::Parse("missing `# kind=` metadata line".into()))?
            .parse()?;
        let (grid, columns) = read_wide_csv(reader)?;
        let functions =
            columns.into_iter().map(|v| GridFunction::new(grid.clone(), v)).collect::<Result<_>>()?;
        Self::new(kind, functions)
    }
}

/// Reads `t,c1,...,ck` and returns the grid and the k value columns.
pub(crate) fn read_wide_csv<R: Read>(reader: R) -> Result<(Arc<Grid>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(reader);
    let width = r.headers()?.len();
    if width < 2 {
        return Err(Error::Parse("expected a `t` column and at least one value column".into()));
    }
    let mut ts = Vec::new();
    let mut columns = vec![Vec::new(); width - 1];
    for rec in r.records() {
        let rec = rec?;
        ts.push(parse_f64(&rec[0])?);
        for (c, field) in columns.iter_mut().zip(rec.iter().skip(1)) {
            c.push(parse_f64(field)?);
        }
    }
    Ok((grid_from_points(&ts)?, columns))
}

pub(crate) fn write_wide_csv<W: Write>(writer: W, prefix: &str, functions: &[GridFunction]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend((1..=functions.len()).map(|j| format!("{prefix}{j}")));
    w.write_record(&header)?;
    if let Some(first) = functions.first() {
        for (i, t) in first.grid().points().enumerate() {
            let mut rec = vec![fmt_f64(t)];
            rec.extend(functions.iter().map(|f| fmt_f64(f.values()[i])));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Training pairs `(X_i, Y_i)`; responses may be absent for PCA-only use.
#[derive(Clone, Debug)]
pub struct TrainingSample {
    x: Vec<GridFunction>,
    y: Option<Vec<f64>>,
}

impl TrainingSample {
    pub fn new(x: Vec<GridFunction>, y: Option<Vec<f64>>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a training sample needs n >= 2, got {}",
                x.len()
            )));
        }
        if x.iter().any(|f| !f.same_grid(&x[0])) {
            return Err(Error::GridMismatch);
        }
        if let Some(y) = &y {
            if y.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
            }
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[GridFunction] {
        &self.x
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.x[0].grid()
    }

    /// Curves as a wide CSV (`t,X1,...,Xn`).
    pub fn write_x_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_wide_csv(writer, "X", &self.x)
    }

    /// Responses as `id,y` with 1-based ids matching the curve columns.
    pub fn write_y_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "y"])?;
        if let Some(y) = &self.y {
            for (i, v) in y.iter().enumerate() {
                w.write_record([(i + 1).to_string(), fmt_f64(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read, S: Read>(curves: R, responses: Option<S>) -> Result<Self> {
        let (grid, columns) = read_wide_csv(curves)?;
        let x = columns.into_iter().map(|v| GridFunction::new(grid.clone(), v)).collect::<Result<Vec<_>>>()?;
        let y = match responses {
            None => None,
            Some(src) => {
                let mut r = csv::Reader::from_reader(src);
                let mut y = vec![None; x.len()];
                for rec in r.records() {
                    let rec = rec?;
                    let id: usize = rec[0].trim().parse().map_err(|_| Error::Parse(format!("bad id `{}`", &rec[0])))?;
                    if id == 0 || id > y.len() {
                        return Err(Error::Parse(format!("response id {id} out of range")));
                    }
                    y[id - 1] = Some(parse_f64(&rec[1])?);
                }
                let y = y
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| v.ok_or_else(|| Error::Parse(format!("missing response for id {}", i + 1))))
                    .collect::<Result<Vec<_>>>()?;
                Some(y)
            }
        };
        Self::new(x, y)
    }
}

/// φ_1 ≡ 1, φ_{2j} = √2 cos(2πjt), φ_{2j+1} = √2 sin(2πjt), truncated at d.
/// The formulas are in terms of the position within the domain, mapped to [0, 1].
pub fn fourier_basis(d: usize, grid: &Arc<Grid>) -> Result<Basis> {
    if d < 1 {
        return Err(Error::InvalidArgument("fourier basis needs d >= 1".into()));
    }
    let (a, b) = (grid.start(), grid.end());
    let width = b - a;
    let scale = 1.0 / width.sqrt();
    let functions = (1..=d)
        .map(|k| {
            let freq = (k / 2) as f64 * 2.0 * std::f64::consts::PI;
            GridFunction::from_fn(grid, |t| {
                let u = (t - a) / width;
                scale
                    * match k {
                        1 => 1.0,
                        _ if k % 2 == 0 => std::f64::consts::SQRT_2 * (freq * u).cos(),
                        _ => std::f64::consts::SQRT_2 * (freq * u).sin(),
                    }
            })
        })
        .collect::<Result<_>>()?;
    Basis::new(BasisKind::Fourier, functions)
}

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-12;
/// Loadings below this magnitude are skipped when fixing signs.
const SIGN_TOL: f64 = 1e-9;

fn centered(sample: &TrainingSample) -> Vec<Vec<f64>> {
    let n = sample.n() as f64;
    let g = sample.grid().len();
    let mut mean = vec![0.0; g];
    for f in sample.x() {
        for (m, v) in mean.iter_mut().zip(f.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    sample
        .x()
        .iter()
        .map(|f| f.values().iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect()
}

fn fix_sign(values: &mut [f64]) {
    if let Some(first) = values.iter().find(|v| v.abs() > SIGN_TOL) {
        if *first < 0.0 {
            values.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Top-d eigenfunctions of the empirical covariance operator, computed from
/// the n×n Gram matrix of the centered curves.
pub fn pca_basis(sample: &TrainingSample, d: usize) -> Result<Basis> {
    let n = sample.n();
    let grid = sample.grid().clone();
    if d == 0 || d > n || d > grid.len() {
        return Err(Error::InvalidArgument(format!(
            "pca needs 1 <= d <= min(n, G) = {}, got {d}",
            n.min(grid.len())
        )));
    }
    let xc = centered(sample);
    let mut gram = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = grid.quadrature(&xc[i], &xc[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eig = symmetric_eigen(&gram)?;
    // descending order
    let order: Vec<usize> = (0..n).rev().collect();
    let top = eig.values[n - 1].max(0.0);
    let rank = order.iter().filter(|&&k| eig.values[k] > RANK_TOL * top && top > 0.0).count();
    if d > rank {
        return Err(Error::RankExceeded { requested: d, rank });
    }
    let mut functions = Vec::with_capacity(d);
    for &k in order.iter().take(d) {
        let mu = eig.values[k];
        let v = eig.vectors.column(k);
        let mut phi = vec![0.0; grid.len()];
        for (vi, xi) in v.iter().zip(&xc) {
            for (p, x) in phi.iter_mut().zip(xi) {
                *p += vi * x;
            }
        }
        let s = 1.0 / mu.sqrt();
        phi.iter_mut().for_each(|p| *p *= s);
        fix_sign(&mut phi);
        functions.push(GridFunction::new(grid.clone(), phi)?);
    }
    let spectrum = order.iter().map(|&k| eig.values[k].max(0.0) / n as f64).collect();
    let mut basis = Basis::new(BasisKind::Pca, functions)?;
    basis.spectrum = Some(spectrum);
    Ok(basis)
}

/// Iterative PLS directions with deflation of both curves and responses.
/// Directions are used as produced (unit norm; not re-orthogonalized).
pub fn pls_basis(sample: &TrainingSample, d: usize) -> Result<Basis> {
    let y = sample
        .y()
        .ok_or_else(|| Error::InvalidArgument("pls needs responses".into()))?;
    let n = sample.n();
    if d == 0 || d > n - 1 {
        return Err(Error::InvalidArgument(format!("pls needs 1 <= d <= n - 1 = {}, got {d}", n - 1)));
    }
    let grid = sample.grid().clone();
    let mut xr = centered(sample);
    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut yr: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let mut functions = Vec::with_capacity(d);

    for j in 1..=d {
        let mut w = vec![0.0; grid.len()];
        for (yi, xi) in yr.iter().zip(&xr) {
            for (wv, x) in w.iter_mut().zip(xi) {
                *wv += yi * x;
            }
        }
        let norm = grid.quadrature(&w, &w).max(0.0).sqrt();
        if !(norm >= 1e-12) {
            return Err(Error::DegenerateCovariance(j));
        }
        w.iter_mut().for_each(|v| *v /= norm);

        let scores: Vec<f64> = xr.iter().map(|xi| grid.quadrature(xi, &w)).collect();
        let ss: f64 = scores.iter().map(|s| s * s).sum();
        if !(ss > 0.0) {
            return Err(Error::DegenerateCovariance(j));
        }
        let beta = yr.iter().zip(&scores).map(|(a, s)| a * s).sum::<f64>() / ss;
        let mut delta = vec![0.0; grid.len()];
        for (s, xi) in scores.iter().zip(&xr) {
            for (dv, x) in delta.iter_mut().zip(xi) {
                *dv += s * x;
            }
        }
        delta.iter_mut().for_each(|v| *v /= ss);
        for ((xi, yi), s) in xr.iter_mut().zip(yr.iter_mut()).zip(&scores) {
            for (x, dv) in xi.iter_mut().zip(&delta) {
                *x -= s * dv;
            }
            *yi -= beta * s;
        }
        fix_sign(&mut w);
        functions.push(GridFunction::new(grid.clone(), w)?);
    }
    Basis::new(BasisKind::Pls, functions)
}

/// Builds the requested basis kind. Fourier ignores the sample.
pub fn build_basis(kind: BasisKind, d: usize, sample: &TrainingSample) -> Result<Basis> {
    match kind {
        BasisKind::Fourier => fourier_basis(d, sample.grid()),
        BasisKind::Pca => pca_basis(sample, d),
        BasisKind::Pls => pls_basis(sample, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::DEFAULT_GRID_LEN;
    use crate::rng::{standard_normal, StreamKey};

    fn unit() -> Arc<Grid> {
        Grid::unit(DEFAULT_GRID_LEN).unwrap()
    }

    fn assert_identity(m: &Matrix, tol: f64) {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((m[(i, j)] - e).abs() < tol, "gram[{i},{j}] = {}", m[(i, j)]);
            }
        }
    }

    /// Random smooth curves with a response depending on them.
    fn random_sample(n: usize, seed: u64) -> TrainingSample {
        let grid = Grid::unit(129).unwrap();
        let mut rng = StreamKey::new(seed).rng();
        let x: Vec<GridFunction> = (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..8).map(|_| standard_normal(&mut rng)).collect();
                GridFunction::from_fn(&grid, |t| {
                    c.iter().enumerate().map(|(k, ck)| ck * ((k + 1) as f64 * 1.7 * t).sin() / (k + 1) as f64).sum()
                })
                .unwrap()
            })
            .collect();
        let g = GridFunction::from_fn(&grid, |t| t.cos()).unwrap();
        let y = x
            .iter()
            .map(|f| f.inner(&g).unwrap() + f.norm().powi(2) + 0.1 * standard_normal(&mut rng))
            .collect();
        TrainingSample::new(x, Some(y)).unwrap()
    }

    #[test]
    fn fourier_first_functions() {
        let g = unit();
        let b1 = fourier_basis(1, &g).unwrap();
        assert!(b1.functions()[0].values().iter().all(|v| *v == 1.0));
        let b2 = fourier_basis(2, &g).unwrap();
        assert_eq!(b2.functions()[1].values()[0], std::f64::consts::SQRT_2);
        assert_identity(&fourier_basis(5, &g).unwrap().gram(), 1e-6);
        assert!(fourier_basis(0, &g).is_err());
    }

    #[test]
    fn pca_of_rank_one_sample() {
        let grid = unit();
        let g = GridFunction::from_fn(&grid, |t| 1.0 + t * t).unwrap();
        let x: Vec<_> = [1.0, -2.0, 0.5, 3.0].iter().map(|c| g.scaled(*c)).collect();
        let sample = TrainingSample::new(x, None).unwrap();
        let b = pca_basis(&sample, 1).unwrap();
        let phi = &b.functions()[0];
        let target = g.scaled(1.0 / g.norm());
        let diff = phi.sub(&target).unwrap().norm().min(phi.add(&target).unwrap().norm());
        assert!(diff < 1e-10);
        assert!(matches!(pca_basis(&sample, 2), Err(Error::RankExceeded { requested: 2, rank: 1 })));
    }

    #[test]
    fn pca_reconstruction_matches_spectrum_tail() {
        let sample = random_sample(40, 3);
        let xc: Vec<GridFunction> = {
            let rows = centered(&sample);
            rows.into_iter().map(|v| GridFunction::new(sample.grid().clone(), v).unwrap()).collect()
        };
        let full = pca_basis(&sample, 6).unwrap();
        assert_identity(&full.gram(), 1e-8);
        let spectrum = full.spectrum().unwrap().to_vec();
        assert!(spectrum.windows(2).all(|w| w[0] >= w[1]));
        assert!(spectrum.iter().all(|v| *v >= 0.0));
        let mut previous = f64::INFINITY;
        for d in 1..=6 {
            let b = full.truncated(d).unwrap();
            let err: f64 = xc
                .iter()
                .map(|x| {
                    let c = b.coordinates(x).unwrap();
                    x.sub(&b.combine(&c).unwrap()).unwrap().norm().powi(2)
                })
                .sum::<f64>()
                / xc.len() as f64;
            let tail: f64 = spectrum[d..].iter().sum();
            assert!((err - tail).abs() <= 1e-8 * tail.max(1e-12), "d={d}: {err} vs {tail}");
            assert!(err <= previous + 1e-15);
            previous = err;
        }
    }

    #[test]
    fn pca_is_deterministic() {
        let s = random_sample(20, 11);
        let a = pca_basis(&s, 3).unwrap();
        let b = pca_basis(&s, 3).unwrap();
        for (f, g) in a.functions().iter().zip(b.functions()) {
            assert!(f.values().iter().zip(g.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn pls_two_point_example() {
        let grid = unit();
        let g = GridFunction::from_fn(&grid, |t| 2.0 + t).unwrap();
        let sample = TrainingSample::new(vec![g.clone(), g.scaled(-1.0)], Some(vec![1.0, -1.0])).unwrap();
        let b = pls_basis(&sample, 1).unwrap();
        let expected = g.scaled(1.0 / g.norm());
        assert!(b.functions()[0].sub(&expected).unwrap().norm() < 1e-14);
    }

    #[test]
    fn pls_constant_response_is_degenerate() {
        let mut s = random_sample(10, 5);
        s.y = Some(vec![0.1; 10]);
        assert!(matches!(pls_basis(&s, 1), Err(Error::DegenerateCovariance(1))));
    }

    #[test]
    fn pls_unit_norm_and_score_annihilation() {
        let sample = random_sample(60, 9);
        let d = 5;
        let b = pls_basis(&sample, d).unwrap();
        for phi in b.functions() {
            assert!((phi.norm() - 1.0).abs() < 1e-10);
        }
        // replay the deflation and check ⟨X_i^{[j]}, φ_j⟩ = 0
        let grid = sample.grid().clone();
        let mut xr = centered(&sample);
        for phi in b.functions() {
            let scores: Vec<f64> = xr.iter().map(|x| grid.quadrature(x, phi.values())).collect();
            let ss: f64 = scores.iter().map(|s| s * s).sum();
            let mut delta = vec![0.0; grid.len()];
            for (s, x) in scores.iter().zip(&xr) {
                for (dv, xv) in delta.iter_mut().zip(x) {
                    *dv += s * xv / ss;
                }
            }
            for (x, s) in xr.iter_mut().zip(&scores) {
                for (xv, dv) in x.iter_mut().zip(&delta) {
                    *xv -= s * dv;
                }
            }
            for x in &xr {
                assert!(grid.quadrature(x, phi.values()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pls_directions_come_out_orthonormal() {
        // the deflation makes the weight vectors mutually orthogonal
        let b = pls_basis(&random_sample(60, 21), 5).unwrap();
        assert_identity(&b.gram(), 1e-8);
    }

    #[test]
    fn pls_requires_responses_and_room() {
        let mut s = random_sample(5, 1);
        assert!(pls_basis(&s, 5).is_err());
        s.y = None;
        assert!(pls_basis(&s, 1).is_err());
    }

    #[test]
    fn basis_csv_round_trip() {
        let b = fourier_basis(3, &Grid::unit(17).unwrap()).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"# kind=fourier d=3\nt,phi1,phi2,phi3\n"));
        assert_eq!(Basis::read_csv(buf.as_slice()).unwrap(), b);
    }

    #[test]
    fn sample_csv_round_trip() {
        let s = random_sample(4, 2);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        s.write_x_csv(&mut xs).unwrap();
        s.write_y_csv(&mut ys).unwrap();
        let back = TrainingSample::read_csv(xs.as_slice(), Some(ys.as_slice())).unwrap();
        assert_eq!(back.x(), s.x());
        assert_eq!(back.y(), s.y());
    }
}

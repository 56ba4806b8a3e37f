use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_basis, Basis, BasisKind};
use crate::doe::FactorialPart;
use crate::error::{Error, Result};
use crate::hilbert::fmt_f64;
use crate::optimizer::{descent_step, measure_center, Oracle, RsmConfig, RsmTrace};
use crate::rng::{labels, StreamKey};

use super::oracle::{improvement, Scenario, ScenarioDraw};

/// Monte-Carlo settings. `step` carries the line-search, replicate and
/// scale settings of the descent step; its `d`, `basis` and `first_order`
/// are overridden per cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    #[serde(flatten)]
    pub scenario: Scenario,
    pub replications: usize,
    pub bases: Vec<BasisKind>,
    /// Dimension of the basis study.
    pub d: usize,
    /// Full-factorial sweep of the dimension study.
    pub dimensions: Vec<usize>,
    /// `(d, p)` pairs of the fractional sweep; used instead of `dimensions`
    /// when nonempty.
    pub fractional: Vec<(usize, usize)>,
    pub seed: u64,
    pub step: RsmConfig,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            replications: 50,
            bases: BasisKind::ALL.to_vec(),
            d: 8,
            dimensions: vec![4, 6, 8],
            fractional: Vec::new(),
            seed: 1,
            step: RsmConfig::default(),
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be >= 1".into()));
        }
        if self.bases.is_empty() {
            return Err(Error::InvalidArgument("no basis to compare".into()));
        }
        for (d, p) in &self.fractional {
            if *p >= *d {
                return Err(Error::InvalidArgument(format!("fractional pair ({d}, {p}) needs p < d")));
            }
        }
        Ok(())
    }

    /// The cells of the dimension study as `(d, p)`.
    pub fn dimension_cells(&self) -> Vec<(usize, usize)> {
        if self.fractional.is_empty() {
            self.dimensions.iter().map(|&d| (d, 0)).collect()
        } else {
            self.fractional.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub replication: usize,
    pub basis: BasisKind,
    pub d: usize,
    pub p: usize,
    /// Noise-free response at the shared starting point.
    pub before: f64,
    /// Noise-free response after the descent step.
    pub after: Option<f64>,
    pub improvement: Option<f64>,
    pub evaluations: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub basis: BasisKind,
    pub d: usize,
    pub p: usize,
    pub count: usize,
    pub failures: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["replication", "basis", "d", "p", "before", "after", "improvement", "evaluations"])?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.replication.to_string(),
                r.basis.to_string(),
                r.d.to_string(),
                r.p.to_string(),
                fmt_f64(r.before),
                opt(r.after),
                opt(r.improvement),
                r.evaluations.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    /// Improvement quartiles per `(basis, d, p)` cell, in first-seen order.
    pub fn summary(&self) -> Vec<CellSummary> {
        let mut order = Vec::new();
        let mut cells: BTreeMap<(BasisKind, usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
        for r in &self.rows {
            let key = (r.basis, r.d, r.p);
            let cell = cells.entry(key).or_insert_with(|| {
                order.push(key);
                (Vec::new(), 0)
            });
            match r.improvement {
                Some(v) => cell.0.push(v),
                None => cell.1 += 1,
            }
        }
        order
            .into_iter()
            .map(|key| {
                let (mut values, failures) = cells.remove(&key).unwrap_or_default();
                values.sort_by(f64::total_cmp);
                CellSummary {
                    basis: key.0,
                    d: key.1,
                    p: key.2,
                    count: values.len(),
                    failures,
                    median: quantile(&values, 0.5),
                    q1: quantile(&values, 0.25),
                    q3: quantile(&values, 0.75),
                }
            })
            .collect()
    }

    pub fn median(&self, basis: BasisKind, d: usize, p: usize) -> Option<f64> {
        self.summary().into_iter().find(|c| c.basis == basis && c.d == d && c.p == p)?.median
    }

    pub fn summary_json(&self) -> Result<serde_json::Value> {
        let failures: Vec<_> = self
            .rows
            .iter()
            .filter_map(|r| {
                r.error.as_ref().map(|e| {
                    serde_json::json!({
                        "replication": r.replication, "basis": r.basis, "d": r.d, "p": r.p, "error": e
                    })
                })
            })
            .collect();
        Ok(serde_json::json!({
            "rows": self.rows.len(),
            "cells": serde_json::to_value(self.summary())?,
            "failures": failures,
        }))
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

fn basis_label(kind: BasisKind) -> u64 {
    match kind {
        BasisKind::Fourier => 1,
        BasisKind::Pca => 2,
        BasisKind::Pls => 3,
    }
}

/// One descent step from the shared start, scored by true responses.
fn descent_arm(
    config: &McConfig,
    draw: &ScenarioDraw,
    basis: &Basis,
    first_order: FactorialPart,
    key: StreamKey,
) -> Result<(f64, usize)> {
    let step = RsmConfig {
        d: basis.d(),
        basis: basis.kind(),
        first_order,
        max_steps: 1,
        stationarity_threshold: 1.0,
        ..config.step.clone()
    };
    step.validate()?;
    let mut oracle = draw.oracle(config.scenario.noise_variance, key)?;
    let mut trace = RsmTrace::default();
    measure_center(&mut trace, draw.start.clone(), step.center_replicates(), &mut oracle)?;
    descent_step(&mut trace, &step, basis, &mut oracle)?;
    let after = match trace.center_responses.get(1) {
        Some(c) => c.true_value.ok_or_else(|| Error::Oracle("oracle has no noise-free value".into()))?,
        None => oracle.noiseless(&draw.start).ok_or_else(|| Error::Oracle("oracle has no noise-free value".into()))?,
    };
    Ok((after, oracle.evaluations()))
}

fn replication_rows(
    config: &McConfig,
    replication: usize,
    cells: &[(usize, usize)],
) -> Vec<StudyRow> {
    let rep_key = StreamKey::new(config.seed).derive_all(&[labels::REPLICATION, replication as u64]);
    let failed = |basis: BasisKind, d: usize, p: usize, before: f64, e: &dyn std::fmt::Display| StudyRow {
        replication,
        basis,
        d,
        p,
        before,
        after: None,
        improvement: None,
        evaluations: 0,
        error: Some(e.to_string()),
    };
    let draw = match config.scenario.draw(rep_key) {
        Ok(d) => d,
        Err(e) => {
            return config
                .bases
                .iter()
                .flat_map(|&b| cells.iter().map(move |&(d, p)| (b, d, p)))
                .map(|(b, d, p)| failed(b, d, p, f64::NAN, &e))
                .collect();
        }
    };
    let before = draw.target.sub(&draw.start).map(|r| r.norm().powi(2)).unwrap_or(f64::NAN);
    let d_max = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let mut rows = Vec::new();
    for &kind in &config.bases {
        // Every basis family here is nested, so one build at the largest d
        // serves all cells.
        let full = build_basis(kind, d_max, &draw.sample);
        for &(d, p) in cells {
            let first_order = if p == 0 { FactorialPart::Full } else { FactorialPart::Fractional { p } };
            let key = rep_key.derive_all(&[labels::ORACLE, basis_label(kind), d as u64, p as u64]);
            let full = match &full {
                Ok(b) => b,
                Err(e) => {
                    rows.push(failed(kind, d, p, before, e));
                    continue;
                }
            };
            let result = full
                .truncated(d)
                .and_then(|b| descent_arm(config, &draw, &b, first_order, key))
                .and_then(|(after, evals)| Ok((after, improvement(before, after)?, evals)));
            rows.push(match result {
                Ok((after, imp, evaluations)) => StudyRow {
                    replication,
                    basis: kind,
                    d,
                    p,
                    before,
                    after: Some(after),
                    improvement: Some(imp),
                    evaluations,
                    error: None,
                },
                Err(e) => failed(kind, d, p, before, &e),
            });
        }
    }
    rows
}

fn run_study(config: &McConfig, cells: &[(usize, usize)]) -> Result<StudyTable> {
    config.validate()?;
    if cells.is_empty() || cells.iter().any(|c| c.0 == 0) {
        return Err(Error::InvalidArgument("the study needs at least one cell with d >= 1".into()));
    }
    let per_rep: Vec<Vec<StudyRow>> =
        (0..config.replications).into_par_iter().map(|r| replication_rows(config, r, cells)).collect();
    Ok(StudyTable { rows: per_rep.into_iter().flatten().collect() })
}

/// First descent step of every basis from a shared start, per replication.
pub fn mc_basis_study(config: &McConfig) -> Result<StudyTable> {
    run_study(config, &[(config.d, 0)])
}

/// First descent step across dimensions: full factorials over
/// `dimensions`, or fractional `(d, p)` pairs when given.
pub fn mc_dimension_study(config: &McConfig) -> Result<StudyTable> {
    run_study(config, &config.dimension_cells())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Target;

    fn small(replications: usize) -> McConfig {
        McConfig {
            scenario: Scenario { n: 60, grid_len: 129, ..Scenario::default() },
            replications,
            d: 4,
            ..McConfig::default()
        }
    }

    #[test]
    fn quantiles() {
        assert_eq!(quantile(&[], 0.5), None);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.5));
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25), Some(2.0));
        assert_eq!(quantile(&[7.0], 0.75), Some(7.0));
    }

    #[test]
    fn single_replication_gives_one_row_per_basis() {
        let t = mc_basis_study(&McConfig { bases: vec![BasisKind::Pls], ..small(1) }).unwrap();
        assert_eq!(t.rows.len(), 1);
        let r = &t.rows[0];
        assert!(r.error.is_none(), "{:?}", r.error);
        assert_eq!(r.evaluations, 5 + 16 + 30 + 5);
        assert!(r.improvement.unwrap() > 0.5);
        let csv = String::from_utf8(t.to_csv_bytes().unwrap()).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "replication,basis,d,p,before,after,improvement,evaluations");
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn bases_share_the_start() {
        let t = mc_basis_study(&small(2)).unwrap();
        assert_eq!(t.rows.len(), 6);
        for rep in t.rows.chunks(3) {
            assert!(rep.iter().all(|r| r.before == rep[0].before && r.replication == rep[0].replication));
        }
        assert_ne!(t.rows[0].before, t.rows[3].before);
    }

    #[test]
    fn same_seed_same_bytes() {
        let c = small(3);
        let a = mc_basis_study(&c).unwrap().to_csv_bytes().unwrap();
        let b = mc_basis_study(&c).unwrap().to_csv_bytes().unwrap();
        assert_eq!(a, b);
        let other = mc_basis_study(&McConfig { seed: 2, ..c }).unwrap().to_csv_bytes().unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn noise_free_runs_are_deterministic() {
        let mut c = small(1);
        c.scenario.noise_variance = 0.0;
        c.step.noisy = false;
        c.bases = vec![BasisKind::Fourier];
        let a = mc_basis_study(&c).unwrap();
        let b = mc_basis_study(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows[0].evaluations, 1 + 16 + 15 + 1);
    }

    #[test]
    fn fractional_cells_use_sixteen_points() {
        let c = McConfig {
            bases: vec![BasisKind::Fourier, BasisKind::Pls],
            fractional: vec![(5, 1), (6, 2), (7, 3)],
            ..small(1)
        };
        let t = mc_dimension_study(&c).unwrap();
        assert_eq!(t.rows.len(), 6);
        for r in &t.rows {
            assert_eq!(r.d - r.p, 4);
            assert_eq!(r.evaluations, 5 + 16 + 30 + 5, "{r:?}");
        }
        let s = t.summary();
        assert_eq!(s.len(), 6);
        assert_eq!((s[0].basis, s[0].d, s[0].p), (BasisKind::Fourier, 5, 1));
    }

    #[test]
    fn failures_are_recorded() {
        // PCA cannot produce more directions than the sample has curves.
        let mut c = small(1);
        c.scenario.n = 4;
        c.bases = vec![BasisKind::Pca, BasisKind::Fourier];
        let t = mc_basis_study(&c).unwrap();
        assert!(t.rows[0].error.is_some() && t.rows[0].improvement.is_none());
        assert!(t.rows[1].error.is_none());
        let s = t.summary_json().unwrap();
        assert_eq!(s["failures"].as_array().unwrap().len(), 1);
        assert_eq!(t.summary()[0].failures, 1);
        let csv = String::from_utf8(t.to_csv_bytes().unwrap()).unwrap();
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,0"));
    }

    #[test]
    fn invalid_configs() {
        assert!(mc_basis_study(&McConfig { replications: 0, ..small(1) }).is_err());
        let mut c = small(1);
        c.scenario.noise_variance = -0.1;
        assert!(mc_basis_study(&c).is_err());
        assert!(mc_dimension_study(&McConfig { fractional: vec![(4, 4)], ..small(1) }).is_err());
    }

    #[test]
    fn config_from_json_with_defaults() {
        let c: McConfig =
            serde_json::from_str(r#"{"target": "f2", "replications": 5, "fractional": [[5, 1], [6, 2]]}"#).unwrap();
        assert_eq!(c.scenario.target, Target::F2);
        assert_eq!(c.scenario.n, 500);
        assert_eq!(c.dimension_cells(), vec![(5, 1), (6, 2)]);
        assert_eq!(c.step.lambdas.len(), 10);
    }
}

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{fmt_f64, GridFunction};
use crate::surface::{FTest, FitResult, QuadraticForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Continue,
    Stationary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stationary,
    MaxSteps,
    Aborted(String),
}

/// Replicated measurement at a center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterRecord {
    /// Index into [`RsmTrace::centers`].
    pub index: usize,
    pub mean: f64,
    /// Standard error of the mean; 0 for a single evaluation.
    pub std_error: f64,
    pub replicates: Vec<f64>,
    /// Noise-free response, when the oracle exposes it.
    pub true_value: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub lambda: f64,
    pub mean: f64,
    /// 1 for the coarse grid, 2 for the refinement.
    pub pass: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearchResult {
    pub lambda_star: f64,
    pub table: Vec<LinePoint>,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentRecord {
    pub step: usize,
    pub design_points: usize,
    pub responses: Vec<f64>,
    pub fit: FitResult,
    pub test: FTest,
    /// Euclidean norm of the coded gradient estimate.
    pub gradient_norm: f64,
    pub decision: Decision,
    pub line_search: Option<LineSearchResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderRecord {
    pub design_points: usize,
    pub scale: f64,
    pub responses: Vec<f64>,
    pub fit: FitResult,
    pub form: QuadraticForm,
    /// First-order test on the factorial part of the CCD: a stationarity
    /// check at no extra cost.
    pub factorial_test: Option<FTest>,
    /// `scale * (-Ĥ⁻¹β̂)`: the move in basis coordinates, if applied.
    pub physical_offset: Option<Vec<f64>>,
    /// Why the center was left in place.
    pub flag: Option<String>,
}

/// Everything one run did, in order.
#[derive(Clone, Debug, Default)]
pub struct RsmTrace {
    pub centers: Vec<GridFunction>,
    pub center_responses: Vec<CenterRecord>,
    pub steps: Vec<DescentRecord>,
    pub second_order: Option<SecondOrderRecord>,
    pub evaluations: usize,
    pub stop_reason: Option<StopReason>,
}

impl RsmTrace {
    pub fn current_center(&self) -> Option<&GridFunction> {
        self.centers.last()
    }

    pub fn last_response(&self) -> Option<&CenterRecord> {
        self.center_responses.last()
    }

    /// Response record of center `index`.
    pub fn response_of(&self, index: usize) -> Option<&CenterRecord> {
        self.center_responses.iter().find(|r| r.index == index)
    }

    /// Budget split as (first-order designs, line searches, center replicates, CCD).
    pub fn budget(&self) -> (usize, usize, usize, usize) {
        let designs = self.steps.iter().map(|s| s.design_points).sum();
        let lines = self.steps.iter().filter_map(|s| s.line_search.as_ref()).map(|l| l.evaluations).sum();
        let centers = self.center_responses.iter().map(|c| c.replicates.len()).sum();
        let ccd = self.second_order.as_ref().map_or(0, |s| s.design_points);
        (designs, lines, centers, ccd)
    }

    /// JSON summary; `center_files[i]` names the file holding center `i`.
    pub fn to_json(&self, center_files: &[String]) -> Result<serde_json::Value> {
        #[derive(Serialize)]
        struct View<'a> {
            centers: &'a [String],
            center_responses: &'a [CenterRecord],
            steps: &'a [DescentRecord],
            second_order: &'a Option<SecondOrderRecord>,
            evaluations: usize,
            budget: Budget,
            stop_reason: &'a Option<StopReason>,
        }
        #[derive(Serialize)]
        struct Budget {
            first_order_designs: usize,
            line_search: usize,
            center_replicates: usize,
            ccd: usize,
        }
        if center_files.len() != self.centers.len() {
            return Err(Error::DimensionMismatch { expected: self.centers.len(), actual: center_files.len() });
        }
        let (first_order_designs, line_search, center_replicates, ccd) = self.budget();
        Ok(serde_json::to_value(View {
            centers: center_files,
            center_responses: &self.center_responses,
            steps: &self.steps,
            second_order: &self.second_order,
            evaluations: self.evaluations,
            budget: Budget { first_order_designs, line_search, center_replicates, ccd },
            stop_reason: &self.stop_reason,
        })?)
    }

    /// Flat `step,phase,label,response` CSV. `label` is the 1-based design
    /// id, the λ value, or the replicate number.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["step", "phase", "label", "response"])?;
        let center_rows = |w: &mut csv::Writer<W>, step: usize, index: usize| -> Result<()> {
            if let Some(c) = self.response_of(index) {
                for (k, y) in c.replicates.iter().enumerate() {
                    w.write_record([step.to_string(), "center".into(), (k + 1).to_string(), fmt_f64(*y)])?;
                }
            }
            Ok(())
        };
        center_rows(&mut w, 0, 0)?;
        for s in &self.steps {
            for (i, y) in s.responses.iter().enumerate() {
                w.write_record([s.step.to_string(), "gradient".into(), (i + 1).to_string(), fmt_f64(*y)])?;
            }
            if let Some(ls) = &s.line_search {
                for p in &ls.table {
                    w.write_record([s.step.to_string(), "line_search".into(), fmt_f64(p.lambda), fmt_f64(p.mean)])?;
                }
                center_rows(&mut w, s.step + 1, s.step + 1)?;
            }
        }
        if let Some(so) = &self.second_order {
            let step = self.steps.iter().filter(|s| s.line_search.is_some()).count();
            for (i, y) in so.responses.iter().enumerate() {
                w.write_record([step.to_string(), "ccd".into(), (i + 1).to_string(), fmt_f64(*y)])?;
            }
            if so.physical_offset.is_some() {
                center_rows(&mut w, step + 1, step + 1)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// A run that stopped on an error, with everything done before it.
#[derive(Debug)]
pub struct RsmError {
    pub partial: Box<RsmTrace>,
    pub source: Error,
}

impl fmt::Display for RsmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "optimization aborted after {} evaluations: {}", self.partial.evaluations, self.source)
    }
}

impl std::error::Error for RsmError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

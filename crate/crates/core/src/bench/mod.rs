//! Simulated test bed: a Karhunen–Loève process for training curves, two
//! target functions, the noisy squared-distance oracle, and Monte-Carlo
//! studies of the first descent step.

mod oracle;
mod process;
mod study;

pub use oracle::{improvement, starting_point, BenchmarkRun, QuadraticOracle, Scenario, ScenarioDraw};
pub use process::{simulate_process, ProcessModel, Target, TargetFunction, DEFAULT_PROCESS_TERMS};
pub use study::{mc_basis_study, mc_dimension_study, quantile, CellSummary, McConfig, StudyRow, StudyTable};

//! Response surface methodology for inputs that are functions.
//!
//! Coded designs are lifted into function space through a basis (Fourier,
//! PCA or PLS), a polynomial surface is fitted to the responses, and the
//! center moves by steepest descent followed by a canonical analysis of a
//! second-order fit.

pub mod basis;
pub mod bench;
pub mod doe;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod optimizer;
pub mod rng;
pub mod surface;

pub use basis::{Basis, BasisKind, TrainingSample};
pub use doe::MultivariateDesign;
pub use error::{Error, Result};
pub use hilbert::{Grid, GridFunction};
pub use optimizer::{Oracle, RsmConfig, RsmTrace};
pub use surface::{FitResult, ModelOrder};

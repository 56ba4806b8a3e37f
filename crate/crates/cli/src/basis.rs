use std::fs::File;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use funrsm::basis::build_basis;
use funrsm::{BasisKind, TrainingSample};
use serde::Serialize;

use crate::output::OutputDir;

#[derive(Args, Debug, Serialize)]
pub struct BasisArgs {
    /// pca, pls or fourier.
    #[arg(long)]
    pub kind: BasisKind,
    #[arg(long)]
    pub d: usize,
    /// Wide CSV `t,X1,...,Xn`.
    #[arg(long)]
    pub curves: PathBuf,
    /// `id,y`; required for pls.
    #[arg(long)]
    pub responses: Option<PathBuf>,
    #[arg(long, default_value = "basis")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct BasisReport {
    kind: BasisKind,
    d: usize,
    n: usize,
    grid_len: usize,
    /// Empirical covariance eigenvalues (PCA only), descending.
    spectrum: Option<Vec<f64>>,
    max_gram_deviation: f64,
}

pub fn run(args: BasisArgs) -> Result<PathBuf> {
    let curves = File::open(&args.curves).with_context(|| format!("opening {}", args.curves.display()))?;
    let responses = match &args.responses {
        Some(p) => Some(File::open(p).with_context(|| format!("opening {}", p.display()))?),
        None => None,
    };
    let sample = TrainingSample::read_csv(curves, responses)?;
    let basis = build_basis(args.kind, args.d, &sample)?;
    let gram = basis.gram();
    let mut worst = 0.0_f64;
    for i in 0..basis.d() {
        for j in 0..basis.d() {
            worst = worst.max((gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let report = BasisReport {
        kind: basis.kind(),
        d: basis.d(),
        n: sample.n(),
        grid_len: sample.grid().len(),
        spectrum: basis.spectrum().map(|s| s.to_vec()),
        max_gram_deviation: worst,
    };
    let mut out = OutputDir::create(&args.out, "basis")?;
    let mut csv = Vec::new();
    basis.write_csv(&mut csv)?;
    out.write("basis.csv", &csv)?;
    out.write_json("basis_report.json", &report)?;
    out.finish(serde_json::to_value(&args)?, None, None, "ok")
}

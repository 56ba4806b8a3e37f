use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use funrsm::doe::{
    bbd, ccd, d_criterion, fractional_factorial, full_factorial_2, full_factorial_3, is_orthogonal,
    lift_design_scaled, rotatability_spread, AlphaPolicy, CcdSpec, DesignFamily, FactorialPart,
    DEFAULT_BBD_CENTER_POINTS, DEFAULT_CCD_CENTER_POINTS,
};
use funrsm::{Basis, GridFunction, ModelOrder, MultivariateDesign};
use serde::Serialize;

use crate::output::OutputDir;

#[derive(Args, Debug, Serialize)]
pub struct DesignArgs {
    /// factorial2, fractional, factorial3, ccd or bbd.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub d: usize,
    /// Fraction exponent of a fractional design, or of a CCD's factorial part.
    #[arg(long)]
    pub p: Option<usize>,
    /// Center points (CCD default 8, BBD default 3).
    #[arg(long)]
    pub n0: Option<usize>,
    /// rotatable, orthogonal or a number.
    #[arg(long, default_value = "rotatable")]
    pub alpha: String,
    /// Model order used for the property report (default: 2 for ccd, bbd and factorial3).
    #[arg(long)]
    pub order: Option<u8>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 200)]
    pub probes: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Basis CSV; with --center, also writes the lifted design.
    #[arg(long, requires = "center")]
    pub basis: Option<PathBuf>,
    #[arg(long, requires = "basis")]
    pub center: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value = "design")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PropertiesReport {
    family: String,
    d: usize,
    runs: usize,
    order: u8,
    orthogonal: bool,
    max_off_diagonal: f64,
    raw_orthogonal: bool,
    raw_max_off_diagonal: f64,
    rotatability_spread: Option<f64>,
    rotatable: Option<bool>,
    d_criterion: f64,
}

fn build(args: &DesignArgs) -> Result<MultivariateDesign> {
    let family: DesignFamily = args.family.parse()?;
    let design = match family {
        DesignFamily::Factorial2 => full_factorial_2(args.d)?,
        DesignFamily::Fractional2 => {
            let Some(p) = args.p else { bail!("--p is required for a fractional design") };
            fractional_factorial(args.d, p)?
        }
        DesignFamily::Factorial3 => full_factorial_3(args.d)?,
        DesignFamily::Ccd => {
            let factorial = match args.p {
                None | Some(0) => FactorialPart::Full,
                Some(p) => FactorialPart::Fractional { p },
            };
            let spec = CcdSpec {
                d: args.d,
                factorial,
                n0: args.n0.unwrap_or(DEFAULT_CCD_CENTER_POINTS),
                alpha: args.alpha.parse::<AlphaPolicy>()?,
            };
            ccd(&spec)?
        }
        DesignFamily::Bbd => bbd(args.d, args.n0.unwrap_or(DEFAULT_BBD_CENTER_POINTS))?,
        DesignFamily::Custom => bail!("custom designs are read from files, not generated"),
    };
    Ok(design)
}

pub fn run(args: DesignArgs) -> Result<PathBuf> {
    let design = build(&args)?;
    let order = match args.order {
        Some(o) => ModelOrder::from_degree(o)?,
        None => match design.family() {
            DesignFamily::Ccd | DesignFamily::Bbd | DesignFamily::Factorial3 => ModelOrder::Second,
            _ => ModelOrder::First,
        },
    };
    let ortho = is_orthogonal(&design, order);
    let spread = rotatability_spread(&design, order, args.radius, args.probes, args.seed).ok();
    let report = PropertiesReport {
        family: design.family().to_string(),
        d: design.d(),
        runs: design.n(),
        order: order.degree(),
        orthogonal: ortho.orthogonal,
        max_off_diagonal: ortho.max_off_diagonal,
        raw_orthogonal: ortho.raw_orthogonal,
        raw_max_off_diagonal: ortho.raw_max_off_diagonal,
        rotatability_spread: spread,
        rotatable: spread.map(|s| s < 1e-8),
        d_criterion: d_criterion(&design, order),
    };

    let mut out = OutputDir::create(&args.out, "design")?;
    let mut csv = Vec::new();
    design.write_csv(&mut csv)?;
    out.write("design.csv", &csv)?;
    out.write_json("properties.json", &report)?;

    if let (Some(basis_path), Some(center_path)) = (&args.basis, &args.center) {
        let basis = Basis::read_csv(File::open(basis_path).with_context(|| format!("opening {}", basis_path.display()))?)?;
        let center =
            GridFunction::read_csv(File::open(center_path).with_context(|| format!("opening {}", center_path.display()))?)?;
        let lifted = lift_design_scaled(&design, &basis, &center, args.scale)?;
        lifted.write_dir(&out.path().join("lifted"))?;
        out.record("lifted/index.csv".into());
        for i in 0..lifted.n() {
            out.record(format!("lifted/point_{:04}.csv", i + 1));
        }
    }
    let config = serde_json::to_value(&args)?;
    out.finish(config, Some(args.seed), None, "ok")
}

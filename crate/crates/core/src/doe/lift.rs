use std::fs;
use std::path::Path;

use super::MultivariateDesign;
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::hilbert::{fmt_f64, GridFunction};

/// A coded design materialized in the function space:
/// `points[i] = center + scale * Σ_j coded[i][j] φ_j`.
#[derive(Clone, Debug)]
pub struct LiftedDesign {
    pub center: GridFunction,
    pub basis: Basis,
    pub coded: MultivariateDesign,
    pub scale: f64,
    pub points: Vec<GridFunction>,
}

impl LiftedDesign {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Writes `point_0001.csv, ...` (each `t,value`) and `index.csv` with
    /// columns `id,file,x1..xd` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut index = csv::Writer::from_path(dir.join("index.csv"))?;
        let mut header = vec!["id".to_string(), "file".to_string()];
        header.extend((1..=self.coded.d()).map(|j| format!("x{j}")));
        index.write_record(&header)?;
        for (i, point) in self.points.iter().enumerate() {
            let file = format!("point_{:04}.csv", i + 1);
            point.write_csv(fs::File::create(dir.join(&file))?)?;
            let mut rec = vec![(i + 1).to_string(), file];
            rec.extend(self.coded.point(i).iter().map(|v| fmt_f64(*v)));
            index.write_record(&rec)?;
        }
        index.flush()?;
        Ok(())
    }
}

pub fn lift_design(coded: &MultivariateDesign, basis: &Basis, center: &GridFunction) -> Result<LiftedDesign> {
    lift_design_scaled(coded, basis, center, 1.0)
}

/// Lifts `scale * coded` without altering the stored coded design.
pub fn lift_design_scaled(
    coded: &MultivariateDesign,
    basis: &Basis,
    center: &GridFunction,
    scale: f64,
) -> Result<LiftedDesign> {
    if coded.d() != basis.d() {
        return Err(Error::DimensionMismatch { expected: basis.d(), actual: coded.d() });
    }
    if !basis.functions()[0].same_grid(center) {
        return Err(Error::GridMismatch);
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidArgument(format!("design scale must be > 0, got {scale}")));
    }
    let points = (0..coded.n())
        .map(|i| {
            let c: Vec<f64> = coded.point(i).iter().map(|x| scale * x).collect();
            GridFunction::combination(center, &c, basis.functions())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LiftedDesign { center: center.clone(), basis: basis.clone(), coded: coded.clone(), scale, points })
}

/// Keeps the points whose grid values are all strictly positive.
pub fn positivity_filter(lifted: &LiftedDesign) -> Result<LiftedDesign> {
    let keep: Vec<usize> = (0..lifted.n()).filter(|&i| lifted.points[i].min_value() > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::NoPositivePoints);
    }
    Ok(LiftedDesign {
        center: lifted.center.clone(),
        basis: lifted.basis.clone(),
        coded: lifted.coded.select_rows(&keep)?,
        scale: lifted.scale,
        points: keep.iter().map(|&i| lifted.points[i].clone()).collect(),
    })
}

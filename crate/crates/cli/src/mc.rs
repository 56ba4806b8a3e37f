use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use funrsm::bench::{mc_basis_study, mc_dimension_study, McConfig, StudyTable};
use serde::{Deserialize, Serialize};

use crate::output::OutputDir;

#[derive(Args, Debug)]
pub struct McArgs {
    /// TOML study configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "mc")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    #[default]
    Basis,
    Dimension,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyConfig {
    #[serde(default)]
    pub study: StudyKind,
    #[serde(flatten)]
    pub mc: McConfig,
}

pub fn load_config(path: &Path) -> Result<StudyConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_table(out: &mut OutputDir, stem: &str, table: &StudyTable) -> Result<usize> {
    out.write(&format!("{stem}.csv"), &table.to_csv_bytes()?)?;
    out.write_json(&format!("{stem}_summary.json"), &table.summary_json()?)?;
    Ok(table.rows.iter().map(|r| r.evaluations).sum())
}

pub fn run(args: McArgs) -> Result<PathBuf> {
    let mut config = load_config(&args.config)?;
    if let Some(r) = args.replications {
        config.mc.replications = r;
    }
    if let Some(s) = args.seed {
        config.mc.seed = s;
    }
    config.mc.validate()?;
    let mut out = OutputDir::create(&args.out, "mc")?;
    out.write("config.toml", toml::to_string(&config)?.as_bytes())?;
    let mut evaluations = 0;
    if matches!(config.study, StudyKind::Basis | StudyKind::Both) {
        evaluations += write_table(&mut out, "basis_study", &mc_basis_study(&config.mc)?)?;
    }
    if matches!(config.study, StudyKind::Dimension | StudyKind::Both) {
        evaluations += write_table(&mut out, "dimension_study", &mc_dimension_study(&config.mc)?)?;
    }
    out.finish(serde_json::to_value(&config)?, Some(config.mc.seed), Some(evaluations), "ok")
}

#[cfg(test)]
mod tests {
    use super::*;
    use funrsm::BasisKind;

    #[test]
    fn study_config_from_toml() {
        let c: StudyConfig = toml::from_str(
            r#"
            study = "dimension"
            target = "f1"
            replications = 4
            bases = ["fourier", "pls"]
            fractional = [[5, 1], [6, 2]]

            [step]
            replicates = 3
            "#,
        )
        .unwrap();
        assert_eq!(c.study, StudyKind::Dimension);
        assert_eq!(c.mc.replications, 4);
        assert_eq!(c.mc.bases, vec![BasisKind::Fourier, BasisKind::Pls]);
        assert_eq!(c.mc.dimension_cells(), vec![(5, 1), (6, 2)]);
        assert_eq!(c.mc.step.replicates, 3);
        assert_eq!(c.mc.scenario.n, 500);
        let back: StudyConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.mc, c.mc);
    }
}

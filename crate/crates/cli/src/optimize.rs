use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context, Result};
use clap::Args;
use funrsm::basis::build_basis;
use funrsm::bench::{starting_point, Scenario};
use funrsm::optimizer::{run_rsm, RsmError};
use funrsm::{Error, GridFunction, Oracle, RsmConfig, RsmTrace, TrainingSample};
use serde::{Deserialize, Serialize};

use crate::output::OutputDir;

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "optimize")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    #[serde(default)]
    pub rsm: RsmConfig,
    pub oracle: OracleConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum OracleConfig {
    /// Simulated training sample and noisy squared-distance oracle.
    Benchmark(Scenario),
    /// Training data from files; responses come through the exchange directory.
    External(ExternalConfig),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    /// Wide CSV `t,X1,...,Xn`.
    pub curves: PathBuf,
    /// `id,y`.
    pub responses: PathBuf,
    /// `t,value`; defaults to the training curve with the smallest response.
    #[serde(default)]
    pub start: Option<PathBuf>,
    /// Relative paths are taken inside the output directory.
    #[serde(default = "default_exchange")]
    pub exchange_dir: PathBuf,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_poll")]
    pub poll_ms: u64,
}

fn default_exchange() -> PathBuf {
    PathBuf::from("exchange")
}

fn default_timeout() -> f64 {
    3600.0
}

fn default_poll() -> u64 {
    50
}

/// Oracle answered by an outside process through files.
///
/// Batch `k` is written to `batch_{k:04}/` as `point_{i:04}.csv` files and a
/// `request.csv` (`id,file`) written last. The responder answers with
/// `response.csv` (`id,y`) in the same directory.
pub struct FileOracle {
    dir: PathBuf,
    timeout: Duration,
    poll: Duration,
    batches: usize,
    count: usize,
}

impl FileOracle {
    pub fn new(dir: PathBuf, timeout: Duration, poll: Duration) -> Self {
        Self { dir, timeout, poll, batches: 0, count: 0 }
    }

    fn write_request(&self, batch_dir: &Path, xs: &[GridFunction]) -> funrsm::Result<()> {
        fs::create_dir_all(batch_dir)?;
        let mut request = csv::Writer::from_writer(Vec::new());
        request.write_record(["id", "file"])?;
        for (i, x) in xs.iter().enumerate() {
            let file = format!("point_{:04}.csv", i + 1);
            let mut buf = Vec::new();
            x.write_csv(&mut buf)?;
            write_io_atomic(&batch_dir.join(&file), &buf)?;
            request.write_record([(i + 1).to_string(), file])?;
        }
        let bytes = request.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        write_io_atomic(&batch_dir.join("request.csv"), &bytes)?;
        Ok(())
    }

    fn read_response(path: &Path, n: usize) -> funrsm::Result<Vec<f64>> {
        let mut r = csv::Reader::from_path(path)?;
        let mut ys = vec![None; n];
        for rec in r.records() {
            let rec = rec?;
            let id: usize = rec
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad id in {}", path.display())))?;
            let y: f64 = rec
                .get(1)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad response for id {id} in {}", path.display())))?;
            if id == 0 || id > n {
                return Err(Error::Parse(format!("response id {id} out of range 1..={n}")));
            }
            if !y.is_finite() {
                return Err(Error::NonFinite(id - 1));
            }
            ys[id - 1] = Some(y);
        }
        ys.into_iter()
            .enumerate()
            .map(|(i, y)| y.ok_or_else(|| Error::Parse(format!("missing response for id {}", i + 1))))
            .collect()
    }
}

fn write_io_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

impl Oracle for FileOracle {
    fn evaluate(&mut self, x: &GridFunction) -> funrsm::Result<f64> {
        Ok(self.evaluate_batch(std::slice::from_ref(x))?[0])
    }

    fn evaluate_batch(&mut self, xs: &[GridFunction]) -> funrsm::Result<Vec<f64>> {
        self.batches += 1;
        let batch_dir = self.dir.join(format!("batch_{:04}", self.batches));
        self.write_request(&batch_dir, xs)?;
        let response = batch_dir.join("response.csv");
        let started = Instant::now();
        while !response.exists() {
            if started.elapsed() >= self.timeout {
                return Err(Error::Oracle(format!(
                    "no response in {} after {:.1} s",
                    batch_dir.display(),
                    self.timeout.as_secs_f64()
                )));
            }
            std::thread::sleep(self.poll);
        }
        let ys = Self::read_response(&response, xs.len())?;
        self.count += ys.len();
        Ok(ys)
    }

    fn evaluations(&self) -> usize {
        self.count
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn to_csv<F: FnOnce(&mut Vec<u8>) -> funrsm::Result<()>>(f: F) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn write_trace(out: &mut OutputDir, trace: &RsmTrace) -> Result<()> {
    let mut names = Vec::with_capacity(trace.centers.len());
    for (i, c) in trace.centers.iter().enumerate() {
        let name = format!("center_{i:03}.csv");
        out.write(&name, &to_csv(|b| c.write_csv(b))?)?;
        names.push(name);
    }
    out.write("steps.csv", &to_csv(|b| trace.write_csv(b))?)?;
    out.write_json("trace.json", &trace.to_json(&names)?)?;
    Ok(())
}

pub fn load_config(path: &Path) -> Result<OptimizeConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(args: OptimizeArgs) -> Result<PathBuf> {
    let mut config = load_config(&args.config)?;
    if let Some(m) = args.max_steps {
        config.rsm.max_steps = m;
    }
    if let Some(s) = args.seed {
        config.rsm.seed = s;
    }
    config.rsm.validate()?;
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = OutputDir::create(&args.out, "optimize")?;
    out.write("config.toml", toml::to_string(&config)?.as_bytes())?;
    let rsm = config.rsm.clone();

    let result: std::result::Result<RsmTrace, RsmError> = match &config.oracle {
        OracleConfig::Benchmark(scenario) => {
            let mut run = scenario.prepare(rsm.basis, rsm.d, rsm.seed)?;
            out.write("training_curves.csv", &to_csv(|b| run.draw.sample.write_x_csv(b))?)?;
            out.write("training_responses.csv", &to_csv(|b| run.draw.sample.write_y_csv(b))?)?;
            out.write("basis.csv", &to_csv(|b| run.basis.write_csv(b))?)?;
            run_rsm(&rsm, &mut run.oracle, &run.draw.start, &run.basis)
        }
        OracleConfig::External(ext) => {
            let curves = File::open(resolve(&base, &ext.curves)).context("opening training curves")?;
            let responses = File::open(resolve(&base, &ext.responses)).context("opening training responses")?;
            let sample = TrainingSample::read_csv(curves, Some(responses))?;
            let start = match &ext.start {
                Some(p) => GridFunction::read_csv(File::open(resolve(&base, p)).context("opening start")?)?,
                None => {
                    let y = sample.y().ok_or_else(|| anyhow!("training responses are required"))?;
                    starting_point(sample.x(), y)?.1
                }
            };
            let basis = build_basis(rsm.basis, rsm.d, &sample)?;
            out.write("basis.csv", &to_csv(|b| basis.write_csv(b))?)?;
            let exchange = resolve(out.path(), &ext.exchange_dir);
            if !(ext.timeout_secs >= 0.0 && ext.timeout_secs.is_finite()) {
                return Err(anyhow!("timeout_secs must be a finite number >= 0"));
            }
            let mut oracle = FileOracle::new(
                exchange,
                Duration::from_secs_f64(ext.timeout_secs),
                Duration::from_millis(ext.poll_ms.max(1)),
            );
            run_rsm(&rsm, &mut oracle, &start, &basis)
        }
    };
    let snapshot = serde_json::to_value(&config)?;
    match result {
        Ok(trace) => {
            write_trace(&mut out, &trace)?;
            if let Some(c) = trace.current_center() {
                out.write("final_center.csv", &to_csv(|b| c.write_csv(b))?)?;
            }
            out.finish(snapshot, Some(rsm.seed), Some(trace.evaluations), "ok")
        }
        Err(e) => {
            write_trace(&mut out, &e.partial)?;
            let evaluations = e.partial.evaluations;
            let dir = out.finish(snapshot, Some(rsm.seed), Some(evaluations), &format!("aborted: {}", e.source))?;
            Err(anyhow!(e)).with_context(|| format!("partial results kept in {}", dir.display()))
        }
    }
}

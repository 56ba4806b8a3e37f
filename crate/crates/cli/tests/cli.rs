use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::thread;
use std::time::Duration;

use funrsm::bench::{QuadraticOracle, Target};
use funrsm::rng::{labels, StreamKey};
use funrsm::{Grid, GridFunction, Oracle};

fn funrsm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_funrsm"))
        .args(args)
        .env_remove("FRSM_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn ccd_with_eight_centers_has_280_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ccd");
    ok(&funrsm(&["design", "--family", "ccd", "--d", "8", "--n0", "8", "--alpha", "rotatable", "--out", p(&out)]));
    assert_eq!(data_rows(&out.join("design.csv")), 280);
    let props = json(&out.join("properties.json"));
    assert_eq!(props["runs"], 280);
    assert_eq!(props["rotatable"], true);
    let manifest = json(&out.join("manifest.json"));
    for a in manifest["artifacts"].as_array().unwrap() {
        assert!(out.join(a.as_str().unwrap()).exists());
    }
}

#[test]
fn box_behnken_needs_three_factors() {
    let dir = tempfile::tempdir().unwrap();
    let out = funrsm(&["design", "--family", "bbd", "--d", "2", "--out", p(&dir.path().join("bbd"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("d=2"));
}

#[test]
fn two_level_factorial_is_orthogonal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f2");
    ok(&funrsm(&["design", "--family", "factorial2", "--d", "3", "--out", p(&out)]));
    assert_eq!(data_rows(&out.join("design.csv")), 8);
    assert_eq!(json(&out.join("properties.json"))["orthogonal"], true);
}

#[test]
fn lifted_design_files() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::unit(33).unwrap();
    let basis = funrsm::basis::fourier_basis(2, &grid).unwrap();
    let basis_path = dir.path().join("basis.csv");
    basis.write_csv(fs::File::create(&basis_path).unwrap()).unwrap();
    let center_path = dir.path().join("center.csv");
    GridFunction::constant(&grid, 3.0).write_csv(fs::File::create(&center_path).unwrap()).unwrap();
    let out = dir.path().join("lift");
    ok(&funrsm(&[
        "design", "--family", "factorial2", "--d", "2", "--basis", p(&basis_path), "--center", p(&center_path),
        "--scale", "0.5", "--out", p(&out),
    ]));
    assert_eq!(data_rows(&out.join("lifted/index.csv")), 4);
    let first = GridFunction::read_csv(fs::File::open(out.join("lifted/point_0001.csv")).unwrap()).unwrap();
    // (-1, -1) at scale 0.5: 3 - 0.5·φ1 - 0.5·φ2
    let want = GridFunction::from_fn(&grid, |t| {
        3.0 - 0.5 - 0.5 * 2f64.sqrt() * (2.0 * std::f64::consts::PI * t).cos()
    })
    .unwrap();
    assert!(first.sub(&want).unwrap().norm() < 1e-12);
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const BENCHMARK: &str = r#"
[rsm]
seed = 4

[oracle]
mode = "benchmark"
target = "f1"
"#;

#[test]
fn benchmark_run_reaches_a_small_response() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", BENCHMARK);
    let out = dir.path().join("run");
    ok(&funrsm(&["optimize", "--config", p(&cfg), "--out", p(&out)]));
    let trace = json(&out.join("trace.json"));
    let last = trace["center_responses"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(trace["evaluations"], 581);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    assert!(out.join("final_center.csv").exists());
    let final_response = last["true_value"].as_f64().unwrap();
    assert!(final_response < 0.05, "final response {final_response}");
}

#[test]
fn zero_descent_steps_leave_only_the_second_order_phase() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", BENCHMARK);
    let out = dir.path().join("run");
    ok(&funrsm(&["optimize", "--config", p(&cfg), "--max-steps", "0", "--out", p(&out)]));
    let trace = json(&out.join("trace.json"));
    assert_eq!(trace["steps"].as_array().unwrap().len(), 0);
    assert!(trace["second_order"].is_object());
    let steps = fs::read_to_string(out.join("steps.csv")).unwrap();
    assert!(!steps.contains(",gradient,") && !steps.contains(",line_search,"));
    assert!(steps.contains(",ccd,"));
}

/// Answers every request in `exchange` with the benchmark oracle until `stop`
/// appears.
fn responder(exchange: PathBuf, mut oracle: QuadraticOracle, stop: PathBuf) -> thread::JoinHandle<usize> {
    thread::spawn(move || {
        let mut batch = 1;
        loop {
            let dir = exchange.join(format!("batch_{batch:04}"));
            let request = dir.join("request.csv");
            if !request.exists() {
                if stop.exists() {
                    return batch - 1;
                }
                thread::sleep(Duration::from_millis(2));
                continue;
            }
            let mut r = csv::Reader::from_path(&request).unwrap();
            let mut body = String::from("id,y\n");
            for rec in r.records() {
                let rec = rec.unwrap();
                let x = GridFunction::read_csv(fs::File::open(dir.join(&rec[1])).unwrap()).unwrap();
                body.push_str(&format!("{},{:?}\n", &rec[0], oracle.evaluate(&x).unwrap()));
            }
            let tmp = dir.join("response.partial");
            fs::write(&tmp, body).unwrap();
            fs::rename(tmp, dir.join("response.csv")).unwrap();
            batch += 1;
        }
    })
}

#[test]
fn external_mode_matches_in_process_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bench.toml", BENCHMARK);
    let bench_out = dir.path().join("bench");
    ok(&funrsm(&["optimize", "--config", p(&cfg), "--out", p(&bench_out)]));

    let ext_cfg = write_config(
        dir.path(),
        "ext.toml",
        &format!(
            "[rsm]\nseed = 4\n\n[oracle]\nmode = \"external\"\ncurves = \"{}\"\nresponses = \"{}\"\ntimeout_secs = 60\npoll_ms = 1\n",
            p(&bench_out.join("training_curves.csv")),
            p(&bench_out.join("training_responses.csv"))
        ),
    );
    let ext_out = dir.path().join("ext");
    let grid = Grid::unit(1025).unwrap();
    let oracle = QuadraticOracle::new(
        Target::F1.realize(&grid).unwrap().values,
        0.01,
        StreamKey::new(4).derive(labels::ORACLE),
    )
    .unwrap();
    let stop = dir.path().join("stop");
    let handle = responder(ext_out.join("exchange"), oracle, stop.clone());
    let out = funrsm(&["optimize", "--config", p(&ext_cfg), "--out", p(&ext_out)]);
    fs::write(&stop, "").unwrap();
    let batches = handle.join().unwrap();
    ok(&out);
    assert!(batches >= 5);

    for name in ["steps.csv", "final_center.csv", "basis.csv", "center_000.csv"] {
        assert_eq!(fs::read(bench_out.join(name)).unwrap(), fs::read(ext_out.join(name)).unwrap(), "{name}");
    }
    let (a, b) = (json(&bench_out.join("trace.json")), json(&ext_out.join("trace.json")));
    assert_eq!(a["evaluations"], b["evaluations"]);
    assert_eq!(a["steps"], b["steps"]);
    assert_eq!(a["second_order"], b["second_order"]);
}

#[test]
fn external_timeout_keeps_partial_state() {
    let dir = tempfile::tempdir().unwrap();
    let bench_out = dir.path().join("bench");
    let cfg = write_config(dir.path(), "bench.toml", BENCHMARK);
    ok(&funrsm(&["optimize", "--config", p(&cfg), "--max-steps", "0", "--out", p(&bench_out)]));
    let ext_cfg = write_config(
        dir.path(),
        "ext.toml",
        "[oracle]\nmode = \"external\"\ncurves = \"bench/training_curves.csv\"\nresponses = \"bench/training_responses.csv\"\ntimeout_secs = 0.2\npoll_ms = 10\n",
    );
    let ext_out = dir.path().join("ext");
    let out = funrsm(&["optimize", "--config", p(&ext_cfg), "--out", p(&ext_out)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no response"));
    assert!(ext_out.join("exchange/batch_0001/request.csv").exists());
    let trace = json(&ext_out.join("trace.json"));
    assert!(trace["stop_reason"]["aborted"].is_string());
    assert_eq!(trace["evaluations"], 0);
    let manifest = json(&ext_out.join("manifest.json"));
    assert!(manifest["status"].as_str().unwrap().starts_with("aborted"));
    assert!(!ext_out.join("final_center.csv").exists());
}

const SMALL_STUDY: &str = r#"
study = "basis"
target = "f1"
replications = 5
n = 100
seed = 9
"#;

#[test]
fn basis_study_has_one_row_per_basis_and_replication() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mc.toml", SMALL_STUDY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&funrsm(&["mc", "--config", p(&cfg), "--out", p(&a)]));
    ok(&funrsm(&["mc", "--config", p(&cfg), "--out", p(&b)]));
    assert_eq!(data_rows(&a.join("basis_study.csv")), 15);
    assert_eq!(fs::read(a.join("basis_study.csv")).unwrap(), fs::read(b.join("basis_study.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("basis_study_summary.json")).unwrap(),
        fs::read(b.join("basis_study_summary.json")).unwrap()
    );
    // the snapshot alone reproduces the run
    let c = dir.path().join("c");
    ok(&funrsm(&["mc", "--config", p(&a.join("config.toml")), "--out", p(&c)]));
    assert_eq!(fs::read(a.join("basis_study.csv")).unwrap(), fs::read(c.join("basis_study.csv")).unwrap());
}

#[test]
fn fractional_dimension_study_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "mc.toml",
        "study = \"dimension\"\nreplications = 1\nn = 60\nfractional = [[5, 1], [6, 2], [7, 3], [8, 4], [9, 5], [10, 6]]\n",
    );
    let out = dir.path().join("dim");
    ok(&funrsm(&["mc", "--config", p(&cfg), "--out", p(&out)]));
    let summary = json(&out.join("dimension_study_summary.json"));
    let cells = summary["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 18);
    for basis in ["fourier", "pca", "pls"] {
        assert_eq!(cells.iter().filter(|c| c["basis"] == basis).count(), 6);
    }
    let csv = fs::read_to_string(out.join("dimension_study.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (d, p): (usize, usize) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert_eq!(d - p, 4);
    }
}

#[test]
fn basis_command_fits_pca_from_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bench.toml", "[oracle]\nmode = \"benchmark\"\nn = 40\n");
    let bench = dir.path().join("bench");
    ok(&funrsm(&["optimize", "--config", p(&cfg), "--max-steps", "0", "--out", p(&bench)]));
    let out = dir.path().join("pca");
    ok(&funrsm(&[
        "basis", "--kind", "pca", "--d", "4", "--curves", p(&bench.join("training_curves.csv")), "--out", p(&out),
    ]));
    let report = json(&out.join("basis_report.json"));
    assert_eq!(report["n"], 40);
    assert!(report["max_gram_deviation"].as_f64().unwrap() < 1e-6);
    let spectrum = report["spectrum"].as_array().unwrap();
    assert!(spectrum[0].as_f64().unwrap() >= spectrum[1].as_f64().unwrap());
    assert!(out.join("basis.csv").exists());

    let pls_missing_y = funrsm(&[
        "basis", "--kind", "pls", "--d", "2", "--curves", p(&bench.join("training_curves.csv")), "--out", p(&out),
    ]);
    assert!(!pls_missing_y.status.success());
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_funrsm"))
        .args(["design", "--family", "factorial2", "--d", "2", "--out", "rel"])
        .env("FRSM_OUTPUT_ROOT", dir.path())
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("rel/design.csv").exists());
}

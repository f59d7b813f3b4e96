//! End-to-end checks of the `radgauss` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radgauss::SampleSet;
use tempfile::TempDir;

fn radgauss(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radgauss"))
        .args(args)
        .current_dir(dir)
        .env_remove("RADGAUSS_OUT")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = radgauss(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn samples(path: PathBuf) -> SampleSet {
    SampleSet::parse_csv(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Header plus data lines, comments dropped.
fn body(path: PathBuf) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.split_inclusive('\n').filter(|l| !l.starts_with('#')).collect()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

fn metric(dir: &Path, file: &str, stage: &str, name: &str) -> f64 {
    let text = fs::read_to_string(dir.join(file)).unwrap();
    let stages = column(&text, "stage");
    let row = stages.iter().position(|s| s == stage).unwrap();
    column(&text, name)[row].parse().unwrap()
}

#[test]
fn sample_writes_the_requested_rows() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["sample", "--dist", "x", "--n", "10000", "--seed", "1", "--out", "x.csv"]);
    let z = samples(t.path().join("x.csv"));
    assert_eq!((z.count(), z.dim()), (10_000, 2));

    ok(t.path(), &["sample", "--dist", "mixture", "--alpha", "0.5", "--n", "777", "--out", "m.csv"]);
    assert_eq!(samples(t.path().join("m.csv")).count(), 777);
}

#[test]
fn sample_rejects_broken_x_parameters() {
    let t = TempDir::new().unwrap();
    let out = radgauss(t.path(), &["sample", "--dist", "x", "--along-var", "3", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
    assert!(!t.path().join("x.csv").exists());
    let out = radgauss(t.path(), &["sample", "--dist", "triangle"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn spec_errors_name_the_line() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("s.cfg"), "seed = 1\n# note\nloss.beta1 = one\n").unwrap();
    let out = radgauss(t.path(), &["optimize", "--spec", "s.cfg"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn zero_weight_optimisation_leaves_samples_untouched() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["sample", "--dist", "x", "--n", "300", "--seed", "4", "--out", "in.csv"]);
    fs::write(
        t.path().join("zero.cfg"),
        "input = in.csv\nloss.lambda2 = 0\nloss.lambda3 = 0\nloss.beta1 = 0\nloss.beta2 = 0\nschedule.total_steps = 50\n",
    )
    .unwrap();
    ok(t.path(), &["optimize", "--spec", "zero.cfg", "--out", "run"]);
    assert_eq!(body(t.path().join("in.csv")), body(t.path().join("run/final.csv")));
}

#[test]
fn trajectory_cadence_and_rerun_determinism() {
    let t = TempDir::new().unwrap();
    let spec = "distribution.tag = x\nn_samples = 400\nseed = 3\nschedule.total_steps = 2000\nschedule.lr = 0.05\nrecord_every = 100\nloss.w1_weight = 0.5\nsnapshots = true\n";
    fs::write(t.path().join("s.cfg"), spec).unwrap();
    ok(t.path(), &["optimize", "--spec", "s.cfg", "--out", "a"]);
    ok(t.path(), &["optimize", "--spec", "s.cfg", "--out", "b"]);
    // header + ⌈T/R⌉ + 1 records
    assert_eq!(body(t.path().join("a/trajectory.csv")).lines().count(), 2000 / 100 + 2);
    for f in ["trajectory.csv", "final.csv", "metrics.csv", "scatter_initial.svg", "scatter_final.svg"] {
        let a = fs::read(t.path().join("a").join(f)).unwrap();
        let b = fs::read(t.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between reruns");
    }
    // the embedded spec reproduces the run
    let text = fs::read_to_string(t.path().join("a/final.csv")).unwrap();
    let embedded: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .skip(1)
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(t.path().join("embedded.cfg"), embedded).unwrap();
    ok(t.path(), &["optimize", "--spec", "embedded.cfg", "--out", "c"]);
    assert_eq!(
        fs::read(t.path().join("a/final.csv")).unwrap(),
        fs::read(t.path().join("c/final.csv")).unwrap()
    );
}

#[test]
fn divergence_exits_with_the_numerical_code() {
    let t = TempDir::new().unwrap();
    let out = radgauss(
        t.path(),
        &["optimize", "--set", "n_samples=200", "--steps", "50", "--lr", "1e9", "--out", "d"],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
}

#[test]
fn output_root_comes_from_the_environment() {
    let t = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_radgauss"))
        .args(["sample", "--dist", "gaussian", "--n", "10"])
        .current_dir(t.path())
        .env("RADGAUSS_OUT", t.path().join("envroot"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(t.path().join("envroot/samples.csv").exists());
}

#[test]
fn evaluate_reports_and_rejects() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    ok(p, &["sample", "--dist", "gaussian", "--n", "100000", "--seed", "2", "--out", "g.csv"]);
    ok(p, &["evaluate", "g.csv", "--out", "eg"]);
    assert!(metric(&p.join("eg"), "metrics.csv", "samples", "w1_radii_to_chi") < 0.01);
    assert!(p.join("eg/radius_hist.svg").exists() && p.join("eg/angle_hist.svg").exists());

    ok(p, &["sample", "--dist", "x", "--n", "5000", "--out", "x.csv"]);
    ok(p, &["evaluate", "x.csv", "--out", "ex"]);
    assert!(metric(&p.join("ex"), "metrics.csv", "samples", "ks_angles_uniform") > 0.1);

    fs::write(p.join("empty.csv"), "").unwrap();
    let out = radgauss(p, &["evaluate", "empty.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    fs::write(p.join("bad.csv"), "x0,x1\r\n1,2\r\n3,oops\r\n").unwrap();
    let out = radgauss(p, &["evaluate", "bad.csv"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = radgauss(p, &["evaluate", "missing.csv"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn map_fits_applies_and_round_trips() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    ok(p, &["sample", "--dist", "student_t", "--n", "20000", "--out", "t.csv"]);
    ok(p, &["map", "t.csv", "--kind", "radial", "--out", "r"]);
    assert!(metric(&p.join("r"), "metrics.csv", "after", "ks_radii_chi") < 0.01);
    assert!(metric(&p.join("r"), "metrics.csv", "before", "ks_radii_chi") > 0.05);

    // the bundle reproduces the mapped file
    let map = radgauss_harness::run::load_map(&p.join("r/map.csv")).unwrap();
    let again = map.apply(&samples(p.join("t.csv"))).unwrap();
    assert_eq!(again, samples(p.join("r/mapped.csv")));

    // directions are those of the whitened input
    let z = samples(p.join("t.csv"));
    let white = radgauss::fit_map(&z, radgauss::MapKind::Vcreg).unwrap().apply(&z).unwrap();
    for (a, b) in white.rows().zip(again.rows()).take(500) {
        let (ra, rb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
        assert!((a[0] / ra - b[0] / rb).abs() < 1e-9 && (a[1] / ra - b[1] / rb).abs() < 1e-9);
    }

    ok(p, &["sample", "--dist", "gaussian", "--n", "20000", "--out", "g.csv"]);
    ok(p, &["map", "g.csv", "--kind", "vcreg", "--out", "v"]);
    assert!(metric(&p.join("v"), "metrics.csv", "after", "ks_radii_chi") < 0.02);

    fs::write(p.join("line.csv"), "x0,x1\n0,0\n1,2\n2,4\n3,6\n").unwrap();
    let out = radgauss(p, &["map", "line.csv", "--kind", "vcreg"]);
    assert_eq!(code(&out), 3);
}

const SWEEP: &str = "\
n_samples = 300
seed = 11
schedule.total_steps = 200
record_every = 50
snapshots = true
metric_reps = 2
";

#[test]
fn sweep_rows_plot_and_seed_pairing() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    fs::write(p.join("two.cfg"), format!("{SWEEP}sweep.method = radial\nsweep.lr = 0.01, 0.001\n")).unwrap();
    ok(p, &["sweep", "--spec", "two.cfg", "--out", "two"]);
    let results = fs::read_to_string(p.join("two/results.csv")).unwrap();
    assert_eq!(column(&results, "status"), ["ok", "ok"]);

    fs::write(
        p.join("alpha.cfg"),
        format!("{SWEEP}sweep.alpha = 0.01, 0.99\nsweep.seeds = 1, 2\n"),
    )
    .unwrap();
    ok(p, &["sweep", "--spec", "alpha.cfg", "--out", "alpha"]);
    let summary = fs::read_to_string(p.join("alpha/summary.csv")).unwrap();
    let agg = column(&summary, "aggregation");
    let methods = column(&summary, "method");
    for m in ["vcreg", "radial"] {
        let best = agg.iter().zip(&methods).filter(|(a, mm)| *a == "best" && *mm == m).count();
        assert_eq!(best, 2, "{m}");
    }
    let svg = fs::read_to_string(p.join("alpha/fig1c.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);

    // same config, different seeds: config columns agree, W1 differs
    let results = fs::read_to_string(p.join("alpha/results.csv")).unwrap();
    let cfg = column(&results, "config");
    let w1 = column(&results, "final_w1_2d_to_gaussian");
    let lr = column(&results, "lr");
    assert_eq!(cfg[0], cfg[1]);
    assert_eq!(lr[0], lr[1]);
    assert_ne!(w1[0], w1[1]);
    assert_eq!(p.join("alpha/jobs").read_dir().unwrap().count(), cfg.len());
}

#[test]
fn parallel_sweep_matches_sequential() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    let spec = format!("{SWEEP}loss.w1_weight = 0.2\nsweep.lr = 0.01, 0.002\nsweep.beta1 = 1, 5\nsweep.seeds = 1, 2\n");
    fs::write(p.join("s.cfg"), spec).unwrap();
    ok(p, &["sweep", "--spec", "s.cfg", "--jobs", "1", "--out", "seq"]);
    ok(p, &["sweep", "--spec", "s.cfg", "--jobs", "3", "--out", "par"]);
    for f in ["results.csv", "summary.csv", "fig1c.svg"] {
        assert!(
            fs::read(p.join("seq").join(f)).unwrap() == fs::read(p.join("par").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn sweep_records_failures_and_fails_when_all_do() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    fs::write(p.join("s.cfg"), format!("{SWEEP}sweep.method = vcreg\nsweep.lr = 0.01, 1e9\n")).unwrap();
    ok(p, &["sweep", "--spec", "s.cfg", "--out", "mixed"]);
    let results = fs::read_to_string(p.join("mixed/results.csv")).unwrap();
    assert_eq!(column(&results, "status"), ["ok", "diverged"]);

    fs::write(p.join("bad.cfg"), format!("{SWEEP}sweep.method = vcreg\nsweep.lr = 1e9\n")).unwrap();
    let out = radgauss(p, &["sweep", "--spec", "bad.cfg", "--out", "bad"]);
    assert_eq!(code(&out), 3);
    assert!(p.join("bad/results.csv").exists());
}

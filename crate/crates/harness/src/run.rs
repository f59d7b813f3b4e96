//! The work behind each subcommand. Everything written is a pure function of
//! the resolved spec, so reruns produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use radgauss::metrics::MetricReport;
use radgauss::optimizer::trajectory_csv;
use radgauss::sample::format_float;
use radgauss::{fit_map, optimize_samples, ChiModel, MapKind, PushforwardMap, SampleSet};
use rayon::prelude::*;

use crate::config::KvWriter;
use crate::error::{HarnessError, Result};
use crate::spec::{ExperimentSpec, GridPoint, Method, SweepSpec};
use crate::svg;

pub const OUT_ENV: &str = "RADGAUSS_OUT";
pub const DEFAULT_OUT: &str = "radgauss-out";
const HIST_BINS: usize = 60;

/// Output directory: explicit flag, then the spec, then `$RADGAUSS_OUT`, then `./radgauss-out`.
pub fn output_dir(flag: Option<PathBuf>, spec: Option<&Path>) -> PathBuf {
    flag.or_else(|| spec.map(Path::to_path_buf))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    SampleSet::parse_csv(&read_text(path)?).map_err(|e| HarnessError::core(path.display().to_string(), e))
}

fn cell(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// RFC 4180 table with CRLF line ends, preceded by `# ` comment lines.
pub fn table(comments: &[String], header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push_str("\r\n");
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    out.push_str(&String::from_utf8(bytes).expect("utf-8 fields"));
    out
}

fn metric_header(prefix: &str) -> Vec<String> {
    MetricReport::HEADER.iter().map(|h| format!("{prefix}{h}")).collect()
}

fn metric_cells(r: &MetricReport) -> Vec<String> {
    r.values().iter().map(|v| cell(*v)).collect()
}

/// `stage` column followed by every metric.
pub fn metrics_table(comments: &[String], rows: &[(&str, &MetricReport)]) -> String {
    let mut header = vec!["stage".to_string()];
    header.extend(metric_header(""));
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(stage, r)| {
            let mut row = vec![stage.to_string()];
            row.extend(metric_cells(r));
            row
        })
        .collect();
    table(comments, &header, &rows)
}

pub fn initial_samples(spec: &ExperimentSpec) -> Result<SampleSet> {
    match &spec.input {
        Some(p) => read_samples(p),
        None => {
            let dist = spec.distribution.build().map_err(|e| HarnessError::core("invalid spec", e))?;
            Ok(dist.sample(spec.n_samples, spec.data_seed())?)
        }
    }
}

pub fn describe(z: &SampleSet) -> String {
    let f = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    format!(
        "rows {}  dim {}\nmean [{}]\ncov  [{}]\n|mean| {:.4}",
        z.count(),
        z.dim(),
        f(&z.mean()),
        f(&z.covariance()),
        radgauss::metrics::mean_norm(z)
    )
}

pub fn sample(spec: &ExperimentSpec, out: &Path) -> Result<SampleSet> {
    spec.validate()?;
    let z = initial_samples(spec)?;
    write_file(out, &z.to_csv_string(&spec.comments("sample")))?;
    Ok(z)
}

pub struct OptimizeOutcome {
    pub initial: MetricReport,
    pub last: MetricReport,
    pub records: usize,
}

/// Writes `trajectory.csv`, `final.csv`, `metrics.csv` and, for planar data,
/// `scatter_initial.svg` / `scatter_final.svg`.
pub fn optimize(spec: &ExperimentSpec, dir: &Path) -> Result<OptimizeOutcome> {
    spec.validate()?;
    let comments = spec.comments("optimize");
    let z = initial_samples(spec)?;
    let t = optimize_samples(&z, &spec.loss, &spec.schedule, spec.optimizer_seed(), &spec.options())
        .map_err(|e| HarnessError::core("optimize", e))?;
    let initial = MetricReport::compute(&z, spec.metric_reps, spec.metric_seed())?;
    let last = MetricReport::compute(&t.samples, spec.metric_reps, spec.metric_seed())?;

    write_file(&dir.join("trajectory.csv"), &trajectory_csv(&t.records, &comments))?;
    write_file(&dir.join("final.csv"), &t.samples.to_csv_string(&comments))?;
    write_file(
        &dir.join("metrics.csv"),
        &metrics_table(&comments, &[("initial", &initial), ("final", &last)]),
    )?;
    if z.dim() == 2 {
        let pts = |s: &SampleSet| s.rows().map(|r| (r[0], r[1])).collect::<Vec<_>>();
        write_file(&dir.join("scatter_initial.svg"), &svg::scatter(&pts(&z), "initial samples"))?;
        write_file(&dir.join("scatter_final.svg"), &svg::scatter(&pts(&t.samples), "optimised samples"))?;
    }
    Ok(OptimizeOutcome {
        initial,
        last,
        records: t.records.len(),
    })
}

/// Settings for `evaluate` and `map`, echoed into their outputs.
pub struct EvalSpec {
    pub input: PathBuf,
    pub metric_reps: usize,
    pub seed: u64,
}

impl EvalSpec {
    fn comments(&self, command: &str, extra: &[(&str, String)]) -> Vec<String> {
        let mut w = KvWriter::default();
        w.set("input", self.input.display())
            .set("metric_reps", self.metric_reps)
            .set("seed", self.seed);
        for (k, v) in extra {
            w.set(k, v);
        }
        vec![format!("radgauss {command}"), w.finish()]
    }

    fn validate(&self) -> Result<()> {
        if self.metric_reps == 0 {
            return Err(HarnessError::Usage("metric_reps must be >= 1".into()));
        }
        Ok(())
    }
}

fn radius_histogram(z: &SampleSet) -> String {
    let chi = ChiModel::new(z.dim()).expect("dim >= 1");
    let radii = z.radii();
    let mut sorted = radii.clone();
    sorted.sort_by(f64::total_cmp);
    let upper = sorted[(sorted.len() * 995) / 1000].max(chi.isf(1e-4).unwrap_or(chi.mean() * 3.0));
    let width = upper / HIST_BINS as f64;
    let edges: Vec<f64> = (0..=HIST_BINS).map(|k| k as f64 * width).collect();
    let mut counts = vec![0usize; HIST_BINS];
    for r in &radii {
        if *r <= upper {
            counts[((r / width) as usize).min(HIST_BINS - 1)] += 1;
        }
    }
    let n = radii.len() as f64;
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / n / width).collect();
    let curve: Vec<(f64, f64)> = (0..=200).map(|k| k as f64 * upper / 200.0).map(|r| (r, chi.pdf(r))).collect();
    svg::histogram(
        &edges,
        &density,
        Some((&format!("chi({}) density", z.dim()), &curve)),
        "radius distribution",
        "radius",
    )
}

fn angle_histogram(z: &SampleSet) -> String {
    let tau = std::f64::consts::TAU;
    let width = tau / HIST_BINS as f64;
    let edges: Vec<f64> = (0..=HIST_BINS).map(|k| k as f64 * width).collect();
    let mut counts = vec![0usize; HIST_BINS];
    for r in z.rows() {
        let a = radgauss::distributions::unit_angle(r[0], r[1]);
        counts[((a / width) as usize).min(HIST_BINS - 1)] += 1;
    }
    let n = z.count() as f64;
    let density: Vec<f64> = counts.iter().map(|&c| c as f64 / n / width).collect();
    let flat = [(0.0, 1.0 / tau), (tau, 1.0 / tau)];
    svg::histogram(&edges, &density, Some(("uniform", &flat)), "angle distribution", "angle (rad)")
}

/// Writes `metrics.csv`, `radius_hist.svg` and, for planar data, `angle_hist.svg`.
pub fn evaluate(spec: &EvalSpec, dir: &Path) -> Result<MetricReport> {
    spec.validate()?;
    let z = read_samples(&spec.input)?;
    let report = MetricReport::compute(&z, spec.metric_reps, spec.seed)?;
    let comments = spec.comments("evaluate", &[]);
    write_file(&dir.join("metrics.csv"), &metrics_table(&comments, &[("samples", &report)]))?;
    write_file(&dir.join("radius_hist.svg"), &radius_histogram(&z))?;
    if z.dim() == 2 {
        write_file(&dir.join("angle_hist.svg"), &angle_histogram(&z))?;
    }
    Ok(report)
}

pub struct MapOutcome {
    pub map: PushforwardMap,
    pub before: MetricReport,
    pub after: MetricReport,
}

/// Writes `mapped.csv`, `map.csv` (the fitted bundle) and `metrics.csv`.
pub fn map(spec: &EvalSpec, kind: MapKind, dir: &Path) -> Result<MapOutcome> {
    spec.validate()?;
    let z = read_samples(&spec.input)?;
    let map = fit_map(&z, kind).map_err(|e| HarnessError::core("fit", e))?;
    let y = map.apply(&z).map_err(|e| HarnessError::core("apply", e))?;
    let before = MetricReport::compute(&z, spec.metric_reps, spec.seed)?;
    let after = MetricReport::compute(&y, spec.metric_reps, spec.seed)?;
    let comments = spec.comments("map", &[("kind", kind.to_string())]);
    write_file(&dir.join("mapped.csv"), &y.to_csv_string(&comments))?;
    write_file(&dir.join("map.csv"), &map.to_csv_string(&comments))?;
    write_file(
        &dir.join("metrics.csv"),
        &metrics_table(&comments, &[("before", &before), ("after", &after)]),
    )?;
    Ok(MapOutcome { map, before, after })
}

pub fn load_map(path: &Path) -> Result<PushforwardMap> {
    PushforwardMap::parse_csv(&read_text(path)?).map_err(|e| HarnessError::core(path.display().to_string(), e))
}

#[derive(Debug, Clone, PartialEq)]
pub enum JobStatus {
    Ok,
    Diverged { step: usize, reason: String },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub config_index: usize,
    pub point: GridPoint,
    pub seed: u64,
    pub status: JobStatus,
    pub initial: Option<MetricReport>,
    pub last: Option<MetricReport>,
    pub best_loss: Option<f64>,
    pub final_loss: Option<f64>,
    /// Pearson correlation of the recorded radial loss with E2MC.
    pub pearson_rg_e2mc: Option<f64>,
}

impl JobResult {
    /// Final W1 to N(0, I) in the plane, radii W1 to chi otherwise.
    pub fn final_w1(&self) -> Option<f64> {
        self.last.map(|m| m.w1_2d_to_gaussian.unwrap_or(m.w1_radii_to_chi))
    }

    pub fn initial_w1(&self) -> Option<f64> {
        self.initial.map(|m| m.w1_2d_to_gaussian.unwrap_or(m.w1_radii_to_chi))
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    if n < 2 || n != b.len() {
        return None;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n as f64, b.iter().sum::<f64>() / n as f64);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    let r = sab / (saa * sbb).sqrt();
    r.is_finite().then_some(r)
}

fn job_dir(config_index: usize, seed: u64) -> PathBuf {
    PathBuf::from("jobs").join(format!("cfg{config_index:04}-seed{seed}"))
}

fn run_job(job: &crate::spec::Job, dir: &Path) -> JobResult {
    let mut result = JobResult {
        config_index: job.config_index,
        point: job.point,
        seed: job.sweep_seed,
        status: JobStatus::Ok,
        initial: None,
        last: None,
        best_loss: None,
        final_loss: None,
        pearson_rg_e2mc: None,
    };
    let spec = &job.spec;
    let outcome = (|| -> Result<()> {
        let z = initial_samples(spec)?;
        result.initial = Some(MetricReport::compute(&z, spec.metric_reps, spec.metric_seed())?);
        let t = optimize_samples(&z, &spec.loss, &spec.schedule, spec.optimizer_seed(), &spec.options())?;
        result.last = Some(MetricReport::compute(&t.samples, spec.metric_reps, spec.metric_seed())?);
        result.best_loss = t.records.iter().map(|r| r.total).min_by(f64::total_cmp);
        result.final_loss = t.records.last().map(|r| r.total);
        let pairs: Vec<(f64, f64)> = t
            .records
            .iter()
            .filter_map(|r| Some((r.radial_gaussianization, r.snapshot?.e2mc?)))
            .collect();
        let (rg, e2mc): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        result.pearson_rg_e2mc = pearson(&rg, &e2mc);
        let path = dir.join(job_dir(job.config_index, job.sweep_seed)).join("trajectory.csv");
        write_file(&path, &trajectory_csv(&t.records, &spec.comments("sweep job")))
    })();
    match outcome {
        Ok(()) => {}
        Err(HarnessError::Core {
            source: radgauss::Error::Divergence { step, reason },
            ..
        }) => result.status = JobStatus::Diverged { step, reason },
        Err(e) => result.status = JobStatus::Failed(e.to_string()),
    }
    result
}

/// Runs every job on at most `jobs` threads. Results come back in job order
/// regardless of scheduling.
pub fn run_jobs(sweep: &SweepSpec, dir: &Path, jobs: usize) -> Result<Vec<JobResult>> {
    let all = sweep.jobs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| all.par_iter().map(|j| run_job(j, dir)).collect()))
}

fn results_table(comments: &[String], results: &[JobResult]) -> String {
    let mut header: Vec<String> = ["config"].iter().map(|s| s.to_string()).collect();
    header.extend(GridPoint::HEADER.iter().map(|s| s.to_string()));
    header.extend(["seed", "status", "divergence_step", "error"].map(String::from));
    header.extend(metric_header("initial_"));
    header.extend(metric_header("final_"));
    header.extend(["best_loss", "final_loss", "pearson_rg_e2mc"].map(String::from));
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let mut row = vec![r.config_index.to_string()];
            row.extend(r.point.fields());
            row.push(r.seed.to_string());
            let (status, step, error) = match &r.status {
                JobStatus::Ok => ("ok", String::new(), String::new()),
                JobStatus::Diverged { step, reason } => ("diverged", step.to_string(), reason.clone()),
                JobStatus::Failed(e) => ("failed", String::new(), e.clone()),
            };
            row.extend([status.to_string(), step, error]);
            let blank = || vec![String::new(); MetricReport::HEADER.len()];
            row.extend(r.initial.as_ref().map(metric_cells).unwrap_or_else(blank));
            row.extend(r.last.as_ref().map(metric_cells).unwrap_or_else(blank));
            row.extend([cell(r.best_loss), cell(r.final_loss), cell(r.pearson_rg_e2mc)]);
            row
        })
        .collect();
    table(comments, &header, &rows)
}

/// Per-config mean of the final W1 over seeds, for configs whose runs all succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigScore {
    pub point: GridPoint,
    pub w1_mean: f64,
    pub w1_se: f64,
    pub initial_w1_mean: f64,
    pub seeds: usize,
}

pub fn config_scores(results: &[JobResult]) -> Vec<ConfigScore> {
    let mut out: Vec<ConfigScore> = Vec::new();
    let mut i = 0;
    while i < results.len() {
        let idx = results[i].config_index;
        let group: Vec<&JobResult> = results[i..].iter().take_while(|r| r.config_index == idx).collect();
        i += group.len();
        let finals: Option<Vec<f64>> = group.iter().map(|r| r.final_w1()).collect();
        let inits: Option<Vec<f64>> = group.iter().map(|r| r.initial_w1()).collect();
        if let (Some(f), Some(init)) = (finals, inits) {
            let est = radgauss::metrics::Estimate::from_values(&f);
            out.push(ConfigScore {
                point: group[0].point,
                w1_mean: est.mean,
                w1_se: est.se,
                initial_w1_mean: init.iter().sum::<f64>() / init.len() as f64,
                seeds: f.len(),
            });
        }
    }
    out
}

/// Best (lowest mean W1) and mean-over-grid aggregation per (method, α).
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub alpha: f64,
    pub best: ConfigScore,
    pub grid_mean: f64,
    pub configs: usize,
}

pub fn aggregate(scores: &[ConfigScore]) -> Vec<Aggregate> {
    let mut keys: Vec<(Method, f64)> = scores.iter().map(|s| (s.point.method, s.point.alpha)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(method, alpha)| {
            let group: Vec<&ConfigScore> = scores
                .iter()
                .filter(|s| s.point.method == method && s.point.alpha.to_bits() == alpha.to_bits())
                .collect();
            // ties resolved by grid order
            let best = group
                .iter()
                .copied()
                .reduce(|a, b| if b.w1_mean < a.w1_mean { b } else { a })
                .expect("non-empty group")
                .clone();
            Aggregate {
                method,
                alpha,
                best,
                grid_mean: group.iter().map(|s| s.w1_mean).sum::<f64>() / group.len() as f64,
                configs: group.len(),
            }
        })
        .collect()
}

fn summary_table(comments: &[String], aggs: &[Aggregate]) -> String {
    let header: Vec<String> = [
        "method",
        "alpha",
        "aggregation",
        "lr",
        "beta1",
        "beta2",
        "lambda2",
        "lambda3",
        "w1_mean",
        "w1_se",
        "initial_w1_mean",
        "configs",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for a in aggs {
        let p = a.best.point.fields();
        rows.push(vec![
            a.method.to_string(),
            format_float(a.alpha),
            "best".into(),
            p[2].clone(),
            p[3].clone(),
            p[4].clone(),
            p[5].clone(),
            p[6].clone(),
            format_float(a.best.w1_mean),
            format_float(a.best.w1_se),
            format_float(a.best.initial_w1_mean),
            "1".into(),
        ]);
        let blank = String::new;
        rows.push(vec![
            a.method.to_string(),
            format_float(a.alpha),
            "mean".into(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            format_float(a.grid_mean),
            blank(),
            format_float(a.best.initial_w1_mean),
            a.configs.to_string(),
        ]);
    }
    table(comments, &header, &rows)
}

fn alpha_plot(aggs: &[Aggregate], planar: bool) -> String {
    let mut series = Vec::new();
    for m in Method::ALL {
        let points: Vec<(f64, f64)> = aggs.iter().filter(|a| a.method == m).map(|a| (a.alpha, a.best.w1_mean)).collect();
        if !points.is_empty() {
            series.push(svg::Series {
                name: format!("{m} (best of grid)"),
                points,
                dashed: false,
            });
        }
    }
    let mut init: Vec<(f64, f64)> = aggs.iter().map(|a| (a.alpha, a.best.initial_w1_mean)).collect();
    init.sort_by(|a, b| a.0.total_cmp(&b.0));
    init.dedup_by(|a, b| a.0 == b.0);
    series.push(svg::Series {
        name: "initialisation".into(),
        points: init,
        dashed: true,
    });
    let ylabel = if planar { "W1 to N(0, I)" } else { "W1 of radii to chi" };
    svg::line_chart(&series, "final distance vs mixture weight", "alpha", ylabel)
}

pub struct SweepOutcome {
    pub results: Vec<JobResult>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepOutcome {
    pub fn failed(&self) -> usize {
        self.results.iter().filter(|r| r.status != JobStatus::Ok).count()
    }
}

/// Writes `results.csv`, `summary.csv`, `fig1c.svg` and `jobs/*/trajectory.csv`.
pub fn sweep(spec: &SweepSpec, dir: &Path, jobs: usize) -> Result<SweepOutcome> {
    spec.validate()?;
    let comments = vec!["radgauss sweep".to_string(), spec.to_text()];
    let results = run_jobs(spec, dir, jobs)?;
    let aggregates = aggregate(&config_scores(&results));
    write_file(&dir.join("results.csv"), &results_table(&comments, &results))?;
    write_file(&dir.join("summary.csv"), &summary_table(&comments, &aggregates))?;
    if !aggregates.is_empty() {
        let planar = results.iter().filter_map(|r| r.last).any(|m| m.w1_2d_to_gaussian.is_some());
        write_file(&dir.join("fig1c.svg"), &alpha_plot(&aggregates, planar))?;
    }
    Ok(SweepOutcome { results, aggregates })
}

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use radgauss::MapKind;

use crate::config::KvReader;
use crate::error::{exit, HarnessError, Result};
use crate::run::{self, EvalSpec};
use crate::spec::{ExperimentSpec, SweepSpec};

#[derive(Parser)]
#[command(name = "radgauss", version, about = "Radial Gaussianization experiments on synthetic 2D data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Spec file of `key = value` lines.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the spec file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a distribution and write them as CSV.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        along_var: Option<f64>,
        #[arg(long)]
        perp_var: Option<f64>,
        #[arg(long)]
        slices: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        rotation: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        /// Output file [<output dir>/samples.csv].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run gradient descent on the sample coordinates.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Start from this CSV instead of sampling.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance-to-Gaussian diagnostics for a sample CSV.
    Evaluate {
        #[command(flatten)]
        common: Common,
        input: Option<PathBuf>,
        /// Reference law; only `gaussian` (radii against chi(d)) is available.
        #[arg(long, default_value = "gaussian")]
        reference: String,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a whitening or radial pushforward map and apply it.
    Map {
        #[command(flatten)]
        common: Common,
        input: Option<PathBuf>,
        /// vcreg or radial.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a hyperparameter grid over methods, mixture weights and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parallel jobs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn reader(common: &Common) -> Result<(KvReader, String)> {
    let (text, origin) = match &common.spec {
        Some(p) => (run::read_text(p)?, p.display().to_string()),
        None => (String::new(), "<command line>".to_string()),
    };
    let mut r = KvReader::parse(&text, &origin)?;
    for pair in &common.set {
        r.set_pair(pair)?;
    }
    Ok((r, origin))
}

fn put(r: &mut KvReader, key: &str, value: Option<impl ToString>) -> Result<()> {
    match value {
        Some(v) => r.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn eval_spec(r: &mut KvReader, input: Option<PathBuf>, reps: Option<usize>, seed: Option<u64>) -> Result<EvalSpec> {
    put(r, "metric_reps", reps)?;
    put(r, "seed", seed)?;
    let input = match input {
        Some(p) => p,
        None => r
            .take::<String>("input")?
            .map(PathBuf::from)
            .ok_or_else(|| HarnessError::Usage("no input CSV given".into()))?,
    };
    r.take::<String>("input")?;
    Ok(EvalSpec {
        input,
        metric_reps: r.take("metric_reps")?.unwrap_or(radgauss::metrics::METRIC_REPS),
        seed: r.take("seed")?.unwrap_or(0),
    })
}

fn print_report(stage: &str, m: &radgauss::MetricReport) {
    let cells: Vec<String> = radgauss::MetricReport::HEADER
        .iter()
        .zip(m.values())
        .filter_map(|(h, v)| v.map(|v| format!("{h}={v:.4}")))
        .collect();
    println!("{stage}: {}", cells.join(" "));
}

fn out_dir(flag: Option<PathBuf>, from_spec: Option<&Path>) -> PathBuf {
    run::output_dir(flag, from_spec)
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Sample {
            common,
            dist,
            n,
            seed,
            dim,
            alpha,
            along_var,
            perp_var,
            slices,
            rotation,
            nu,
            radius,
            out,
        } => {
            let (mut r, _) = reader(&common)?;
            put(&mut r, "distribution.tag", dist)?;
            put(&mut r, "n_samples", n)?;
            put(&mut r, "seed", seed)?;
            put(&mut r, "distribution.dim", dim)?;
            put(&mut r, "distribution.alpha", alpha)?;
            put(&mut r, "distribution.along_var", along_var)?;
            put(&mut r, "distribution.perp_var", perp_var)?;
            put(&mut r, "distribution.slices", slices)?;
            put(&mut r, "distribution.rotation", rotation)?;
            put(&mut r, "distribution.nu", nu)?;
            put(&mut r, "distribution.radius", radius)?;
            let spec = ExperimentSpec::from_reader(&mut r)?;
            r.finish()?;
            let path = out.unwrap_or_else(|| out_dir(None, spec.outputs.as_deref()).join("samples.csv"));
            let z = run::sample(&spec, &path)?;
            println!("wrote {}\n{}", path.display(), run::describe(&z));
        }
        Command::Optimize {
            common,
            input,
            seed,
            steps,
            lr,
            out,
        } => {
            let (mut r, _) = reader(&common)?;
            put(&mut r, "input", input.map(|p| p.display().to_string()))?;
            put(&mut r, "seed", seed)?;
            put(&mut r, "schedule.lr", lr)?;
            if let Some(t) = steps {
                r.set("schedule.total_steps", &t.to_string())?;
            }
            let spec = ExperimentSpec::from_reader(&mut r)?;
            r.finish()?;
            let dir = out_dir(out, spec.outputs.as_deref());
            let o = run::optimize(&spec, &dir)?;
            println!("wrote {} ({} trajectory records)", dir.display(), o.records);
            print_report("initial", &o.initial);
            print_report("final", &o.last);
        }
        Command::Evaluate {
            common,
            input,
            reference,
            reps,
            seed,
            out,
        } => {
            let (mut r, _) = reader(&common)?;
            put(&mut r, "reference", Some(reference))?;
            let reference: String = r.take("reference")?.expect("set above");
            if !matches!(reference.to_ascii_lowercase().as_str(), "gaussian" | "normal") {
                return Err(HarnessError::Usage(format!(
                    "unsupported reference {reference:?}; only `gaussian` is available"
                )));
            }
            let spec = eval_spec(&mut r, input, reps, seed)?;
            let outputs: Option<String> = r.take("outputs")?;
            r.finish()?;
            let dir = out_dir(out, outputs.as_deref().map(Path::new));
            let m = run::evaluate(&spec, &dir)?;
            println!("wrote {}", dir.display());
            print_report("samples", &m);
        }
        Command::Map {
            common,
            input,
            kind,
            reps,
            seed,
            out,
        } => {
            let (mut r, _) = reader(&common)?;
            put(&mut r, "kind", kind)?;
            let kind: MapKind = r
                .take::<MapKind>("kind")?
                .ok_or_else(|| HarnessError::Usage("--kind vcreg|radial is required".into()))?;
            let spec = eval_spec(&mut r, input, reps, seed)?;
            let outputs: Option<String> = r.take("outputs")?;
            r.finish()?;
            let dir = out_dir(out, outputs.as_deref().map(Path::new));
            let o = run::map(&spec, kind, &dir)?;
            println!("wrote {}", dir.display());
            print_report("before", &o.before);
            print_report("after", &o.after);
        }
        Command::Sweep { common, jobs, out } => {
            let (r, origin) = reader(&common)?;
            let spec = SweepSpec::from_reader(r, &origin)?;
            let dir = out_dir(out, spec.base.outputs.as_deref());
            let grid = spec.grid().len();
            eprintln!(
                "sweep: {grid} configs x {} seeds = {} runs on {} jobs",
                spec.seeds.len(),
                grid * spec.seeds.len(),
                jobs.max(1)
            );
            let o = run::sweep(&spec, &dir, jobs)?;
            for a in &o.aggregates {
                println!(
                    "{} alpha={}: best W1 {:.4} (init {:.4}), grid mean {:.4}",
                    a.method, a.alpha, a.best.w1_mean, a.best.initial_w1_mean, a.grid_mean
                );
            }
            let failed = o.failed();
            println!("wrote {} ({} runs, {failed} failed)", dir.display(), o.results.len());
            if failed == o.results.len() {
                eprintln!("error: every run failed");
                return Ok(exit::NUMERICAL);
            }
        }
    }
    Ok(exit::OK)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

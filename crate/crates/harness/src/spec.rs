//! Experiment and sweep specifications.
//!
//! Keys (all optional, defaults in brackets):
//!
//! ```text
//! distribution.tag          gaussian | x | sunshine | student_t | sphere | mixture   [mixture]
//! distribution.dim          gaussian / student_t / sphere dimension                 [2]
//! distribution.alpha        mixture weight of the X component                       [0.5]
//! distribution.along_var    X variance along the diagonals                          [1.9999]
//! distribution.perp_var     X variance across the diagonals                         [1e-4]
//! distribution.slices       sunshine slice count                                    [12]
//! distribution.rotation     sunshine rotation in radians                            [2π/slices]
//! distribution.nu           Student-t degrees of freedom                            [5]
//! distribution.radius       sphere radius                                           [1]
//! input                     start from this sample CSV instead of sampling
//! n_samples                                                                         [10000]
//! seed                                                                              [0]
//! seed.stream               extra optimiser stream index (set by sweeps)            [0]
//! loss.lambda1 .. lambda3, loss.beta1, loss.beta2, loss.w1_weight                   [0, 25, 25, 1, 0.1, 0]
//! loss.var_target, loss.var_eps, loss.pair_tie_eps                                  [1, 1e-4, 1e-12]
//! loss.m_spacing            auto | integer                                          [auto]
//! schedule.lr                                                                       [5e-3]
//! schedule.total_steps                                                              [20000]
//! schedule.warmup_steps                                                             [1% of total]
//! schedule.final_lr_fraction                                                        [0]
//! record_every                                                                      [100]
//! minibatch                 rows per step                                           [all]
//! snapshots                 record kl_to_chi / e2mc / W1 along the way              [false]
//! metric_reps               reference draws per metric                              [5]
//! outputs                   output directory
//! ```
//!
//! Sweeps add comma separated axes `sweep.method` (vcreg, radial), `sweep.alpha`,
//! `sweep.lr`, `sweep.beta1`, `sweep.beta2`, `sweep.lambda2`, `sweep.lambda3` and
//! `sweep.seeds`. Absent axes take the base value.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use radgauss::distributions::{X_ALONG_VAR, X_PERP_VAR};
use radgauss::losses::MSpacing;
use radgauss::rng::derive_seed;
use radgauss::{DistTag, Distribution, LossConfig, MixtureSpec, OptimizeOptions, ScheduleConfig, Sunshine, XDistribution};

use crate::config::{KvReader, KvWriter};
use crate::error::{HarnessError, Result};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_STEPS: usize = 20_000;
pub const DEFAULT_LR: f64 = 5e-3;
/// Upper bound on configs × seeds in one sweep.
pub const MAX_RUNS: usize = 100_000;

const DIST_KEYS: [&str; 8] = [
    "distribution.dim",
    "distribution.alpha",
    "distribution.along_var",
    "distribution.perp_var",
    "distribution.slices",
    "distribution.rotation",
    "distribution.nu",
    "distribution.radius",
];

/// Distribution parameters as written in a spec. Only the ones that apply to
/// `tag` are used or serialised.
#[derive(Debug, Clone, PartialEq)]
pub struct DistSpec {
    pub tag: DistTag,
    pub dim: usize,
    pub alpha: f64,
    pub along_var: f64,
    pub perp_var: f64,
    pub slices: usize,
    pub rotation: Option<f64>,
    pub nu: f64,
    pub radius: f64,
}

impl Default for DistSpec {
    fn default() -> Self {
        Self {
            tag: DistTag::Mixture,
            dim: 2,
            alpha: 0.5,
            along_var: X_ALONG_VAR,
            perp_var: X_PERP_VAR,
            slices: radgauss::distributions::SUNSHINE_SLICES,
            rotation: None,
            nu: 5.0,
            radius: 1.0,
        }
    }
}

impl DistSpec {
    pub fn build(&self) -> radgauss::Result<Distribution> {
        let x = || XDistribution::new(self.along_var, self.perp_var);
        Ok(match self.tag {
            DistTag::Gaussian => {
                if self.dim == 0 {
                    return Err(radgauss::Error::Config("dimension must be >= 1".into()));
                }
                Distribution::Gaussian { dim: self.dim }
            }
            DistTag::X => Distribution::X(x()?),
            DistTag::Sunshine => Distribution::Sunshine(match self.rotation {
                Some(r) => Sunshine::new(self.slices, r)?,
                None => Sunshine::with_slices(self.slices)?,
            }),
            DistTag::StudentT => Distribution::student_t(self.dim, self.nu)?,
            DistTag::Sphere => Distribution::uniform_sphere(self.dim, self.radius)?,
            DistTag::Mixture => Distribution::Mixture(MixtureSpec::x_with_gaussian(self.alpha, x()?)?),
        })
    }

    /// Parameter keys that apply to this tag.
    fn keys(&self) -> &'static [&'static str] {
        match self.tag {
            DistTag::Gaussian => &["distribution.dim"],
            DistTag::X => &["distribution.along_var", "distribution.perp_var"],
            DistTag::Sunshine => &["distribution.slices", "distribution.rotation"],
            DistTag::StudentT => &["distribution.dim", "distribution.nu"],
            DistTag::Sphere => &["distribution.dim", "distribution.radius"],
            DistTag::Mixture => &["distribution.alpha", "distribution.along_var", "distribution.perp_var"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub distribution: DistSpec,
    pub input: Option<PathBuf>,
    pub n_samples: usize,
    pub seed: u64,
    pub stream: u64,
    pub loss: LossConfig,
    pub schedule: ScheduleConfig,
    pub record_every: usize,
    pub minibatch: Option<usize>,
    pub snapshots: bool,
    pub metric_reps: usize,
    pub outputs: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            distribution: DistSpec::default(),
            input: None,
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
            stream: 0,
            loss: LossConfig::radial_vcreg(25.0, 25.0, 1.0, 0.1),
            schedule: ScheduleConfig::with_default_warmup(DEFAULT_LR, DEFAULT_STEPS).expect("valid defaults"),
            record_every: 100,
            minibatch: None,
            snapshots: false,
            metric_reps: radgauss::metrics::METRIC_REPS,
            outputs: None,
        }
    }
}

/// Parsed `auto` / integer spacing.
struct Spacing(MSpacing);

impl FromStr for Spacing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self(MSpacing::Auto));
        }
        s.parse::<usize>()
            .map(|m| Self(MSpacing::Fixed(m)))
            .map_err(|_| format!("expected `auto` or a positive integer, found {s:?}"))
    }
}

/// Parsed `DistTag`, with the error as a string for the config reader.
struct Tag(DistTag);

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.parse().map(Self).map_err(|e: radgauss::Error| e.to_string())
    }
}

impl ExperimentSpec {
    /// Data draw seed. Shared by every sweep job with the same seed.
    pub fn data_seed(&self) -> u64 {
        derive_seed(self.seed, 0)
    }

    pub fn optimizer_seed(&self) -> u64 {
        derive_seed(derive_seed(self.seed, 1), self.stream)
    }

    pub fn metric_seed(&self) -> u64 {
        derive_seed(self.seed, 2)
    }

    pub fn options(&self) -> OptimizeOptions {
        OptimizeOptions {
            record_every: self.record_every,
            minibatch: self.minibatch,
            snapshots: self.snapshots,
            metric_reps: self.metric_reps,
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut r = KvReader::parse(text, origin)?;
        let spec = Self::from_reader(&mut r)?;
        r.finish()?;
        Ok(spec)
    }

    /// Consumes every experiment key from `r`, leaving others in place.
    pub fn from_reader(r: &mut KvReader) -> Result<Self> {
        let mut s = Self::default();
        let from_file = r.contains("input");
        let d = &mut s.distribution;
        if let Some(Tag(t)) = r.take("distribution.tag")? {
            d.tag = t;
        }
        // keys that would be silently ignored are refused instead
        for key in DIST_KEYS.iter().chain(["n_samples"].iter()) {
            let applies = !from_file && (*key == "n_samples" || d.keys().contains(key));
            if let (false, Some(line)) = (applies, r.line_of(key)) {
                let why = if from_file {
                    "an input file is given".to_string()
                } else {
                    format!("distribution.tag is {}", d.tag)
                };
                return Err(r.error(line, format!("{key} does not apply: {why}")));
            }
        }
        set(r, "distribution.dim", &mut d.dim)?;
        set(r, "distribution.alpha", &mut d.alpha)?;
        set(r, "distribution.along_var", &mut d.along_var)?;
        set(r, "distribution.perp_var", &mut d.perp_var)?;
        set(r, "distribution.slices", &mut d.slices)?;
        if let Some(v) = r.take("distribution.rotation")? {
            d.rotation = Some(v);
        }
        set(r, "distribution.nu", &mut d.nu)?;
        set(r, "distribution.radius", &mut d.radius)?;
        s.input = r.take::<String>("input")?.map(PathBuf::from);
        set(r, "n_samples", &mut s.n_samples)?;
        set(r, "seed", &mut s.seed)?;
        set(r, "seed.stream", &mut s.stream)?;

        let l = &mut s.loss;
        set(r, "loss.lambda1", &mut l.lambda1)?;
        set(r, "loss.lambda2", &mut l.lambda2)?;
        set(r, "loss.lambda3", &mut l.lambda3)?;
        set(r, "loss.beta1", &mut l.beta1)?;
        set(r, "loss.beta2", &mut l.beta2)?;
        set(r, "loss.w1_weight", &mut l.w1_weight)?;
        set(r, "loss.var_target", &mut l.var_target)?;
        set(r, "loss.var_eps", &mut l.var_eps)?;
        set(r, "loss.pair_tie_eps", &mut l.pair_tie_eps)?;
        if let Some(Spacing(m)) = r.take("loss.m_spacing")? {
            l.m_spacing = m;
        }

        let lr = r.take("schedule.lr")?.unwrap_or(DEFAULT_LR);
        let total = r.take("schedule.total_steps")?.unwrap_or(DEFAULT_STEPS);
        let warmup = r.take("schedule.warmup_steps")?.unwrap_or(total / 100);
        let fraction = r.take("schedule.final_lr_fraction")?.unwrap_or(0.0);
        s.schedule = ScheduleConfig {
            base_lr: lr,
            warmup_steps: warmup,
            total_steps: total,
            final_lr_fraction: fraction,
        };

        set(r, "record_every", &mut s.record_every)?;
        s.minibatch = r.take("minibatch")?;
        set(r, "snapshots", &mut s.snapshots)?;
        set(r, "metric_reps", &mut s.metric_reps)?;
        s.outputs = r.take::<String>("outputs")?.map(PathBuf::from);
        Ok(s)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let ctx = |e| HarnessError::core("invalid spec", e);
        if self.input.is_none() {
            self.distribution.build().map_err(ctx)?;
            if self.n_samples < 2 {
                return Err(HarnessError::Usage(format!("n_samples must be >= 2, got {}", self.n_samples)));
            }
        }
        self.loss.validate().map_err(ctx)?;
        if self.loss.lambda1 > 0.0 {
            return Err(HarnessError::Usage(
                "loss.lambda1 needs a second view, which experiments do not have".into(),
            ));
        }
        self.schedule.validate().map_err(ctx)?;
        if self.record_every == 0 {
            return Err(HarnessError::Usage("record_every must be >= 1".into()));
        }
        if self.metric_reps == 0 {
            return Err(HarnessError::Usage("metric_reps must be >= 1".into()));
        }
        if matches!(self.minibatch, Some(b) if b < 2) {
            return Err(HarnessError::Usage("minibatch must be >= 2".into()));
        }
        Ok(())
    }

    /// Canonical text form. Reparsing it gives back an equal spec; the
    /// output directory is left out so that relocated runs stay comparable.
    pub fn to_text(&self) -> String {
        let mut w = KvWriter::default();
        self.write(&mut w);
        w.finish()
    }

    pub fn write(&self, w: &mut KvWriter) {
        match &self.input {
            Some(p) => {
                w.set("input", p.display());
            }
            None => {
                let d = &self.distribution;
                w.set("distribution.tag", d.tag);
                for key in d.keys() {
                    match *key {
                        "distribution.dim" => w.set(key, d.dim),
                        "distribution.alpha" => w.set_f64(key, d.alpha),
                        "distribution.along_var" => w.set_f64(key, d.along_var),
                        "distribution.perp_var" => w.set_f64(key, d.perp_var),
                        "distribution.slices" => w.set(key, d.slices),
                        "distribution.rotation" => match d.rotation {
                            Some(rot) => w.set_f64(key, rot),
                            None => &mut *w,
                        },
                        "distribution.nu" => w.set_f64(key, d.nu),
                        _ => w.set_f64(key, d.radius),
                    };
                }
                w.set("n_samples", self.n_samples);
            }
        }
        w.set("seed", self.seed);
        if self.stream != 0 {
            w.set("seed.stream", self.stream);
        }
        let l = &self.loss;
        w.set_f64("loss.lambda1", l.lambda1)
            .set_f64("loss.lambda2", l.lambda2)
            .set_f64("loss.lambda3", l.lambda3)
            .set_f64("loss.beta1", l.beta1)
            .set_f64("loss.beta2", l.beta2)
            .set_f64("loss.w1_weight", l.w1_weight)
            .set_f64("loss.var_target", l.var_target)
            .set_f64("loss.var_eps", l.var_eps)
            .set_f64("loss.pair_tie_eps", l.pair_tie_eps)
            .set("loss.m_spacing", l.m_spacing);
        let sc = &self.schedule;
        w.set_f64("schedule.lr", sc.base_lr)
            .set("schedule.total_steps", sc.total_steps)
            .set("schedule.warmup_steps", sc.warmup_steps)
            .set_f64("schedule.final_lr_fraction", sc.final_lr_fraction)
            .set("record_every", self.record_every);
        if let Some(b) = self.minibatch {
            w.set("minibatch", b);
        }
        w.set("snapshots", self.snapshots).set("metric_reps", self.metric_reps);
    }

    /// The resolved spec as CSV comment lines.
    pub fn comments(&self, command: &str) -> Vec<String> {
        vec![format!("radgauss {command}"), self.to_text()]
    }
}

fn set<T>(r: &mut KvReader, key: &str, slot: &mut T) -> Result<()>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    if let Some(v) = r.take(key)? {
        *slot = v;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Vcreg,
    Radial,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Vcreg, Method::Radial];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Vcreg => "vcreg",
            Self::Radial => "radial",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "vcreg" => Ok(Self::Vcreg),
            "radial" | "radial_vcreg" | "radial-vcreg" => Ok(Self::Radial),
            other => Err(format!("unknown method {other:?} (expected vcreg or radial)")),
        }
    }
}

/// One point of the sweep grid, before seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub method: Method,
    pub alpha: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl GridPoint {
    pub const HEADER: [&'static str; 7] = ["method", "alpha", "lr", "beta1", "beta2", "lambda2", "lambda3"];

    pub fn fields(&self) -> [String; 7] {
        let f = radgauss::sample::format_float;
        [
            self.method.to_string(),
            f(self.alpha),
            f(self.lr),
            f(self.beta1),
            f(self.beta2),
            f(self.lambda2),
            f(self.lambda3),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ExperimentSpec,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub lrs: Vec<f64>,
    pub beta1s: Vec<f64>,
    pub beta2s: Vec<f64>,
    pub lambda2s: Vec<f64>,
    pub lambda3s: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// One (grid point, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub config_index: usize,
    pub point: GridPoint,
    pub sweep_seed: u64,
    pub spec: ExperimentSpec,
}

impl SweepSpec {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        Self::from_reader(KvReader::parse(text, origin)?, origin)
    }

    pub fn from_reader(mut r: KvReader, origin: &str) -> Result<Self> {
        let alpha_line = r.line_of("sweep.alpha");
        let base = ExperimentSpec::from_reader(&mut r)?;
        let l = &base.loss;
        let methods = r.take_list("sweep.method")?.unwrap_or_else(|| Method::ALL.to_vec());
        let alphas = r.take_list("sweep.alpha")?.unwrap_or(vec![base.distribution.alpha]);
        let lrs = r.take_list("sweep.lr")?.unwrap_or(vec![base.schedule.base_lr]);
        let beta1s = r.take_list("sweep.beta1")?.unwrap_or(vec![l.beta1]);
        let beta2s = r.take_list("sweep.beta2")?.unwrap_or(vec![l.beta2]);
        let lambda2s = r.take_list("sweep.lambda2")?.unwrap_or(vec![l.lambda2]);
        let lambda3s = r.take_list("sweep.lambda3")?.unwrap_or(vec![l.lambda3]);
        let seeds = r.take_list("sweep.seeds")?.unwrap_or(vec![base.seed]);
        r.finish()?;
        if let Some(line) = alpha_line {
            if base.input.is_some() || base.distribution.tag != DistTag::Mixture {
                return Err(HarnessError::Config {
                    path: origin.to_string(),
                    line,
                    message: "sweep.alpha needs distribution.tag = mixture and no input file".into(),
                });
            }
        }
        let spec = Self {
            base,
            methods,
            alphas,
            lrs,
            beta1s,
            beta2s,
            lambda2s,
            lambda3s,
            seeds,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Number of runs, computed without building the grid. Saturates.
    pub fn run_count(&self) -> usize {
        let radial_betas = self.beta1s.len().saturating_mul(self.beta2s.len());
        let per_method: usize = self
            .methods
            .iter()
            .map(|m| match m {
                Method::Vcreg => 1,
                Method::Radial => radial_betas,
            })
            .fold(0usize, |a, b| a.saturating_add(b));
        [self.alphas.len(), self.lrs.len(), self.lambda2s.len(), self.lambda3s.len(), self.seeds.len()]
            .iter()
            .fold(per_method, |a, &b| a.saturating_mul(b))
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let runs = self.run_count();
        if runs > MAX_RUNS {
            return Err(HarnessError::Usage(format!("sweep has {runs} runs, more than the limit of {MAX_RUNS}")));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(HarnessError::Usage("sweep.seeds contains duplicates".into()));
        }
        for (i, p) in self.grid().iter().enumerate() {
            let job = self.job(i, p, self.seeds[0]);
            job.spec.validate()?;
        }
        Ok(())
    }

    /// Grid points in canonical order. VCReg ignores the β axes.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &method in &self.methods {
            let (b1s, b2s) = match method {
                Method::Vcreg => (vec![0.0], vec![0.0]),
                Method::Radial => (self.beta1s.clone(), self.beta2s.clone()),
            };
            for &alpha in &self.alphas {
                for &lr in &self.lrs {
                    for &beta1 in &b1s {
                        for &beta2 in &b2s {
                            for &lambda2 in &self.lambda2s {
                                for &lambda3 in &self.lambda3s {
                                    out.push(GridPoint {
                                        method,
                                        alpha,
                                        lr,
                                        beta1,
                                        beta2,
                                        lambda2,
                                        lambda3,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn job(&self, config_index: usize, p: &GridPoint, sweep_seed: u64) -> Job {
        let mut spec = self.base.clone();
        spec.distribution.alpha = p.alpha;
        spec.schedule.base_lr = p.lr;
        spec.loss.beta1 = p.beta1;
        spec.loss.beta2 = p.beta2;
        spec.loss.lambda2 = p.lambda2;
        spec.loss.lambda3 = p.lambda3;
        // Same data and metric draws for every config at a given sweep seed;
        // the optimiser stream is specific to the config.
        spec.seed = derive_seed(self.base.seed, sweep_seed);
        spec.stream = config_index as u64;
        spec.outputs = None;
        Job {
            config_index,
            point: *p,
            sweep_seed,
            spec,
        }
    }

    /// Every run, grid-major then seed.
    pub fn jobs(&self) -> Vec<Job> {
        let grid = self.grid();
        let mut out = Vec::with_capacity(grid.len() * self.seeds.len());
        for (i, p) in grid.iter().enumerate() {
            for &s in &self.seeds {
                out.push(self.job(i, p, s));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::default();
        self.base.write(&mut w);
        let floats = |v: &[f64]| v.iter().map(|x| crate::config::Exact(*x).to_string()).collect::<Vec<_>>();
        if self.base.input.is_none() && self.base.distribution.tag == DistTag::Mixture {
            w.set_list("sweep.alpha", floats(&self.alphas));
        }
        w.set_list("sweep.method", &self.methods)
            .set_list("sweep.lr", floats(&self.lrs))
            .set_list("sweep.beta1", floats(&self.beta1s))
            .set_list("sweep.beta2", floats(&self.beta2s))
            .set_list("sweep.lambda2", floats(&self.lambda2s))
            .set_list("sweep.lambda3", floats(&self.lambda3s))
            .set_list("sweep.seeds", &self.seeds);
        w.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let s = ExperimentSpec::parse("", "t").unwrap();
        assert_eq!(s.n_samples, 10_000);
        assert_eq!(s.schedule.total_steps, 20_000);
        assert_eq!(s.schedule.warmup_steps, 200);
        let text = "distribution.tag = sunshine\ndistribution.rotation = 0.3\nseed = 9\nloss.m_spacing = 7\nschedule.lr = 0.1\nminibatch = 64\noutputs = somewhere\n";
        let s = ExperimentSpec::parse(text, "t").unwrap();
        assert_eq!(s.outputs, Some(PathBuf::from("somewhere")));
        let again = ExperimentSpec::parse(&s.to_text(), "t").unwrap();
        assert_eq!(ExperimentSpec { outputs: None, ..s.clone() }, again);
        assert!(!s.to_text().contains("outputs"));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            ExperimentSpec::parse("distribution.tag = banana\n", "t"),
            Err(HarnessError::Config { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentSpec::parse("seed = 1\nloss.bta1 = 2\n", "t"),
            Err(HarnessError::Config { line: 2, .. })
        ));
        let s = ExperimentSpec::parse("distribution.tag = x\ndistribution.along_var = 3\n", "t").unwrap();
        assert_eq!(s.validate().unwrap_err().exit_code(), crate::error::exit::USAGE);
        assert!(ExperimentSpec::parse("loss.lambda1 = 1\n", "t").unwrap().validate().is_err());
        // parameters that the tag would ignore
        assert!(matches!(
            ExperimentSpec::parse("distribution.tag = x\nseed = 2\ndistribution.nu = 4\n", "t"),
            Err(HarnessError::Config { line: 3, .. })
        ));
        assert!(matches!(
            ExperimentSpec::parse("input = a.csv\nn_samples = 5\n", "t"),
            Err(HarnessError::Config { line: 2, .. })
        ));
    }

    #[test]
    fn grid_collapses_beta_for_vcreg() {
        let text = "sweep.alpha = 0.5, 0.99\nsweep.lr = 0.05, 0.005\nsweep.beta1 = 1, 10\nsweep.beta2 = 0, 0.1\nsweep.seeds = 1, 2, 3\n";
        let s = SweepSpec::parse(text, "t").unwrap();
        assert_eq!(s.grid().len(), 2 * 2 + 2 * 2 * 4);
        assert_eq!(s.jobs().len(), 3 * s.grid().len());
        assert_eq!(s.run_count(), s.jobs().len());
        let again = SweepSpec::parse(&s.to_text(), "t").unwrap();
        assert_eq!(again, s);
        let sun = SweepSpec::parse("distribution.tag = sunshine\nsweep.lr = 0.1, 0.2\n", "t").unwrap();
        assert_eq!(SweepSpec::parse(&sun.to_text(), "t").unwrap(), sun);
    }

    #[test]
    fn jobs_share_data_seeds_across_configs() {
        let s = SweepSpec::parse("sweep.lr = 0.1, 0.2\nsweep.seeds = 4, 5\n", "t").unwrap();
        let jobs = s.jobs();
        let at = |cfg: usize, seed: u64| jobs.iter().find(|j| j.config_index == cfg && j.sweep_seed == seed).unwrap();
        assert_eq!(at(0, 4).spec.data_seed(), at(1, 4).spec.data_seed());
        assert_ne!(at(0, 4).spec.data_seed(), at(0, 5).spec.data_seed());
        assert_ne!(at(0, 4).spec.optimizer_seed(), at(1, 4).spec.optimizer_seed());
    }

    #[test]
    fn oversized_grids_are_refused() {
        let axis: Vec<String> = (1..=40).map(|i| i.to_string()).collect();
        let axis = axis.join(",");
        let text = format!("sweep.lr = {axis}\nsweep.beta1 = {axis}\nsweep.beta2 = {axis}\nsweep.lambda2 = {axis}\n");
        assert!(matches!(SweepSpec::parse(&text, "t"), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn alpha_axis_needs_a_mixture() {
        let err = SweepSpec::parse("distribution.tag = x\nsweep.alpha = 0.1\n", "t").unwrap_err();
        assert!(matches!(err, HarnessError::Config { line: 2, .. }));
    }
}

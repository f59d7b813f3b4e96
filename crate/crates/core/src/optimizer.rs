//! Plain gradient descent over sample coordinates with a warm-up/cosine schedule.

use rand::seq::index::sample as sample_indices;

use crate::error::{Error, Result};
use crate::losses::{default_m, e2mc_metric, evaluate, kl_to_chi, Components, LossConfig};
use crate::metrics::w1_radii_to_chi;
use crate::rng::{derive_seed, rng_from_seed};
use crate::sample::{push_float, SampleSet};

/// Coordinates beyond this magnitude abort a run.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub base_lr: f64,
    pub warmup_steps: usize,
    pub total_steps: usize,
    pub final_lr_fraction: f64,
}

impl ScheduleConfig {
    pub fn new(base_lr: f64, warmup_steps: usize, total_steps: usize, final_lr_fraction: f64) -> Result<Self> {
        let s = Self {
            base_lr,
            warmup_steps,
            total_steps,
            final_lr_fraction,
        };
        s.validate()?;
        Ok(s)
    }

    /// Warm-up over the first 1% of the steps, cosine decay to zero.
    pub fn with_default_warmup(base_lr: f64, total_steps: usize) -> Result<Self> {
        Self::new(base_lr, total_steps / 100, total_steps, 0.0)
    }

    /// Fixed step size throughout.
    pub fn constant(lr: f64, total_steps: usize) -> Result<Self> {
        Self::new(lr, 0, total_steps, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0) || !self.base_lr.is_finite() {
            return Err(Error::Config(format!("base_lr must be positive, got {}", self.base_lr)));
        }
        if self.total_steps == 0 {
            return Err(Error::Config("total_steps must be >= 1".into()));
        }
        if self.warmup_steps > self.total_steps {
            return Err(Error::Config(format!(
                "warmup_steps {} exceeds total_steps {}",
                self.warmup_steps, self.total_steps
            )));
        }
        if !(0.0..=1.0).contains(&self.final_lr_fraction) {
            return Err(Error::Config(format!(
                "final_lr_fraction must lie in [0, 1], got {}",
                self.final_lr_fraction
            )));
        }
        Ok(())
    }

    pub fn lr_at(&self, step: usize) -> Result<f64> {
        if step > self.total_steps {
            return Err(Error::Domain(format!(
                "step {step} outside [0, {}]",
                self.total_steps
            )));
        }
        if step < self.warmup_steps {
            return Ok(self.base_lr * step as f64 / self.warmup_steps as f64);
        }
        let span = self.total_steps - self.warmup_steps;
        if span == 0 {
            return Ok(self.base_lr);
        }
        let progress = (step - self.warmup_steps) as f64 / span as f64;
        let f = self.final_lr_fraction;
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        Ok(self.base_lr * (f + (1.0 - f) * cosine))
    }
}

/// Diagnostics evaluated at recorded steps on request.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Snapshot {
    pub kl_to_chi: Option<f64>,
    pub e2mc: Option<f64>,
    pub w1_radii_to_chi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub lr: f64,
    pub total: f64,
    pub components: Components,
    /// `β₁·radial_ce - β₂·radial_entropy` at this step.
    pub radial_gaussianization: f64,
    pub snapshot: Option<Snapshot>,
}

impl TrajectoryRecord {
    pub const HEADER: [&'static str; 13] = [
        "step",
        "lr",
        "total",
        "invariance",
        "variance",
        "covariance",
        "radial_ce",
        "radial_entropy",
        "radial_w1",
        "radial_gaussianization",
        "kl_to_chi",
        "e2mc",
        "w1_radii_to_chi",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Record every this many steps, plus step 0 and the final step.
    pub record_every: usize,
    /// Rows per step; `None` uses all rows.
    pub minibatch: Option<usize>,
    /// Evaluate [`Snapshot`] diagnostics at each record.
    pub snapshots: bool,
    /// Reference draws for the W1 snapshot.
    pub metric_reps: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            record_every: 100,
            minibatch: None,
            snapshots: false,
            metric_reps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: SampleSet,
    pub records: Vec<TrajectoryRecord>,
}

/// Runs `total_steps` updates `z ← z - lr_s ∇L(z)`, `s = 1..=T`.
///
/// `seed` only drives stochastic loss terms (W1 reference draws), minibatch
/// selection and snapshot reference draws, so runs are reproducible bit for bit.
pub fn optimize_samples(
    init: &SampleSet,
    cfg: &LossConfig,
    schedule: &ScheduleConfig,
    seed: u64,
    opts: &OptimizeOptions,
) -> Result<Trajectory> {
    cfg.validate()?;
    schedule.validate()?;
    if cfg.lambda1 > 0.0 {
        return Err(Error::Config("single-view optimisation cannot use the invariance term".into()));
    }
    if opts.record_every == 0 {
        return Err(Error::Config("record_every must be >= 1".into()));
    }
    let batch = match opts.minibatch {
        Some(b) if b < 2 => return Err(Error::Config("minibatch must be >= 2".into())),
        Some(b) if b < init.count() => Some(b),
        _ => None,
    };
    let total = schedule.total_steps;
    let mut z = init.clone();
    let mut records = Vec::with_capacity(total / opts.record_every + 2);
    let loss_seed = derive_seed(seed, 1);
    let batch_seed = derive_seed(seed, 2);
    let metric_seed = derive_seed(seed, 3);

    for step in 0..=total {
        let record = step % opts.record_every == 0 || step == total;
        let updating = step < total;
        let step_seed = derive_seed(loss_seed, step as u64);
        let diverged = |reason: String| Error::Divergence { step, reason };

        let full = if record || (updating && batch.is_none()) {
            let report = evaluate(&z, None, cfg, step_seed, updating && batch.is_none())
                .map_err(|e| numerical(e, step))?;
            if !report.total.is_finite() {
                return Err(diverged(format!("loss is {}", report.total)));
            }
            Some(report)
        } else {
            None
        };

        if record {
            let report = full.as_ref().expect("evaluated above");
            records.push(TrajectoryRecord {
                step,
                lr: schedule.lr_at(step)?,
                total: report.total,
                components: report.components,
                radial_gaussianization: report.components.radial_gaussianization(cfg),
                snapshot: opts
                    .snapshots
                    .then(|| snapshot(&z, opts.metric_reps, derive_seed(metric_seed, step as u64))),
            });
        }
        if !updating {
            break;
        }

        let lr = schedule.lr_at(step + 1)?;
        match batch {
            None => {
                let grad = full.and_then(|r| r.gradient).expect("gradient requested");
                apply_update(z.data_mut(), &grad, lr, step + 1)?;
            }
            Some(b) => {
                let mut rng = rng_from_seed(derive_seed(batch_seed, step as u64));
                let mut rows = sample_indices(&mut rng, z.count(), b).into_vec();
                rows.sort_unstable();
                let sub = z.select(&rows)?;
                let report = evaluate(&sub, None, cfg, step_seed, true).map_err(|e| numerical(e, step))?;
                let grad = report.gradient.expect("gradient requested");
                let d = z.dim();
                let data = z.data_mut();
                for (k, &i) in rows.iter().enumerate() {
                    apply_update(&mut data[i * d..(i + 1) * d], &grad[k * d..(k + 1) * d], lr, step + 1)?;
                }
            }
        }
    }
    Ok(Trajectory { samples: z, records })
}

fn apply_update(z: &mut [f64], grad: &[f64], lr: f64, step: usize) -> Result<()> {
    for (x, g) in z.iter_mut().zip(grad) {
        if !g.is_finite() {
            return Err(Error::Divergence {
                step,
                reason: format!("gradient entry is {g}"),
            });
        }
        *x -= lr * g;
        if !x.is_finite() || x.abs() > DIVERGENCE_BOUND {
            return Err(Error::Divergence {
                step,
                reason: format!("coordinate reached {x:e}"),
            });
        }
    }
    Ok(())
}

/// Loss failures mid-run are reported as divergence at that step.
fn numerical(e: Error, step: usize) -> Error {
    match e {
        Error::Config(_) | Error::Shape(_) => e,
        other => Error::Divergence {
            step,
            reason: other.to_string(),
        },
    }
}

fn snapshot(z: &SampleSet, reps: usize, seed: u64) -> Snapshot {
    let m = default_m(z.count());
    Snapshot {
        kl_to_chi: kl_to_chi(z, m).ok(),
        e2mc: e2mc_metric(z, m).ok(),
        w1_radii_to_chi: w1_radii_to_chi(z, reps.max(1), seed).ok().map(|e| e.mean),
    }
}

/// Trajectory CSV: header row then one row per record. Missing diagnostics
/// are left empty.
pub fn trajectory_csv(records: &[TrajectoryRecord], comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        for line in c.lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push_str("\r\n");
        }
    }
    s.push_str(&TrajectoryRecord::HEADER.join(","));
    s.push_str("\r\n");
    for r in records {
        s.push_str(&r.step.to_string());
        let snap = r.snapshot.unwrap_or_default();
        let fields = [Some(r.lr), Some(r.total)]
            .into_iter()
            .chain(r.components.values().map(Some))
            .chain([
                Some(r.radial_gaussianization),
                snap.kl_to_chi,
                snap.e2mc,
                snap.w1_radii_to_chi,
            ]);
        for v in fields {
            s.push(',');
            if let Some(v) = v {
                push_float(&mut s, v);
            }
        }
        s.push_str("\r\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample_gaussian;

    #[test]
    fn schedule_endpoints() {
        let s = ScheduleConfig::new(0.1, 10, 100, 0.0).unwrap();
        assert_eq!(s.lr_at(0).unwrap(), 0.0);
        assert_eq!(s.lr_at(10).unwrap(), 0.1);
        assert!(s.lr_at(100).unwrap().abs() < 1e-18);
        assert!((s.lr_at(5).unwrap() - 0.05).abs() < 1e-15);
        assert!((s.lr_at(55).unwrap() - 0.05).abs() < 1e-15);
        assert!(s.lr_at(101).is_err());
        let floor = ScheduleConfig::new(0.1, 0, 100, 0.25).unwrap();
        assert!((floor.lr_at(100).unwrap() - 0.025).abs() < 1e-15);
        assert!(ScheduleConfig::new(0.1, 11, 10, 0.0).is_err());
        assert!(ScheduleConfig::new(0.0, 0, 10, 0.0).is_err());
        assert!(ScheduleConfig::new(0.1, 0, 0, 0.0).is_err());
        let c = ScheduleConfig::constant(0.3, 7).unwrap();
        assert!((0..=7).all(|k| c.lr_at(k).unwrap() == 0.3));
    }

    #[test]
    fn schedule_is_monotone_after_warmup() {
        let s = ScheduleConfig::with_default_warmup(0.5, 2000).unwrap();
        let lrs: Vec<f64> = (0..=2000).map(|k| s.lr_at(k).unwrap()).collect();
        assert!(lrs[..=20].windows(2).all(|w| w[1] >= w[0]));
        assert!(lrs[20..].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_weights_leave_samples_untouched() {
        let z = sample_gaussian(64, 3, 1).unwrap();
        let sched = ScheduleConfig::with_default_warmup(0.1, 50).unwrap();
        let t = optimize_samples(&z, &LossConfig::default(), &sched, 9, &OptimizeOptions::default()).unwrap();
        assert_eq!(t.samples, z);
    }

    #[test]
    fn record_cadence() {
        let z = sample_gaussian(64, 2, 1).unwrap();
        let sched = ScheduleConfig::with_default_warmup(0.01, 250).unwrap();
        let opts = OptimizeOptions {
            record_every: 100,
            ..OptimizeOptions::default()
        };
        let t = optimize_samples(&z, &LossConfig::vcreg(1.0, 1.0), &sched, 0, &opts).unwrap();
        let steps: Vec<usize> = t.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 100, 200, 250]);
        let csv = trajectory_csv(&t.records, &[]);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("step,lr,total,"));
    }

    #[test]
    fn divergence_names_the_step() {
        let z = sample_gaussian(64, 2, 1).unwrap();
        let sched = ScheduleConfig::constant(1e9, 10).unwrap();
        let cfg = LossConfig {
            beta1: 1.0,
            ..LossConfig::default()
        };
        match optimize_samples(&z, &cfg, &sched, 0, &OptimizeOptions::default()) {
            Err(Error::Divergence { step, .. }) => assert!((1..=10).contains(&step)),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn minibatch_only_moves_selected_rows() {
        let z = sample_gaussian(50, 2, 3).unwrap();
        let sched = ScheduleConfig::constant(0.01, 1).unwrap();
        let opts = OptimizeOptions {
            minibatch: Some(10),
            ..OptimizeOptions::default()
        };
        let t = optimize_samples(&z, &LossConfig::vcreg(1.0, 1.0), &sched, 4, &opts).unwrap();
        let moved = (0..50).filter(|&i| t.samples.row(i) != z.row(i)).count();
        assert!(moved <= 10 && moved > 0);
    }
}

//! Distances and shape diagnostics: KS statistics, 1D and 2D Wasserstein-1,
//! covariance summaries.

use std::f64::consts::PI;

use crate::distributions::{sample_gaussian, unit_angle};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::sample::{norm, SampleSet};
use crate::special::ChiModel;

/// Smallest sample size accepted by the statistical diagnostics.
pub const MIN_DIAGNOSTIC_SAMPLES: usize = 100;

/// Largest instance accepted by the exact assignment solver.
pub const EXACT_ASSIGNMENT_LIMIT: usize = 2000;

/// Default number of projection angles for the sliced distance.
pub const SLICED_PROJECTIONS: usize = 128;

/// Default number of reference draws for the W1 diagnostics.
pub const METRIC_REPS: usize = 5;

fn require_diagnostic_size(n: usize) -> Result<()> {
    if n < MIN_DIAGNOSTIC_SAMPLES {
        return Err(Error::Degenerate(format!(
            "diagnostic needs at least {MIN_DIAGNOSTIC_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// One-sample Kolmogorov–Smirnov statistic of `values` against `cdf`.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// KS statistic of the polar angles (mapped to `[0, 1)`) against uniform.
pub fn ks_uniform_angles(z: &SampleSet) -> Result<f64> {
    if z.dim() != 2 {
        return Err(Error::UnsupportedDimension(z.dim()));
    }
    require_diagnostic_size(z.count())?;
    let angles: Vec<f64> = z.rows().map(|r| unit_angle(r[0], r[1])).collect();
    Ok(ks_statistic(&angles, |u| u.clamp(0.0, 1.0)))
}

/// KS statistic of the radii against chi(d).
pub fn ks_radii_chi(z: &SampleSet) -> Result<f64> {
    require_diagnostic_size(z.count())?;
    let chi = ChiModel::new(z.dim())?;
    Ok(ks_statistic(&z.radii(), |r| chi.cdf_unchecked(r)))
}

/// Sorted-pair W1 between two equal-size 1D samples.
pub fn w1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("w1_1d needs at least one value".into()));
    }
    Ok(w1_sorted(&sorted(a), &sorted(b)))
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn w1_sorted(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Mean and standard error over repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_values(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let se = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Self { mean, se }
    }
}

/// W1 between the radii of `z` and `reps` fresh chi(d) draws of equal size.
pub fn w1_radii_to_chi(z: &SampleSet, reps: usize, seed: u64) -> Result<Estimate> {
    require_diagnostic_size(z.count())?;
    if reps == 0 {
        return Err(Error::Config("reps must be >= 1".into()));
    }
    let chi = ChiModel::new(z.dim())?;
    let radii = sorted(&z.radii());
    let values = (0..reps)
        .map(|k| {
            let reference = sorted(&chi.sample(z.count(), derive_seed(seed, k as u64))?);
            Ok(w1_sorted(&radii, &reference))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_values(&values))
}

/// Exact W1 between two equal-size point clouds: the optimal assignment cost
/// (mean matched Euclidean distance).
pub fn w1_2d_exact(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.count();
    if n > EXACT_ASSIGNMENT_LIMIT {
        return Err(Error::Size {
            size: n,
            limit: EXACT_ASSIGNMENT_LIMIT,
        });
    }
    let d = a.dim();
    let (pa, pb) = (a.as_slice(), b.as_slice());
    let cost = |i: usize, j: usize| {
        let mut s = 0.0;
        for k in 0..d {
            let t = pa[i * d + k] - pb[j * d + k];
            s += t * t;
        }
        s.sqrt()
    };
    let assignment = min_cost_assignment(n, cost);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
    Ok(total / n as f64)
}

fn check_pair(a: &SampleSet, b: &SampleSet) -> Result<()> {
    if a.count() != b.count() || a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "point clouds differ in shape: {}x{} vs {}x{}",
            a.count(),
            a.dim(),
            b.count(),
            b.dim()
        )));
    }
    Ok(())
}

/// Shortest-augmenting-path Hungarian method with potentials, O(n³).
/// Returns, for each row, the assigned column.
pub fn min_cost_assignment(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    // 1-based arrays with a virtual column 0, as in the classic formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// `max_φ (1/P) Σ_k |cos(φ - kπ/P)|`: the largest mean projected length of a
/// unit vector on the angle grid. Dividing by it keeps the sliced distance a
/// lower bound of the exact one.
fn grid_projection_constant(projections: usize) -> f64 {
    let p = projections as f64;
    let avg = |phi: f64| (0..projections).map(|k| (phi - k as f64 * PI / p).cos().abs()).sum::<f64>() / p;
    // Periodic in φ with period π/P.
    const STEPS: usize = 4096;
    (0..=STEPS)
        .map(|s| avg(s as f64 * PI / p / STEPS as f64))
        .fold(0.0, f64::max)
}

/// Sliced W1 on the deterministic grid `θ_k = kπ/P`, rescaled by the grid's
/// mean projection length so that it matches W1 in scale (≈ π/2 · raw mean).
pub fn w1_2d_sliced(a: &SampleSet, b: &SampleSet, projections: usize) -> Result<f64> {
    check_pair(a, b)?;
    if a.dim() != 2 {
        return Err(Error::UnsupportedDimension(a.dim()));
    }
    if projections == 0 {
        return Err(Error::Config("projections must be >= 1".into()));
    }
    let mut total = 0.0;
    for k in 0..projections {
        let theta = k as f64 * PI / projections as f64;
        let (c, s) = (theta.cos(), theta.sin());
        let project = |z: &SampleSet| sorted(&z.rows().map(|r| c * r[0] + s * r[1]).collect::<Vec<_>>());
        total += w1_sorted(&project(a), &project(b));
    }
    Ok(total / projections as f64 / grid_projection_constant(projections))
}

/// W1 between `z` and `reps` fresh equal-size N(0, I) draws; exact assignment
/// up to [`EXACT_ASSIGNMENT_LIMIT`] points, sliced beyond.
pub fn w1_to_gaussian(z: &SampleSet, reps: usize, seed: u64) -> Result<Estimate> {
    if reps == 0 {
        return Err(Error::Config("reps must be >= 1".into()));
    }
    let values = (0..reps)
        .map(|k| {
            let g = sample_gaussian(z.count(), z.dim(), derive_seed(seed, k as u64))?;
            if z.count() <= EXACT_ASSIGNMENT_LIMIT {
                w1_2d_exact(z, &g)
            } else {
                w1_2d_sliced(z, &g, SLICED_PROJECTIONS)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::from_values(&values))
}

/// Largest absolute off-diagonal entry of the unbiased covariance.
pub fn cov_offdiag_max(z: &SampleSet) -> f64 {
    let d = z.dim();
    let c = z.covariance();
    let mut m: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            if a != b {
                m = m.max(c[a * d + b].abs());
            }
        }
    }
    m
}

/// Norm of the sample mean.
pub fn mean_norm(z: &SampleSet) -> f64 {
    norm(&z.mean())
}

/// Summary diagnostics of one sample set. Angular and 2D-transport entries
/// exist only for planar data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub w1_radii_to_chi: f64,
    pub w1_radii_to_chi_se: f64,
    pub w1_2d_to_gaussian: Option<f64>,
    pub w1_2d_to_gaussian_se: Option<f64>,
    pub ks_angles_uniform: Option<f64>,
    pub ks_radii_chi: f64,
    pub cov_offdiag_max: f64,
    pub mean_norm: f64,
}

impl MetricReport {
    pub const HEADER: [&'static str; 8] = [
        "w1_radii_to_chi",
        "w1_radii_to_chi_se",
        "w1_2d_to_gaussian",
        "w1_2d_to_gaussian_se",
        "ks_angles_uniform",
        "ks_radii_chi",
        "cov_offdiag_max",
        "mean_norm",
    ];

    pub fn compute(z: &SampleSet, reps: usize, seed: u64) -> Result<Self> {
        let w1 = w1_radii_to_chi(z, reps, derive_seed(seed, 0))?;
        let (w2, ks_angles) = if z.dim() == 2 {
            (
                Some(w1_to_gaussian(z, reps, derive_seed(seed, 1))?),
                Some(ks_uniform_angles(z)?),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            w1_radii_to_chi: w1.mean,
            w1_radii_to_chi_se: w1.se,
            w1_2d_to_gaussian: w2.map(|e| e.mean),
            w1_2d_to_gaussian_se: w2.map(|e| e.se),
            ks_angles_uniform: ks_angles,
            ks_radii_chi: ks_radii_chi(z)?,
            cov_offdiag_max: cov_offdiag_max(z),
            mean_norm: mean_norm(z),
        })
    }

    /// Values in [`Self::HEADER`] order; absent entries are `None`.
    pub fn values(&self) -> [Option<f64>; 8] {
        [
            Some(self.w1_radii_to_chi),
            Some(self.w1_radii_to_chi_se),
            self.w1_2d_to_gaussian,
            self.w1_2d_to_gaussian_se,
            self.ks_angles_uniform,
            Some(self.ks_radii_chi),
            Some(self.cov_offdiag_max),
            Some(self.mean_norm),
        ]
    }
}

/// Equal-width histogram: `edges.len() == counts.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bins `values` over `[lo, hi]`; values outside the range are dropped.
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            if v >= lo && v <= hi {
                let k = (((v - lo) / width) as usize).min(bins - 1);
                counts[k] += 1;
            }
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts normalised to a density over the binned range.
    pub fn density(&self) -> Vec<f64> {
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, e)| c as f64 / total / (e[1] - e[0]))
            .collect()
    }

    /// `lo,hi,count` rows under a header.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\r\n");
        for (c, e) in self.counts.iter().zip(self.edges.windows(2)) {
            s.push_str(&format!("{},{},{c}\r\n", e[0], e[1]));
        }
        s
    }
}

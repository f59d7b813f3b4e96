//! Synthetic sample generators.
//!
//! All generators are pure functions of their parameters and a 64-bit seed.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};
use crate::sample::{norm, SampleSet};

/// Default variance along the chosen diagonal of the X-distribution.
pub const X_ALONG_VAR: f64 = 1.9999;
/// Default variance across the chosen diagonal of the X-distribution.
pub const X_PERP_VAR: f64 = 1e-4;

pub const SUNSHINE_SLICES: usize = 12;

/// Two-dimensional cross: each point lies near one of the diagonals
/// `(1,1)/√2` or `(1,-1)/√2`, picked with probability ½.
///
/// With `along_var + perp_var = 2` the population covariance is the identity
/// while the angular law has four sharp modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XDistribution {
    pub along_var: f64,
    pub perp_var: f64,
}

impl Default for XDistribution {
    fn default() -> Self {
        Self {
            along_var: X_ALONG_VAR,
            perp_var: X_PERP_VAR,
        }
    }
}

impl XDistribution {
    pub fn new(along_var: f64, perp_var: f64) -> Result<Self> {
        if !(along_var >= 0.0 && perp_var >= 0.0) {
            return Err(Error::Config(format!(
                "X-distribution variances must be non-negative (along {along_var}, perp {perp_var})"
            )));
        }
        if (along_var + perp_var - 2.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "X-distribution needs along_var + perp_var = 2 for identity covariance, got {}",
                along_var + perp_var
            )));
        }
        Ok(Self { along_var, perp_var })
    }

    fn sample_row(&self, rng: &mut Rng, out: &mut [f64]) {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        let a = a * self.along_var.sqrt();
        let b = b * self.perp_var.sqrt();
        // a·u + b·v = ((a+b), (a-b))/√2 and a·v + b·u = ((a+b), (b-a))/√2
        // with u = (1,1)/√2, v = (1,-1)/√2.
        out[0] = (a + b) * FRAC_1_SQRT_2;
        let across = if rng.random::<bool>() { a - b } else { b - a };
        out[1] = across * FRAC_1_SQRT_2;
    }
}

/// Gaussian samples cut into pie slices with every even-indexed slice rotated
/// clockwise. Radii are untouched, so they stay chi(2)-distributed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sunshine {
    pub slices: usize,
    pub rotation: f64,
}

impl Default for Sunshine {
    fn default() -> Self {
        Self {
            slices: SUNSHINE_SLICES,
            rotation: TAU / SUNSHINE_SLICES as f64,
        }
    }
}

impl Sunshine {
    pub fn new(slices: usize, rotation: f64) -> Result<Self> {
        if slices < 4 || slices % 2 != 0 {
            return Err(Error::Config(format!(
                "sunshine needs an even slice count >= 4, got {slices}"
            )));
        }
        if !rotation.is_finite() {
            return Err(Error::Config("sunshine rotation must be finite".into()));
        }
        Ok(Self { slices, rotation })
    }

    pub fn with_slices(slices: usize) -> Result<Self> {
        Self::new(slices, TAU / slices as f64)
    }

    fn slice_index(&self, x: f64, y: f64) -> usize {
        let width = TAU / self.slices as f64;
        let theta = y.atan2(x).rem_euclid(TAU);
        ((theta / width) as usize).min(self.slices - 1)
    }

    fn sample_row(&self, rng: &mut Rng, out: &mut [f64]) {
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        if self.slice_index(x, y) % 2 == 0 {
            let (s, c) = (-self.rotation).sin_cos();
            out[0] = c * x - s * y;
            out[1] = s * x + c * y;
        } else {
            out[0] = x;
            out[1] = y;
        }
    }
}

/// Tags accepted wherever a distribution is named by string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistTag {
    Gaussian,
    X,
    Sunshine,
    StudentT,
    Sphere,
    Mixture,
}

impl FromStr for DistTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "x" => Ok(Self::X),
            "sunshine" => Ok(Self::Sunshine),
            "student_t" | "student-t" | "t" => Ok(Self::StudentT),
            "sphere" | "uniform_sphere" => Ok(Self::Sphere),
            "mixture" => Ok(Self::Mixture),
            other => Err(Error::Config(format!("unknown distribution tag {other:?}"))),
        }
    }
}

impl fmt::Display for DistTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::X => "x",
            Self::Sunshine => "sunshine",
            Self::StudentT => "student_t",
            Self::Sphere => "sphere",
            Self::Mixture => "mixture",
        })
    }
}

/// A fully parameterised generator.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Gaussian { dim: usize },
    X(XDistribution),
    Sunshine(Sunshine),
    /// Isotropic Student-t rescaled to identity covariance.
    StudentT { dim: usize, nu: f64 },
    UniformSphere { dim: usize, radius: f64 },
    Mixture(MixtureSpec),
}

impl Distribution {
    pub fn student_t(dim: usize, nu: f64) -> Result<Self> {
        if !(nu > 2.0) {
            return Err(Error::Config(format!("Student-t needs nu > 2, got {nu}")));
        }
        check_dim(dim)?;
        Ok(Self::StudentT { dim, nu })
    }

    pub fn uniform_sphere(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
        }
        check_dim(dim)?;
        Ok(Self::UniformSphere { dim, radius })
    }

    pub fn tag(&self) -> DistTag {
        match self {
            Self::Gaussian { .. } => DistTag::Gaussian,
            Self::X(_) => DistTag::X,
            Self::Sunshine(_) => DistTag::Sunshine,
            Self::StudentT { .. } => DistTag::StudentT,
            Self::UniformSphere { .. } => DistTag::Sphere,
            Self::Mixture(_) => DistTag::Mixture,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Gaussian { dim } | Self::StudentT { dim, .. } | Self::UniformSphere { dim, .. } => {
                *dim
            }
            Self::X(_) | Self::Sunshine(_) => 2,
            Self::Mixture(m) => m.base.dim(),
        }
    }

    fn sample_row(&self, rng: &mut Rng, out: &mut [f64]) {
        match self {
            Self::Gaussian { .. } => {
                for v in out.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
            }
            Self::X(x) => x.sample_row(rng, out),
            Self::Sunshine(s) => s.sample_row(rng, out),
            Self::StudentT { nu, .. } => {
                for v in out.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
                let w: f64 = ChiSquared::new(*nu).expect("nu validated").sample(rng);
                let scale = 1.0 / ((w / nu).sqrt() * (nu / (nu - 2.0)).sqrt());
                for v in out.iter_mut() {
                    *v *= scale;
                }
            }
            Self::UniformSphere { radius, .. } => loop {
                for v in out.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
                let r = norm(out);
                if r > 0.0 {
                    for v in out.iter_mut() {
                        *v *= radius / r;
                    }
                    break;
                }
            },
            Self::Mixture(m) => {
                m.sample_row(rng, out);
            }
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        Ok(self.sample_labelled(n, seed)?.0)
    }

    /// Samples and, for mixtures, reports which rows came from the contaminant.
    pub fn sample_labelled(&self, n: usize, seed: u64) -> Result<(SampleSet, Vec<bool>)> {
        if n < 2 {
            return Err(Error::Degenerate(format!("need at least 2 samples, got {n}")));
        }
        let dim = self.dim();
        let mut rng = rng_from_seed(seed);
        let mut data = vec![0.0; n * dim];
        let mut labels = vec![false; n];
        for (row, label) in data.chunks_exact_mut(dim).zip(labels.iter_mut()) {
            *label = match self {
                Self::Mixture(m) => m.sample_row(&mut rng, row),
                _ => {
                    self.sample_row(&mut rng, row);
                    false
                }
            };
        }
        Ok((SampleSet::new(data, n, dim)?, labels))
    }
}

/// `alpha · contaminant + (1 - alpha) · base`, mixed row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub alpha: f64,
    pub base: Box<Distribution>,
    pub contaminant: Box<Distribution>,
}

impl MixtureSpec {
    pub fn new(alpha: f64, base: Distribution, contaminant: Distribution) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("mixture weight must lie in [0, 1], got {alpha}")));
        }
        if base.dim() != contaminant.dim() {
            return Err(Error::Config(format!(
                "mixture components differ in dimension ({} vs {})",
                base.dim(),
                contaminant.dim()
            )));
        }
        Ok(Self {
            alpha,
            base: Box::new(base),
            contaminant: Box::new(contaminant),
        })
    }

    /// The experiment mixture `alpha · X + (1 - alpha) · N(0, I)` in 2D.
    pub fn x_with_gaussian(alpha: f64, x: XDistribution) -> Result<Self> {
        Self::new(alpha, Distribution::Gaussian { dim: 2 }, Distribution::X(x))
    }

    fn sample_row(&self, rng: &mut Rng, out: &mut [f64]) -> bool {
        let pick = rng.random::<f64>() < self.alpha;
        if pick {
            self.contaminant.sample_row(rng, out);
        } else {
            self.base.sample_row(rng, out);
        }
        pick
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Config("dimension must be >= 1".into()));
    }
    Ok(())
}

pub fn sample_gaussian(n: usize, dim: usize, seed: u64) -> Result<SampleSet> {
    check_dim(dim)?;
    Distribution::Gaussian { dim }.sample(n, seed)
}

pub fn sample_x_distribution(n: usize, seed: u64, along_var: f64, perp_var: f64) -> Result<SampleSet> {
    Distribution::X(XDistribution::new(along_var, perp_var)?).sample(n, seed)
}

pub fn sample_sunshine(n: usize, seed: u64, slices: usize, rotation: f64) -> Result<SampleSet> {
    Distribution::Sunshine(Sunshine::new(slices, rotation)?).sample(n, seed)
}

pub fn sample_mixture(spec: &MixtureSpec, n: usize, seed: u64) -> Result<SampleSet> {
    Distribution::Mixture(spec.clone()).sample(n, seed)
}

pub fn sample_student_t_isotropic(n: usize, dim: usize, nu: f64, seed: u64) -> Result<SampleSet> {
    Distribution::student_t(dim, nu)?.sample(n, seed)
}

pub fn sample_uniform_sphere(n: usize, dim: usize, radius: f64, seed: u64) -> Result<SampleSet> {
    Distribution::uniform_sphere(dim, radius)?.sample(n, seed)
}

/// Points with the given radii on uniformly random directions.
pub fn radii_on_random_directions(radii: &[f64], dim: usize, seed: u64) -> Result<SampleSet> {
    check_dim(dim)?;
    let dirs = Distribution::uniform_sphere(dim, 1.0)?.sample(radii.len(), seed)?;
    let data = dirs
        .rows()
        .zip(radii)
        .flat_map(|(row, r)| row.iter().map(move |v| v * r))
        .collect();
    SampleSet::new(data, radii.len(), dim)
}

/// Angle of a 2D point mapped to `[0, 1)`.
pub fn unit_angle(x: f64, y: f64) -> f64 {
    let t = y.atan2(x).rem_euclid(TAU) / TAU;
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

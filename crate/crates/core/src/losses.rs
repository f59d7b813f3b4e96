//! Variance, invariance and covariance regularisers, the radial
//! Gaussianization loss and its Wasserstein variant.
//!
//! Every trainable term returns its value together with the exact gradient
//! with respect to the sample coordinates (row-major, same shape as the input).

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::sample::SampleSet;
use crate::special::ChiModel;

/// Choice of the spacing `m` of the m-spacing entropy estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MSpacing {
    /// `m = ⌊√N⌋`.
    #[default]
    Auto,
    Fixed(usize),
}

impl MSpacing {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            MSpacing::Auto => default_m(n),
            MSpacing::Fixed(m) => m,
        }
    }
}

impl fmt::Display for MSpacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MSpacing::Auto => f.write_str("auto"),
            MSpacing::Fixed(m) => write!(f, "{m}"),
        }
    }
}

/// `⌊√N⌋`, at least 1.
pub fn default_m(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

/// Weights and estimator settings shared by every loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Invariance weight.
    pub lambda1: f64,
    /// Variance-hinge weight.
    pub lambda2: f64,
    /// Covariance weight.
    pub lambda3: f64,
    /// Radial cross-entropy weight.
    pub beta1: f64,
    /// Radial entropy weight.
    pub beta2: f64,
    /// Weight of the sorted-pair radial W1 term.
    pub w1_weight: f64,
    /// Target standard deviation of the variance hinge.
    pub var_target: f64,
    /// Added under the square root of the variance hinge.
    pub var_eps: f64,
    pub m_spacing: MSpacing,
    /// Smallest admissible spacing or radius.
    pub pair_tie_eps: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            w1_weight: 0.0,
            var_target: 1.0,
            var_eps: 1e-4,
            m_spacing: MSpacing::Auto,
            pair_tie_eps: 1e-12,
        }
    }
}

impl LossConfig {
    pub fn vcreg(lambda2: f64, lambda3: f64) -> Self {
        Self {
            lambda2,
            lambda3,
            ..Self::default()
        }
    }

    pub fn radial_vcreg(lambda2: f64, lambda3: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            lambda2,
            lambda3,
            beta1,
            beta2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("w1_weight", self.w1_weight),
        ];
        for (name, w) in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Config(format!("{name} must be a finite non-negative weight, got {w}")));
            }
        }
        if !(self.var_eps > 0.0) {
            return Err(Error::Config(format!("var_eps must be positive, got {}", self.var_eps)));
        }
        if !(self.pair_tie_eps > 0.0) {
            return Err(Error::Config(format!(
                "pair_tie_eps must be positive, got {}",
                self.pair_tie_eps
            )));
        }
        if !self.var_target.is_finite() {
            return Err(Error::Config("var_target must be finite".into()));
        }
        if self.m_spacing == MSpacing::Fixed(0) {
            return Err(Error::Config("m_spacing must be >= 1".into()));
        }
        Ok(())
    }

    fn radial_active(&self) -> bool {
        self.beta1 > 0.0 || self.beta2 > 0.0
    }
}

/// A loss value with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub value: f64,
    pub gradient: Vec<f64>,
}

impl Term {
    fn zero(len: usize) -> Self {
        Self {
            value: 0.0,
            gradient: vec![0.0; len],
        }
    }
}

fn require_two(z: &SampleSet) -> Result<()> {
    if z.count() < 2 {
        return Err(Error::Degenerate("need at least 2 samples".into()));
    }
    Ok(())
}

/// `(1/d) Σ_j max(0, γ - √(Var(z^j) + ε))` with unbiased column variances.
pub fn variance_loss(z: &SampleSet, cfg: &LossConfig) -> Result<Term> {
    require_two(z)?;
    let (n, d) = (z.count(), z.dim());
    let mean = z.mean();
    let mut var = vec![0.0; d];
    for row in z.rows() {
        for j in 0..d {
            let c = row[j] - mean[j];
            var[j] += c * c;
        }
    }
    let mut value = 0.0;
    // per-column gradient coefficient; zero past the hinge
    let mut coeff = vec![0.0; d];
    for j in 0..d {
        var[j] /= (n - 1) as f64;
        let sd = (var[j] + cfg.var_eps).sqrt();
        let gap = cfg.var_target - sd;
        if gap > 0.0 {
            value += gap;
            coeff[j] = -1.0 / (d as f64 * (n - 1) as f64 * sd);
        }
    }
    let mut gradient = vec![0.0; n * d];
    for (g, row) in gradient.chunks_exact_mut(d).zip(z.rows()) {
        for j in 0..d {
            g[j] = coeff[j] * (row[j] - mean[j]);
        }
    }
    Ok(Term {
        value: value / d as f64,
        gradient,
    })
}

/// Invariance term with the gradients for both views.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTerm {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub gradient_prime: Vec<f64>,
}

/// `(1/N) Σ_i ‖z_i - z'_i‖²`.
pub fn invariance_loss(z: &SampleSet, zp: &SampleSet, _cfg: &LossConfig) -> Result<PairTerm> {
    if z.count() != zp.count() || z.dim() != zp.dim() {
        return Err(Error::Shape(format!(
            "views differ in shape: {}x{} vs {}x{}",
            z.count(),
            z.dim(),
            zp.count(),
            zp.dim()
        )));
    }
    let n = z.count() as f64;
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(z.as_slice().len());
    for (a, b) in z.as_slice().iter().zip(zp.as_slice()) {
        let diff = a - b;
        value += diff * diff;
        gradient.push(2.0 * diff / n);
    }
    let gradient_prime = gradient.iter().map(|g| -g).collect();
    Ok(PairTerm {
        value: value / n,
        gradient,
        gradient_prime,
    })
}

/// `(1/d) Σ_{a≠b} C_ab²` with `C` the unbiased empirical covariance.
pub fn covariance_loss(z: &SampleSet, _cfg: &LossConfig) -> Result<Term> {
    require_two(z)?;
    let (n, d) = (z.count(), z.dim());
    let cov = z.covariance();
    let mean = z.mean();
    let mut value = 0.0;
    for a in 0..d {
        for b in 0..d {
            if a != b {
                value += cov[a * d + b] * cov[a * d + b];
            }
        }
    }
    // ∂/∂z_kc = 4/(d(N-1)) Σ_{b≠c} C_cb (z_kb - μ_b)
    let scale = 4.0 / (d as f64 * (n - 1) as f64);
    let mut gradient = vec![0.0; n * d];
    let mut centred = vec![0.0; d];
    for (g, row) in gradient.chunks_exact_mut(d).zip(z.rows()) {
        for b in 0..d {
            centred[b] = row[b] - mean[b];
        }
        for c in 0..d {
            let mut acc = 0.0;
            for b in 0..d {
                if b != c {
                    acc += cov[c * d + b] * centred[b];
                }
            }
            g[c] = scale * acc;
        }
    }
    Ok(Term {
        value: value / d as f64,
        gradient,
    })
}

fn checked_radii(z: &SampleSet, eps: f64) -> Result<Vec<f64>> {
    let radii = z.radii();
    if let Some(index) = radii.iter().position(|&r| !(r > eps)) {
        return Err(Error::NearOrigin { index, eps });
    }
    Ok(radii)
}

fn cross_entropy_of_radii(radii: &[f64], z: &SampleSet, weight: f64) -> Term {
    let n = z.count() as f64;
    let k = (z.dim() - 1) as f64;
    let mut value = 0.0;
    let mut gradient = vec![0.0; z.as_slice().len()];
    for ((g, row), &r) in gradient.chunks_exact_mut(z.dim()).zip(z.rows()).zip(radii) {
        value += 0.5 * r * r - k * r.ln();
        let s = weight / n * (1.0 - k / (r * r));
        for (gj, x) in g.iter_mut().zip(row) {
            *gj = s * x;
        }
    }
    Term {
        value: weight * value / n,
        gradient,
    }
}

/// Monte-Carlo chi cross-entropy without its constant:
/// `(β₁/N) Σ_i (½‖z_i‖² - (d-1) ln ‖z_i‖)`.
pub fn radial_ce_loss(z: &SampleSet, cfg: &LossConfig) -> Result<Term> {
    let radii = checked_radii(z, cfg.pair_tie_eps)?;
    Ok(cross_entropy_of_radii(&radii, z, cfg.beta1))
}

/// Indices ordering `values` ascending; ties broken by index.
pub(crate) fn argsort(values: &[f64]) -> Vec<usize> {
    // Sorting (value, index) pairs keeps comparisons cache-local.
    let mut keyed: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
    keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// m-spacing differential entropy estimate
/// `(β₂/(N-m)) Σ_i ln((N+1)/m · (v_(i+m) - v_(i)))`, with the gradient with
/// respect to each (unsorted) input value.
///
/// Spacings below `tie_eps` are clamped and contribute no gradient.
pub fn m_spacing_entropy(values: &[f64], m: usize, beta2: f64, tie_eps: f64) -> Result<Term> {
    let n = values.len();
    if m == 0 {
        return Err(Error::Config("m-spacing needs m >= 1".into()));
    }
    if n <= m {
        return Err(Error::Degenerate(format!(
            "m-spacing needs more than m = {m} values, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("m-spacing input contains non-finite values".into()));
    }
    let order = argsort(values);
    let scale = (n + 1) as f64 / m as f64;
    let c = beta2 / (n - m) as f64;
    let mut value = 0.0;
    let mut gradient = vec![0.0; n];
    for i in 0..n - m {
        let (lo, hi) = (order[i], order[i + m]);
        let gap = values[hi] - values[lo];
        if gap > tie_eps {
            value += (scale * gap).ln();
            gradient[hi] += c / gap;
            gradient[lo] -= c / gap;
        } else {
            value += (scale * tie_eps).ln();
        }
    }
    Ok(Term {
        value: c * value,
        gradient,
    })
}

fn entropy_of_radii(radii: &[f64], z: &SampleSet, m: usize, weight: f64, eps: f64) -> Result<Term> {
    let h = m_spacing_entropy(radii, m, weight, eps)?;
    let mut gradient = vec![0.0; z.as_slice().len()];
    for ((g, row), (&r, &gr)) in gradient
        .chunks_exact_mut(z.dim())
        .zip(z.rows())
        .zip(radii.iter().zip(&h.gradient))
    {
        let s = gr / r;
        for (gj, x) in g.iter_mut().zip(row) {
            *gj = s * x;
        }
    }
    Ok(Term {
        value: h.value,
        gradient,
    })
}

/// `r(Z; β₁, β₂)`: radial cross-entropy minus the m-spacing entropy of the radii.
pub fn radial_gaussianization_loss(z: &SampleSet, cfg: &LossConfig) -> Result<Term> {
    let len = z.as_slice().len();
    if !cfg.radial_active() {
        return Ok(Term::zero(len));
    }
    let radii = checked_radii(z, cfg.pair_tie_eps)?;
    let mut out = cross_entropy_of_radii(&radii, z, cfg.beta1);
    if cfg.beta2 > 0.0 {
        let m = cfg.m_spacing.resolve(z.count());
        let h = entropy_of_radii(&radii, z, m, cfg.beta2, cfg.pair_tie_eps)?;
        out.value -= h.value;
        for (g, hg) in out.gradient.iter_mut().zip(&h.gradient) {
            *g -= hg;
        }
    }
    Ok(out)
}

/// Estimated KL divergence from the radius law of `z` to chi(d), constant included.
pub fn kl_to_chi(z: &SampleSet, m: usize) -> Result<f64> {
    let eps = LossConfig::default().pair_tie_eps;
    let radii = checked_radii(z, eps)?;
    let chi = ChiModel::new(z.dim())?;
    let ce = cross_entropy_of_radii(&radii, z, 1.0).value + chi.log_norm();
    let h = m_spacing_entropy(&radii, m, 1.0, eps)?.value;
    Ok(ce - h)
}

/// `w1_weight · (1/K) Σ |r_(i) - u_(i)|` against a fresh chi(d) draw.
pub fn w1_radial_loss(z: &SampleSet, cfg: &LossConfig, seed: u64) -> Result<Term> {
    let reference = ChiModel::new(z.dim())?.sample(z.count(), seed)?;
    w1_radial_loss_against(z, &reference, cfg.w1_weight)
}

/// Sorted-pair W1 between the radii of `z` and an explicit reference sample.
pub fn w1_radial_loss_against(z: &SampleSet, reference: &[f64], weight: f64) -> Result<Term> {
    let k = z.count();
    if k == 0 {
        return Err(Error::EmptyInput("W1 radial loss needs samples".into()));
    }
    if reference.len() != k {
        return Err(Error::Shape(format!(
            "reference has {} radii, expected {k}",
            reference.len()
        )));
    }
    let radii = z.radii();
    let order = argsort(&radii);
    let mut sorted_ref = reference.to_vec();
    sorted_ref.sort_unstable_by(f64::total_cmp);
    let mut value = 0.0;
    let mut gradient = vec![0.0; z.as_slice().len()];
    let dim = z.dim();
    for (&i, &u) in order.iter().zip(&sorted_ref) {
        let diff = radii[i] - u;
        value += diff.abs();
        let r = radii[i];
        if diff != 0.0 && r > 0.0 {
            let s = weight * diff.signum() / (k as f64 * r);
            for (g, x) in gradient[i * dim..(i + 1) * dim].iter_mut().zip(z.row(i)) {
                *g = s * x;
            }
        }
    }
    Ok(Term {
        value: weight * value / k as f64,
        gradient,
    })
}

/// Unweighted loss components, each summed over the available views.
///
/// Components whose weight is zero are not evaluated and read 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Components {
    pub invariance: f64,
    pub variance: f64,
    pub covariance: f64,
    pub radial_ce: f64,
    pub radial_entropy: f64,
    pub radial_w1: f64,
}

impl Components {
    pub const NAMES: [&'static str; 6] = [
        "invariance",
        "variance",
        "covariance",
        "radial_ce",
        "radial_entropy",
        "radial_w1",
    ];

    pub fn values(&self) -> [f64; 6] {
        [
            self.invariance,
            self.variance,
            self.covariance,
            self.radial_ce,
            self.radial_entropy,
            self.radial_w1,
        ]
    }

    /// Signed weights: the entropy enters the objective negatively.
    pub fn weights(cfg: &LossConfig) -> [f64; 6] {
        [
            cfg.lambda1,
            cfg.lambda2,
            cfg.lambda3,
            cfg.beta1,
            -cfg.beta2,
            cfg.w1_weight,
        ]
    }

    pub fn weighted_sum(&self, cfg: &LossConfig) -> f64 {
        self.values()
            .iter()
            .zip(Self::weights(cfg))
            .map(|(v, w)| if w == 0.0 { 0.0 } else { v * w })
            .sum()
    }

    /// `β₁·radial_ce - β₂·radial_entropy`.
    pub fn radial_gaussianization(&self, cfg: &LossConfig) -> f64 {
        cfg.beta1 * self.radial_ce - cfg.beta2 * self.radial_entropy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub components: Components,
    /// Gradient with respect to the first view.
    pub gradient: Option<Vec<f64>>,
    /// Gradient with respect to the second view, when one was given.
    pub gradient_prime: Option<Vec<f64>>,
}

/// Full objective: VICReg terms on both views, radial terms per view and the
/// optional radial W1 term.
pub fn total_loss(
    z: &SampleSet,
    zp: Option<&SampleSet>,
    cfg: &LossConfig,
    seed: u64,
) -> Result<LossReport> {
    evaluate(z, zp, cfg, seed, true)
}

/// As [`total_loss`], optionally skipping gradient assembly.
pub fn evaluate(
    z: &SampleSet,
    zp: Option<&SampleSet>,
    cfg: &LossConfig,
    seed: u64,
    with_gradient: bool,
) -> Result<LossReport> {
    cfg.validate()?;
    if cfg.lambda1 > 0.0 && zp.is_none() {
        return Err(Error::Config("lambda1 > 0 requires a second view".into()));
    }
    if let Some(zp) = zp {
        if zp.count() != z.count() || zp.dim() != z.dim() {
            return Err(Error::Shape("views differ in shape".into()));
        }
    }
    let mut comps = Components::default();
    let mut grad = vec![0.0; z.as_slice().len()];
    let mut grad_p = zp.map(|v| vec![0.0; v.as_slice().len()]);

    if cfg.lambda1 > 0.0 {
        let zp = zp.expect("checked above");
        let t = invariance_loss(z, zp, cfg)?;
        comps.invariance = t.value;
        axpy(&mut grad, cfg.lambda1, &t.gradient);
        if let Some(gp) = grad_p.as_mut() {
            axpy(gp, cfg.lambda1, &t.gradient_prime);
        }
    }

    let views: Vec<(&SampleSet, u64)> = std::iter::once((z, derive_seed(seed, 0)))
        .chain(zp.map(|v| (v, derive_seed(seed, 1))))
        .collect();
    for (k, (view, view_seed)) in views.into_iter().enumerate() {
        let target = if k == 0 {
            &mut grad
        } else {
            grad_p.as_mut().expect("second view present")
        };
        if cfg.lambda2 > 0.0 {
            let t = variance_loss(view, cfg)?;
            comps.variance += t.value;
            axpy(target, cfg.lambda2, &t.gradient);
        }
        if cfg.lambda3 > 0.0 {
            let t = covariance_loss(view, cfg)?;
            comps.covariance += t.value;
            axpy(target, cfg.lambda3, &t.gradient);
        }
        if cfg.radial_active() {
            let radii = checked_radii(view, cfg.pair_tie_eps)?;
            if cfg.beta1 > 0.0 {
                let t = cross_entropy_of_radii(&radii, view, 1.0);
                comps.radial_ce += t.value;
                axpy(target, cfg.beta1, &t.gradient);
            }
            if cfg.beta2 > 0.0 {
                let m = cfg.m_spacing.resolve(view.count());
                let t = entropy_of_radii(&radii, view, m, 1.0, cfg.pair_tie_eps)?;
                comps.radial_entropy += t.value;
                axpy(target, -cfg.beta2, &t.gradient);
            }
        }
        if cfg.w1_weight > 0.0 {
            let t = w1_radial_loss(view, &LossConfig { w1_weight: 1.0, ..*cfg }, view_seed)?;
            comps.radial_w1 += t.value;
            axpy(target, cfg.w1_weight, &t.gradient);
        }
    }

    Ok(LossReport {
        total: comps.weighted_sum(cfg),
        components: comps,
        gradient: with_gradient.then_some(grad),
        gradient_prime: if with_gradient { grad_p } else { None },
    })
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (y, v) in acc.iter_mut().zip(x) {
        *y += a * v;
    }
}

/// Per-dimension entropy maximisation with whitening penalties:
/// `-(1/d) Σ_j H(z^j) + c(Z) + v(Z)`. Diagnostic only.
pub fn e2mc_metric(z: &SampleSet, m: usize) -> Result<f64> {
    let cfg = LossConfig::default();
    let d = z.dim();
    let mut entropy = 0.0;
    for j in 0..d {
        entropy += m_spacing_entropy(&z.column(j), m, 1.0, cfg.pair_tie_eps)?.value;
    }
    Ok(-entropy / d as f64 + covariance_loss(z, &cfg)?.value + variance_loss(z, &cfg)?.value)
}

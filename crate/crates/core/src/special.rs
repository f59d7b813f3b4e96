//! Scalar special functions and the chi distribution.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const LN_SQRT_2PI_TIMES: f64 = 2.506_628_274_631_000_5;

// Lanczos coefficients for g = 671/128 with 14 terms (Numerical Recipes, 3rd ed.).
const LANCZOS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let tmp = x + 5.242_187_5;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = 0.999_999_999_999_997_092;
    for c in LANCZOS {
        y += 1.0;
        ser += c / y;
    }
    tmp + (LN_SQRT_2PI_TIMES * ser / x).ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;
const FPMIN: f64 = 1e-300;

/// Regularized lower incomplete gamma P(a, x).
///
/// Series expansion below `x = a + 1`, Lentz continued fraction above.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("shape must be positive, got {a}")));
    }
    if x < 0.0 || x.is_nan() {
        return Err(Error::Domain(format!("argument must be non-negative, got {x}")));
    }
    Ok(lower_gamma_p(a, x))
}

fn lower_gamma_p(a: f64, x: f64) -> f64 {
    gamma_pq(a, x).0
}

fn upper_gamma_q(a: f64, x: f64) -> f64 {
    gamma_pq(a, x).1
}

/// `(P(a, x), Q(a, x))`, each computed from the expansion in which it is accurate.
fn gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefix = -x + a * x.ln() - log_gamma_unchecked(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        let p = (sum.ln() + log_prefix).exp().min(1.0);
        (p, 1.0 - p)
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        let q = (h.ln() + log_prefix).exp().min(1.0);
        (1.0 - q, q)
    }
}

/// Composite adaptive Simpson quadrature.
///
/// `[a, b]` is first cut into `panels` equal pieces so that narrow peaks are
/// not missed by the initial coarse evaluation.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            let mid = 0.5 * (lo + hi);
            let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            simpson_step(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, 48)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// The chi distribution with `dof` degrees of freedom: the law of the
/// Euclidean norm of a `dof`-dimensional standard normal vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiModel {
    dof: usize,
    /// `(d/2 - 1) ln 2 + ln Γ(d/2)`, the log of the density's normaliser.
    log_norm: f64,
}

impl ChiModel {
    pub fn new(dof: usize) -> Result<Self> {
        if dof == 0 {
            return Err(Error::Domain("chi degrees of freedom must be >= 1".into()));
        }
        let half = dof as f64 / 2.0;
        let log_norm = (half - 1.0) * std::f64::consts::LN_2 + log_gamma_unchecked(half);
        Ok(Self { dof, log_norm })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// `(d-1) ln r - r²/2 - log_norm`, defined for `r > 0`.
    pub fn log_pdf(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("chi log-density needs r > 0, got {r}")));
        }
        Ok(self.log_pdf_unchecked(r))
    }

    fn log_pdf_unchecked(&self, r: f64) -> f64 {
        let k = (self.dof - 1) as f64;
        let radial = if k == 0.0 { 0.0 } else { k * r.ln() };
        radial - 0.5 * r * r - self.log_norm
    }

    pub fn pdf(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        if r == 0.0 {
            return if self.dof == 1 { (-self.log_norm).exp() } else { 0.0 };
        }
        self.log_pdf_unchecked(r).exp()
    }

    /// `P(d/2, r²/2)`.
    pub fn cdf(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::Domain(format!("chi cdf needs r >= 0, got {r}")));
        }
        Ok(self.cdf_unchecked(r))
    }

    pub(crate) fn cdf_unchecked(&self, r: f64) -> f64 {
        lower_gamma_p(self.dof as f64 / 2.0, 0.5 * r * r)
    }

    /// Survival function `Q(d/2, r²/2)`, accurate far into the upper tail.
    pub fn sf(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::Domain(format!("chi survival needs r >= 0, got {r}")));
        }
        Ok(upper_gamma_q(self.dof as f64 / 2.0, 0.5 * r * r))
    }

    /// Inverse cdf by bisection on a bracket followed by safeguarded Newton.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile needs p in (0, 1), got {p}")));
        }
        Ok(self.invert(|x| self.cdf_unchecked(x) - p))
    }

    /// Inverse survival function: the `r` with `sf(r) = q`. Resolves upper-tail
    /// radii that `quantile(1 - q)` cannot, since `1 - q` rounds.
    pub fn isf(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("inverse survival needs q in (0, 1), got {q}")));
        }
        let a = self.dof as f64 / 2.0;
        Ok(self.invert(|x| q - upper_gamma_q(a, 0.5 * x * x)))
    }

    /// Root of an increasing `h` whose derivative is the pdf.
    fn invert(&self, h: impl Fn(f64) -> f64) -> f64 {
        let scale = (self.dof as f64).sqrt();
        let mut lo = 1e-8;
        let mut hi = 10.0 * scale;
        while h(lo) > 0.0 {
            hi = lo;
            lo *= 1e-4;
            if lo < 1e-300 {
                return lo;
            }
        }
        while h(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..24 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..50 {
            let f = h(x);
            if f < 0.0 {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
            let dens = self.pdf(x);
            let mut next = if dens > 0.0 { x - f / dens } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * x {
                break;
            }
        }
        x
    }

    /// Norms of `dof` i.i.d. standard normal draws, `n` times.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptyInput("chi sample size must be >= 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        Ok((0..n)
            .map(|_| {
                (0..self.dof)
                    .map(|_| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        g * g
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect())
    }

    /// `√2 Γ((d+1)/2) / Γ(d/2)`.
    pub fn mean(&self) -> f64 {
        let d = self.dof as f64;
        std::f64::consts::SQRT_2
            * (log_gamma_unchecked((d + 1.0) / 2.0) - log_gamma_unchecked(d / 2.0)).exp()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.dof as f64 - m * m
    }

    /// Upper integration limit holding all but a negligible tail of the mass.
    pub(crate) fn support_upper(&self) -> f64 {
        self.mean() + 40.0 * self.variance().sqrt().max(0.5)
    }

    /// Differential entropy `-∫ p ln p`, by quadrature.
    pub fn entropy_reference(&self) -> f64 {
        let upper = self.support_upper();
        integrate(
            |r| {
                if r <= 0.0 {
                    let p0 = self.pdf(0.0);
                    return if p0 > 0.0 { -p0 * p0.ln() } else { 0.0 };
                }
                let lp = self.log_pdf_unchecked(r);
                let p = lp.exp();
                if p == 0.0 {
                    0.0
                } else {
                    -p * lp
                }
            },
            0.0,
            upper,
            256,
            1e-11,
        )
    }

    /// Cross-entropy `-∫ p ln q` of this model's density `p` against `other`.
    pub fn cross_entropy_reference(&self, other: &ChiModel) -> f64 {
        let upper = self.support_upper().max(other.support_upper());
        integrate(
            |r| {
                if r <= 0.0 {
                    return 0.0;
                }
                let p = self.pdf(r);
                if p == 0.0 {
                    0.0
                } else {
                    -p * other.log_pdf_unchecked(r)
                }
            },
            0.0,
            upper,
            256,
            1e-11,
        )
    }
}

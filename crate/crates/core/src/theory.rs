//! Candidate-efficiency model for an elongated Gaussian blob.
//!
//! Data components are independent normals with standard deviations
//! `(1, s, …, s)` and the query sits at `(c, 0, …, 0)`. For a radius `R`,
//! `p1` is the probability that a point's score lands in the candidate band
//! and `p2` the probability that it is a true neighbor; `p2 / p1` is the
//! fraction of candidates that survive the distance filter.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Result, SnnError};
use crate::indexer::SnnIndex;

/// Absolute tolerance of the `p2` quadrature.
pub const P2_TOLERANCE: f64 = 1e-8;
const SIMPSON_MAX_DEPTH: u32 = 40;
const SIMPSON_PANELS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobModel {
    pub s: f64,
    pub d: usize,
    pub c: f64,
    pub radius: f64,
}

impl BlobModel {
    pub fn new(s: f64, d: usize, c: f64, radius: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(SnnError::InvalidParameter(format!(
                "elongation s = {s} must be positive"
            )));
        }
        if d < 2 {
            return Err(SnnError::InvalidParameter(format!(
                "dimension d = {d} must be at least 2"
            )));
        }
        if !c.is_finite() {
            return Err(SnnError::InvalidParameter("offset c must be finite".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SnnError::InvalidParameter(format!("radius {radius} must be positive")));
        }
        Ok(Self { s, d, c, radius })
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7, n = 9.
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma `P(a, x)` for `a > 0`, `x ≥ 0`.
fn lower_regularized_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // Series: Σ xⁿ / (a (a+1) … (a+n)).
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        (sum.ln() + log_prefix).exp().min(1.0)
    } else {
        // Modified Lentz evaluation of the continued fraction for Q(a, x).
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - (log_prefix.exp() * h)).max(0.0)
    }
}

/// χ² cumulative distribution with `k` degrees of freedom.
pub fn chi2_cdf(x: f64, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(SnnError::InvalidParameter("chi-square needs k >= 1".into()));
    }
    if x.is_nan() {
        return Err(SnnError::InvalidParameter("chi-square argument is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(lower_regularized_gamma(k as f64 / 2.0, x / 2.0))
}

/// Smallest `x` with `chi2_cdf(x, k) ≥ p`, by bisection.
pub fn chi2_quantile(p: f64, k: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(SnnError::InvalidParameter(format!("quantile level {p} outside [0, 1)")));
    }
    let mut hi = (k as f64).max(1.0);
    while chi2_cdf(hi, k)? < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, k)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Standard-normal measure of `[c − R, c + R]`.
pub fn p1(c: f64, radius: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    let a = (c - radius) * FRAC_1_SQRT_2;
    let b = (c + radius) * FRAC_1_SQRT_2;
    let v = if a >= 0.0 {
        0.5 * (libm::erfc(a) - libm::erfc(b))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b) - libm::erfc(-a))
    } else {
        0.5 * (libm::erf(b) - libm::erf(a))
    };
    v.clamp(0.0, 1.0)
}

fn normal_pdf(r: f64) -> f64 {
    (-0.5 * r * r).exp() / (2.0 * PI).sqrt()
}

fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    (a, fa): (f64, f64),
    (m, fm): (f64, f64),
    (b, fb): (f64, f64),
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
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
    simpson_recurse(f, (a, fa), (lm, flm), (m, fm), left, tol / 2.0, depth - 1)
        + simpson_recurse(f, (m, fm), (rm, frm), (b, fb), right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature over `[a, b]` with absolute tolerance `tol`.
///
/// The interval is first cut into fixed panels so that narrow features near
/// the end points are sampled before adaptivity kicks in.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let h = (b - a) / SIMPSON_PANELS as f64;
    let panel_tol = tol / SIMPSON_PANELS as f64;
    (0..SIMPSON_PANELS)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == SIMPSON_PANELS { b } else { lo + h };
            let mid = 0.5 * (lo + hi);
            let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            simpson_recurse(
                &f,
                (lo, flo),
                (mid, fmid),
                (hi, fhi),
                whole,
                panel_tol,
                SIMPSON_MAX_DEPTH,
            )
        })
        .sum()
}

/// Probability that a blob point lies within `R` of the query.
pub fn p2(model: &BlobModel) -> f64 {
    let BlobModel { s, d, c, radius } = *model;
    let r2 = radius * radius;
    let s2 = s * s;
    let integrand = |r: f64| {
        let t = (r2 - (r - c) * (r - c)) / s2;
        normal_pdf(r) * chi2_cdf(t, d - 1).unwrap_or(0.0)
    };
    adaptive_simpson(integrand, c - radius, c + radius, P2_TOLERANCE).max(0.0)
}

/// `p2 / p1`, the fraction of band candidates that are true neighbors.
pub fn efficiency_ratio(model: &BlobModel) -> Result<f64> {
    let denom = p1(model.c, model.radius);
    if denom <= 0.0 {
        return Err(SnnError::UndefinedRatio);
    }
    Ok((p2(model) / denom).clamp(0.0, 1.0))
}

/// Radius beyond which both `p1` and `p2` exceed `1 − eps`:
/// `max(R1, R2)` with `p1(c, R1 − 1) = 1 − eps` and
/// `R2 = sqrt((T s² + 1) / 2)`, `chi2_cdf(T, d − 1) = 1 − eps`.
pub fn convergence_radius(c: f64, s: f64, d: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SnnError::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
    }
    if d < 2 {
        return Err(SnnError::InvalidParameter("dimension must be at least 2".into()));
    }
    let target = 1.0 - eps;
    let mut hi = 1.0;
    while p1(c, hi) <= target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p1(c, mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r1 = hi + 1.0;
    let t = chi2_quantile(target, d - 1)?;
    let r2 = ((t * s * s + 1.0) / 2.0).sqrt();
    Ok(r1.max(r2))
}

/// Fractions of the index scanned (`|J| / n`) and returned (`hits / n`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateRatio {
    pub candidate_fraction: f64,
    pub hit_fraction: f64,
}

pub fn empirical_candidate_ratio(index: &SnnIndex, q: &[f64], radius: f64) -> Result<CandidateRatio> {
    let out = index.query_radius_with_range(q, radius)?;
    let n = index.len() as f64;
    Ok(CandidateRatio {
        candidate_fraction: out.range.len() as f64 / n,
        hit_fraction: out.result.len() as f64 / n,
    })
}

//! Gaussian tail probability and its inverse.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Below this |x| the series for `erf` is used; above it the continued
/// fraction for `erfc`.
const SERIES_LIMIT: f64 = 2.0;

/// Complementary error function, absolute error well below `1e-12` in `f64`.
pub fn erfc<F: Real>(x: F) -> F {
    if x.is_nan() {
        return x;
    }
    let limit = F::lit(SERIES_LIMIT);
    if x.abs() < limit {
        F::one() - erf_series(x)
    } else if x > F::zero() {
        erfc_continued_fraction(x)
    } else {
        F::lit(2.0) - erfc_continued_fraction(-x)
    }
}

/// `erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!`; every term
/// is positive so nothing cancels.
fn erf_series<F: Real>(x: F) -> F {
    let two_x2 = F::lit(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = F::one();
    for _ in 0..200 {
        k += F::lit(2.0);
        term = term * two_x2 / k;
        sum += term;
        if term.abs() <= sum.abs() * F::epsilon() * F::lit(0.5) {
            break;
        }
    }
    F::lit(2.0) / F::PI().sqrt() * (-x * x).exp() * sum
}

/// `erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`
/// evaluated with the modified Lentz method, for `x >= SERIES_LIMIT`.
fn erfc_continued_fraction<F: Real>(x: F) -> F {
    let tiny = F::min_positive_value() / F::epsilon();
    let mut f = x;
    let mut c = x;
    let mut d = F::zero();
    for k in 1..500 {
        let a = F::lit(k as f64 * 0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f *= delta;
        if (delta - F::one()).abs() <= F::epsilon() {
            break;
        }
    }
    (-x * x).exp() / (F::PI().sqrt() * f)
}

/// Standard normal upper-tail probability `Q(x) = P(Z > x)`.
pub fn q<F: Real>(x: F) -> F {
    F::lit(0.5) * erfc(x / F::SQRT_2())
}

/// Standard normal density.
pub fn phi<F: Real>(x: F) -> F {
    (-F::lit(0.5) * x * x).exp() / (F::lit(2.0) * F::PI()).sqrt()
}

/// Inverse of [`q`] on `(0, 1)`.
///
/// Safeguarded Newton iteration on `ln Q(x) - ln p` inside a bracket that
/// always contains the root; steps leaving the bracket fall back to
/// bisection. Values above one half use `Q^-1(p) = -Q^-1(1 - p)`, where
/// `1 - p` is exact.
pub fn q_inv<F: Real>(p: F) -> Result<F> {
    if !(p > F::zero() && p < F::one()) {
        return Err(Error::OutOfRange {
            what: "probability",
            value: p.to_f64_lossy(),
        });
    }
    let half = F::lit(0.5);
    if p == half {
        return Ok(F::zero());
    }
    if p > half {
        return Ok(-upper_tail_root(F::one() - p));
    }
    Ok(upper_tail_root(p))
}

/// Root `x >= 0` of `Q(x) = p` for `p < 1/2`.
fn upper_tail_root<F: Real>(p: F) -> F {
    let target = p.ln();
    // Q(x) <= exp(-x^2/2)/2 < p at x = sqrt(-2 ln p)
    let (mut lo, mut hi) = (F::zero(), (-F::lit(2.0) * target).sqrt());
    let mut x = (lo + hi) * F::lit(0.5);
    for _ in 0..200 {
        let qx = q(x);
        let g = qx.ln() - target;
        if g > F::zero() {
            lo = x;
        } else {
            hi = x;
        }
        // d/dx ln Q(x) = -phi(x) / Q(x)
        let slope = -phi(x) / qx;
        let mut next = x - g / slope;
        if !(next > lo && next < hi) {
            next = (lo + hi) * F::lit(0.5);
        }
        let step = (next - x).abs();
        x = next;
        if step <= F::epsilon() * x.abs().max(F::one()) || hi - lo <= F::epsilon() * hi {
            break;
        }
    }
    x
}

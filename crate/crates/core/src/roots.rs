//! Bracketed bisection for monotone first-order conditions.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Root of a strictly increasing `g` on `[lo, hi]`, to absolute tolerance
/// `tol` on the argument. Requires `g(lo) < 0 < g(hi)`; if `g(hi) <= 0` the
/// root lies at or beyond `hi` and [`Error::NoBracket`] is returned.
pub fn bisect_increasing(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if !(ga < 0.0 && gb > 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }
    for _ in 0..MAX_ITER {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return Ok(m);
        }
        if gm < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

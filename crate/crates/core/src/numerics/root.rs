use super::Tolerance;
use crate::error::{Error, Result};

/// Finds `x` in `[lo, hi]` with `f(x) = target` for monotone `f`.
///
/// Brent's method (inverse quadratic interpolation with secant and bisection
/// steps); the bisection fallback keeps the bracket shrinking, so the only
/// failure modes are a missing bracket or running out of iterations.
/// Stops when `|f(x) - target| <= abs_tol` or the bracket is narrower than
/// `rel_tol * |x|`.
pub fn solve_monotone<F>(f: F, lo: f64, hi: f64, target: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    tol.validate()?;
    if !(lo <= hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    let h = |x: f64| f(x) - target;
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (h(a), h(b));
    if fa.is_nan() || fb.is_nan() || fa * fb > 0.0 {
        return Err(Error::NoBracket {
            lo_gap: fa,
            hi_gap: fb,
        });
    }
    if fa.abs() <= tol.abs_tol {
        return Ok(a);
    }
    if fb.abs() <= tol.abs_tol {
        return Ok(b);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..tol.max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let width = (c - b).abs();
        if fb.abs() <= tol.abs_tol || width <= tol.rel_tol * b.abs() || width == 0.0 {
            return Ok(b);
        }
        // Adjacent floats: nothing left to refine.
        if width <= 2.0 * f64::EPSILON * b.abs().max(f64::MIN_POSITIVE) {
            return Ok(b);
        }
        let half = 0.5 * (c - b);
        let step_floor = 2.0 * f64::EPSILON * b.abs() + 0.5 * f64::MIN_POSITIVE;
        if e.abs() >= step_floor && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * half * q - (step_floor * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > step_floor {
            d
        } else {
            step_floor.copysign(half)
        };
        fb = h(b);
    }
    Err(Error::MaxIterations {
        iterations: tol.max_iter,
    })
}

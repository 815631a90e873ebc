use std::f64::consts::FRAC_1_SQRT_2;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;

/// Below this point the tail is read off `erfc`; above it the Mills ratio
/// continued fraction takes over, where the `t / sqrt(2)` rounding would
/// otherwise be amplified by `erfc`'s steep decay.
const CF_SWITCH: f64 = 5.0;

/// Standard normal density, with `exp(-t^2/2)` evaluated on a split argument
/// so the exponent carries no rounding error from squaring `t`.
pub fn normal_pdf(t: f64) -> f64 {
    let a = t.abs();
    if !a.is_finite() {
        return if a.is_nan() { f64::NAN } else { 0.0 };
    }
    let hi = (a * 16.0).trunc() / 16.0;
    let del = (a - hi) * (a + hi);
    FRAC_1_SQRT_2PI * (-0.5 * hi * hi).exp() * (-0.5 * del).exp()
}

/// `P(N(0,1) > t)`.
pub fn normal_upper_tail(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t < -CF_SWITCH {
        return 1.0 - normal_upper_tail(-t);
    }
    if t < CF_SWITCH {
        return 0.5 * libm::erfc(t * FRAC_1_SQRT_2);
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    normal_pdf(t) * mills_ratio(t)
}

/// `P(N(0,1) > t) / phi(t)` for `t >= CF_SWITCH`, by modified Lentz on
/// `1 / (t + 1/(t + 2/(t + 3/(t + ...))))`.
fn mills_ratio(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = t;
    let mut c = t;
    let mut d = 0.0;
    for k in 1..2000 {
        let a = k as f64;
        d = t + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = t + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Tolerance;
use crate::error::{Error, Result};

// 15-point Kronrod abscissae; odd indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Segment> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::Quadrature { estimate: value, error });
    }
    Ok(Segment { lo, hi, value, error })
}

/// Globally adaptive Gauss-Kronrod (7, 15) over a finite interval.
fn integrate_unit<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    let first = kronrod(f, lo, hi)?;
    let mut total = first.value;
    let mut err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    for _ in 0..tol.max_iter {
        if err <= tol.abs_tol.max(tol.rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = kronrod(f, worst.lo, mid)?;
        let right = kronrod(f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed accumulated update rounding before the final check.
    let total: f64 = heap.iter().map(|s| s.value).sum();
    let err: f64 = heap.iter().map(|s| s.error).sum();
    if err <= tol.abs_tol.max(tol.rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(Error::Quadrature {
            estimate: total,
            error: err,
        })
    }
}

/// `integral_0^inf g(x) dx`, via `x = scale * u / (1 - u)` onto `[0, 1)`.
///
/// `decay_scale` should be on the order of where `g` has most of its mass;
/// `tol.max_iter` caps the number of bisections.
pub fn integrate_halfline<G>(g: G, decay_scale: f64, tol: Tolerance) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    tol.validate()?;
    if !(decay_scale > 0.0) || !decay_scale.is_finite() {
        return Err(Error::Domain(format!(
            "decay scale must be positive (got {decay_scale})"
        )));
    }
    let mapped = |u: f64| {
        let w = 1.0 - u;
        let x = decay_scale * u / w;
        let gx = g(x);
        if gx == 0.0 {
            0.0
        } else {
            gx * decay_scale / (w * w)
        }
    };
    integrate_unit(&mapped, 0.0, 1.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_low_degree_polynomials() {
        for deg in 0..=13 {
            let seg = kronrod(&|x: f64| x.powi(deg), 0.0, 1.0).unwrap();
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((seg.value - exact).abs() < 1e-15, "degree {deg}");
            assert!(seg.error < 1e-14, "gauss part inexact at degree {deg}");
        }
        let seg = kronrod(&|x: f64| x.powi(22), -1.0, 1.0).unwrap();
        assert!((seg.value - 2.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn smoke_suite() {
        let tol = Tolerance::default();
        let v = integrate_halfline(|x| (-x).exp(), 1.0, tol).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
        let v = integrate_halfline(|x| x * (-x).exp(), 1.0, tol).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
        let v = integrate_halfline(|x| if x < 1.0 { 1.0 } else { 0.0 }, 1.0, tol).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn sqrt_endpoint_behaviour() {
        // integral x^0.5 e^-x = Gamma(1.5) = sqrt(pi)/2
        let tol = Tolerance::default().with_max_iter(2000);
        let v = integrate_halfline(|x: f64| x.sqrt() * (-x).exp(), 1.0, tol).unwrap();
        assert!((v - 0.886_226_925_452_758).abs() < 1e-9);
    }

    #[test]
    fn non_integrable_fails() {
        let tol = Tolerance::default();
        assert!(integrate_halfline(|x| 1.0 / (1.0 + x), 1.0, tol).is_err());
        assert!(integrate_halfline(|x| x, 0.0, tol).is_err());
    }
}

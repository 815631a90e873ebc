use proptest::prelude::*;
use tailscan::numerics::{normal_upper_tail, reg_inc_beta, solve_monotone, Tolerance};

#[test]
fn normal_tail_symmetry_grid() {
    let mut t = -8.0;
    let mut prev = f64::INFINITY;
    while t <= 8.0 {
        let v = normal_upper_tail(t);
        assert!((v + normal_upper_tail(-t) - 1.0).abs() <= 1e-13, "t={t}");
        assert!(v <= prev);
        prev = v;
        t += 0.25;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn beta_reflection(x in 0.0f64..=1.0, a in 0.05f64..50.0, b in 0.05f64..50.0) {
        let lhs = reg_inc_beta(x, a, b).unwrap();
        let rhs = reg_inc_beta(1.0 - x, b, a).unwrap();
        prop_assert!((lhs + rhs - 1.0).abs() <= 1e-10, "x={x} a={a} b={b}: {lhs} + {rhs}");
    }

    #[test]
    fn beta_monotone(x in 0.0f64..0.99, dx in 0.0f64..0.01, a in 0.1f64..20.0, b in 0.1f64..20.0) {
        let lo = reg_inc_beta(x, a, b).unwrap();
        let hi = reg_inc_beta(x + dx, a, b).unwrap();
        prop_assert!(hi >= lo - 1e-15);
    }

    #[test]
    fn monotone_cubics(
        a in 0.01f64..5.0,
        b in 0.0f64..5.0,
        c in -10.0f64..10.0,
        u in 0.0f64..1.0,
        decreasing in any::<bool>(),
    ) {
        let s = if decreasing { -1.0 } else { 1.0 };
        let f = |x: f64| s * (a * x * x * x + b * x + c);
        let (lo, hi) = (-3.0, 3.0);
        let (flo, fhi) = (f(lo), f(hi));
        let target = flo + u * (fhi - flo);
        let tol = Tolerance::default();
        let x = solve_monotone(f, lo, hi, target, tol).unwrap();
        let slope = 3.0 * a * x * x + b;
        let ok = (f(x) - target).abs() <= tol.abs_tol
            || (f(x) - target).abs() <= slope * (tol.rel_tol * x.abs() + 1e-14) * 2.0;
        prop_assert!(ok, "f(x) - target = {}", f(x) - target);
    }
}

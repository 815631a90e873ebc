use proptest::prelude::*;
use tailscan::expfam::{
    kl_mean, kl_mean_numeric, make_bernoulli, make_gaussian_known_sigma, make_poisson, mle, ExpFamily, Mle,
};
use tailscan::loglr::{kulldorff_bernoulli, loglr_split, loglr_window, signed_root, SplitSample};

fn families() -> Vec<Box<dyn ExpFamily>> {
    vec![
        Box::new(make_bernoulli()),
        Box::new(make_poisson()),
        Box::new(make_gaussian_known_sigma(1.7).unwrap()),
    ]
}

/// Maps `u` in (0,1) to a mean in the interior of the family's mean domain.
fn interior_mean(fam: &dyn ExpFamily, u: f64) -> f64 {
    let d = fam.mean_domain();
    match (d.lo.is_finite(), d.hi.is_finite()) {
        (true, true) => d.lo + (d.hi - d.lo) * u,
        (true, false) => d.lo + u / (1.0 - u),
        _ => (u / (1.0 - u)).ln(),
    }
}

#[test]
fn family_examples() {
    let b = make_bernoulli();
    assert_eq!(b.mean(0.0), 0.5);
    assert!((b.mean_inverse(0.3).unwrap() - (3.0f64 / 7.0).ln()).abs() < 1e-15);
    assert_eq!(b.variance(0.0), 0.25);
    assert_eq!(mle(&b, 1.0).unwrap(), Mle::Boundary);
    assert_eq!(mle(&b, 0.5).unwrap(), Mle::Interior(0.0));
    let p0 = b.mean_inverse(0.3).unwrap();
    assert!((kl_mean(&b, 0.0, p0).unwrap() + 0.7f64.ln()).abs() < 1e-15);
    assert!(mle(&b, 1.2).is_err());

    let p = make_poisson();
    assert_eq!(p.mean(0.0), 1.0);
    for t in [-1.0, 0.0, 1.0] {
        assert_eq!(p.variance(t), p.mean(t));
    }
    assert!((p.mean_inverse(4.0).unwrap() - 4f64.ln()).abs() < 1e-15);
    match mle(&p, std::f64::consts::E).unwrap() {
        Mle::Interior(t) => assert!((t - 1.0).abs() < 1e-15),
        Mle::Boundary => panic!("interior mean"),
    }

    let g = make_gaussian_known_sigma(2.0).unwrap();
    assert_eq!(g.mean(1.7), 1.7);
    assert_eq!(g.variance(0.0), 4.0);
    assert_eq!(g.mean_inverse(-2.0), Some(-2.0));
    assert!(make_gaussian_known_sigma(0.0).is_err());
    let g1 = make_gaussian_known_sigma(1.0).unwrap();
    assert!((kl_mean(&g1, 1.5, 0.5).unwrap() - 0.5).abs() < 1e-15);
    assert!((loglr_window(&g1, 1.5, 4, 0.5).unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn window_statistic_values() {
    let b = make_bernoulli();
    let v = loglr_window(&b, 0.8, 10, 0.0).unwrap();
    let want = 10.0 * (0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln());
    assert!((v - want).abs() < 1e-13);
    // mpmath, 30 digits
    assert!((v - 1.927_447_570_217_574_3).abs() < 1e-13);
}

#[test]
fn kl_monotone_grids() {
    for fam in families() {
        for theta0 in [-1.0, 0.2, 1.3] {
            let mu0 = fam.mean(theta0);
            let d = fam.mean_domain();
            let up_end = if d.hi.is_finite() { d.hi } else { mu0 + 20.0 };
            let dn_end = if d.lo.is_finite() { d.lo } else { mu0 - 20.0 };
            for (end, name) in [(up_end, "up"), (dn_end, "down")] {
                let mut prev = 0.0;
                for k in 1..200 {
                    let x = mu0 + (end - mu0) * k as f64 / 200.0;
                    let v = kl_mean(fam.as_ref(), x, theta0).unwrap();
                    assert!(v > prev, "{} {name} theta0={theta0} x={x}", fam.name());
                    prev = v;
                }
            }
            assert_eq!(kl_mean(fam.as_ref(), mu0, theta0).unwrap(), 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kl_nonnegative_and_numeric_agrees(k in 0usize..3, theta0 in -2.0f64..2.0, u in 0.001f64..0.999) {
        let fams = families();
        let fam = fams[k].as_ref();
        let x = interior_mean(fam, u);
        let closed = kl_mean(fam, x, theta0).unwrap();
        let numeric = kl_mean_numeric(fam, x, theta0).unwrap();
        prop_assert!(closed >= 0.0);
        prop_assert!((closed - numeric).abs() <= 1e-9 * (1.0 + closed), "{}: {closed} vs {numeric}", fam.name());
        let mu0 = fam.mean(theta0);
        if (x - mu0).abs() > 1e-6 {
            prop_assert!(closed > 1e-12);
        }
    }

    #[test]
    fn mean_inverse_roundtrip(k in 0usize..3, theta in -5.0f64..5.0) {
        let fams = families();
        let fam = fams[k].as_ref();
        let back = fam.mean_inverse(fam.mean(theta)).unwrap();
        prop_assert!((back - theta).abs() <= 1e-10 * (1.0 + theta.abs()));
    }

    #[test]
    fn kulldorff_matches_split(xm in 0.0f64..=1.0, xc in 0.0f64..=1.0, m in 1usize..60, k in 1usize..60) {
        let b = make_bernoulli();
        // Means must be attainable as count / size.
        let (sw, sc) = ((xm * m as f64).round(), (xc * k as f64).round());
        let s = SplitSample::new(sw, m, sc, k).unwrap();
        let a = loglr_split(&b, &s).unwrap();
        let c = kulldorff_bernoulli(sw / m as f64, sc / k as f64, m, k);
        prop_assert!((a - c).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn split_swap_symmetry(k in 0usize..3, u1 in 0.01f64..0.99, u2 in 0.01f64..0.99, m in 1usize..40, c in 1usize..40) {
        let fams = families();
        let fam = fams[k].as_ref();
        let (x1, x2) = (interior_mean(fam, u1), interior_mean(fam, u2));
        let s = SplitSample::new(x1 * m as f64, m, x2 * c as f64, c).unwrap();
        let a = loglr_split(fam, &s).unwrap();
        let b = loglr_split(fam, &s.swapped()).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn window_statistic_grows_with_distance(k in 0usize..3, theta0 in -1.0f64..1.0, m in 1usize..50) {
        let fams = families();
        let fam = fams[k].as_ref();
        let mu0 = fam.mean(theta0);
        let d = fam.mean_domain();
        let hi = if d.hi.is_finite() { d.hi } else { mu0 + 5.0 };
        let mut prev = 0.0;
        for j in 1..=20 {
            let x = mu0 + (hi - mu0) * j as f64 / 20.0;
            let v = loglr_window(fam, x, m, theta0).unwrap();
            prop_assert!(v >= prev);
            prev = v;
        }
    }
}

#[test]
fn signed_root_signs() {
    let g = make_gaussian_known_sigma(1.0).unwrap();
    let x = [0.3, 2.0, -1.0, 0.5, 0.1, -0.7];
    let s = SplitSample::from_slice(&x, 2).unwrap();
    let r = signed_root(loglr_split(&g, &s).unwrap(), s.window_mean() - s.complement_mean()).unwrap();
    assert!(r > 0.0);
    let r2 = signed_root(loglr_split(&g, &s.swapped()).unwrap(), s.complement_mean() - s.window_mean()).unwrap();
    assert!((r + r2).abs() < 1e-12);
}

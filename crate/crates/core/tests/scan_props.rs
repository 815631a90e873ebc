use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use tailscan::harness::{registry, run_spec, McSpec, Scenario, SuiteOptions};
use tailscan::logconcave::Law;
use tailscan::loglr::TailBoundKind;
use tailscan::scan::{
    critical_value, growth_constant, r_ratio, r_ratio_bound, run_scan, t_for_interval, FastScanner, Interval,
    LengthSpec, ScanConfig,
};
use tailscan::selfnorm::make_plan;
use tailscan::Exec;

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rotation_and_shift_invariance(seed in any::<u64>(), k in 2u32..5, off in 0usize..64, r in 0usize..64, c in -20.0f64..20.0) {
        let n = 64;
        let m = 1usize << k;
        let x = noise(n, seed);
        let iv = Interval::new(off, m);
        let t = t_for_interval(&x, iv).unwrap();
        let mut y = x.clone();
        y.rotate_left(r);
        let t_rot = t_for_interval(&y, Interval::new((off + n - r) % n, m)).unwrap();
        prop_assert!((t - t_rot).abs() <= 1e-10);
        let z: Vec<f64> = x.iter().map(|v| v + c).collect();
        prop_assert!((t_for_interval(&z, iv).unwrap() - t).abs() <= 1e-9);
        let fast = FastScanner::new(&x).t(iv).unwrap();
        prop_assert!((fast - t).abs() <= 1e-9);
    }

    #[test]
    fn detections_grow_with_alpha(seed in any::<u64>(), a in 0.001f64..0.5, bump in 0.0f64..3.0) {
        let mut x = noise(128, seed);
        for v in &mut x[10..26] {
            *v += bump;
        }
        let lo = run_scan(&x, &ScanConfig { alpha: a, ..Default::default() }).unwrap();
        let hi = run_scan(&x, &ScanConfig { alpha: (a * 1.8).min(0.99), ..Default::default() }).unwrap();
        for (p, q) in lo.intervals.iter().zip(&hi.intervals) {
            prop_assert!(!p.exceed || q.exceed);
        }
        prop_assert!(lo.argmax.t >= lo.intervals.iter().map(|s| s.t).fold(f64::MIN, f64::max));
    }

    #[test]
    fn growth_bound_dominates_r_ratio(seed in any::<u64>(), off in 0usize..256, k in 2u32..6) {
        let n = 256;
        let m = 1usize << k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma: Vec<f64> = (0..n).map(|_| 0.5 + 1.5 * rng.random::<f64>()).collect();
        let iv = Interval::new(off, m);
        let plan = make_plan(m, n).unwrap();
        let r = r_ratio(&sigma, iv, &plan).unwrap();
        let s = growth_constant(&sigma, iv).unwrap();
        prop_assert!(r >= 1.0);
        prop_assert!(r <= r_ratio_bound(s, m, n) + 1e-12, "r={r} s={s}");
    }
}

#[test]
fn critical_value_floor_and_kappa_range() {
    for &n in &[64usize, 1024, 4096, 65536] {
        let cfg = ScanConfig::default();
        let total = cfg.intervals_for(n).len();
        for m in cfg.lengths_for(n) {
            let c = critical_value(m, n, total, 0.05, false).unwrap();
            assert!(c.value >= (2.0 * (n as f64 / m as f64).ln()).sqrt() - 1.0);
        }
    }
    let cfg = ScanConfig::default();
    let total = cfg.intervals_for(4096).len();
    let c = critical_value(64, 4096, total, 0.05, false).unwrap();
    assert!((-1.0..=4.0).contains(&c.kappa), "kappa {}", c.kappa);
}

#[test]
fn unit_r_ratio_under_constant_sigma() {
    let plan = make_plan(16, 256).unwrap();
    let r = r_ratio(&[1.3; 256], Interval::new(40, 16), &plan).unwrap();
    let p = plan.p() as f64;
    assert!((r - (1.0 + 1.0 / (p - 1.0))).abs() < 1e-12);
}

#[test]
fn single_length_config_and_degenerate_windows() {
    let mut x = noise(32, 5);
    for v in &mut x[4..12] {
        *v = 0.25;
    }
    let cfg = ScanConfig {
        lengths: LengthSpec::List(vec![8]),
        ..Default::default()
    };
    let res = run_scan(&x, &cfg).unwrap();
    assert_eq!(res.n_intervals, 16);
    assert!(res.intervals.iter().all(|s| s.len == 8 && s.t.is_finite()));
    assert!(run_scan(&[1.0; 32], &cfg).is_err());
    let mut bad = x.clone();
    bad[3] = f64::NAN;
    assert!(run_scan(&bad, &cfg).is_err());
}

#[test]
fn sequential_and_parallel_agree() {
    let x = noise(512, 9);
    let a = run_scan(&x, &ScanConfig { exec: Exec::Sequential, ..Default::default() }).unwrap();
    let b = run_scan(&x, &ScanConfig { exec: Exec::Parallel, ..Default::default() }).unwrap();
    assert_eq!(a, b);
    let spec = McSpec::new(
        "det",
        Scenario::SymmetricSum {
            law: Law::Laplace { scale: 1.0 },
            m: 8,
        },
        20_000,
        3,
        vec![1.0, 2.0, 3.0],
    );
    let r1 = run_spec(&spec, Exec::Sequential).unwrap();
    let r2 = run_spec(&spec, Exec::Parallel).unwrap();
    assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
}

#[test]
fn registry_covers_every_bound() {
    let specs = registry(1, &SuiteOptions::default());
    let kinds: HashSet<String> = specs
        .iter()
        .filter_map(|s| s.scenario.bound_kind())
        .map(|k| format!("{k:?}"))
        .collect();
    for k in [
        TailBoundKind::NormalTail,
        TailBoundKind::LogLrWindow,
        TailBoundKind::LogLrSplit,
        TailBoundKind::SelfNormalized,
        TailBoundKind::Rademacher,
    ] {
        assert!(kinds.contains(&format!("{k:?}")), "{k:?} missing");
    }
    let names: HashSet<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names.len(), specs.len());
    for s in &specs {
        s.validate().unwrap();
    }
}

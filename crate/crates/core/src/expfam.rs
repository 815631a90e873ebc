//! Regular one-dimensional natural exponential families.
//!
//! A family is described by its log-partition `A` and derivatives in the
//! natural parameter, and by the closure `M` of its mean space. Statistics
//! are evaluated in the mean parametrization: the per-observation
//! log-likelihood ratio against `theta0` is the Legendre value
//! `sup_t (t - theta0) x - (A(t) - A(theta0))`, which is the KL divergence
//! between the fitted and the null law.
//!
//! Families may carry a dispersion `phi`, so densities are
//! `exp((theta x - A(theta)) / phi) h(x)`. This lets the known-variance
//! Gaussian use its mean as the parameter. Bernoulli and Poisson have
//! `phi = 1`.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{solve_monotone, Tolerance};

/// An interval of the real line with per-endpoint closedness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Span {
    pub const REAL_LINE: Span = Span::open(f64::NEG_INFINITY, f64::INFINITY);

    pub const fn open(lo: f64, hi: f64) -> Span {
        Span {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub const fn closed(lo: f64, hi: f64) -> Span {
        Span {
            lo,
            hi,
            lo_closed: lo.is_finite(),
            hi_closed: hi.is_finite(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = x > self.lo || (self.lo_closed && x == self.lo);
        let below = x < self.hi || (self.hi_closed && x == self.hi);
        above && below
    }

    pub fn interior_contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn is_boundary(&self, x: f64) -> bool {
        self.contains(x) && !self.interior_contains(x)
    }
}

/// A regular natural exponential family.
///
/// Implementors supply `A`, `A'`, `A''`, the parameter and mean domains, and
/// optionally closed forms; [`mle`] and [`kl_mean`] fall back to numerical
/// inversion where closed forms are absent.
pub trait ExpFamily: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;

    /// Open natural parameter space.
    fn theta_domain(&self) -> Span;

    fn log_partition(&self, theta: f64) -> f64;

    /// `A'(theta)`, the mean.
    fn mean(&self, theta: f64) -> f64;

    /// `phi * A''(theta)`, the variance of one observation.
    fn variance(&self, theta: f64) -> f64;

    /// Closed convex hull of the support.
    fn mean_domain(&self) -> Span;

    fn dispersion(&self) -> f64 {
        1.0
    }

    /// Closed-form `(A')^{-1}` on the interior of the mean domain.
    fn mean_inverse(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Closed-form divergence between mean values `x` and `mu0`.
    fn divergence_closed(&self, _x: f64, _mu0: f64) -> Option<f64> {
        None
    }
}

/// Outcome of maximum likelihood on a sample mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mle {
    Interior(f64),
    /// The mean sits on the boundary of `M`; the supremum is not attained.
    Boundary,
}

impl Mle {
    pub fn theta(self) -> Option<f64> {
        match self {
            Mle::Interior(t) => Some(t),
            Mle::Boundary => None,
        }
    }
}

fn check_mean<F: ExpFamily + ?Sized>(fam: &F, x: f64) -> Result<()> {
    if fam.mean_domain().contains(x) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "mean value {x} lies outside the mean domain of {}",
            fam.name()
        )))
    }
}

fn check_theta<F: ExpFamily + ?Sized>(fam: &F, theta: f64) -> Result<()> {
    if fam.theta_domain().interior_contains(theta) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "natural parameter {theta} lies outside the parameter space of {}",
            fam.name()
        )))
    }
}

/// Solves `A'(theta) = xbar`.
pub fn mle<F: ExpFamily + ?Sized>(fam: &F, xbar: f64) -> Result<Mle> {
    check_mean(fam, xbar)?;
    if fam.mean_domain().is_boundary(xbar) {
        return Ok(Mle::Boundary);
    }
    if let Some(theta) = fam.mean_inverse(xbar) {
        return Ok(Mle::Interior(theta));
    }
    mle_numeric(fam, xbar).map(Mle::Interior)
}

/// Numerical inversion of the mean map, ignoring any closed form.
pub fn mle_numeric<F: ExpFamily + ?Sized>(fam: &F, xbar: f64) -> Result<f64> {
    let dom = fam.theta_domain();
    let center = if dom.lo.is_finite() && dom.hi.is_finite() {
        0.5 * (dom.lo + dom.hi)
    } else if dom.lo.is_finite() {
        dom.lo + 1.0
    } else if dom.hi.is_finite() {
        dom.hi - 1.0
    } else {
        0.0
    };
    // Grow a bracket geometrically, staying inside the open domain.
    let mut lo = center;
    let mut hi = center;
    let mut step = 1.0;
    for _ in 0..1100 {
        if fam.mean(lo) <= xbar && fam.mean(hi) >= xbar {
            let tol = Tolerance::new(1e-15, 1e-15, 400)?;
            return solve_monotone(|t| fam.mean(t), lo, hi, xbar, tol);
        }
        if fam.mean(lo) > xbar {
            lo = if dom.lo.is_finite() {
                0.5 * (lo + dom.lo)
            } else {
                lo - step
            };
        }
        if fam.mean(hi) < xbar {
            hi = if dom.hi.is_finite() {
                0.5 * (hi + dom.hi)
            } else {
                hi + step
            };
        }
        step *= 2.0;
    }
    Err(Error::Domain(format!(
        "could not bracket the MLE for mean {xbar} in {}",
        fam.name()
    )))
}

/// The Legendre objective `(theta - theta0) x - (A(theta) - A(theta0))`,
/// scaled by the dispersion.
fn legendre_objective<F: ExpFamily + ?Sized>(fam: &F, x: f64, theta: f64, theta0: f64) -> f64 {
    ((theta - theta0) * x - (fam.log_partition(theta) - fam.log_partition(theta0)))
        / fam.dispersion()
}

/// `sup_theta [(theta - theta0) x - (A(theta) - A(theta0))] / phi`.
///
/// Returns `+inf` when the supremum diverges. Zero exactly when
/// `x = mean(theta0)`.
pub fn kl_mean<F: ExpFamily + ?Sized>(fam: &F, x: f64, theta0: f64) -> Result<f64> {
    check_mean(fam, x)?;
    check_theta(fam, theta0)?;
    if let Some(v) = fam.divergence_closed(x, fam.mean(theta0)) {
        return Ok(v);
    }
    kl_mean_numeric(fam, x, theta0)
}

/// [`kl_mean`] without closed forms: plugs the numerical MLE into the
/// objective, or follows the objective to its limit for boundary means.
pub fn kl_mean_numeric<F: ExpFamily + ?Sized>(fam: &F, x: f64, theta0: f64) -> Result<f64> {
    check_mean(fam, x)?;
    check_theta(fam, theta0)?;
    if fam.mean_domain().is_boundary(x) {
        return Ok(boundary_limit(fam, x, theta0));
    }
    let theta = mle_numeric(fam, x)?;
    Ok(legendre_objective(fam, x, theta, theta0).max(0.0))
}

/// Limit of the objective as theta runs to the end of the parameter space
/// in the direction of the boundary mean `x`. The objective is concave and
/// increasing along that ray, so the sequence below is monotone.
fn boundary_limit<F: ExpFamily + ?Sized>(fam: &F, x: f64, theta0: f64) -> f64 {
    let dom = fam.theta_domain();
    let upward = x > fam.mean(theta0);
    let mut prev = 0.0;
    let mut prev_gain = f64::INFINITY;
    for k in 0..200 {
        let step = 2f64.powi(k);
        let theta = if upward {
            if dom.hi.is_finite() {
                dom.hi - (dom.hi - theta0) * 0.5f64.powi(k + 1)
            } else {
                theta0 + step
            }
        } else if dom.lo.is_finite() {
            dom.lo + (theta0 - dom.lo) * 0.5f64.powi(k + 1)
        } else {
            theta0 - step
        };
        let value = legendre_objective(fam, x, theta, theta0);
        if !value.is_finite() {
            return if value > 0.0 { f64::INFINITY } else { prev };
        }
        let gain = value - prev;
        if gain.abs() <= 1e-15 * value.abs().max(1.0) {
            return value.max(0.0);
        }
        // Gains that stop shrinking mean the supremum is infinite.
        if k > 60 && gain >= prev_gain {
            return f64::INFINITY;
        }
        prev = value;
        prev_gain = gain;
    }
    f64::INFINITY
}

/// Divergence with the null given as a mean value rather than a natural
/// parameter; used where the null is itself an estimated mean.
pub fn kl_between_means<F: ExpFamily + ?Sized>(fam: &F, x: f64, mu0: f64) -> Result<f64> {
    check_mean(fam, x)?;
    if !fam.mean_domain().interior_contains(mu0) {
        return Err(Error::Domain(format!(
            "null mean {mu0} must lie in the interior of the mean domain"
        )));
    }
    if let Some(v) = fam.divergence_closed(x, mu0) {
        return Ok(v);
    }
    let theta0 = match mle(fam, mu0)? {
        Mle::Interior(t) => t,
        Mle::Boundary => unreachable!("interior mean"),
    };
    kl_mean_numeric(fam, x, theta0)
}

/// `x ln(x / y)` with `0 ln 0 = 0`.
pub(crate) fn xlogx_over(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Bernoulli;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Poisson;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKnownSigma {
    sigma: f64,
}

pub fn make_bernoulli() -> Bernoulli {
    Bernoulli
}

pub fn make_poisson() -> Poisson {
    Poisson
}

pub fn make_gaussian_known_sigma(sigma: f64) -> Result<GaussianKnownSigma> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive (got {sigma})")));
    }
    Ok(GaussianKnownSigma { sigma })
}

impl GaussianKnownSigma {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

fn logistic(theta: f64) -> f64 {
    if theta >= 0.0 {
        1.0 / (1.0 + (-theta).exp())
    } else {
        let e = theta.exp();
        e / (1.0 + e)
    }
}

impl ExpFamily for Bernoulli {
    fn name(&self) -> &str {
        "bernoulli"
    }

    fn theta_domain(&self) -> Span {
        Span::REAL_LINE
    }

    fn log_partition(&self, theta: f64) -> f64 {
        theta.max(0.0) + (-theta.abs()).exp().ln_1p()
    }

    fn mean(&self, theta: f64) -> f64 {
        logistic(theta)
    }

    fn variance(&self, theta: f64) -> f64 {
        let p = logistic(theta);
        p * (1.0 - p)
    }

    fn mean_domain(&self) -> Span {
        Span::closed(0.0, 1.0)
    }

    fn mean_inverse(&self, x: f64) -> Option<f64> {
        (x > 0.0 && x < 1.0).then(|| (x / (1.0 - x)).ln())
    }

    fn divergence_closed(&self, x: f64, p0: f64) -> Option<f64> {
        Some((xlogx_over(x, p0) + xlogx_over(1.0 - x, 1.0 - p0)).max(0.0))
    }
}

impl ExpFamily for Poisson {
    fn name(&self) -> &str {
        "poisson"
    }

    fn theta_domain(&self) -> Span {
        Span::REAL_LINE
    }

    fn log_partition(&self, theta: f64) -> f64 {
        theta.exp()
    }

    fn mean(&self, theta: f64) -> f64 {
        theta.exp()
    }

    fn variance(&self, theta: f64) -> f64 {
        theta.exp()
    }

    fn mean_domain(&self) -> Span {
        Span::closed(0.0, f64::INFINITY)
    }

    fn mean_inverse(&self, x: f64) -> Option<f64> {
        (x > 0.0 && x.is_finite()).then(|| x.ln())
    }

    fn divergence_closed(&self, x: f64, lambda0: f64) -> Option<f64> {
        Some((xlogx_over(x, lambda0) - x + lambda0).max(0.0))
    }
}

impl ExpFamily for GaussianKnownSigma {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn theta_domain(&self) -> Span {
        Span::REAL_LINE
    }

    fn log_partition(&self, theta: f64) -> f64 {
        0.5 * theta * theta
    }

    fn mean(&self, theta: f64) -> f64 {
        theta
    }

    fn variance(&self, _theta: f64) -> f64 {
        self.sigma * self.sigma
    }

    fn dispersion(&self) -> f64 {
        self.sigma * self.sigma
    }

    fn mean_domain(&self) -> Span {
        Span::REAL_LINE
    }

    fn mean_inverse(&self, x: f64) -> Option<f64> {
        x.is_finite().then_some(x)
    }

    fn divergence_closed(&self, x: f64, mu0: f64) -> Option<f64> {
        let d = x - mu0;
        Some(d * d / (2.0 * self.sigma * self.sigma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_maps() {
        let b = make_bernoulli();
        assert_eq!(b.mean(0.0), 0.5);
        assert_eq!(b.variance(0.0), 0.25);
        let t = b.mean_inverse(0.3).unwrap();
        assert!((t - (-0.847_297_860_387_203_6)).abs() < 1e-15);
        assert!((b.mean(t) - 0.3).abs() < 1e-15);
        // stable for large |theta|
        assert!((b.log_partition(800.0) - 800.0).abs() < 1e-12);
        assert!(b.log_partition(-800.0) >= 0.0);
    }

    #[test]
    fn poisson_maps() {
        let p = make_poisson();
        assert_eq!(p.mean(0.0), 1.0);
        for th in [-1.0, 0.0, 1.0] {
            assert_eq!(p.variance(th), p.mean(th));
        }
        assert_eq!(p.mean_inverse(4.0), Some(4f64.ln()));
    }

    #[test]
    fn gaussian_maps() {
        let g = make_gaussian_known_sigma(1.5).unwrap();
        assert_eq!(g.mean(1.7), 1.7);
        assert_eq!(g.variance(0.0), 2.25);
        assert_eq!(g.mean_inverse(-2.0), Some(-2.0));
        assert!(make_gaussian_known_sigma(0.0).is_err());
        assert!(make_gaussian_known_sigma(-1.0).is_err());
    }

    #[test]
    fn mle_examples() {
        let b = make_bernoulli();
        assert_eq!(mle(&b, 0.5).unwrap(), Mle::Interior(0.0));
        assert_eq!(mle(&b, 1.0).unwrap(), Mle::Boundary);
        assert_eq!(mle(&b, 0.0).unwrap(), Mle::Boundary);
        assert!(mle(&b, 1.2).is_err());
        let p = make_poisson();
        let t = mle(&p, std::f64::consts::E).unwrap().theta().unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        assert_eq!(mle(&p, 0.0).unwrap(), Mle::Boundary);
        assert!(mle(&p, -0.5).is_err());
    }

    #[test]
    fn mle_numeric_matches_closed_forms() {
        let b = make_bernoulli();
        for x in [0.01, 0.2, 0.5, 0.77, 0.999] {
            let t = mle_numeric(&b, x).unwrap();
            assert!((t - b.mean_inverse(x).unwrap()).abs() < 1e-9, "x={x}");
        }
        let p = make_poisson();
        for x in [1e-3, 0.5, 3.0, 250.0] {
            let t = mle_numeric(&p, x).unwrap();
            assert!((t - x.ln()).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn kl_examples() {
        let g = make_gaussian_known_sigma(1.0).unwrap();
        assert!((kl_mean(&g, 1.3, 0.3).unwrap() - 0.5).abs() < 1e-15);
        let b = make_bernoulli();
        let theta0 = b.mean_inverse(0.3).unwrap();
        let v = kl_mean(&b, 0.0, theta0).unwrap();
        assert!((v - 0.356_674_943_938_732_4).abs() < 1e-12);
        for fam in [&b as &dyn ExpFamily, &make_poisson(), &g] {
            for th in [-1.0, 0.2, 2.0] {
                assert!(kl_mean(fam, fam.mean(th), th).unwrap().abs() < 1e-12);
            }
        }
        assert!(kl_mean(&b, -0.1, 0.0).is_err());
    }

    #[test]
    fn numeric_boundary_limits() {
        let b = make_bernoulli();
        let theta0 = b.mean_inverse(0.3).unwrap();
        let v0 = kl_mean_numeric(&b, 0.0, theta0).unwrap();
        assert!((v0 + 0.7f64.ln()).abs() < 1e-9, "{v0}");
        let v1 = kl_mean_numeric(&b, 1.0, theta0).unwrap();
        assert!((v1 + 0.3f64.ln()).abs() < 1e-9, "{v1}");
        let p = make_poisson();
        let v = kl_mean_numeric(&p, 0.0, 0.5f64.ln()).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
    }

    #[derive(Debug)]
    struct Diverging;

    // Unit-shape gamma (exponential) family: A(t) = -ln(-t) on t < 0.
    impl ExpFamily for Diverging {
        fn name(&self) -> &str {
            "gamma-shape-1"
        }
        fn theta_domain(&self) -> Span {
            Span::open(f64::NEG_INFINITY, 0.0)
        }
        fn log_partition(&self, theta: f64) -> f64 {
            -(-theta).ln()
        }
        fn mean(&self, theta: f64) -> f64 {
            -1.0 / theta
        }
        fn variance(&self, theta: f64) -> f64 {
            1.0 / (theta * theta)
        }
        fn mean_domain(&self) -> Span {
            Span::closed(0.0, f64::INFINITY)
        }
    }

    #[test]
    fn diverging_boundary_is_infinite() {
        // At x = 0 the objective is ln(-theta) - ln(-t0), unbounded as theta -> -inf.
        let v = kl_mean(&Diverging, 0.0, -1.0).unwrap();
        assert_eq!(v, f64::INFINITY);
        // and interior values come out of the numerical path
        let v = kl_mean(&Diverging, 2.0, -1.0).unwrap();
        // closed form: x - 1 - ln x for the unit-rate exponential null
        assert!((v - (2.0 - 1.0 - 2f64.ln())).abs() < 1e-9, "{v}");
    }
}

//! Log-likelihood-ratio standardizations of window sums.
//!
//! All statistics consume sufficient summaries (sums and counts) so that a
//! scan can evaluate them from prefix sums.

use crate::error::{Error, Result};
use crate::expfam::{kl_between_means, kl_mean, xlogx_over, ExpFamily};
use crate::numerics::normal_upper_tail;

/// Sums and counts of a window and its complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSample {
    pub window_sum: f64,
    pub window_len: usize,
    pub complement_sum: f64,
    pub complement_len: usize,
}

impl SplitSample {
    pub fn new(
        window_sum: f64,
        window_len: usize,
        complement_sum: f64,
        complement_len: usize,
    ) -> Result<Self> {
        if window_len == 0 || complement_len == 0 {
            return Err(Error::Domain(
                "window and complement must both be non-empty".into(),
            ));
        }
        if !window_sum.is_finite() || !complement_sum.is_finite() {
            return Err(Error::Domain("sums must be finite".into()));
        }
        Ok(SplitSample {
            window_sum,
            window_len,
            complement_sum,
            complement_len,
        })
    }

    /// Splits `x` after its first `m` entries.
    pub fn from_slice(x: &[f64], m: usize) -> Result<Self> {
        if m == 0 || m >= x.len() {
            return Err(Error::Domain(format!(
                "split point {m} must lie in 1..{}",
                x.len()
            )));
        }
        let (w, c) = x.split_at(m);
        SplitSample::new(w.iter().sum(), m, c.iter().sum(), c.len())
    }

    pub fn n(&self) -> usize {
        self.window_len + self.complement_len
    }

    pub fn window_mean(&self) -> f64 {
        self.window_sum / self.window_len as f64
    }

    pub fn complement_mean(&self) -> f64 {
        self.complement_sum / self.complement_len as f64
    }

    pub fn pooled_mean(&self) -> f64 {
        (self.window_sum + self.complement_sum) / self.n() as f64
    }

    /// `m / n`.
    pub fn window_fraction(&self) -> f64 {
        self.window_len as f64 / self.n() as f64
    }

    /// Roles of window and complement exchanged.
    pub fn swapped(&self) -> SplitSample {
        SplitSample {
            window_sum: self.complement_sum,
            window_len: self.complement_len,
            complement_sum: self.window_sum,
            complement_len: self.window_len,
        }
    }
}

/// `sup_theta ((theta - theta0) sum X_i - m (A(theta) - A(theta0)))`, i.e.
/// `m * kl_mean(xbar, theta0)`. Defined whether or not the MLE exists.
pub fn loglr_window<F: ExpFamily + ?Sized>(fam: &F, xbar: f64, m: usize, theta0: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("window length must be positive".into()));
    }
    Ok(m as f64 * kl_mean(fam, xbar, theta0)?)
}

/// Generalized LR for "one common parameter" against "separate parameters
/// for window and complement", with the null parameter estimated from all
/// observations.
pub fn loglr_split<F: ExpFamily + ?Sized>(fam: &F, s: &SplitSample) -> Result<f64> {
    let (xm, xc, xbar) = (s.window_mean(), s.complement_mean(), s.pooled_mean());
    let dom = fam.mean_domain();
    for v in [xm, xc] {
        if !dom.contains(v) {
            return Err(Error::Domain(format!(
                "block mean {v} lies outside the mean domain of {}",
                fam.name()
            )));
        }
    }
    if xm == xc {
        return Ok(0.0);
    }
    if !dom.interior_contains(xbar) {
        // A pooled mean on the boundary forces both block means onto it.
        return Ok(0.0);
    }
    let window = s.window_len as f64 * kl_between_means(fam, xm, xbar)?;
    let complement = s.complement_len as f64 * kl_between_means(fam, xc, xbar)?;
    Ok(window + complement)
}

/// Two-term Bernoulli form of [`loglr_split`] with `0 ln 0 = 0`.
pub fn kulldorff_bernoulli(xbar_m: f64, xbar_mc: f64, m: usize, n_minus_m: usize) -> f64 {
    if xbar_m == xbar_mc {
        return 0.0;
    }
    let (m, k) = (m as f64, n_minus_m as f64);
    let xbar = (m * xbar_m + k * xbar_mc) / (m + k);
    let term = |x: f64| xlogx_over(x, xbar) + xlogx_over(1.0 - x, 1.0 - xbar);
    m * term(xbar_m) + k * term(xbar_mc)
}

/// `sign(sign_source) * sqrt(2 stat)`.
///
/// Use `xbar_m - mean(theta0)` for window statistics and
/// `xbar_m - xbar_mc` for split statistics.
pub fn signed_root(stat: f64, sign_source: f64) -> Result<f64> {
    if !(stat >= 0.0) {
        return Err(Error::Domain(format!(
            "log-LR statistic must be nonnegative (got {stat})"
        )));
    }
    let root = (2.0 * stat).sqrt();
    Ok(if sign_source < 0.0 { -root } else { root })
}

/// Which log-LR statistic a tail bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogLrKind {
    /// `sqrt(2 logLR_m(theta0))` with the null parameter known.
    Window,
    /// `sqrt(2 logLR_{m,n})` with the null parameter estimated.
    Split,
}

/// Two-sided tail bound for the square-root log-LR statistic, capped at 1.
///
/// `Window`: `2 exp(-x^2/2)`. `Split`: `(4 + 2 x^2) exp(-x^2/2)`.
pub fn loglr_tail_bound(kind: LogLrKind, x: f64) -> f64 {
    let gauss = (-0.5 * x * x).exp();
    let raw = match kind {
        LogLrKind::Window => 2.0 * gauss,
        LogLrKind::Split => (4.0 + 2.0 * x * x) * gauss,
    };
    raw.min(1.0)
}

/// Bound for the signed root in one direction.
pub fn one_sided(bound: f64) -> f64 {
    0.5 * bound
}

/// The comparison bound functions used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailBoundKind {
    NormalTail,
    LogLrWindow,
    LogLrSplit,
    SelfNormalized,
    Rademacher,
}

impl TailBoundKind {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            TailBoundKind::NormalTail => normal_upper_tail(t),
            TailBoundKind::LogLrWindow => loglr_tail_bound(LogLrKind::Window, t),
            TailBoundKind::LogLrSplit => loglr_tail_bound(LogLrKind::Split, t),
            TailBoundKind::SelfNormalized => crate::selfnorm::self_normalized_tail_bound(t)
                .unwrap_or(1.0),
            TailBoundKind::Rademacher => crate::selfnorm::rademacher_tail_bound(t),
        }
    }
}

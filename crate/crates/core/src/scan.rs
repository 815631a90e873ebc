//! Bonferroni scan over circular intervals with self-normalized statistics.
//!
//! Each candidate interval `(j, m)` is scored by rotating the data so the
//! interval comes first and applying `T_m` with the contiguous-block
//! centering plan. Every interval is tested at level `alpha / N`, inverting
//! the near-normal tail bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed_grain, Exec};
use crate::numerics::{solve_monotone, Tolerance};
use crate::selfnorm::{
    make_plan, self_normalized_ratio, self_normalized_tail_bound, transform, CenteringPlan,
};

/// Circular window starting at `offset` (0-based) covering `len` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub offset: usize,
    pub len: usize,
}

impl Interval {
    pub fn new(offset: usize, len: usize) -> Self {
        Interval { offset, len }
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.len < 2 || self.offset >= n || n / self.len < 2 {
            return Err(Error::Domain(format!(
                "interval (offset {}, length {}) is infeasible for n = {n}",
                self.offset, self.len
            )));
        }
        Ok(())
    }

    /// Number of shared points between two circular intervals on `n` points.
    pub fn overlap(&self, other: &Interval, n: usize) -> usize {
        let mut mark = vec![false; n];
        for k in 0..self.len {
            mark[(self.offset + k) % n] = true;
        }
        (0..other.len)
            .filter(|k| mark[(other.offset + k) % n])
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthSpec {
    /// Powers of two from `min_len` up to `n / 2`.
    Dyadic,
    /// Every length from `min_len` up to `n / 2`.
    All,
    List(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrideSpec {
    /// `max(1, m / 4)`.
    Auto,
    Fixed(usize),
}

impl StrideSpec {
    pub fn stride(&self, m: usize) -> usize {
        match *self {
            StrideSpec::Auto => (m / 4).max(1),
            StrideSpec::Fixed(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub alpha: f64,
    pub lengths: LengthSpec,
    pub stride: StrideSpec,
    pub two_sided: bool,
    pub min_len: usize,
    /// Known bound `M` on the mean-variation ratio. Flags with `T > sqrt(m)/M`
    /// lie outside the range where the tail bound is guaranteed.
    pub validity_ratio: Option<f64>,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            alpha: 0.05,
            lengths: LengthSpec::Dyadic,
            stride: StrideSpec::Auto,
            two_sided: false,
            min_len: 4,
            validity_ratio: None,
            exec: Exec::default(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1) (got {})", self.alpha)));
        }
        if let StrideSpec::Fixed(0) = self.stride {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if let Some(mr) = self.validity_ratio {
            if !(mr >= 1.0) {
                return Err(Error::Config(format!("validity ratio must be >= 1 (got {mr})")));
            }
        }
        Ok(())
    }

    /// Window lengths used for `n` observations, ascending.
    pub fn lengths_for(&self, n: usize) -> Vec<usize> {
        let lo = self.min_len.max(2);
        let hi = n / 2;
        let mut out: Vec<usize> = match &self.lengths {
            LengthSpec::Dyadic => (1..usize::BITS)
                .map(|k| 1usize << k)
                .take_while(|&m| m <= hi)
                .filter(|&m| m >= lo)
                .collect(),
            LengthSpec::All => (lo..=hi).collect(),
            LengthSpec::List(v) => v.iter().copied().filter(|&m| m >= 2 && m <= hi).collect(),
        };
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All intervals, ordered by (length, offset).
    pub fn intervals_for(&self, n: usize) -> Vec<Interval> {
        self.lengths_for(n)
            .into_iter()
            .flat_map(|m| {
                (0..n)
                    .step_by(self.stride.stride(m))
                    .map(move |j| Interval::new(j, m))
            })
            .collect()
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// `T_I` on the rotated series `(x_j, .., x_{n-1}, x_0, .., x_{j-1})`.
/// A vanishing centered transform yields a degenerate-data error.
pub fn t_for_interval(x: &[f64], iv: Interval) -> Result<f64> {
    let n = x.len();
    iv.check(n)?;
    let mut y = x.to_vec();
    y.rotate_left(iv.offset);
    let plan = make_plan(iv.len, n)?;
    let xt = transform(&plan, &y)?;
    let sum: f64 = xt.iter().sum();
    let sum_sq: f64 = xt.iter().map(|v| v * v).sum();
    self_normalized_ratio(sum, sum_sq, iv.len, max_abs(x))
        .ok_or_else(|| Error::Degenerate("centered transform is identically zero".into()))
}

/// Prefix sums over two copies of the centered series, giving each block
/// mean in O(1) and each `T_I` in O(m).
#[derive(Debug, Clone)]
pub struct FastScanner {
    n: usize,
    centered: Vec<f64>,
    prefix: Vec<f64>,
    scale: f64,
}

impl FastScanner {
    pub fn new(x: &[f64]) -> Self {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let mut prefix = Vec::with_capacity(2 * n + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for k in 0..2 * n {
            acc += centered[k % n];
            prefix.push(acc);
        }
        FastScanner {
            n,
            centered,
            prefix,
            scale: max_abs(x),
        }
    }

    /// Same value as [`t_for_interval`] up to rounding; `None` when degenerate.
    pub fn t(&self, iv: Interval) -> Option<f64> {
        let (n, m, j) = (self.n, iv.len, iv.offset);
        let w = n / m - 1;
        let wf = w as f64;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for i in 0..m {
            let start = j + m + i * w;
            let block = (self.prefix[start + w] - self.prefix[start]) / wf;
            let v = self.centered[(j + i) % n] - block;
            sum += v;
            sum_sq += v * v;
        }
        self_normalized_ratio(sum, sum_sq, m, self.scale)
    }
}

/// Critical value for one interval and its offset from `sqrt(2 log(n/m))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub value: f64,
    pub kappa: f64,
    /// The per-interval level fell below the representable range of the
    /// bound; `value` is then the largest threshold evaluated.
    pub saturated: bool,
}

const T_MAX: f64 = 37.5;

/// Smallest `t` with the near-normal bound at or below `level`.
pub fn invert_tail_bound(level: f64) -> Result<(f64, bool)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0, 1) (got {level})")));
    }
    let bound = |t: f64| self_normalized_tail_bound(t).unwrap_or(1.0);
    if bound(T_MAX) > level {
        return Ok((T_MAX, true));
    }
    let lo = 1e-3;
    let tol = Tolerance::new(1e-14, 1e-15, 400)?;
    let target = level.ln();
    let mut t = solve_monotone(|t| bound(t).ln(), lo, T_MAX, target, tol)?;
    // Push onto the conservative side of the level.
    while bound(t) > level {
        t = t.next_up();
    }
    Ok((t, false))
}

/// Critical value for a window of length `m` among `n_total` Bonferroni tests.
pub fn critical_value(m: usize, n: usize, n_total: usize, alpha: f64, two_sided: bool) -> Result<CriticalValue> {
    if n_total == 0 {
        return Err(Error::Domain("need at least one interval".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1) (got {alpha})")));
    }
    if m == 0 || m > n {
        return Err(Error::Domain(format!("window length {m} must lie in 1..={n}")));
    }
    let sides = if two_sided { 2.0 } else { 1.0 };
    let (value, saturated) = invert_tail_bound(alpha / (sides * n_total as f64))?;
    let kappa = value - (2.0 * (n as f64 / m as f64).ln()).sqrt();
    Ok(CriticalValue {
        value,
        kappa,
        saturated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStat {
    pub offset: usize,
    pub len: usize,
    pub t: f64,
    pub critical: f64,
    pub kappa: f64,
    pub exceed: bool,
    /// Only present when a validity ratio was configured.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beyond_validity: Option<bool>,
}

impl IntervalStat {
    pub fn interval(&self) -> Interval {
        Interval::new(self.offset, self.len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub n: usize,
    pub alpha: f64,
    pub two_sided: bool,
    pub n_intervals: usize,
    pub saturated: bool,
    pub any_detection: bool,
    /// Largest statistic (absolute value when two-sided); first in order on ties.
    pub argmax: IntervalStat,
    pub intervals: Vec<IntervalStat>,
}

impl ScanResult {
    pub fn detections(&self) -> impl Iterator<Item = &IntervalStat> {
        self.intervals.iter().filter(|s| s.exceed)
    }
}

/// Scans every configured interval. Intervals whose centered transform
/// vanishes score 0.
pub fn run_scan(x: &[f64], cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let n = x.len();
    if n < 8 {
        return Err(Error::Domain(format!("scan needs at least 8 observations (got {n})")));
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite observation {bad}")));
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(Error::Degenerate("all observations are equal".into()));
    }
    let ivs = cfg.intervals_for(n);
    if ivs.is_empty() {
        return Err(Error::Config(format!("no feasible interval lengths for n = {n}")));
    }
    let n_total = ivs.len();
    let sides = if cfg.two_sided { 2.0 } else { 1.0 };
    let (crit, saturated) = invert_tail_bound(cfg.alpha / (sides * n_total as f64))?;
    let fast = FastScanner::new(x);
    let stats = map_indexed_grain(cfg.exec, n_total, 1024, |k| {
        let iv = ivs[k];
        let t = fast.t(iv).unwrap_or(0.0);
        let score = if cfg.two_sided { t.abs() } else { t };
        let root_m = (iv.len as f64).sqrt();
        IntervalStat {
            offset: iv.offset,
            len: iv.len,
            t,
            critical: crit,
            kappa: crit - (2.0 * (n as f64 / iv.len as f64).ln()).sqrt(),
            exceed: score > crit,
            beyond_validity: cfg.validity_ratio.map(|mr| score > root_m / mr),
        }
    });
    let score = |s: &IntervalStat| if cfg.two_sided { s.t.abs() } else { s.t };
    let mut best = 0;
    for (k, s) in stats.iter().enumerate() {
        if score(s) > score(&stats[best]) {
            best = k;
        }
    }
    Ok(ScanResult {
        n,
        alpha: cfg.alpha,
        two_sided: cfg.two_sided,
        n_intervals: n_total,
        saturated,
        any_detection: stats.iter().any(|s| s.exceed),
        argmax: stats[best],
        intervals: stats,
    })
}

/// Windowed variances of the centered transform relative to the raw ones:
/// `R_I = sum_{i in I} var(X~_i) / sum_{i in I} sigma_i^2`.
pub fn r_ratio(sigma: &[f64], iv: Interval, plan: &CenteringPlan) -> Result<f64> {
    let n = sigma.len();
    iv.check(n)?;
    if plan.m() != iv.len || plan.n() > n {
        return Err(Error::Dimension {
            expected: plan.n(),
            got: n,
        });
    }
    if let Some(bad) = sigma.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::Domain(format!("standard deviations must be positive (got {bad})")));
    }
    let var = |k: usize| {
        let s = sigma[(iv.offset + k) % n];
        s * s
    };
    let w = (plan.p() - 1) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, block) in plan.blocks().iter().enumerate() {
        let side: f64 = block.iter().map(|&c| var(c)).sum();
        num += var(i) + side / (w * w);
        den += var(i);
    }
    Ok(num / den)
}

/// Smallest `S` with `sigma_j^2 / sigma_I^2 <= S sqrt(max_{i in I} |j - i|)`
/// for every `j`, where `sigma_I^2` averages over the window. Positions are
/// taken after rotating the window to the front.
pub fn growth_constant(sigma: &[f64], iv: Interval) -> Result<f64> {
    let n = sigma.len();
    iv.check(n)?;
    let var = |k: usize| {
        let s = sigma[(iv.offset + k) % n];
        s * s
    };
    let m = iv.len;
    let var_i = (0..m).map(var).sum::<f64>() / m as f64;
    let mut s_min = 0.0f64;
    for j in 0..n {
        let reach = if j < m { j.max(m - 1 - j) } else { j };
        s_min = s_min.max(var(j) / (var_i * (reach as f64).sqrt()));
    }
    Ok(s_min)
}

/// `1 + 2 S sqrt(m^2 / n)`.
pub fn r_ratio_bound(s: f64, m: usize, n: usize) -> f64 {
    1.0 + 2.0 * s * (m as f64) / (n as f64).sqrt()
}

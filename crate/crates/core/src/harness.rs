//! Monte Carlo verification of the tail bounds and the scan's power.
//!
//! Replications are split into fixed-size chunks; chunk `k` draws from
//! ChaCha8 stream `k` of the scenario seed, so counts are identical in
//! sequential and parallel mode. Scenario seeds are derived from the root
//! seed and the scenario name.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::expfam::{kl_between_means, make_bernoulli, make_poisson, ExpFamily};
use crate::logconcave::Law;
use crate::loglr::{loglr_split, SplitSample, TailBoundKind};
use crate::scan::{
    growth_constant, invert_tail_bound, r_ratio, run_scan, FastScanner, Interval, ScanConfig,
    StrideSpec,
};
use crate::selfnorm::{check_conditions, make_plan, CenteringPlan, MeanStructure};
use crate::studentized::{centered_t, pivot_tail_exact};

pub const SCHEMA: &str = "tailscan/1";
pub const MIN_BOUND_REPLICATIONS: u64 = 10_000;
pub const MIN_SCAN_REPLICATIONS: u64 = 200;
const BOUND_CHUNK: u64 = 10_000;
const SCAN_CHUNK: u64 = 10;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn scenario_seed(root: u64, name: &str) -> u64 {
    splitmix64(root ^ fnv1a(name))
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Observation family for the log-LR scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Bernoulli { p: f64 },
    Poisson { lambda: f64 },
}

impl Family {
    fn mean(&self) -> f64 {
        match *self {
            Family::Bernoulli { p } => p,
            Family::Poisson { lambda } => lambda,
        }
    }

    fn with<R>(&self, f: impl FnOnce(&dyn ExpFamily) -> R) -> R {
        match self {
            Family::Bernoulli { .. } => f(&make_bernoulli()),
            Family::Poisson { .. } => f(&make_poisson()),
        }
    }

    /// Sampler for the sum of `k` observations.
    fn sum_sampler(&self, k: usize) -> Result<SumSampler> {
        match *self {
            Family::Bernoulli { p } => Binomial::new(k as u64, p)
                .map(SumSampler::Binomial)
                .map_err(|e| Error::Config(format!("bernoulli p = {p}: {e}"))),
            Family::Poisson { lambda } => Poisson::new(lambda * k as f64)
                .map(SumSampler::Poisson)
                .map_err(|e| Error::Config(format!("poisson lambda = {lambda}: {e}"))),
        }
    }
}

enum SumSampler {
    Binomial(Binomial),
    Poisson(Poisson<f64>),
}

impl SumSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SumSampler::Binomial(b) => b.sample(rng) as f64,
            SumSampler::Poisson(p) => p.sample(rng),
        }
    }
}

/// Standard deviations for the scan scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "lowercase")]
pub enum SigmaField {
    Const { sigma: f64 },
    /// i.i.d. uniform on `[lo, hi]` at every position.
    Uniform { lo: f64, hi: f64 },
    /// 1 inside the planted interval, i.i.d. uniform on `[lo, hi]` outside.
    Outside { lo: f64, hi: f64 },
}

impl SigmaField {
    /// Parses `const:S`, `uniform:LO:HI` or `outside:LO:HI`.
    pub fn parse(s: &str) -> Result<SigmaField> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{t}' in sigma field '{s}'")))
        };
        let field = match parts.as_slice() {
            ["const", v] => SigmaField::Const { sigma: num(v)? },
            ["uniform", lo, hi] => SigmaField::Uniform {
                lo: num(lo)?,
                hi: num(hi)?,
            },
            ["outside", lo, hi] => SigmaField::Outside {
                lo: num(lo)?,
                hi: num(hi)?,
            },
            _ => {
                return Err(Error::Config(format!(
                    "sigma field '{s}' must be const:S, uniform:LO:HI or outside:LO:HI"
                )))
            }
        };
        field.validate()?;
        Ok(field)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SigmaField::Const { sigma } => sigma > 0.0 && sigma.is_finite(),
            SigmaField::Uniform { lo, hi } | SigmaField::Outside { lo, hi } => {
                lo > 0.0 && hi >= lo && hi.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid sigma field {self:?}")))
        }
    }

    fn fill<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, iv: Interval, out: &mut Vec<f64>) {
        out.clear();
        let inside = |k: usize| (k + n - iv.offset) % n < iv.len;
        for k in 0..n {
            let s = match *self {
                SigmaField::Const { sigma } => sigma,
                SigmaField::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                SigmaField::Outside { lo, hi } => {
                    if inside(k) {
                        1.0
                    } else {
                        lo + (hi - lo) * rng.random::<f64>()
                    }
                }
            };
            out.push(s);
        }
    }
}

/// Signal and geometry of a power experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSpec {
    pub n: usize,
    pub len: usize,
    /// The plant is `(1 + margin)` times the detection threshold.
    pub margin: f64,
    pub eps: f64,
    pub alpha: f64,
    pub sigma: SigmaField,
    pub law: Law,
    /// Required detection rate (lower bound) or, for a below-threshold
    /// contrast, the rate that must not be exceeded.
    pub target: f64,
    pub expect_detect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Centered t on i.i.d. Gaussian data against the normal tail.
    PivotTail { n: usize, m: usize, mu: f64, sigma: f64 },
    /// `sqrt(2 logLR_m(theta0))` at the true parameter.
    LoglrWindow { family: Family, m: usize },
    /// `sqrt(2 logLR_{m,n})` with the parameter estimated.
    LoglrSplit { family: Family, m: usize, n: usize },
    /// `sum X / sqrt(sum X^2)` for i.i.d. symmetric data.
    SymmetricSum { law: Law, m: usize },
    /// `T_m` with constant centers on the window and on the complement.
    SelfnormConstant {
        law: Law,
        m: usize,
        p: usize,
        gap: f64,
        left_tail: bool,
    },
    /// `T_m` with varying centers and scales; thresholds restricted to
    /// `t <= sqrt(m) / M`.
    SelfnormVarying {
        law: Law,
        m: usize,
        p: usize,
        gap: f64,
        wobble: f64,
        sigma_lo: f64,
        sigma_hi: f64,
    },
    /// Family-wise error of the scan under a heteroscedastic null.
    ScanNull {
        law: Law,
        n: usize,
        sigma_lo: f64,
        sigma_hi: f64,
    },
    ScanPower(PowerSpec),
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::PivotTail { .. } => "pivot_tail",
            Scenario::LoglrWindow { .. } => "loglr_window",
            Scenario::LoglrSplit { .. } => "loglr_split",
            Scenario::SymmetricSum { .. } => "symmetric_sum",
            Scenario::SelfnormConstant { .. } => "selfnorm_constant",
            Scenario::SelfnormVarying { .. } => "selfnorm_varying",
            Scenario::ScanNull { .. } => "scan_null",
            Scenario::ScanPower(_) => "scan_power",
        }
    }

    pub fn bound_kind(&self) -> Option<TailBoundKind> {
        match self {
            Scenario::PivotTail { .. } => Some(TailBoundKind::NormalTail),
            Scenario::LoglrWindow { .. } => Some(TailBoundKind::LogLrWindow),
            Scenario::LoglrSplit { .. } => Some(TailBoundKind::LogLrSplit),
            Scenario::SymmetricSum { .. } => Some(TailBoundKind::Rademacher),
            Scenario::SelfnormConstant { .. } | Scenario::SelfnormVarying { .. } => {
                Some(TailBoundKind::SelfNormalized)
            }
            Scenario::ScanNull { .. } | Scenario::ScanPower(_) => None,
        }
    }

    fn is_scan(&self) -> bool {
        matches!(self, Scenario::ScanNull { .. } | Scenario::ScanPower(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub name: String,
    pub scenario: Scenario,
    pub replications: u64,
    pub seed: u64,
    /// Thresholds for bound checks; levels `alpha` for the scan null.
    pub t_grid: Vec<f64>,
    /// Multiplies every bound; values below 1 give a negative control.
    #[serde(default = "one")]
    pub bound_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl McSpec {
    pub fn new(name: &str, scenario: Scenario, replications: u64, seed: u64, t_grid: Vec<f64>) -> Self {
        McSpec {
            name: name.to_string(),
            scenario,
            replications,
            seed,
            t_grid,
            bound_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let min = if self.scenario.is_scan() {
            MIN_SCAN_REPLICATIONS
        } else {
            MIN_BOUND_REPLICATIONS
        };
        if self.replications < min {
            return Err(Error::Config(format!(
                "{}: need at least {min} replications (got {})",
                self.name, self.replications
            )));
        }
        if !(self.bound_scale > 0.0) {
            return Err(Error::Config("bound scale must be positive".into()));
        }
        if self.t_grid.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config(format!("{}: thresholds must be positive", self.name)));
        }
        let bad = |msg: String| Err(Error::Config(format!("{}: {msg}", self.name)));
        match &self.scenario {
            Scenario::PivotTail { n, m, sigma, .. } => {
                if *n < 3 || *m == 0 || m >= n || !(*sigma > 0.0) {
                    return bad(format!("pivot needs n >= 3, 1 <= m < n, sigma > 0 (n={n}, m={m})"));
                }
            }
            Scenario::LoglrWindow { m, .. } => {
                if *m == 0 {
                    return bad("window length must be positive".into());
                }
            }
            Scenario::LoglrSplit { m, n, .. } => {
                if *m == 0 || m >= n {
                    return bad(format!("split needs 1 <= m < n (m={m}, n={n})"));
                }
            }
            Scenario::SymmetricSum { law, m } => {
                law.validate()?;
                if *m == 0 {
                    return bad("window length must be positive".into());
                }
            }
            Scenario::SelfnormConstant { law, m, p, gap, .. } => {
                law.validate()?;
                if *m == 0 || *p < 2 || !(*gap >= 0.0) {
                    return bad("need m >= 1, p >= 2 and a nonnegative gap".into());
                }
            }
            Scenario::SelfnormVarying {
                law,
                m,
                p,
                gap,
                sigma_lo,
                sigma_hi,
                ..
            } => {
                law.validate()?;
                if *m == 0 || *p < 2 || !(*gap > 0.0) || !(*sigma_lo > 0.0 && sigma_hi >= sigma_lo) {
                    return bad("need m >= 1, p >= 2, gap > 0 and 0 < sigma_lo <= sigma_hi".into());
                }
            }
            Scenario::ScanNull {
                law,
                n,
                sigma_lo,
                sigma_hi,
            } => {
                law.validate()?;
                if *n < 8 || !(*sigma_lo > 0.0 && sigma_hi >= sigma_lo) {
                    return bad("scan needs n >= 8 and 0 < sigma_lo <= sigma_hi".into());
                }
                if self.t_grid.iter().any(|a| *a >= 1.0) {
                    return bad("levels must lie in (0, 1)".into());
                }
            }
            Scenario::ScanPower(ps) => {
                ps.law.validate()?;
                ps.sigma.validate()?;
                if ps.len < 2 || ps.n / ps.len < 2 || ps.n < 8 {
                    return bad(format!(
                        "infeasible geometry n = {}, len = {}",
                        ps.n, ps.len
                    ));
                }
                if !(ps.alpha > 0.0 && ps.alpha < 1.0) || !(ps.eps >= 0.0) || !(ps.margin > -1.0) {
                    return bad("need alpha in (0,1), eps >= 0 and margin > -1".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `empirical <= bound + 3 stderr`.
    Upper,
    /// `empirical >= bound`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub threshold: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

impl McRow {
    fn new(threshold: f64, hits: u64, reps: u64, bound: f64, dir: Direction) -> Self {
        let p = hits as f64 / reps as f64;
        let stderr = (p * (1.0 - p) / reps as f64).sqrt();
        let pass = match dir {
            Direction::Upper => p <= bound + 3.0 * stderr,
            Direction::Lower => p >= bound,
        };
        McRow {
            threshold,
            empirical: p,
            stderr,
            bound,
            pass,
        }
    }
}

/// Extra diagnostics of a power experiment (averages over replications).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerDetails {
    pub planted_gap: f64,
    pub r_ratio: f64,
    pub growth_constant: f64,
    pub n_intervals: usize,
    pub critical: f64,
    pub kappa: f64,
    pub mean_t_planted: f64,
    pub argmax_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub name: String,
    pub scenario: Scenario,
    pub bound: String,
    pub direction: Direction,
    pub seed: u64,
    pub replications: u64,
    pub rows: Vec<McRow>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub power: Option<PowerDetails>,
    #[serde(skip)]
    pub runtime: Duration,
}

/// Splits `reps` into chunks and sums per-threshold hit counts.
fn count_hits<F>(exec: Exec, reps: u64, chunk: u64, seed: u64, k: usize, f: F) -> Vec<u64>
where
    F: Fn(&mut ChaCha8Rng, u64, &mut [u64]) + Sync + Send,
{
    let n_chunks = reps.div_ceil(chunk);
    let parts = map_indexed(exec, n_chunks as usize, |c| {
        let mut rng = chunk_rng(seed, c as u64);
        let todo = chunk.min(reps - c as u64 * chunk);
        let mut hits = vec![0u64; k];
        f(&mut rng, todo, &mut hits);
        hits
    });
    let mut total = vec![0u64; k];
    for p in parts {
        for (t, h) in total.iter_mut().zip(p) {
            *t += h;
        }
    }
    total
}

fn tally(stat: f64, grid: &[f64], inclusive: bool, hits: &mut [u64]) {
    for (t, h) in grid.iter().zip(hits.iter_mut()) {
        if stat > *t || (inclusive && stat >= *t) {
            *h += 1;
        }
    }
}

/// Self-normalized sum of the centered transform.
fn t_from_plan(plan: &CenteringPlan, x: &[f64]) -> f64 {
    let w = (plan.p() - 1) as f64;
    let (mut s, mut ss) = (0.0, 0.0);
    for (i, b) in plan.blocks().iter().enumerate() {
        let v = x[i] - b.iter().map(|&c| x[c]).sum::<f64>() / w;
        s += v;
        ss += v * v;
    }
    if ss > 0.0 {
        s / ss.sqrt()
    } else {
        0.0
    }
}

fn unit_draw<R: Rng + ?Sized>(law: &Law, rng: &mut R) -> f64 {
    law.draw(rng) / law.variance().sqrt()
}

/// Tabulates a bound-check scenario.
pub fn run_bound_check(spec: &McSpec, exec: Exec) -> Result<McReport> {
    spec.validate()?;
    let kind = spec.scenario.bound_kind().ok_or_else(|| {
        Error::Config(format!("{}: {} is not a bound check", spec.name, spec.scenario.label()))
    })?;
    let start = Instant::now();
    let reps = spec.replications;
    let mut grid = spec.t_grid.clone();
    let k = grid.len();
    let seed = spec.seed;
    let hits = match &spec.scenario {
        Scenario::PivotTail { n, m, mu, sigma } => {
            let (n, m, mu, sigma) = (*n, *m, *mu, *sigma);
            count_hits(exec, reps, BOUND_CHUNK, seed, k, |rng, todo, hits| {
                let mut x = vec![0.0; n];
                for _ in 0..todo {
                    for v in x.iter_mut() {
                        let z: f64 = StandardNormal.sample(rng);
                        *v = mu + sigma * z;
                    }
                    let v = centered_t(&x, m).unwrap_or(f64::NAN);
                    tally(v, &grid, false, hits);
                }
            })
        }
        Scenario::LoglrWindow { family, m } => {
            let sampler = family.sum_sampler(*m)?;
            let mu0 = family.mean();
            let m = *m;
            let fam = *family;
            count_hits(exec, reps, BOUND_CHUNK, seed, k, |rng, todo, hits| {
                fam.with(|ef| {
                    for _ in 0..todo {
                        let xbar = sampler.draw(rng) / m as f64;
                        let stat = kl_between_means(ef, xbar, mu0)
                            .map(|kl| (2.0 * m as f64 * kl).sqrt())
                            .unwrap_or(f64::INFINITY);
                        tally(stat, &grid, false, hits);
                    }
                })
            })
        }
        Scenario::LoglrSplit { family, m, n } => {
            let sw = family.sum_sampler(*m)?;
            let sc = family.sum_sampler(n - m)?;
            let (m, nc) = (*m, n - m);
            let fam = *family;
            count_hits(exec, reps, BOUND_CHUNK, seed, k, |rng, todo, hits| {
                fam.with(|ef| {
                    for _ in 0..todo {
                        let s = SplitSample::new(sw.draw(rng), m, sc.draw(rng), nc)
                            .expect("counts are positive");
                        let stat = loglr_split(ef, &s)
                            .map(|l| (2.0 * l).sqrt())
                            .unwrap_or(f64::INFINITY);
                        tally(stat, &grid, false, hits);
                    }
                })
            })
        }
        Scenario::SymmetricSum { law, m } => {
            let (law, m) = (*law, *m);
            count_hits(exec, reps, BOUND_CHUNK, seed, k, |rng, todo, hits| {
                for _ in 0..todo {
                    let (mut s, mut ss) = (0.0, 0.0);
                    for _ in 0..m {
                        let v = law.draw(rng);
                        s += v;
                        ss += v * v;
                    }
                    let stat = if ss > 0.0 { s / ss.sqrt() } else { 0.0 };
                    tally(stat, &grid, true, hits);
                }
            })
        }
        Scenario::SelfnormConstant {
            law,
            m,
            p,
            gap,
            left_tail,
        } => {
            let plan = make_plan(*m, m * p)?;
            let (law, m, gap, left) = (*law, *m, *gap, *left_tail);
            let n = plan.n();
            count_hits(exec, reps, BOUND_CHUNK, seed, k, |rng, todo, hits| {
                let mut x = vec![0.0; n];
                for _ in 0..todo {
                    for (i, v) in x.iter_mut().enumerate() {
                        let inside = i < m;
                        // Right tail: window center below the rest; the
                        // mirror flips both.
                        let center = if inside == left { gap } else { 0.0 };
                        *v = center + law.draw(rng);
                    }
                    let t = t_from_plan(&plan, &x);
                    tally(if left { -t } else { t }, &grid, true, hits);
                }
            })
        }
        Scenario::SelfnormVarying {
            law,
            m,
            p,
            gap,
            wobble,
            sigma_lo,
            sigma_hi,
        } => {
            let plan = make_plan(*m, m * p)?;
            let n = plan.n();
            // Fixed centers and scales drawn once from stream u64::MAX.
            let mut frng = chunk_rng(seed, u64::MAX);
            let mu: Vec<f64> = (0..n)
                .map(|i| {
                    let base = if i < *m { 0.0 } else { *gap };
                    base + wobble * (2.0 * frng.random::<f64>() - 1.0)
                })
                .collect();
            let sd: Vec<f64> = (0..n)
                .map(|_| sigma_lo + (sigma_hi - sigma_lo) * frng.random::<f64>())
                .collect();
            let cond = check_conditions(&MeanStructure::new(mu.clone()), &plan)?;
            if cond.mu_window > cond.mu_complement {
                return Err(Error::Config(format!(
                    "{}: window centers exceed complement centers",
                    spec.name
                )));
            }
            let limit = (*m as f64).sqrt() / cond.ratio_bound;
            grid.retain(|t| *t <= limit);
            let k = grid.len();
            let law = *law;
            count_hits(exec, reps, BOUND_CHUNK, seed, k, |rng, todo, hits| {
                let mut x = vec![0.0; n];
                for _ in 0..todo {
                    for (i, v) in x.iter_mut().enumerate() {
                        *v = mu[i] + sd[i] * unit_draw(&law, rng);
                    }
                    tally(t_from_plan(&plan, &x), &grid, true, hits);
                }
            })
        }
        _ => unreachable!("scan scenarios have no bound kind"),
    };
    let rows: Vec<McRow> = grid
        .iter()
        .zip(&hits)
        .map(|(&t, &h)| McRow::new(t, h, reps, spec.bound_scale * kind.eval(t), Direction::Upper))
        .collect();
    Ok(McReport {
        name: spec.name.clone(),
        scenario: spec.scenario.clone(),
        bound: serde_json::to_value(kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        direction: Direction::Upper,
        seed,
        replications: reps,
        pass: rows.iter().all(|r| r.pass),
        rows,
        power: None,
        runtime: start.elapsed(),
    })
}

/// Family-wise error rate of the scan at each level in `t_grid`.
pub fn run_scan_null(spec: &McSpec, exec: Exec) -> Result<McReport> {
    spec.validate()?;
    let Scenario::ScanNull {
        law,
        n,
        sigma_lo,
        sigma_hi,
    } = &spec.scenario
    else {
        return Err(Error::Config(format!("{}: not a scan null scenario", spec.name)));
    };
    let start = Instant::now();
    let (law, n, lo, hi) = (*law, *n, *sigma_lo, *sigma_hi);
    let cfg = ScanConfig {
        exec: Exec::Sequential,
        ..ScanConfig::default()
    };
    let n_total = cfg.intervals_for(n).len();
    let crit: Vec<f64> = spec
        .t_grid
        .iter()
        .map(|a| invert_tail_bound(a / n_total as f64).map(|c| c.0))
        .collect::<Result<_>>()?;
    let k = crit.len();
    let hits = count_hits(exec, spec.replications, SCAN_CHUNK, spec.seed, k, |rng, todo, hits| {
        let mut x = vec![0.0; n];
        for _ in 0..todo {
            for v in x.iter_mut() {
                let s = lo + (hi - lo) * rng.random::<f64>();
                *v = s * unit_draw(&law, rng);
            }
            let res = run_scan(&x, &cfg).expect("continuous data are not degenerate");
            tally(res.argmax.t, &crit, false, hits);
        }
    });
    let rows: Vec<McRow> = spec
        .t_grid
        .iter()
        .zip(&hits)
        .map(|(&a, &h)| McRow::new(a, h, spec.replications, spec.bound_scale * a, Direction::Upper))
        .collect();
    Ok(McReport {
        name: spec.name.clone(),
        scenario: spec.scenario.clone(),
        bound: "alpha".into(),
        direction: Direction::Upper,
        seed: spec.seed,
        replications: spec.replications,
        pass: rows.iter().all(|r| r.pass),
        rows,
        power: None,
        runtime: start.elapsed(),
    })
}

/// `sqrt((2 + eps) sigma_I^2 R_I log(n/m) / m)`.
pub fn detection_threshold(eps: f64, sigma_i2: f64, r: f64, n: usize, m: usize) -> f64 {
    ((2.0 + eps) * sigma_i2 * r * (n as f64 / m as f64).ln() / m as f64).sqrt()
}

/// One planted series; returns the data, the interval and its diagnostics.
struct Plant {
    x: Vec<f64>,
    iv: Interval,
    gap: f64,
    r: f64,
    s: f64,
}

fn plant<R: Rng + ?Sized>(ps: &PowerSpec, rng: &mut R, sd: &mut Vec<f64>) -> Result<Plant> {
    let (n, m) = (ps.n, ps.len);
    let stride = StrideSpec::Auto.stride(m);
    let slots = n.div_ceil(stride);
    let iv = Interval::new(stride * rng.random_range(0..slots), m);
    ps.sigma.fill(rng, n, iv, sd);
    let plan = make_plan(m, n)?;
    let r = r_ratio(sd, iv, &plan)?;
    let s = growth_constant(sd, iv)?;
    let sigma_i2 = (0..m).map(|k| sd[(iv.offset + k) % n].powi(2)).sum::<f64>() / m as f64;
    let gap = (1.0 + ps.margin) * detection_threshold(ps.eps, sigma_i2, r, n, m);
    let x = (0..n)
        .map(|k| {
            let inside = (k + n - iv.offset) % n < m;
            let center = if inside { gap } else { 0.0 };
            center + sd[k] * unit_draw(&ps.law, rng)
        })
        .collect();
    Ok(Plant { x, iv, gap, r, s })
}

/// Planted series for fixtures: data and the planted interval.
pub fn planted_fixture(ps: &PowerSpec, seed: u64) -> Result<(Vec<f64>, Interval)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sd = Vec::new();
    let p = plant(ps, &mut rng, &mut sd)?;
    Ok((p.x, p.iv))
}

#[derive(Default, Clone, Copy)]
struct PowerAcc {
    detect: u64,
    gap: f64,
    r: f64,
    s: f64,
    t: f64,
    overlap: f64,
}

/// Detection rate of the scan against a planted elevated interval.
pub fn run_power_experiment(spec: &McSpec, exec: Exec) -> Result<McReport> {
    spec.validate()?;
    let Scenario::ScanPower(ps) = &spec.scenario else {
        return Err(Error::Config(format!("{}: not a power scenario", spec.name)));
    };
    let start = Instant::now();
    let ps = *ps;
    let cfg = ScanConfig {
        alpha: ps.alpha,
        exec: Exec::Sequential,
        ..ScanConfig::default()
    };
    let n_total = cfg.intervals_for(ps.n).len();
    let crit = crate::scan::critical_value(ps.len, ps.n, n_total, ps.alpha, false)?;
    let reps = spec.replications;
    let n_chunks = reps.div_ceil(SCAN_CHUNK);
    let parts = map_indexed(exec, n_chunks as usize, |c| -> Result<PowerAcc> {
        let mut rng = chunk_rng(spec.seed, c as u64);
        let todo = SCAN_CHUNK.min(reps - c as u64 * SCAN_CHUNK);
        let mut acc = PowerAcc::default();
        let mut sd = Vec::new();
        for _ in 0..todo {
            let p = plant(&ps, &mut rng, &mut sd)?;
            let res = run_scan(&p.x, &cfg)?;
            acc.detect += res.any_detection as u64;
            acc.gap += p.gap;
            acc.r += p.r;
            acc.s = acc.s.max(p.s);
            acc.t += FastScanner::new(&p.x).t(p.iv).unwrap_or(0.0);
            let hit = res.argmax.interval().overlap(&p.iv, ps.n);
            acc.overlap += hit as f64 / ps.len.max(res.argmax.len) as f64;
        }
        Ok(acc)
    });
    let mut tot = PowerAcc::default();
    for p in parts {
        let p = p?;
        tot.detect += p.detect;
        tot.gap += p.gap;
        tot.r += p.r;
        tot.s = tot.s.max(p.s);
        tot.t += p.t;
        tot.overlap += p.overlap;
    }
    let rf = reps as f64;
    let (direction, bound) = if ps.expect_detect {
        (Direction::Lower, ps.target)
    } else {
        (Direction::Upper, ps.target * spec.bound_scale)
    };
    let row = McRow::new(tot.gap / rf, tot.detect, reps, bound, direction);
    Ok(McReport {
        name: spec.name.clone(),
        scenario: spec.scenario.clone(),
        bound: "detection_rate".into(),
        direction,
        seed: spec.seed,
        replications: reps,
        pass: row.pass,
        rows: vec![row],
        power: Some(PowerDetails {
            planted_gap: tot.gap / rf,
            r_ratio: tot.r / rf,
            growth_constant: tot.s,
            n_intervals: n_total,
            critical: crit.value,
            kappa: crit.kappa,
            mean_t_planted: tot.t / rf,
            argmax_overlap: tot.overlap / rf,
        }),
        runtime: start.elapsed(),
    })
}

/// Dispatches on the scenario.
pub fn run_spec(spec: &McSpec, exec: Exec) -> Result<McReport> {
    match spec.scenario {
        Scenario::ScanNull { .. } => run_scan_null(spec, exec),
        Scenario::ScanPower(_) => run_power_experiment(spec, exec),
        _ => run_bound_check(spec, exec),
    }
}

/// Kolmogorov-Smirnov comparison of simulated centered t values with the
/// exact pivot law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub samples: u64,
    pub seed: u64,
    pub statistic: f64,
    /// Asymptotic critical value at level 0.01, `1.6276 / sqrt(samples)`.
    pub critical: f64,
    pub max_abs: f64,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn pivot_ks_check(
    name: &str,
    n: usize,
    m: usize,
    mu: f64,
    sigma: f64,
    samples: u64,
    seed: u64,
    exec: Exec,
) -> Result<KsReport> {
    if samples == 0 || n < 3 || m == 0 || m >= n {
        return Err(Error::Config(format!("{name}: invalid pivot check")));
    }
    let n_chunks = samples.div_ceil(BOUND_CHUNK);
    let parts = map_indexed(exec, n_chunks as usize, |c| {
        let mut rng = chunk_rng(seed, c as u64);
        let todo = BOUND_CHUNK.min(samples - c as u64 * BOUND_CHUNK);
        let mut x = vec![0.0; n];
        (0..todo)
            .map(|_| {
                for v in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = mu + sigma * z;
                }
                centered_t(&x, m).unwrap_or(0.0)
            })
            .collect::<Vec<f64>>()
    });
    let mut v: Vec<f64> = parts.into_iter().flatten().collect();
    v.sort_by(f64::total_cmp);
    let total = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &t) in v.iter().enumerate() {
        let cdf = 1.0 - pivot_tail_exact(t, n)?;
        d = d.max((i as f64 + 1.0) / total - cdf).max(cdf - i as f64 / total);
    }
    let max_abs = v.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let critical = 1.6276 / total.sqrt();
    Ok(KsReport {
        name: name.to_string(),
        n,
        m,
        samples,
        seed,
        statistic: d,
        critical,
        max_abs,
        pass: d <= critical && max_abs <= ((n - 1) as f64).sqrt() + 1e-9,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Replications for each bound check.
    pub replications: u64,
    pub scan_null_replications: u64,
    pub power_replications: u64,
    pub ks_samples: u64,
    pub bound_scale: f64,
    pub exec: Exec,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            replications: 1_000_000,
            scan_null_replications: 500,
            power_replications: 200,
            ks_samples: 100_000,
            bound_scale: 1.0,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub schema: String,
    pub root_seed: u64,
    pub ks: Vec<KsReport>,
    pub reports: Vec<McReport>,
    pub all_pass: bool,
}

impl SuiteSummary {
    pub fn failures(&self) -> Vec<&str> {
        let ks = self.ks.iter().filter(|k| !k.pass).map(|k| k.name.as_str());
        let mc = self.reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str());
        ks.chain(mc).collect()
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step).round() as usize;
    (0..=k).map(|i| lo + step * i as f64).collect()
}

/// Threshold grid `{0.5, 1, .., 3.5}` for the log-LR checks.
pub fn loglr_grid() -> Vec<f64> {
    grid(0.5, 3.5, 0.5)
}

/// Threshold grid `{1, 1.5, .., 3.5}` for the self-normalized checks.
pub fn selfnorm_grid() -> Vec<f64> {
    grid(1.0, 3.5, 0.5)
}

pub fn default_power_spec() -> PowerSpec {
    PowerSpec {
        n: 8192,
        len: 128,
        margin: 0.2,
        eps: 0.2,
        alpha: 0.05,
        sigma: SigmaField::Const { sigma: 1.0 },
        law: Law::Normal { sigma: 1.0 },
        target: 0.9,
        expect_detect: true,
    }
}

/// Every registered check, with per-scenario seeds derived from `root_seed`.
pub fn registry(root_seed: u64, opts: &SuiteOptions) -> Vec<McSpec> {
    let mut specs = Vec::new();
    let mut add = |name: String, scenario: Scenario, reps: u64, t_grid: Vec<f64>| {
        let mut s = McSpec::new(&name, scenario, reps, scenario_seed(root_seed, &name), t_grid);
        s.bound_scale = opts.bound_scale;
        specs.push(s);
    };
    let r = opts.replications;
    for (n, m) in [(10, 5), (30, 10)] {
        add(
            format!("pivot_tail/n{n}"),
            Scenario::PivotTail {
                n,
                m,
                mu: 3.7,
                sigma: 2.3,
            },
            r,
            grid(2.5, 4.0, 0.25),
        );
    }
    let families = [
        ("bernoulli", Family::Bernoulli { p: 0.3 }),
        ("poisson", Family::Poisson { lambda: 1.0 }),
    ];
    for (fname, fam) in families {
        for m in [5, 20, 100] {
            add(
                format!("loglr_window/{fname}/m{m}"),
                Scenario::LoglrWindow { family: fam, m },
                r,
                loglr_grid(),
            );
        }
        for (m, n) in [(5, 25), (20, 100)] {
            add(
                format!("loglr_split/{fname}/m{m}n{n}"),
                Scenario::LoglrSplit { family: fam, m, n },
                r,
                loglr_grid(),
            );
        }
    }
    for law in crate::logconcave::builtin_laws() {
        let ln = law.name();
        add(
            format!("symmetric_sum/{ln}/m16"),
            Scenario::SymmetricSum { law, m: 16 },
            r,
            selfnorm_grid(),
        );
        for m in [16, 64] {
            for p in [2, 4] {
                for gap in [0.0, 0.25] {
                    add(
                        format!("selfnorm_constant/{ln}/m{m}p{p}/gap{gap}"),
                        Scenario::SelfnormConstant {
                            law,
                            m,
                            p,
                            gap,
                            left_tail: false,
                        },
                        r,
                        selfnorm_grid(),
                    );
                }
            }
        }
        add(
            format!("selfnorm_constant_left/{ln}/m16p2"),
            Scenario::SelfnormConstant {
                law,
                m: 16,
                p: 2,
                gap: 0.0,
                left_tail: true,
            },
            r,
            selfnorm_grid(),
        );
        add(
            format!("selfnorm_varying/{ln}/m64p4"),
            Scenario::SelfnormVarying {
                law,
                m: 64,
                p: 4,
                gap: 0.1,
                wobble: 0.05,
                sigma_lo: 0.5,
                sigma_hi: 2.0,
            },
            r,
            selfnorm_grid(),
        );
        add(
            format!("scan_null/{ln}"),
            Scenario::ScanNull {
                law,
                n: 1024,
                sigma_lo: 0.5,
                sigma_hi: 2.0,
            },
            opts.scan_null_replications,
            vec![0.05, 0.1],
        );
    }
    let base = default_power_spec();
    add(
        "scan_power/normal/margin0.2".into(),
        Scenario::ScanPower(base),
        opts.power_replications,
        vec![],
    );
    add(
        "scan_power/normal/margin-0.5".into(),
        Scenario::ScanPower(PowerSpec {
            margin: -0.5,
            target: 0.5,
            expect_detect: false,
            ..base
        }),
        opts.power_replications,
        vec![],
    );
    add(
        "scan_power/laplace_outside/margin0.3".into(),
        Scenario::ScanPower(PowerSpec {
            margin: 0.3,
            sigma: SigmaField::Outside { lo: 0.5, hi: 2.0 },
            law: Law::Laplace {
                scale: std::f64::consts::FRAC_1_SQRT_2,
            },
            target: 0.85,
            ..base
        }),
        opts.power_replications,
        vec![],
    );
    specs
}

/// Runs the pivot law check and every registered spec.
pub fn run_full_suite(root_seed: u64, opts: &SuiteOptions) -> Result<SuiteSummary> {
    let ks = vec![pivot_ks_check(
        "pivot_law/n10",
        10,
        5,
        -1.4,
        3.1,
        opts.ks_samples,
        scenario_seed(root_seed, "pivot_law/n10"),
        opts.exec,
    )?];
    let reports = registry(root_seed, opts)
        .iter()
        .map(|s| run_spec(s, opts.exec))
        .collect::<Result<Vec<_>>>()?;
    let all_pass = ks.iter().all(|k| k.pass) && reports.iter().all(|r| r.pass);
    Ok(SuiteSummary {
        schema: SCHEMA.to_string(),
        root_seed,
        ks,
        reports,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
        assert_ne!(scenario_seed(1, "a"), scenario_seed(1, "b"));
        assert_eq!(scenario_seed(7, "x"), scenario_seed(7, "x"));
    }

    #[test]
    fn sigma_field_parsing() {
        assert_eq!(SigmaField::parse("const:2").unwrap(), SigmaField::Const { sigma: 2.0 });
        assert_eq!(
            SigmaField::parse("outside:0.5:2").unwrap(),
            SigmaField::Outside { lo: 0.5, hi: 2.0 }
        );
        assert!(SigmaField::parse("uniform:2:1").is_err());
        assert!(SigmaField::parse("wide").is_err());
    }

    #[test]
    fn replication_minimums() {
        let s = McSpec::new(
            "x",
            Scenario::LoglrWindow {
                family: Family::Bernoulli { p: 0.3 },
                m: 5,
            },
            9_999,
            1,
            loglr_grid(),
        );
        assert!(run_bound_check(&s, Exec::Sequential).is_err());
        let s = McSpec::new("p", Scenario::ScanPower(default_power_spec()), 199, 1, vec![]);
        assert!(run_power_experiment(&s, Exec::Sequential).is_err());
    }

    #[test]
    fn chunking_is_mode_independent() {
        let s = McSpec::new(
            "w",
            Scenario::LoglrWindow {
                family: Family::Poisson { lambda: 1.0 },
                m: 20,
            },
            25_000,
            42,
            loglr_grid(),
        );
        let a = run_bound_check(&s, Exec::Sequential).unwrap();
        let b = run_bound_check(&s, Exec::Parallel).unwrap();
        assert_eq!(a.rows, b.rows);
        assert!(a.pass);
    }

    #[test]
    fn negative_control_fails() {
        let mut s = McSpec::new(
            "neg",
            Scenario::SelfnormConstant {
                law: Law::Normal { sigma: 1.0 },
                m: 16,
                p: 2,
                gap: 0.0,
                left_tail: false,
            },
            20_000,
            3,
            selfnorm_grid(),
        );
        s.bound_scale = 0.1;
        assert!(!run_bound_check(&s, Exec::Sequential).unwrap().pass);
    }

    #[test]
    fn fixture_has_the_plant() {
        let ps = PowerSpec {
            n: 512,
            len: 32,
            margin: 2.0,
            ..default_power_spec()
        };
        let (x, iv) = planted_fixture(&ps, 5).unwrap();
        assert_eq!(x.len(), 512);
        assert_eq!(iv.offset % 8, 0);
        let inside: f64 = (0..32).map(|k| x[(iv.offset + k) % 512]).sum::<f64>() / 32.0;
        assert!(inside > 0.5);
    }
}

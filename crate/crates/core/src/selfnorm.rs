//! Self-normalized sums after empirical centering.
//!
//! A window of length `m` is paired with `p - 1` disjoint complement points
//! per window point; each window observation has the average of its block
//! subtracted. The resulting `X~_i` are independent and symmetric about
//! `mu~_i`, so the self-normalized sum `T_m = sum X~ / sqrt(sum X~^2)`
//! inherits Rademacher-type tail bounds.

use crate::error::{Error, Result};
use crate::numerics::{normal_pdf, normal_upper_tail};

/// Cap on the multiplier of the normal tail.
pub const MULTIPLIER_CAP: f64 = 3.18;

/// Rows of the centering matrix: row `i` has `+1` in column `i` and
/// `-1/(p-1)` in each column of `blocks[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringPlan {
    m: usize,
    p: usize,
    blocks: Vec<Vec<usize>>,
}

/// Contiguous blocks: row `i` averages columns `m + i(p-1) .. m + (i+1)(p-1)`.
/// Observations past `m * floor(n_avail / m)` are dropped.
pub fn make_plan(m: usize, n_avail: usize) -> Result<CenteringPlan> {
    if m == 0 {
        return Err(Error::Domain("window length must be positive".into()));
    }
    let p = n_avail / m;
    if p < 2 {
        return Err(Error::Domain(format!(
            "need at least 2m = {} observations for window length {m} (got {n_avail})",
            2 * m
        )));
    }
    let w = p - 1;
    let blocks = (0..m)
        .map(|i| (m + i * w..m + (i + 1) * w).collect())
        .collect();
    Ok(CenteringPlan { m, p, blocks })
}

impl CenteringPlan {
    /// Arbitrary assignment of complement columns to rows. Each block must
    /// have `p - 1` entries and the blocks must partition `m..m*p`.
    pub fn from_assignment(m: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if m == 0 || blocks.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: blocks.len(),
            });
        }
        let w = blocks[0].len();
        if w == 0 {
            return Err(Error::Domain("blocks must be nonempty".into()));
        }
        let n = m * (w + 1);
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.len() != w {
                return Err(Error::Domain("all blocks must have the same size".into()));
            }
            for &c in b {
                if c < m || c >= n || seen[c] {
                    return Err(Error::Domain(format!(
                        "column {c} is outside {m}..{n} or used twice"
                    )));
                }
                seen[c] = true;
            }
        }
        Ok(CenteringPlan { m, p: w + 1, blocks })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of observations consumed, `m * p`.
    pub fn n(&self) -> usize {
        self.m * self.p
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len < self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }

    /// Dense `m x n` matrix, row-major.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let w = (self.p - 1) as f64;
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let mut row = vec![0.0; self.n()];
                row[i] = 1.0;
                for &c in b {
                    row[c] = -1.0 / w;
                }
                row
            })
            .collect()
    }
}

/// `X~ = A X`.
pub fn transform(plan: &CenteringPlan, x: &[f64]) -> Result<Vec<f64>> {
    plan.check_len(x.len())?;
    let w = (plan.p - 1) as f64;
    Ok(plan
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| x[i] - b.iter().map(|&c| x[c]).sum::<f64>() / w)
        .collect())
}

/// Self-normalized ratio of a transformed vector. Returns `None` when the
/// vector is zero up to rounding relative to `scale`.
pub(crate) fn self_normalized_ratio(sum: f64, sum_sq: f64, m: usize, scale: f64) -> Option<f64> {
    let floor = 8.0 * f64::EPSILON * scale;
    if !(sum_sq > m as f64 * floor * floor) {
        return None;
    }
    Some(sum / sum_sq.sqrt())
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// `T_m = sum X~_i / sqrt(sum X~_i^2)`.
pub fn t_stat(plan: &CenteringPlan, x: &[f64]) -> Result<f64> {
    let xt = transform(plan, x)?;
    let sum: f64 = xt.iter().sum();
    let sum_sq: f64 = xt.iter().map(|v| v * v).sum();
    self_normalized_ratio(sum, sum_sq, plan.m, max_abs(&x[..plan.n()]))
        .ok_or_else(|| Error::Degenerate("centered transform is identically zero".into()))
}

/// `n/(n-m) * sum_{i<m} (X_i - Xbar) / sqrt(X' A' A X)` evaluated with the
/// dense matrix; equal to [`t_stat`].
pub fn t_stat_centered_form(plan: &CenteringPlan, x: &[f64]) -> Result<f64> {
    plan.check_len(x.len())?;
    let n = plan.n();
    let x = &x[..n];
    let a = plan.matrix();
    let ax: Vec<f64> = a
        .iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect();
    let quad: f64 = ax.iter().map(|v| v * v).sum();
    let xbar = x.iter().sum::<f64>() / n as f64;
    let num: f64 = x[..plan.m].iter().map(|v| v - xbar).sum();
    let factor = n as f64 / (n - plan.m) as f64;
    if !(quad > 0.0) {
        return Err(Error::Degenerate("quadratic form X'A'AX is zero".into()));
    }
    Ok(factor * num / quad.sqrt())
}

/// `g(t) = 1 + 14.11 phi(t) / ((9 + t^2) (1 - Phi(t)))`.
pub fn near_normal_factor(t: f64) -> f64 {
    1.0 + 14.11 * normal_pdf(t) / ((9.0 + t * t) * normal_upper_tail(t))
}

/// `min(3.18, g(t)) * P(N(0,1) > t)`, capped at 1.
pub fn self_normalized_tail_bound(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("tail bound needs t > 0 (got {t})")));
    }
    let tail = normal_upper_tail(t);
    // phi/Phibar ~ t for large t, so g stays finite even when the tail
    // underflows; guard the 0/0 anyway.
    let mult = if tail > 0.0 {
        MULTIPLIER_CAP.min(near_normal_factor(t))
    } else {
        1.0
    };
    Ok((mult * tail).min(1.0))
}

/// `exp(-t^2/2)`, the Hoeffding bound for self-normalized Rademacher sums.
pub fn rademacher_tail_bound(t: f64) -> f64 {
    (-0.5 * t * t).exp().min(1.0)
}

/// Centers of symmetry `mu_i` of the observations.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanStructure {
    pub mu: Vec<f64>,
}

/// Diagnostics for the mean-variation conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// Smallest `v` with `sum (mu~_i - mu~_I)^2 <= v sum mu~_i^2`.
    pub v_a: f64,
    /// `v_a < 1`.
    pub holds_a: bool,
    /// Smallest `v` bounding both within-block mean variances by
    /// `v (mu_I - mu_{I^c})^2`; infinite when the means coincide but vary.
    pub v_aprime: f64,
    pub holds_aprime: bool,
    /// `M = sqrt(sum mu~_i^2) / (sqrt(m) |mu~_I|)`; infinite when `mu~_I = 0`.
    pub ratio_bound: f64,
    /// `m mu~_I^2 / sum mu~_i^2` (1 when every `mu~_i` is zero).
    pub concentration_ratio: f64,
    pub mu_window: f64,
    pub mu_complement: f64,
}

impl MeanStructure {
    pub fn new(mu: Vec<f64>) -> Self {
        MeanStructure { mu }
    }

    pub fn centered(&self, plan: &CenteringPlan) -> Result<Vec<f64>> {
        transform(plan, &self.mu)
    }
}

fn mean_and_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

fn min_ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

pub fn check_conditions(mu: &MeanStructure, plan: &CenteringPlan) -> Result<ConditionReport> {
    let mut_ = mu.centered(plan)?;
    let m = plan.m;
    let n = plan.n();
    let mu_t_bar = mut_.iter().sum::<f64>() / m as f64;
    let ss: f64 = mut_.iter().map(|v| v * v).sum();
    let dev: f64 = mut_.iter().map(|v| (v - mu_t_bar) * (v - mu_t_bar)).sum();
    let v_a = min_ratio(dev, ss);

    let (mu_w, var_w) = mean_and_var(&mu.mu[..m]);
    let (mu_c, var_c) = mean_and_var(&mu.mu[m..n]);
    let gap2 = (mu_w - mu_c) * (mu_w - mu_c);
    let v_aprime = min_ratio(var_w.max(var_c), gap2);

    let ratio_bound = if mu_t_bar == 0.0 {
        f64::INFINITY
    } else {
        ss.sqrt() / ((m as f64).sqrt() * mu_t_bar.abs())
    };
    let concentration_ratio = if ss > 0.0 {
        m as f64 * mu_t_bar * mu_t_bar / ss
    } else {
        1.0
    };
    Ok(ConditionReport {
        v_a,
        holds_a: v_a < 1.0,
        v_aprime,
        holds_aprime: v_aprime.is_finite(),
        ratio_bound,
        concentration_ratio,
        mu_window: mu_w,
        mu_complement: mu_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_shapes() {
        let p = make_plan(2, 4).unwrap();
        assert_eq!(p.blocks(), &[vec![2], vec![3]]);
        let p = make_plan(3, 11).unwrap();
        assert_eq!((p.p(), p.n()), (3, 9));
        assert!(make_plan(5, 9).is_err());
        assert!(CenteringPlan::from_assignment(2, vec![vec![3], vec![2]]).is_ok());
        assert!(CenteringPlan::from_assignment(2, vec![vec![2], vec![2]]).is_err());
        assert!(CenteringPlan::from_assignment(2, vec![vec![1], vec![3]]).is_err());
    }

    #[test]
    fn small_example() {
        let plan = make_plan(2, 4).unwrap();
        let x = [3.0, 1.0, 2.0, 5.0];
        assert_eq!(transform(&plan, &x).unwrap(), vec![1.0, -4.0]);
        let t = t_stat(&plan, &x).unwrap();
        assert!((t + 3.0 / 17f64.sqrt()).abs() < 1e-15);
        let t2 = t_stat_centered_form(&plan, &x).unwrap();
        assert!((t - t2).abs() < 1e-14);
        assert!(matches!(
            t_stat(&plan, &[1.5; 4]),
            Err(Error::Degenerate(_))
        ));
        assert!(transform(&plan, &[1.0; 3]).is_err());
    }

    // mpmath: g(t) at 50 digits and min(3.18, g) * Phibar.
    #[test]
    fn bound_values() {
        let table = [
            (0.5, 0.845_579_891_228_069_67),
            (1.0, 0.500_075_946_227_968_32),
            (2.0, 0.072_345_419_595_209_879),
            (3.0, 0.004_292_675_740_583_700_6),
            (4.0, 1.007_145_490_293_213_5e-4),
            (5.0, 9.036_401_704_939_274_6e-7),
            (8.0, 1.598_637_769_601_227e-15),
        ];
        for (t, want) in table {
            let got = self_normalized_tail_bound(t).unwrap();
            assert!(((got - want) / want).abs() < 1e-9, "t={t}: {got} vs {want}");
        }
        assert!((near_normal_factor(8.0) - 2.569_760_329_6).abs() < 1e-9);
        assert_eq!(self_normalized_tail_bound(1e-4).unwrap(), 1.0);
        assert!(self_normalized_tail_bound(0.0).is_err());
        assert!(self_normalized_tail_bound(40.0).unwrap() >= 0.0);
    }

    #[test]
    fn rademacher_comparison() {
        assert!((rademacher_tail_bound(1.0) - (-0.5f64).exp()).abs() < 1e-16);
        let mut t = 2.0;
        while t <= 8.0 {
            assert!(self_normalized_tail_bound(t).unwrap() < rademacher_tail_bound(t));
            t += 0.25;
        }
        assert!((rademacher_tail_bound(1e-9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conditions_piecewise_constant() {
        let plan = make_plan(4, 12).unwrap();
        let mut mu = vec![1.0; 4];
        mu.extend(vec![2.5; 8]);
        let r = check_conditions(&MeanStructure::new(mu), &plan).unwrap();
        assert_eq!(r.v_aprime, 0.0);
        assert!(r.holds_aprime && r.holds_a);
        assert!((r.ratio_bound - 1.0).abs() < 1e-15);

        let r = check_conditions(&MeanStructure::new(vec![0.0; 12]), &plan).unwrap();
        assert_eq!((r.v_a, r.v_aprime), (0.0, 0.0));
        assert!(r.ratio_bound.is_infinite());
    }
}

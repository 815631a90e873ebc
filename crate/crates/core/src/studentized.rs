//! Studentized contrasts and the empirically centered t-statistic.
//!
//! For i.i.d. Gaussian data, `V = <b, X> / s` with `sum b = 0`,
//! `sum b^2 = 1` and `s` the sample standard deviation is a pivot:
//! `V^2 / (n - 1) ~ Beta(1/2, (n - 2)/2)`, and `V` is supported on
//! `[-sqrt(n-1), sqrt(n-1)]`.

use crate::error::{Error, Result};
use crate::numerics::reg_inc_beta_pair;

/// Contrast vector: entries sum to 0 and have unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Contrast(Vec<f64>);

impl Contrast {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if b.len() < 3 {
            return Err(Error::Domain(format!(
                "contrast needs n >= 3 entries (got {})",
                b.len()
            )));
        }
        let sum: f64 = b.iter().sum();
        let norm2: f64 = b.iter().map(|v| v * v).sum();
        if sum.abs() > 1e-12 || (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "contrast must have sum 0 and unit norm (sum {sum:e}, norm^2 {norm2})"
            )));
        }
        Ok(Contrast(b))
    }

    /// Rescales `c` to unit norm; `c` must already sum to zero.
    pub fn normalized(c: Vec<f64>) -> Result<Self> {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Domain("contrast direction is zero".into()));
        }
        Contrast::new(c.into_iter().map(|v| v / norm).collect())
    }

    /// `c_i = 1 - m/n` for `i < m`, `-m/n` otherwise, normalized.
    pub fn centered_window(n: usize, m: usize) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(Error::Domain(format!("window length {m} must lie in 1..{n}")));
        }
        let frac = m as f64 / n as f64;
        let c = (0..n)
            .map(|i| if i < m { 1.0 - frac } else { -frac })
            .collect();
        Contrast::normalized(c)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn sample_sd(x: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(sd > 1e-14 * scale) || sd == 0.0 {
        return Err(Error::Degenerate("sample variance is zero".into()));
    }
    Ok(sd)
}

/// `V = sum b_i X_i / sqrt(sum (X_i - Xbar)^2 / (n - 1))`.
pub fn studentized_contrast(x: &[f64], b: &Contrast) -> Result<f64> {
    if x.len() != b.len() {
        return Err(Error::Dimension {
            expected: b.len(),
            got: x.len(),
        });
    }
    let sd = sample_sd(x)?;
    let num: f64 = x.iter().zip(b.as_slice()).map(|(xi, bi)| xi * bi).sum();
    Ok(num / sd)
}

/// `sum_{i<m} (X_i - Xbar) / sqrt(m (1 - m/n))`, Studentized.
pub fn centered_t(x: &[f64], m: usize) -> Result<f64> {
    let n = x.len();
    if n < 3 {
        return Err(Error::Domain(format!("need n >= 3 observations (got {n})")));
    }
    if m == 0 || m >= n {
        return Err(Error::Domain(format!("window length {m} must lie in 1..{n}")));
    }
    let sd = sample_sd(x)?;
    let mean = x.iter().sum::<f64>() / n as f64;
    let num: f64 = x[..m].iter().map(|v| v - mean).sum();
    let scale = (m as f64 * (1.0 - m as f64 / n as f64)).sqrt();
    Ok(num / scale / sd)
}

/// Exact `P(V > t)` under Gaussian sampling with `n` observations.
pub fn pivot_tail_exact(t: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("pivot needs n >= 3 (got {n})")));
    }
    if t.is_nan() {
        return Err(Error::Domain("t is NaN".into()));
    }
    if t < 0.0 {
        return Ok(1.0 - pivot_tail_exact(-t, n)?);
    }
    let dof = (n - 1) as f64;
    let t2 = t * t;
    if t2 >= dof {
        return Ok(0.0);
    }
    let x = t2 / dof;
    let y = (dof - t2) / dof;
    let (_, upper) = reg_inc_beta_pair(x, y, 0.5, 0.5 * (n as f64 - 2.0))?;
    Ok(0.5 * upper)
}

/// `g(m) = (3/4) m (sqrt(1 + 16/(m - 3)) - 1)`: for `t^2 >= g(n - 1)` the
/// pivot density lies below the standard normal density.
pub fn domination_g(m: usize) -> Result<f64> {
    if m <= 3 {
        return Err(Error::Domain(format!("g(m) needs m > 3 (got {m})")));
    }
    let m = m as f64;
    Ok(0.75 * m * ((1.0 + 16.0 / (m - 3.0)).sqrt() - 1.0))
}

/// `sqrt(g(n - 1))`; `P(V > t) <= P(N(0,1) > t)` for every `t` at or above it.
pub fn normal_domination_threshold(n: usize) -> Result<f64> {
    if n < 6 {
        return Err(Error::Domain(format!(
            "domination threshold needs n >= 6 (got {n})"
        )));
    }
    Ok(domination_g(n - 1)?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::normal_upper_tail;

    #[test]
    fn contrast_validation() {
        assert!(Contrast::new(vec![1.0, -1.0]).is_err());
        assert!(Contrast::new(vec![1.0, 0.0, -1.0]).is_err());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(Contrast::new(vec![h, 0.0, -h]).is_ok());
        let c = Contrast::centered_window(10, 3).unwrap();
        assert!((c.as_slice()[0] - 0.7 / (3.0f64 * 0.7).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_short_inputs() {
        let b = Contrast::centered_window(5, 2).unwrap();
        assert!(matches!(
            studentized_contrast(&[2.0; 5], &b),
            Err(Error::Degenerate(_))
        ));
        assert!(centered_t(&[1.0, 2.0], 1).is_err());
        assert!(studentized_contrast(&[1.0, 2.0, 3.0], &b).is_err());
    }

    #[test]
    fn centered_t_equals_contrast_form() {
        let x = [0.3, -1.2, 2.5, 0.0, 0.9, 1.1, -0.4];
        let b = Contrast::centered_window(7, 3).unwrap();
        let v1 = studentized_contrast(&x, &b).unwrap();
        let v2 = centered_t(&x, 3).unwrap();
        assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn swapping_halves_flips_sign() {
        let x = [0.3, -1.2, 2.5, 0.0, 0.9, 1.1];
        let mut y = x;
        y.rotate_left(3);
        let a = centered_t(&x, 3).unwrap();
        let b = centered_t(&y, 3).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    // Reference P(V > t) from the regularized incomplete beta at 50 digits.
    #[test]
    fn pivot_tail_table() {
        let table = [
            (2.5, 10, 0.001_373_193_337_048_468_221_3),
            (1.0, 10, 0.173_296_753_543_667_123_91),
            (3.0, 20, 3.972_438_370_689_168_181e-4),
            (0.5, 3, 0.384_973_271_918_692_057_39),
            (1.0, 3, 0.25),
        ];
        for (t, n, want) in table {
            let got = pivot_tail_exact(t, n).unwrap();
            assert!(((got - want) / want).abs() < 1e-10, "t={t} n={n}: {got} vs {want}");
        }
        assert_eq!(pivot_tail_exact(2.75, 6).unwrap(), 0.0);
    }

    #[test]
    fn pivot_tail_basic_properties() {
        assert!((pivot_tail_exact(0.0, 12).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pivot_tail_exact(3.0, 10).unwrap(), 0.0);
        assert_eq!(pivot_tail_exact(4.0, 10).unwrap(), 0.0);
        let up = pivot_tail_exact(1.3, 15).unwrap();
        let down = pivot_tail_exact(-1.3, 15).unwrap();
        assert!((up + down - 1.0).abs() < 1e-14);
        assert!(pivot_tail_exact(2.5, 10).unwrap() <= normal_upper_tail(2.5));
        assert!(pivot_tail_exact(1.0, 2).is_err());
    }

    #[test]
    fn domination_threshold_values() {
        assert_eq!(domination_g(5).unwrap(), 7.5);
        let max_small = (5..=8).map(|m| domination_g(m).unwrap()).fold(0.0, f64::max);
        assert!(max_small <= 2.75 * 2.75);
        let max_mid = (9..=75).map(|m| domination_g(m).unwrap()).fold(0.0, f64::max);
        assert!(max_mid <= 2.5 * 2.5);
        assert!(normal_domination_threshold(5).is_err());
        for n in 6..1_000_001 {
            assert!(normal_domination_threshold(n).unwrap() <= 2.75);
        }
    }
}

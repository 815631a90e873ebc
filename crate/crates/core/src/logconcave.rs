//! Symmetric log-concave noise laws: densities, absolute moments, the
//! two-sided moment envelope and seeded samplers.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_halfline, ln_gamma, Tolerance};

/// A law symmetric about zero with log-concave density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Law {
    Normal { sigma: f64 },
    Laplace { scale: f64 },
    Uniform { half_width: f64 },
    /// No closed-form absolute moments; exercised through quadrature.
    Logistic { scale: f64 },
}

/// The three reference laws at unit variance.
pub fn builtin_laws() -> [Law; 3] {
    [
        Law::Normal { sigma: 1.0 },
        Law::Laplace { scale: 1.0 / SQRT_2 },
        Law::Uniform {
            half_width: 3f64.sqrt(),
        },
    ]
}

impl Law {
    pub fn name(&self) -> &'static str {
        match self {
            Law::Normal { .. } => "normal",
            Law::Laplace { .. } => "laplace",
            Law::Uniform { .. } => "uniform",
            Law::Logistic { .. } => "logistic",
        }
    }

    /// Parses `normal`, `laplace`, `uniform` or `logistic` at unit variance.
    pub fn unit_variance(name: &str) -> Result<Law> {
        match name {
            "normal" | "gaussian" => Ok(Law::Normal { sigma: 1.0 }),
            "laplace" => Ok(Law::Laplace { scale: 1.0 / SQRT_2 }),
            "uniform" => Ok(Law::Uniform {
                half_width: 3f64.sqrt(),
            }),
            "logistic" => Ok(Law::Logistic {
                scale: 3f64.sqrt() / PI,
            }),
            other => Err(Error::Config(format!("unknown law '{other}'"))),
        }
    }

    fn param(&self) -> f64 {
        match *self {
            Law::Normal { sigma } => sigma,
            Law::Laplace { scale } | Law::Logistic { scale } => scale,
            Law::Uniform { half_width } => half_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.param();
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "{} parameter must be positive and finite (got {p})",
                self.name()
            )));
        }
        Ok(())
    }

    /// `log f(x)` for `x >= 0`; `-inf` outside the support.
    pub fn log_density_half(&self, x: f64) -> f64 {
        match *self {
            Law::Normal { sigma } => {
                let z = x / sigma;
                -0.5 * z * z - (sigma * (2.0 * PI).sqrt()).ln()
            }
            Law::Laplace { scale } => -x / scale - (2.0 * scale).ln(),
            Law::Uniform { half_width } => {
                if x <= half_width {
                    -(2.0 * half_width).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Law::Logistic { scale } => {
                let z = x / scale;
                -z - 2.0 * (-z).exp().ln_1p() - scale.ln()
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density_half(x.abs()).exp()
    }

    /// Density at the center.
    pub fn f0(&self) -> f64 {
        match *self {
            Law::Normal { sigma } => 1.0 / (sigma * (2.0 * PI).sqrt()),
            Law::Laplace { scale } => 0.5 / scale,
            Law::Uniform { half_width } => 0.5 / half_width,
            Law::Logistic { scale } => 0.25 / scale,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Law::Normal { sigma } => sigma * sigma,
            Law::Laplace { scale } => 2.0 * scale * scale,
            Law::Uniform { half_width } => half_width * half_width / 3.0,
            Law::Logistic { scale } => PI * PI * scale * scale / 3.0,
        }
    }

    /// Right edge of the support, if finite.
    pub fn support_edge(&self) -> Option<f64> {
        match *self {
            Law::Uniform { half_width } => Some(half_width),
            _ => None,
        }
    }

    /// Same law rescaled to standard deviation `sd`.
    pub fn with_sd(&self, sd: f64) -> Law {
        let k = sd / self.variance().sqrt();
        match *self {
            Law::Normal { sigma } => Law::Normal { sigma: sigma * k },
            Law::Laplace { scale } => Law::Laplace { scale: scale * k },
            Law::Uniform { half_width } => Law::Uniform {
                half_width: half_width * k,
            },
            Law::Logistic { scale } => Law::Logistic { scale: scale * k },
        }
    }

    /// `E|X|^s` in closed form where one exists.
    pub fn abs_moment_closed(&self, s: f64) -> Option<f64> {
        match *self {
            Law::Normal { sigma } => Some(
                (s * sigma.ln() + 0.5 * s * 2f64.ln() + ln_gamma(0.5 * (s + 1.0))
                    - 0.5 * PI.ln())
                .exp(),
            ),
            Law::Laplace { scale } => Some((ln_gamma(s + 1.0) + s * scale.ln()).exp()),
            Law::Uniform { half_width } => Some(half_width.powf(s) / (s + 1.0)),
            Law::Logistic { .. } => None,
        }
    }

    /// Draws one observation centered at 0.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Normal { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            Law::Laplace { scale } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                // 1 - 2|u| lies in (0, 1]; u = -0.5 is the only zero and has
                // probability 2^-53.
                let r = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
                -scale * u.signum() * r.ln()
            }
            Law::Uniform { half_width } => half_width * (2.0 * rng.random::<f64>() - 1.0),
            Law::Logistic { scale } => {
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                scale * (u / (1.0 - u)).ln()
            }
        }
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("moment order must be positive (got {s})")));
    }
    Ok(())
}

/// `2 * integral_0^inf x^s f(x) dx` by quadrature.
pub fn abs_moment_numeric(law: &Law, s: f64) -> Result<f64> {
    law.validate()?;
    check_order(s)?;
    let tol = Tolerance::new(1e-14, 1e-10, 5000)?;
    let scale = law.variance().sqrt();
    let g = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        let ld = law.log_density_half(x);
        if ld == f64::NEG_INFINITY {
            0.0
        } else {
            (s * x.ln() + ld).exp()
        }
    };
    let half = match law.support_edge() {
        // Keep the kink at the support edge out of the integrand.
        Some(edge) => integrate_halfline(|u| if u < 1.0 { edge * g(edge * u) } else { 0.0 }, 1.0, tol)?,
        None => integrate_halfline(g, scale, tol)?,
    };
    Ok(2.0 * half)
}

/// `E|X|^s`: closed form when available, otherwise quadrature.
pub fn abs_moment(law: &Law, s: f64) -> Result<f64> {
    law.validate()?;
    check_order(s)?;
    match law.abs_moment_closed(s) {
        Some(v) => Ok(v),
        None => abs_moment_numeric(law, s),
    }
}

/// `(E|X|^r)^{s/r} Gamma(s+1) (r+1)^{s/r}` from a given `E|X|^r`.
pub fn moment_envelope(abs_moment_r: f64, r: f64, s: f64) -> f64 {
    let q = s / r;
    (q * abs_moment_r.ln() + ln_gamma(s + 1.0) + q * (r + 1.0).ln()).exp()
}

/// Envelope minus `E|X|^s`; nonnegative for every symmetric log-concave law.
pub fn envelope_gap(law: &Law, r: f64, s: f64) -> Result<f64> {
    check_order(r)?;
    let mr = abs_moment(law, r)?;
    let ms = abs_moment(law, s)?;
    Ok(moment_envelope(mr, r, s) - ms)
}

/// `(2 f0)^s E|X|^s`, which lies in `[1/(s+1), Gamma(s+1)]`.
pub fn scaled_abs_moment(law: &Law, s: f64) -> Result<f64> {
    Ok((2.0 * law.f0()).powf(s) * abs_moment(law, s)?)
}

/// `n` seeded draws.
pub fn sample(law: &Law, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| law.draw(&mut rng)).collect()
}

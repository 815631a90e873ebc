//! Special functions and one-dimensional numerical kernels.

mod normal;
mod quad;
mod root;
mod special;

pub use normal::{normal_pdf, normal_upper_tail};
pub use quad::integrate_halfline;
pub use root::solve_monotone;
pub use special::{ln_gamma, reg_inc_beta, reg_inc_beta_pair};

use crate::error::{Error, Result};

/// Convergence controls shared by the iterative kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        let tol = Tolerance {
            abs_tol,
            rel_tol,
            max_iter,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config(format!(
                "tolerance needs abs_tol > 0, rel_tol > 0, max_iter >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod exec;
pub mod expfam;
pub mod harness;
pub mod logconcave;
pub mod loglr;
pub mod numerics;
pub mod scan;
pub mod selfnorm;
pub mod studentized;

pub use error::{Error, Result};
pub use exec::Exec;

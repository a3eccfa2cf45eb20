//! Wave / heaving-body interaction in the Boussinesq-Abbott setting: the
//! coupled transmission solver, Cummins-type decay models and nonlocal
//! transport solvers, with the special functions they share.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod coefficients;
pub mod cummins;
pub mod elliptic;
pub mod error;
pub mod nonlocal;
pub mod series;
pub mod transmission;
pub mod special;

pub use error::{Error, Result};
pub use series::TimeSeries;

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod cli;
pub mod dim_est;
pub mod error;
pub mod ifs;
pub mod symbolic;
pub mod thermo;
pub mod transversality;

pub use error::{Error, Result};

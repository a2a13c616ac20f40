//! Problem generators, benchmark suites and reporting for the monotone splitting solvers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod generate;
pub mod methods;
pub mod mm;
pub mod properties;
pub mod rate;
pub mod report;
pub mod trace_io;

pub use error::{HarnessError, Result};

//! Gradient and skew-symmetric splitting solvers for strongly monotone
//! equations `grad F(x) + N x = 0` and bilinear saddle problems.
//!
//! Every scheme exposes a single step function plus a driver that records the
//! scheme's Lyapunov functional so the per-step contraction can be checked.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod agss;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod lyapunov;
pub mod problem;
pub mod saddle;
pub mod spectral;
pub mod split;
pub mod trace;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use problem::{FnObjective, LogCoshQuadratic, MonotoneProblem, Objective, Quadratic};
pub use split::{split_skew, SkewSplit};
pub use trace::{ConvergenceTrace, OpCensus, TraceEntry};

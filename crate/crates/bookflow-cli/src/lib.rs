//! Command-line front end for the `bookflow` library: flat key=value scenario
//! configs, deterministic CSV emission with a manifest, a similarity-sweep
//! mode, and a built-in verification suite.

// Guards written as `!(x < tol)` are deliberate: unlike `x >= tol`, they also
// reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod golden;
pub mod scenario;

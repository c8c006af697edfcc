//! Continuum dynamics of the limit order book.
//!
//! The crate models one side of an order book as a depth density `h(S, t)`
//! over relative price `S`, evolving under the degenerate-diffusion transport
//! law `h_t = (h^2)_SS + (u0 h)_S + P`. After a liquidity-taking event the
//! book heals with a universal `t^{1/3}` signature: the touch recovers as
//! `t^{1/3}`, depth scales as `t^{-1/3}`, and profiles collapse onto a
//! one-parameter family of similarity shapes.
//!
//! Modules:
//!
//! - [`book`]: grids, profiles, volume bookkeeping, physical parameters.
//! - [`micro`]: queue-level pressure/velocity and the level flux whose
//!   continuum limit is the transport law.
//! - [`pde`]: conservative explicit finite-volume solver with boundary
//!   conditions, liquidity taking, and trajectory recording.
//! - [`similarity`]: the self-similar recovery shape `v(s)` and its
//!   dimensional form.
//! - [`exact`]: closed-form solutions and exact rational series expansions.
//! - [`analysis`]: power-law fits, snapshot collapse, speed estimation, and
//!   distance from the steady family.

// Guards written as `!(x > 0.0)` are deliberate: unlike `x <= 0.0`, they also
// reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod book;
pub mod error;
pub mod exact;
pub mod micro;
pub mod pde;
pub mod similarity;

pub use book::{
    peak, total_mass, volume, BookProfile, PhysicalParams, PriceGrid, Side, SourceTerm,
};
pub use error::{Error, Result};
pub use pde::{
    find_touch, run, stable_dt, step, take_liquidity, BcKind, BcLocation, BoundaryCondition,
    BoundaryConditions, FluxForm, Mode, SolverConfig, Trajectory,
};

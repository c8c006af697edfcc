//! Queue-level microstructure: pressure, per-order velocity, and the level
//! flux obtained by integrating velocity across a queue.
//!
//! Orders at relative price `S` queue behind depth `h(S)`. The pressure field
//! `p = theta * h` drives orders toward better prices at a speed that depends
//! on queue position `q` through the exponent `beta`; integrating that speed
//! over the queue gives the net volume flux carried by one price level.

use crate::book::{BookProfile, PhysicalParams};
use crate::error::{Error, Result};

/// Position within a single queue, measured from the front: `0 <= q <= h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuePosition {
    pub q: f64,
}

/// Pressure profile `p = theta * h`, one value per cell.
pub fn pressure(profile: &BookProfile, params: &PhysicalParams) -> Vec<f64> {
    profile.depths().iter().map(|h| params.theta * h).collect()
}

/// Price gradient of the pressure at cell `i`: central differences in the
/// interior, one-sided at the domain edges.
pub fn pressure_gradient(profile: &BookProfile, params: &PhysicalParams, i: usize) -> f64 {
    let h = profile.depths();
    let n = h.len();
    let dx = profile.grid.dx();
    let p = |j: usize| params.theta * h[j];
    if i == 0 {
        (p(1) - p(0)) / dx
    } else if i == n - 1 {
        (p(n - 1) - p(n - 2)) / dx
    } else {
        (p(i + 1) - p(i - 1)) / (2.0 * dx)
    }
}

/// Drift velocity of an order at queue position `q` in cell `i`:
///
/// ```text
/// v(q) = (1 / rho) * dp/dS * ((q / h)^beta + u0)
/// ```
///
/// Errors if the level is empty or `q` lies outside `[0, h]`.
pub fn velocity(
    profile: &BookProfile,
    params: &PhysicalParams,
    i: usize,
    pos: QueuePosition,
) -> Result<f64> {
    let n = profile.depths().len();
    if i >= n {
        return Err(Error::InvalidInput(format!(
            "cell index {i} out of range for {n} cells"
        )));
    }
    let h = profile.depths()[i];
    if h <= 0.0 {
        return Err(Error::DegenerateLevel { cell: i });
    }
    if !(0.0..=h).contains(&pos.q) {
        return Err(Error::InvalidInput(format!(
            "queue position {} outside [0, {h}]",
            pos.q
        )));
    }
    let p_s = pressure_gradient(profile, params, i);
    Ok(p_s / params.rho * ((pos.q / h).powf(params.beta) + params.u0))
}

/// Net volume flux carried by the whole queue at cell `i`: the exact integral
/// of [`velocity`] over `q` from 0 to `h`,
///
/// ```text
/// F_i = (1 / rho) * dp/dS * h * (1 / (beta + 1) + u0).
/// ```
///
/// An empty level carries no flux.
pub fn level_flux(profile: &BookProfile, params: &PhysicalParams, i: usize) -> f64 {
    let h = profile.depths()[i];
    if h <= 0.0 {
        return 0.0;
    }
    let p_s = pressure_gradient(profile, params, i);
    p_s / params.rho * h * (1.0 / (params.beta + 1.0) + params.u0)
}

/// Factor converting microstructure time to the canonical transport-equation
/// time: evolving the physical parameters for duration `t` matches evolving
/// the canonical equation for `time_rescale_factor * t`.
///
/// Substituting `p = theta * h` into the level flux and matching the
/// canonical flux `(h^2)_S` fixes the factor as `theta / (2 rho (beta + 1))`.
pub fn time_rescale_factor(params: &PhysicalParams) -> f64 {
    params.theta / (2.0 * params.rho * (params.beta + 1.0))
}

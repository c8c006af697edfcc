//! Finite-volume solver for the depth transport equation
//!
//! ```text
//! h_t = (h^2)_SS + (u0 h)_S + P
//! ```
//!
//! in the ask frame: the touch is the low-price edge, the book deepens to the
//! right. The update is conservative: each interior edge carries the gradient
//! flux `(h^2)_S` plus an upwinded drift term, cells exchange only through
//! edges, and everything crossing a domain edge (or injected by a reservoir
//! boundary) is accounted per side. Depth positivity is enforced by clipping
//! with a running audit of the clipped mass.

use crate::book::{peak, total_mass, BookProfile, PhysicalParams, SourceTerm};
use crate::error::{Error, Result};

/// Floor keeping the stability bound finite for an empty book.
const DT_EPS: f64 = 1e-12;

/// Cap on in-memory series length; beyond it the recording stride doubles.
const MAX_SERIES_LEN: usize = 1 << 18;

/// Boundary rule applied at one domain edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind {
    /// Nothing crosses the edge.
    ZeroFlux,
    /// Hard price floor at the touch edge: a wall the book can pile up
    /// against. Identical to `ZeroFlux` in the update; scenarios additionally
    /// pin the stop price to the grid edge.
    FirmStop,
    /// Reservoir holding the boundary cell at a fixed depth; the implied
    /// mass exchange is booked as boundary flow.
    Depth(f64),
    /// Prescribed depth slope `dh/dS` at the edge, realized by a ghost cell.
    Slope(f64),
    /// Prescribed gradient-flux value at the edge.
    Flux(f64),
}

/// Which edge a boundary condition applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcLocation {
    TouchSide,
    DeepSide,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    pub location: BcLocation,
}

/// Validated pair of boundary conditions, one per edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditions {
    touch: BcKind,
    deep: BcKind,
}

impl BoundaryConditions {
    /// Builds the pair from two located conditions given in either order.
    pub fn new(a: BoundaryCondition, b: BoundaryCondition) -> Result<Self> {
        match (a.location, b.location) {
            (BcLocation::TouchSide, BcLocation::DeepSide) => Self::from_kinds(a.kind, b.kind),
            (BcLocation::DeepSide, BcLocation::TouchSide) => Self::from_kinds(b.kind, a.kind),
            _ => Err(Error::InvalidInput(
                "need exactly one touch-side and one deep-side boundary condition".into(),
            )),
        }
    }

    pub fn from_kinds(touch: BcKind, deep: BcKind) -> Result<Self> {
        if deep == BcKind::FirmStop {
            return Err(Error::InvalidInput(
                "a firm stop is a wall at the touch; it cannot sit on the deep side".into(),
            ));
        }
        for kind in [&touch, &deep] {
            match *kind {
                BcKind::Depth(v) if !(v.is_finite() && v >= 0.0) => {
                    return Err(Error::InvalidInput(format!(
                        "pinned boundary depth must be finite and nonnegative, got {v}"
                    )));
                }
                BcKind::Slope(v) | BcKind::Flux(v) if !v.is_finite() => {
                    return Err(Error::InvalidInput(format!(
                        "boundary value must be finite, got {v}"
                    )));
                }
                _ => {}
            }
        }
        Ok(Self { touch, deep })
    }

    /// Zero-flux walls on both sides.
    pub fn closed() -> Self {
        Self {
            touch: BcKind::ZeroFlux,
            deep: BcKind::ZeroFlux,
        }
    }

    pub fn touch(&self) -> BcKind {
        self.touch
    }

    pub fn deep(&self) -> BcKind {
        self.deep
    }
}

/// What the right-hand side includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Transport plus source.
    Full,
    /// Source only; all edge fluxes are zero. Useful for isolating order-flow
    /// effects and for testing source terms.
    SourceOnly,
}

/// Which flux coefficient the gradient term carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxForm {
    /// `(h^2)_S + u0 h` with unit diffusion coefficient.
    Canonical,
    /// The queue-level flux `theta/(2 rho) (1/(beta+1) + u0) (h^2)_S`; the
    /// drift is folded into the coefficient. Evolving this form for time `t`
    /// matches the canonical form run for `time_rescale_factor * t`.
    Microstructure,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Fraction of the explicit stability limit actually used, in (0, 1].
    pub cfl_safety: f64,
    /// Relative support threshold for locating the touch: a cell counts as
    /// occupied when its depth exceeds `support_epsilon * max(h)`.
    pub support_epsilon: f64,
    /// Final time of the run.
    pub t_end: f64,
    /// Times at which full profiles are kept; must be sorted and lie within
    /// the run interval. The solver lands on each exactly by clipping `dt`.
    pub output_times: Vec<f64>,
    pub mode: Mode,
    pub flux_form: FluxForm,
    /// Series samples are kept every this many steps.
    pub record_every: usize,
    /// Series recording resumes at this time. The initial sample is always
    /// kept regardless, so the event that starts a run stays in the record.
    pub record_start: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl_safety: 0.25,
            support_epsilon: 1e-10,
            t_end: 1.0,
            output_times: Vec::new(),
            mode: Mode::Full,
            flux_form: FluxForm::Canonical,
            record_every: 1,
            record_start: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.support_epsilon > 0.0 && self.support_epsilon < 1.0) {
            return Err(Error::InvalidInput(format!(
                "support_epsilon must lie in (0, 1), got {}",
                self.support_epsilon
            )));
        }
        if !self.t_end.is_finite() {
            return Err(Error::InvalidInput(format!(
                "t_end must be finite, got {}",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput(
                "record_every must be at least 1".into(),
            ));
        }
        for w in self.output_times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(
                    "output_times must be strictly increasing".into(),
                ));
            }
        }
        for &t in &self.output_times {
            if !t.is_finite() || t > self.t_end + 1e-12 * self.t_end.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "output time {t} exceeds t_end = {}",
                    self.t_end
                )));
            }
        }
        Ok(())
    }
}

/// Cumulative mass that left the domain through each edge. A reservoir
/// (pinned-depth) boundary that feeds the book shows up as negative outflow.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundaryOutflow {
    pub touch: f64,
    pub deep: f64,
}

/// Time history of a run: sparse full profiles plus dense scalar series.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    /// `(t, profile)` at each requested output time.
    pub snapshots: Vec<(f64, BookProfile)>,
    /// `(t, touch location)`; `None` while the book is empty.
    pub touch_series: Vec<(f64, Option<f64>)>,
    /// `(t, total mass)`.
    pub mass_series: Vec<(f64, f64)>,
    /// `(t, peak position, peak height)`; empty books are skipped.
    pub peak_series: Vec<(f64, f64, f64)>,
    pub boundary_outflow: BoundaryOutflow,
    /// Mass created by clipping negative depths back to zero.
    pub clipped_mass: f64,
    /// Net mass injected by the source term.
    pub source_added: f64,
    pub steps: usize,
}

impl Trajectory {
    fn record_series(&mut self, state: &BookProfile, cfg: &SolverConfig) {
        let t = state.t();
        if let Some(&(last, _)) = self.touch_series.last() {
            if last == t {
                return;
            }
        }
        self.touch_series.push((t, find_touch(state, cfg)));
        self.mass_series.push((t, total_mass(state)));
        if let Some((pos, height)) = peak(state) {
            self.peak_series.push((t, pos, height));
        }
        if self.touch_series.len() >= MAX_SERIES_LEN {
            self.thin_series();
        }
    }

    /// Halves the sampling density in place, keeping the initial sample.
    fn thin_series(&mut self) {
        fn keep_even<T>(v: &mut Vec<T>) {
            let mut i = 0;
            v.retain(|_| {
                let keep = i % 2 == 0;
                i += 1;
                keep
            });
        }
        keep_even(&mut self.touch_series);
        keep_even(&mut self.mass_series);
        keep_even(&mut self.peak_series);
    }
}

struct StepAudit {
    clipped: f64,
    touch_outflow: f64,
    deep_outflow: f64,
    source_added: f64,
}

/// Per-edge gradient-flux coefficient and explicit drift for the flux form.
fn flux_coefficients(params: &PhysicalParams, form: FluxForm) -> (f64, f64) {
    match form {
        FluxForm::Canonical => (1.0, params.u0),
        FluxForm::Microstructure => (
            params.theta / (2.0 * params.rho) * (1.0 / (params.beta + 1.0) + params.u0),
            0.0,
        ),
    }
}

fn step_in_place(
    state: &mut BookProfile,
    flux: &mut [f64],
    params: &PhysicalParams,
    bc: &BoundaryConditions,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<StepAudit> {
    let n = state.grid.n_cells();
    let dx = state.grid.dx();
    let t_new = state.t() + dt;
    let mut audit = StepAudit {
        clipped: 0.0,
        touch_outflow: 0.0,
        deep_outflow: 0.0,
        source_added: 0.0,
    };

    if cfg.mode == Mode::Full {
        let (coeff, u0) = flux_coefficients(params, cfg.flux_form);
        {
            let h = state.depths();
            // Edge e separates cells e-1 and e; flux[e] = coeff*(h^2)_S + u0*h_up.
            // Positive drift moves depth toward the touch, so the upwind cell
            // for u0 > 0 is the one on the right.
            for e in 1..n {
                let diff = coeff * (h[e] * h[e] - h[e - 1] * h[e - 1]) / dx;
                let adv = u0 * if u0 >= 0.0 { h[e] } else { h[e - 1] };
                flux[e] = diff + adv;
            }
            flux[0] = match bc.touch {
                BcKind::ZeroFlux | BcKind::FirmStop => 0.0,
                // The reservoir acts through the post-step pin, not the edge.
                BcKind::Depth(_) => 0.0,
                BcKind::Flux(q) => q,
                BcKind::Slope(p0) => {
                    let ghost = (h[0] - p0 * dx).max(0.0);
                    let diff = coeff * (h[0] * h[0] - ghost * ghost) / dx;
                    diff + u0 * if u0 >= 0.0 { h[0] } else { ghost }
                }
            };
            flux[n] = match bc.deep {
                BcKind::ZeroFlux | BcKind::FirmStop => 0.0,
                BcKind::Depth(_) => 0.0,
                BcKind::Flux(q) => q,
                BcKind::Slope(p0) => {
                    let ghost = (h[n - 1] + p0 * dx).max(0.0);
                    let diff = coeff * (ghost * ghost - h[n - 1] * h[n - 1]) / dx;
                    diff + u0 * if u0 >= 0.0 { ghost } else { h[n - 1] }
                }
            };
        }
        audit.touch_outflow += flux[0] * dt;
        audit.deep_outflow += -flux[n] * dt;
    } else {
        flux.fill(0.0);
    }

    let source = &params.source;
    let source_active = !source.is_zero();
    let h = state.depths_mut();
    for i in 0..n {
        let old = h[i];
        let mut new = old + dt / dx * (flux[i + 1] - flux[i]);
        if source_active {
            let rate = source.rate(i, old);
            new += dt * rate;
            audit.source_added += dt * rate * dx;
        }
        h[i] = new;
    }

    for (i, v) in h.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::Blowup {
                cell: i,
                t: t_new,
                partial: None,
            });
        }
        if *v < 0.0 {
            audit.clipped += -*v * dx;
            *v = 0.0;
        }
    }

    if let BcKind::Depth(h0) = bc.touch {
        let delta = h0 - h[0];
        audit.touch_outflow += -delta * dx;
        h[0] = h0;
    }
    if let BcKind::Depth(h0) = bc.deep {
        let delta = h0 - h[n - 1];
        audit.deep_outflow += -delta * dx;
        h[n - 1] = h0;
    }

    state.set_t(t_new);
    Ok(audit)
}

/// One explicit step of size `dt`, returning the advanced profile.
pub fn step(
    profile: &BookProfile,
    params: &PhysicalParams,
    bc: &BoundaryConditions,
    cfg: &SolverConfig,
    dt: f64,
) -> Result<BookProfile> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step size must be finite and positive, got {dt}"
        )));
    }
    cfg.validate()?;
    params.source.validate(profile.grid.n_cells())?;
    let mut out = profile.clone();
    let mut flux = vec![0.0; profile.grid.n_cells() + 1];
    step_in_place(&mut out, &mut flux, params, bc, cfg, dt)?;
    Ok(out)
}

/// Largest stable explicit step for the current state, scaled by
/// `cfg.cfl_safety`:
///
/// ```text
/// dt = cfl_safety * dx^2 / (2 (2 D max(h) + |u0| dx + eps))
/// ```
///
/// where `D` is the gradient-flux coefficient of the active flux form (1 for
/// the canonical equation). The `eps` floor keeps the bound finite and
/// positive even for an empty book. A relaxation source additionally caps
/// `dt` well below its own time constant `1/kappa`.
pub fn stable_dt(profile: &BookProfile, params: &PhysicalParams, cfg: &SolverConfig) -> f64 {
    let dx = profile.grid.dx();
    let maxh = profile.depths().iter().cloned().fold(0.0, f64::max);
    let (coeff, u0) = flux_coefficients(params, cfg.flux_form);
    let denom = 2.0 * (2.0 * coeff * maxh + u0.abs() * dx + DT_EPS);
    let mut dt = cfg.cfl_safety * dx * dx / denom;
    if let SourceTerm::Relaxation { kappa, .. } = &params.source {
        if *kappa > 0.0 {
            dt = dt.min(0.1 * cfg.cfl_safety / kappa);
        }
    }
    dt
}

/// Integrates from the profile's time to `cfg.t_end`, recording snapshots at
/// `cfg.output_times` (reached exactly by clipping `dt`) and scalar series at
/// the configured stride. On blow-up the error carries the trajectory
/// recorded so far.
pub fn run(
    initial: &BookProfile,
    params: &PhysicalParams,
    bc: &BoundaryConditions,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    params.source.validate(initial.grid.n_cells())?;
    let t0 = initial.t();
    if cfg.t_end <= t0 {
        return Err(Error::InvalidInput(format!(
            "t_end = {} does not lie beyond the initial time {t0}",
            cfg.t_end
        )));
    }
    if let Some(&first) = cfg.output_times.first() {
        if first < t0 - 1e-12 * t0.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "output time {first} precedes the initial time {t0}"
            )));
        }
    }

    let mut state = initial.clone();
    let mut flux = vec![0.0; initial.grid.n_cells() + 1];
    let mut traj = Trajectory::default();
    let time_tol = |t: f64| 1e-9 * t.abs().max(1.0);

    // The sample at the starting event is always kept.
    traj.record_series(&state, cfg);
    let mut out_idx = 0;
    while out_idx < cfg.output_times.len() && cfg.output_times[out_idx] <= t0 + time_tol(t0) {
        traj.snapshots.push((state.t(), state.clone()));
        out_idx += 1;
    }

    while state.t() < cfg.t_end - time_tol(cfg.t_end) {
        let mut dt = stable_dt(&state, params, cfg);
        dt = dt.min(cfg.t_end - state.t());
        let mut landing = None;
        if out_idx < cfg.output_times.len() {
            let t_next = cfg.output_times[out_idx];
            if state.t() + dt >= t_next - time_tol(t_next) {
                dt = t_next - state.t();
                landing = Some(t_next);
            }
        }
        if !(dt > 0.0) || state.t() + dt == state.t() {
            return Err(Error::Domain(format!(
                "time step underflow at t = {}",
                state.t()
            )));
        }

        match step_in_place(&mut state, &mut flux, params, bc, cfg, dt) {
            Ok(audit) => {
                traj.clipped_mass += audit.clipped;
                traj.source_added += audit.source_added;
                traj.boundary_outflow.touch += audit.touch_outflow;
                traj.boundary_outflow.deep += audit.deep_outflow;
            }
            Err(Error::Blowup { cell, t, .. }) => {
                return Err(Error::Blowup {
                    cell,
                    t,
                    partial: Some(Box::new(traj)),
                });
            }
            Err(e) => return Err(e),
        }
        traj.steps += 1;

        if let Some(t_exact) = landing {
            state.set_t(t_exact);
            traj.snapshots.push((t_exact, state.clone()));
            traj.record_series(&state, cfg);
            out_idx += 1;
        } else if state.t() >= cfg.record_start && traj.steps % cfg.record_every == 0 {
            traj.record_series(&state, cfg);
        }
    }

    // Final sample, whether or not the stride lands on it.
    traj.record_series(&state, cfg);
    Ok(traj)
}

/// Location of the touch: the book's lowest occupied price.
///
/// A cell counts as occupied above `support_epsilon * max(h)`. The returned
/// price linearly interpolates the threshold crossing between cell centers;
/// a book occupied from the first cell reports the grid edge itself. Returns
/// `None` for an empty book.
pub fn find_touch(profile: &BookProfile, cfg: &SolverConfig) -> Option<f64> {
    let h = profile.depths();
    let maxh = h.iter().cloned().fold(0.0, f64::max);
    if maxh <= 0.0 {
        return None;
    }
    let thr = cfg.support_epsilon * maxh;
    let i = h.iter().position(|&v| v > thr)?;
    if i == 0 {
        return Some(profile.grid.s_min());
    }
    let c_prev = profile.grid.cell_center(i - 1);
    let frac = (thr - h[i - 1]) / (h[i] - h[i - 1]);
    Some(c_prev + frac * profile.grid.dx())
}

/// One executed price level of a market order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutedLevel {
    pub price: f64,
    pub quantity: f64,
}

/// Consumes `quantity` of resting volume greedily from the touch side,
/// possibly a fraction of the last level reached. Returns the depleted book
/// and the executed levels. Asking for more than the book holds fails with
/// the shortfall; the book is untouched in that case.
pub fn take_liquidity(
    profile: &BookProfile,
    quantity: f64,
) -> Result<(BookProfile, Vec<ExecutedLevel>)> {
    if !(quantity.is_finite() && quantity >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "take quantity must be finite and nonnegative, got {quantity}"
        )));
    }
    let available = total_mass(profile);
    if quantity > available {
        return Err(Error::InsufficientLiquidity {
            requested: quantity,
            available,
            shortfall: quantity - available,
        });
    }
    let mut out = profile.clone();
    let mut fills = Vec::new();
    if quantity == 0.0 {
        return Ok((out, fills));
    }
    let dx = out.grid.dx();
    let grid = out.grid;
    let mut remaining = quantity;
    for (i, depth) in out.depths_mut().iter_mut().enumerate() {
        if remaining <= 0.0 {
            break;
        }
        let cell_mass = *depth * dx;
        if cell_mass <= 0.0 {
            continue;
        }
        let take = cell_mass.min(remaining);
        *depth = ((cell_mass - take) / dx).max(0.0);
        fills.push(ExecutedLevel {
            price: grid.cell_center(i),
            quantity: take,
        });
        remaining -= take;
    }
    Ok((out, fills))
}

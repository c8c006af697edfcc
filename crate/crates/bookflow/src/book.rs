//! Price grids, book profiles, and volume bookkeeping.
//!
//! Everything solver-facing works in an ask-like frame: the touch (best
//! quote) sits at the low-price edge of the occupied region and the book
//! deepens to the right. A bid-side profile is brought into the same frame by
//! mirroring prices, `S -> -S`; see [`BookProfile::mirrored`].

use crate::error::{Error, Result};

/// Uniform cell-centered price grid over `[s_min, s_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceGrid {
    s_min: f64,
    s_max: f64,
    n_cells: usize,
}

impl PriceGrid {
    /// Requires finite bounds, `s_max > s_min`, and at least 4 cells.
    pub fn new(s_min: f64, s_max: f64, n_cells: usize) -> Result<Self> {
        if !s_min.is_finite() || !s_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid bounds must be finite, got [{s_min}, {s_max}]"
            )));
        }
        if s_max <= s_min {
            return Err(Error::InvalidInput(format!(
                "grid needs s_max > s_min, got [{s_min}, {s_max}]"
            )));
        }
        if n_cells < 4 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 4 cells, got {n_cells}"
            )));
        }
        Ok(Self {
            s_min,
            s_max,
            n_cells,
        })
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        (self.s_max - self.s_min) / self.n_cells as f64
    }

    /// Center of cell `i`.
    pub fn cell_center(&self, i: usize) -> f64 {
        self.s_min + (i as f64 + 0.5) * self.dx()
    }

    /// Left edge of cell `i`; `cell_left(n_cells)` is the right domain edge.
    pub fn cell_left(&self, i: usize) -> f64 {
        self.s_min + i as f64 * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.cell_center(i)).collect()
    }
}

/// Which side of the book a profile describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

/// Order creation/cancellation term `P` feeding the depth equation.
#[derive(Debug, Clone)]
pub enum SourceTerm {
    /// No external order flow.
    Zero,
    /// Cell-wise deposit rates (depth per unit time), aligned with the grid.
    Tabulated(Vec<f64>),
    /// Linear relaxation toward a target book: `P = kappa * (target - h)`.
    Relaxation { kappa: f64, target: Vec<f64> },
}

impl SourceTerm {
    /// Rate at cell `i` with current local depth `h`.
    pub fn rate(&self, i: usize, h: f64) -> f64 {
        match self {
            SourceTerm::Zero => 0.0,
            SourceTerm::Tabulated(rates) => rates[i],
            SourceTerm::Relaxation { kappa, target } => kappa * (target[i] - h),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SourceTerm::Zero)
    }

    /// Checks tabulated data against the grid length.
    pub fn validate(&self, n_cells: usize) -> Result<()> {
        let len = match self {
            SourceTerm::Zero => return Ok(()),
            SourceTerm::Tabulated(rates) => rates.len(),
            SourceTerm::Relaxation { kappa, target } => {
                if !kappa.is_finite() || *kappa < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "relaxation rate must be finite and nonnegative, got {kappa}"
                    )));
                }
                target.len()
            }
        };
        if len != n_cells {
            return Err(Error::InvalidInput(format!(
                "source table has {len} entries for a {n_cells}-cell grid"
            )));
        }
        Ok(())
    }
}

/// Model parameters for the queue-level dynamics.
///
/// `theta` converts depth to pressure, `rho` is the order-density scale,
/// `beta` is the queue-position exponent, and `u0` is a uniform drift of
/// quotes toward the touch.
#[derive(Debug, Clone)]
pub struct PhysicalParams {
    pub theta: f64,
    pub rho: f64,
    pub beta: f64,
    pub u0: f64,
    pub source: SourceTerm,
}

impl PhysicalParams {
    pub fn new(theta: f64, rho: f64, beta: f64, u0: f64, source: SourceTerm) -> Result<Self> {
        for (name, v) in [("theta", theta), ("rho", rho), ("beta", beta)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if !u0.is_finite() {
            return Err(Error::InvalidInput(format!("u0 must be finite, got {u0}")));
        }
        Ok(Self {
            theta,
            rho,
            beta,
            u0,
            source,
        })
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            theta: 1.0,
            rho: 1.0,
            beta: 1.0,
            u0: 0.0,
            source: SourceTerm::Zero,
        }
    }
}

/// Cell-averaged depth profile at a fixed time.
#[derive(Debug, Clone)]
pub struct BookProfile {
    pub grid: PriceGrid,
    pub side: Side,
    h: Vec<f64>,
    t: f64,
}

impl BookProfile {
    /// Requires one finite, nonnegative depth per grid cell.
    pub fn new(grid: PriceGrid, side: Side, h: Vec<f64>, t: f64) -> Result<Self> {
        if h.len() != grid.n_cells() {
            return Err(Error::InvalidInput(format!(
                "profile has {} depths for a {}-cell grid",
                h.len(),
                grid.n_cells()
            )));
        }
        if let Some((i, &v)) = h
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "depth at cell {i} must be finite and nonnegative, got {v}"
            )));
        }
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("time must be finite, got {t}")));
        }
        Ok(Self { grid, side, h, t })
    }

    /// Empty book on `grid`.
    pub fn empty(grid: PriceGrid, side: Side) -> Self {
        let n = grid.n_cells();
        Self {
            grid,
            side,
            h: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn depths(&self) -> &[f64] {
        &self.h
    }

    pub(crate) fn depths_mut(&mut self) -> &mut [f64] {
        &mut self.h
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    /// Price-mirrored copy (`S -> -S`), flipping bid to ask and back. The cell
    /// order reverses so the touch ends up at the low-price edge again.
    pub fn mirrored(&self) -> Self {
        let grid = PriceGrid {
            s_min: -self.grid.s_max(),
            s_max: -self.grid.s_min(),
            n_cells: self.grid.n_cells(),
        };
        let mut h = self.h.clone();
        h.reverse();
        Self {
            grid,
            side: self.side.opposite(),
            h,
            t: self.t,
        }
    }
}

/// Resting volume between prices `s1 < s2`, both inside the grid range.
///
/// The integral treats each cell as holding its depth uniformly, so the
/// result is exact whenever `s1` and `s2` fall on cell edges and is otherwise
/// a midpoint-rule value with O(dx^2) quadrature error for smooth data.
pub fn volume(profile: &BookProfile, s1: f64, s2: f64) -> Result<f64> {
    let grid = &profile.grid;
    let tol = 1e-12 * (grid.s_min().abs() + grid.s_max().abs() + 1.0);
    if !(s1 < s2) || s1 < grid.s_min() - tol || s2 > grid.s_max() + tol {
        return Err(Error::OutOfRange {
            s1,
            s2,
            lo: grid.s_min(),
            hi: grid.s_max(),
        });
    }
    let dx = grid.dx();
    let n = grid.n_cells();
    let i0 = (((s1 - grid.s_min()) / dx).floor() as isize).clamp(0, n as isize - 1) as usize;
    let i1 = (((s2 - grid.s_min()) / dx).ceil() as isize).clamp(1, n as isize) as usize;
    let mut total = 0.0;
    for i in i0..i1 {
        let left = grid.cell_left(i).max(s1);
        let right = grid.cell_left(i + 1).min(s2);
        let overlap = (right - left).max(0.0);
        total += profile.h[i] * overlap;
    }
    Ok(total)
}

/// Total resting volume of the book.
pub fn total_mass(profile: &BookProfile) -> f64 {
    let dx = profile.grid.dx();
    profile.h.iter().sum::<f64>() * dx
}

/// Location and height of the depth maximum, sharpened by fitting a parabola
/// through the three cells around the discrete argmax. Returns `None` for an
/// empty book. At a domain edge the refinement is skipped and the cell center
/// is reported.
pub fn peak(profile: &BookProfile) -> Option<(f64, f64)> {
    let h = &profile.h;
    let (i, &hmax) = h
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("depths are finite"))?;
    if hmax <= 0.0 {
        return None;
    }
    let grid = &profile.grid;
    if i == 0 || i == h.len() - 1 {
        return Some((grid.cell_center(i), hmax));
    }
    let (ym, y0, yp) = (h[i - 1], h[i], h[i + 1]);
    let den = ym - 2.0 * y0 + yp;
    if den >= 0.0 {
        // Flat or non-concave triple; the parabola has no interior maximum.
        return Some((grid.cell_center(i), hmax));
    }
    // Vertex offset in cells, clamped to the argmax cell.
    let delta = (0.5 * (ym - yp) / den).clamp(-0.5, 0.5);
    let height = y0 - 0.25 * (ym - yp) * delta;
    Some((grid.cell_center(i) + delta * grid.dx(), height.max(hmax)))
}

use crate::pde::Trajectory;

/// Unified error type for the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("interval [{s1}, {s2}] not contained in grid range [{lo}, {hi}]")]
    OutOfRange { s1: f64, s2: f64, lo: f64, hi: f64 },

    #[error("cell {cell} is empty (h = 0); velocity is undefined at an empty level")]
    DegenerateLevel { cell: usize },

    #[error("insufficient liquidity: requested {requested}, available {available} (shortfall {shortfall})")]
    InsufficientLiquidity {
        requested: f64,
        available: f64,
        shortfall: f64,
    },

    /// Non-finite depth appeared during time stepping. When raised from a full
    /// run, the trajectory recorded up to the failing step is attached.
    #[error("numerical blow-up at cell {cell}, t = {t:e}: depth is not finite")]
    Blowup {
        cell: usize,
        t: f64,
        partial: Option<Box<Trajectory>>,
    },

    #[error("no positive similarity solution for gamma = {gamma}")]
    NoPositiveSolution { gamma: f64 },

    #[error("series balance inconsistent at order {order}: residual {residual}")]
    InconsistentSeries { order: usize, residual: String },

    #[error(
        "cannot fit: {reason} ({samples} usable samples, max displacement {max_displacement:e})"
    )]
    Unfittable {
        reason: String,
        samples: usize,
        max_displacement: f64,
    },

    #[error("no snapshot recorded at requested time {t}")]
    SnapshotLookup { t: f64 },

    #[error("profile has zero mass")]
    ZeroMass,

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

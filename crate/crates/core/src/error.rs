use thiserror::Error;

/// Errors reported by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function (e.g. `s` on the
    /// branch cut, `Re z <= 0` for the Bessel function).
    #[error("domain error: {0}")]
    Domain(String),

    /// A kernel was evaluated at coincident points.
    #[error("kernel singularity: displacement vector is zero")]
    Singularity,

    /// Invalid construction parameters (mesh size, BDF order, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An observation point lies on (or too close to) the boundary.
    #[error("observation point {index} at ({x}, {y}) is on the boundary")]
    PointOnBoundary { index: usize, x: f64, y: f64 },

    /// A quadrature produced a non-finite matrix entry.
    #[error("non-finite entry for element pair ({test}, {trial})")]
    Quadrature { test: usize, trial: usize },

    /// A dense factorization hit a (numerically) zero pivot.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Matrix / vector sizes do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The transfer function failed at one contour node.
    #[error("transfer evaluation failed at contour node {node}: {source}")]
    Transfer { node: usize, source: Box<Error> },

    /// Complex CQ weights or densities were expected to be real.
    #[error("non-real result: relative imaginary part {0:e}")]
    NonReal(f64),

    /// Dirichlet data violate the flux compatibility condition.
    #[error("incompatible data at t = {time}: boundary flux {flux:e}")]
    Incompatible { time: f64, flux: f64 },

    /// Convergence ladders must double N and M between rows.
    #[error("refinement ladder must double N and M between consecutive rows")]
    Ladder,

    /// The transfer function is not in the catalog of known inverse transforms.
    #[error("transfer function not in catalog: {0}")]
    Catalog(String),

    /// Every cell of a snapshot grid was masked.
    #[error("snapshot grid has no unmasked cell")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, Error>;

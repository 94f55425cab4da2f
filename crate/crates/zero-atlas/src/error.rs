//! Crate-wide error type.

use crate::roots::ZeroSet;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Structurally degenerate input (empty measure, all-zero realization, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Query outside the domain covered by a grid or closed form.
    #[error("domain violation: {0}")]
    Domain(String),

    /// The defining supremum is unbounded; growth assumptions are violated.
    #[error("unbounded supremum: {0}")]
    UnboundedSup(String),

    /// A grid is too coarse to resolve structure it is required to resolve.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// A series does not converge at the requested radius.
    #[error("divergent series: {0}")]
    Divergence(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    /// Simultaneous iteration did not converge; partial results attached.
    #[error("root finding did not converge after {iterations} iterations")]
    RootNonConvergence {
        iterations: u32,
        partial: Box<ZeroSet>,
    },

    /// A computed root failed the residual certificate.
    #[error("root residual {max_residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualCheck {
        max_residual: f64,
        tolerance: f64,
        partial: Box<ZeroSet>,
    },

    /// Contour integration did not settle on an integer winding number.
    #[error("winding number ambiguous: {0}")]
    WindingAmbiguous(String),

    /// The realization is identically zero; its zero measure is undefined.
    #[error("identically zero realization")]
    IdenticallyZero,

    /// A serialized document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Degenerate(_) | Error::Domain(_) | Error::Parse(_)
        )
    }
}

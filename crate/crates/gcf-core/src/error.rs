//! Error type shared across the crate.

use core::fmt;

/// Failure modes of grid construction, body validation, and flow stepping.
#[derive(Debug, Clone, PartialEq)]
pub enum GcfError {
    /// Only intrinsic dimensions 1 and 2 are supported.
    UnsupportedDimension(usize),
    /// Grid resolution below the supported minimum (16 per axis, longitude even).
    ResolutionTooSmall { axis: &'static str, got: usize },
    /// Strict convexity lost: the radii matrix has a non-positive eigenvalue.
    ConvexityLoss { node: usize, min_eig: f64 },
    /// Support function must be positive everywhere.
    NonPositiveSupport { node: usize, value: f64 },
    /// Flow step rejected repeatedly; the body is about to degenerate.
    StepRejected { halvings: u32, time: f64 },
    /// Shrinker ODE trajectory left the convex regime (h hit zero).
    OdeBlowup { theta: f64 },
    /// Shrinker-only identity evaluated on a body that does not satisfy the
    /// shrinker equation to the gating tolerance.
    NotAShrinker { residual: f64, gate: f64 },
    /// Mismatched grids or field lengths.
    ShapeMismatch,
    /// A scan or evaluation parameter outside its admissible range.
    BadParameter { what: &'static str },
}

impl fmt::Display for GcfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GcfError::UnsupportedDimension(n) => write!(f, "unsupported dimension n={n} (need 1 or 2)"),
            GcfError::ResolutionTooSmall { axis, got } => {
                write!(f, "resolution too small on {axis}: {got} (minimum 16; longitude must be even)")
            }
            GcfError::ConvexityLoss { node, min_eig } => {
                write!(f, "convexity failure at node {node}: min radii eigenvalue {min_eig:e}")
            }
            GcfError::NonPositiveSupport { node, value } => {
                write!(f, "support function not positive at node {node}: {value:e}")
            }
            GcfError::StepRejected { halvings, time } => {
                write!(f, "flow step rejected after {halvings} halvings at t={time:e}; body degenerating")
            }
            GcfError::OdeBlowup { theta } => write!(f, "shrinker ODE left convex regime at theta={theta:e}"),
            GcfError::NotAShrinker { residual, gate } => {
                write!(f, "input is not a shrinker: residual {residual:e} exceeds gate {gate:e}")
            }
            GcfError::ShapeMismatch => write!(f, "field shape does not match grid"),
            GcfError::BadParameter { what } => write!(f, "parameter out of range: {what}"),
        }
    }
}

impl core::error::Error for GcfError {}

pub type Result<T> = core::result::Result<T, GcfError>;

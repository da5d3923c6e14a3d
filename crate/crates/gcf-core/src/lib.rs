//! Support-function toolkit for the α-Gauss curvature flow on closed strictly
//! convex hypersurfaces (n = 1, 2): sphere grids and quadrature, radii-of-curvature
//! calculus, extrinsic tensor geometry, explicit flow stepping with volume
//! normalization, self-similar (shrinker) solutions, and numerical verification
//! of the tensor identities and scalar inequalities the uniqueness argument rests on.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bodies;
pub mod error;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod identities;
pub mod ineq;
pub mod shrinker;
pub mod stencil;
pub mod support;
pub mod tol;

pub use error::GcfError;
pub use grid::SphereGrid;
pub use support::{Bundle1, Bundle2};

//! Circle-packing metrics on weighted triangulated closed surfaces.
//!
//! The solver integrates the combinatorial Ricci flow `du_i/dt = -(K_i - target_i)`
//! in Euclidean, hyperbolic or spherical background geometry, offers a Newton
//! fast path on the convex potential of that flow, and checks the combinatorial
//! existence conditions for constant-curvature packings.

pub mod conditions;
pub mod curvature;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod flow;
pub mod kernel;
pub mod layout;
pub mod mesh;
pub mod newton;
pub mod potential;
pub mod sparse;

pub use error::{Error, Result};
pub use kernel::Geometry;

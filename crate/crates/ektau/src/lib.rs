//! Numerical geometry of the homogeneous 3-manifolds E(k, tau).
//!
//! The crate models the two-parameter family of homogeneous 3-manifolds
//! that fiber over the simply connected surface of curvature k with bundle
//! curvature tau, in a single global chart. On top of the ambient layer it
//! builds immersed surfaces with their second fundamental forms, the frame
//! adapted to the vertical direction, the first-order relations that frame
//! satisfies, and a congruence test that decides whether two convex spheres
//! differ by an ambient isometry.
//!
//! Layering, bottom up:
//!
//! * [`scalar`], [`dual`], [`jet`]: forward-mode derivatives used to get
//!   exact metric and surface jets (no finite differencing in the core
//!   formulas; finite differences live in [`fd`] and are used as
//!   independent cross-checks).
//! * [`linalg`]: small fixed-size vectors and matrices, generic over the
//!   scalar type so the derivative types nest.
//! * [`space`]: the ambient metric, connection, cross product, geodesics,
//!   the vertical Killing field, and the chart-affine isometries.
//! * [`surface`]: parametrized surfaces, their invariants, the adapted
//!   frame and its connection forms, and locators for horizontal points
//!   and the vertical locus.
//! * [`equations`]: every first-order relation as a numerical residual,
//!   plus pointwise checks at vertical and horizontal points.
//! * [`reconstruct`]: characteristic trajectories, propagation of the
//!   frame angle along them, and the congruence decision.
//! * [`examples`]: ready-made surface families used by the test suite and
//!   the command line tool.

pub mod dual;
pub mod error;
pub mod exec;
pub mod fd;
pub mod jet;
pub mod linalg;
pub mod scalar;
pub mod space;
pub mod equations;
pub mod examples;
pub mod reconstruct;
pub mod surface;
pub mod tolerances;

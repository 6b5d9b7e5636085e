//! Error taxonomy for the geometry engine.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum GeomError {
    /// Point lies outside the chart domain 1 + k(x^2+y^2)/4 > 0.
    #[error("point ({x}, {y}, {z}) outside the chart domain for k = {k}")]
    OutsideChart { k: f64, x: f64, y: f64, z: f64 },

    /// Parameter values outside the declared surface domain.
    #[error("parameter ({u}, {v}) outside the surface domain")]
    OutsideDomain { u: f64, v: f64 },

    /// Tangent vectors fail to span: |f_u x f_v| too small.
    #[error("degenerate tangent basis at ({u}, {v}): area element {area:.3e}")]
    DegenerateTangentBasis { u: f64, v: f64, area: f64 },

    /// The adapted frame needs |cos(theta)| > 0: point is horizontal.
    #[error("frame undefined at ({u}, {v}): |cos(theta)| = {cos_theta:.3e} below threshold")]
    FrameUndefined { u: f64, v: f64, cos_theta: f64 },

    /// grad(theta) vanishes: the direction field and phi are undefined.
    #[error("grad(theta) norm {norm:.3e} below threshold at ({u}, {v})")]
    GradThetaVanishes { u: f64, v: f64, norm: f64 },

    /// Residual check precondition violated (vertical/horizontal exclusion).
    #[error("residual precondition failed at ({u}, {v}): {what}")]
    ResidualPrecondition { u: f64, v: f64, what: String },

    /// k - 4 tau^2 = 0: curvature data cannot determine theta.
    #[error("space form (k = 4 tau^2 with k = {k}, tau = {tau}): theta is not determined")]
    SpaceForm { k: f64, tau: f64 },

    /// Curvature data inconsistent with any angle (nu^2 outside [0, 1]).
    #[error("no angle matches the curvature data: nu^2 = {nu_sq:.6e}")]
    InconsistentCurvature { nu_sq: f64 },

    /// Isometry kind not available for these space parameters.
    #[error("isometry {kind} unsupported for k = {k}, tau = {tau}")]
    UnsupportedIsometry { kind: String, k: f64, tau: f64 },

    /// Iterative locator failed to converge.
    #[error("{what} failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { what: String, iterations: usize, residual: f64 },

    /// Curve tracing stalled before meeting a stopping condition.
    #[error("continuation stalled at ({u}, {v}): {what}")]
    ContinuationStall { u: f64, v: f64, what: String },

    /// Congruence pipeline precondition (e.g. probe points horizontal).
    #[error("congruence precondition failed: {what}")]
    CongruencePrecondition { what: String },

    /// Configuration rejected before any computation ran.
    #[error("invalid configuration: {what}")]
    InvalidConfig { what: String },
}

pub type Result<T> = std::result::Result<T, GeomError>;

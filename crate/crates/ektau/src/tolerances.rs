//! Central numeric tolerances and step sizes.
//!
//! Three accuracy tiers, matched to how a quantity is produced:
//! exact jet arithmetic and closed forms, one finite-difference layer,
//! or two stacked finite-difference layers. Everything that asserts a
//! tolerance pulls the constant from here so the tiers stay consistent.

/// Closed forms and identities evaluated through exact jets.
pub const TOL_EXACT: f64 = 1e-8;

/// Quantities with one finite-difference (or integrator) layer.
pub const TOL_JET_VS_FD: f64 = 1e-5;

/// Quantities built from two stacked finite-difference layers
/// (e.g. curvature of a numerically traced intersection curve).
pub const TOL_DOUBLE_FD: f64 = 1e-3;

/// Residual of a pulled-back metric under an exact isometry.
pub const TOL_ISOMETRY: f64 = 1e-10;

/// Frame decomposition residual |xi - cos(theta) e1 - sin(theta) N|.
pub const TOL_FRAME: f64 = 1e-10;

/// A point counts as horizontal when |xi - <N,xi> N| falls below this.
pub const EPS_HORIZONTAL: f64 = 1e-6;

/// Frame-dependent residual checks stay clear of horizontal points:
/// require |cos(theta)| above this.
pub const EPS_COS_THETA: f64 = 1e-3;

/// Identities with a cot(theta) factor stay clear of vertical points:
/// require |sin(theta)| above this.
pub const EPS_SIN_THETA: f64 = 1e-3;

/// Minimum |grad theta| for the direction field and phi to be defined.
pub const EPS_GRAD_THETA: f64 = 1e-6;

/// Degenerate tangent basis guard: reject when EG - F^2 falls below this
/// times the scale of the first fundamental form.
pub const EPS_IMMERSION: f64 = 1e-12;

/// |k - 4 tau^2| below this marks a space form (degenerate family member).
pub const EPS_SPACE_FORM: f64 = 1e-12;

/// Central-difference step for first derivatives of smooth pointwise data.
pub const FD_STEP: f64 = 1e-4;

/// Step used when differentiating frame fields (Richardson-refined).
pub const FD_STEP_FRAME: f64 = 1e-3;

/// Convergence target for Newton refinements in locators.
pub const TOL_NEWTON: f64 = 1e-12;

/// Default integrator step (per unit arclength).
pub const RK_STEP: f64 = 1e-3;

/// Measured integrator convergence order must exceed this.
pub const MIN_CONVERGENCE_ORDER: f64 = 3.5;

/// Trajectories stop when |cos(theta)| drops below this cap, keeping the
/// net away from horizontal points.
pub const TRAJECTORY_COS_CAP: f64 = 5e-2;

/// Congruence verdict threshold on the second-fundamental-form discrepancy.
pub const TOL_CONGRUENT: f64 = 1e-5;

/// Reflexive congruence (surface against itself) must sit below this.
pub const TOL_REFLEXIVE: f64 = 1e-12;

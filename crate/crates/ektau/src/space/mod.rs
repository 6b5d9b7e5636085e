//! The homogeneous 3-manifolds E(k, tau) in a global chart.
//!
//! Chart model on (a subset of) R^3 with conformal factor
//! `lambda = 1 / (1 + k (x^2 + y^2) / 4)`:
//!
//! ```text
//! ds^2 = lambda^2 (dx^2 + dy^2) + (tau lambda (y dx - x dy) + dz)^2
//! ```
//!
//! Fibers of the submersion onto the base surface of curvature k are the
//! z-lines; the unit Killing field xi has chart components (0, 0, 1). For
//! k < 0 the chart covers the disk x^2 + y^2 < -4/k; for k >= 0 it covers
//! all of R^3 (one fiber is missing from the total space when k > 0, which
//! is irrelevant at the working scale of this crate).

pub mod isometry;

use crate::dual::Dual;
use crate::error::{GeomError, Result};
use crate::linalg::{Mat3, Vec3, M3, V3};
use crate::scalar::Scalar;
use crate::tolerances::EPS_SPACE_FORM;
use serde::{Deserialize, Serialize};

/// Base curvature k and bundle curvature tau.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub k: f64,
    pub tau: f64,
}

impl SpaceParams {
    pub fn new(k: f64, tau: f64) -> Self {
        SpaceParams { k, tau }
    }

    /// True when k = 4 tau^2: the space is a space form and the curvature
    /// data no longer determines the angle function.
    pub fn is_space_form(&self) -> bool {
        (self.k - 4.0 * self.tau * self.tau).abs() < EPS_SPACE_FORM
    }

    /// Chart admissibility: 1 + k (x^2+y^2)/4 must stay positive.
    pub fn admissible(&self, p: V3) -> bool {
        1.0 + self.k * (p.x * p.x + p.y * p.y) / 4.0 > 1e-9
    }

    pub fn check_admissible(&self, p: V3) -> Result<()> {
        if self.admissible(p) {
            Ok(())
        } else {
            Err(GeomError::OutsideChart { k: self.k, x: p.x, y: p.y, z: p.z })
        }
    }
}

/// Chart coordinates of an ambient point.
pub type AmbientPoint = V3;
/// Chart components of a tangent vector at some ambient point.
pub type AmbientVector = V3;

/// Conformal factor of the base metric at chart position (x, y).
#[inline]
pub fn conformal_factor<S: Scalar>(k: f64, x: S, y: S) -> S {
    let quarter_k = S::from_f64(k / 4.0);
    S::one() / (S::one() + quarter_k * (x * x + y * y))
}

/// Metric tensor in chart coordinates, generic over the scalar type.
///
/// With A = tau lambda y and B = -tau lambda x the line element reads
/// lambda^2 (dx^2 + dy^2) + (A dx + B dy + dz)^2.
pub fn metric_components<S: Scalar>(params: &SpaceParams, p: Vec3<S>) -> Mat3<S> {
    let lam = conformal_factor(params.k, p.x, p.y);
    let lam2 = lam * lam;
    let tau = S::from_f64(params.tau);
    let a = tau * lam * p.y;
    let b = -(tau * lam * p.x);
    let one = S::one();
    Mat3::from_rows([
        [lam2 + a * a, a * b, a],
        [a * b, lam2 + b * b, b],
        [a, b, one],
    ])
}

/// Metric tensor at an admissible chart point.
pub fn metric_at(params: &SpaceParams, p: AmbientPoint) -> Result<M3> {
    params.check_admissible(p)?;
    Ok(metric_components(params, p))
}

/// Exact partial derivatives of the metric: `[d/dx g, d/dy g, d/dz g]`.
///
/// Computed by pushing dual numbers through the metric formula; the metric
/// is independent of z so the last slot is identically zero.
pub fn metric_derivatives(params: &SpaceParams, p: AmbientPoint) -> [M3; 3] {
    let mut out = [Mat3::from_rows([[0.0; 3]; 3]); 3];
    for dir in 0..2 {
        let pos = Vec3::new(
            Dual::var(p.x, if dir == 0 { 1.0 } else { 0.0 }),
            Dual::var(p.y, if dir == 1 { 1.0 } else { 0.0 }),
            Dual::c(p.z),
        );
        let g = metric_components(params, pos);
        for i in 0..3 {
            for j in 0..3 {
                out[dir].m[i][j] = g.m[i][j].d;
            }
        }
    }
    out
}

/// Christoffel symbols at a point: `chris[i][j][k]` is Gamma^i_{jk},
/// symmetric in (j, k).
#[derive(Clone, Copy, Debug)]
pub struct Christoffel {
    pub g: [[[f64; 3]; 3]; 3],
}

impl Christoffel {
    /// Gamma(u, v)^i = Gamma^i_{jk} u^j v^k.
    #[inline]
    pub fn contract(&self, u: V3, v: V3) -> V3 {
        let ua = u.to_array();
        let va = v.to_array();
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    s += self.g[i][j][k] * ua[j] * va[k];
                }
            }
            *o = s;
        }
        V3::from_array(out)
    }
}

/// Connection coefficients generic over the scalar type: `out[i][j][k]` is
/// Gamma^i_{jk}. Metric derivatives come from one extra dual layer, so the
/// result is exact for any payload (plain values, jets, nested duals).
pub fn christoffel_components<S: Scalar>(
    params: &SpaceParams,
    pos: Vec3<S>,
) -> [[[S; 3]; 3]; 3] {
    let g = metric_components(params, pos);
    let ginv = g.inverse();
    // dg[dir][i][j] = d g_ij / d chart-coordinate dir; the metric does not
    // depend on z, so the last direction stays zero.
    let mut dg = [[[S::zero(); 3]; 3]; 3];
    for (dir, slot) in dg.iter_mut().enumerate().take(2) {
        let p = Vec3::new(
            Dual::var(pos.x, if dir == 0 { S::one() } else { S::zero() }),
            Dual::var(pos.y, if dir == 1 { S::one() } else { S::zero() }),
            Dual::c(pos.z),
        );
        let gm = metric_components(params, p);
        for i in 0..3 {
            for j in 0..3 {
                slot[i][j] = gm.m[i][j].d;
            }
        }
    }
    let mut out = [[[S::zero(); 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in j..3 {
                let mut s = S::zero();
                for l in 0..3 {
                    s = s + ginv.m[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]);
                }
                let v = s.scale(0.5);
                out[i][j][k] = v;
                out[i][k][j] = v;
            }
        }
    }
    out
}

/// Levi-Civita connection coefficients from exact metric derivatives.
pub fn christoffel_at(params: &SpaceParams, p: AmbientPoint) -> Result<Christoffel> {
    params.check_admissible(p)?;
    Ok(Christoffel { g: christoffel_components(params, p) })
}

/// The unit vertical Killing field: chart components (0, 0, 1) everywhere.
pub fn xi_at(_params: &SpaceParams, _p: AmbientPoint) -> AmbientVector {
    Vec3::new(0.0, 0.0, 1.0)
}

/// Oriented Riemannian cross product of tangent vectors at p, generic in
/// the scalar type. Defined by `<u x v, w> = vol(u, v, w)` with the chart
/// orientation, i.e. `u x v = sqrt(det g) g^{-1} (u x_chart v)`.
pub fn cross_components<S: Scalar>(
    g: &Mat3<S>,
    u: Vec3<S>,
    v: Vec3<S>,
) -> Vec3<S> {
    let scale = g.det().sqrt();
    g.inverse().apply(u.cross_chart(v)).scale(scale)
}

/// Oriented cross product at an admissible point.
pub fn cross(params: &SpaceParams, p: AmbientPoint, u: AmbientVector, v: AmbientVector) -> Result<AmbientVector> {
    let g = metric_at(params, p)?;
    Ok(cross_components(&g, u, v))
}

/// Covariant derivative of xi in the direction x: Gamma-contraction with
/// the constant field (0,0,1). Satisfies nabla_x xi = tau (x ^ xi).
pub fn nabla_xi(params: &SpaceParams, p: AmbientPoint, x: AmbientVector) -> Result<AmbientVector> {
    let chris = christoffel_at(params, p)?;
    Ok(chris.contract(x, xi_at(params, p)))
}

/// One-jet of a curve: position and chart velocity.
#[derive(Clone, Copy, Debug)]
pub struct CurveJet {
    pub pos: AmbientPoint,
    pub vel: AmbientVector,
}

/// One-jet of a vector field along a curve: value and chart derivative of
/// the components with respect to the curve parameter.
#[derive(Clone, Copy, Debug)]
pub struct FieldJet {
    pub val: AmbientVector,
    pub dot: AmbientVector,
}

/// Covariant derivative of a field along a curve:
/// `(D V)^i = dV^i/ds + Gamma^i_{jk} x'^j V^k`.
pub fn covariant_derivative(params: &SpaceParams, curve: CurveJet, field: FieldJet) -> Result<AmbientVector> {
    let chris = christoffel_at(params, curve.pos)?;
    Ok(field.dot + chris.contract(curve.vel, field.val))
}

/// State along an integrated geodesic.
#[derive(Clone, Copy, Debug)]
pub struct GeodesicState {
    pub s: f64,
    pub pos: AmbientPoint,
    pub vel: AmbientVector,
}

#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub states: Vec<GeodesicState>,
    pub step: f64,
    /// True when integration stopped early at the chart boundary.
    pub truncated: bool,
}

impl GeodesicPath {
    pub fn end(&self) -> GeodesicState {
        *self.states.last().expect("geodesic path has at least the initial state")
    }
}

fn geodesic_rhs(params: &SpaceParams, pos: V3, vel: V3) -> Option<(V3, V3)> {
    if !params.admissible(pos) {
        return None;
    }
    let chris = christoffel_at(params, pos).ok()?;
    Some((vel, -chris.contract(vel, vel)))
}

/// Classical fixed-step RK4 for the geodesic equation
/// `x'' + Gamma(x)(x', x') = 0`. Stops at the chart boundary and reports
/// truncation instead of erroring.
pub fn geodesic(
    params: &SpaceParams,
    p0: AmbientPoint,
    v0: AmbientVector,
    length: f64,
    step: f64,
) -> Result<GeodesicPath> {
    params.check_admissible(p0)?;
    let n = (length / step).round().max(1.0) as usize;
    let h = length / n as f64;
    let mut states = Vec::with_capacity(n + 1);
    let mut pos = p0;
    let mut vel = v0;
    states.push(GeodesicState { s: 0.0, pos, vel });
    for i in 0..n {
        let Some((k1p, k1v)) = geodesic_rhs(params, pos, vel) else {
            return Ok(GeodesicPath { states, step: h, truncated: true });
        };
        let step_ok = (|| {
            let (k2p, k2v) = geodesic_rhs(params, pos + k1p.scale(h / 2.0), vel + k1v.scale(h / 2.0))?;
            let (k3p, k3v) = geodesic_rhs(params, pos + k2p.scale(h / 2.0), vel + k2v.scale(h / 2.0))?;
            let (k4p, k4v) = geodesic_rhs(params, pos + k3p.scale(h), vel + k3v.scale(h))?;
            let npos = pos + (k1p + k2p.scale(2.0) + k3p.scale(2.0) + k4p).scale(h / 6.0);
            let nvel = vel + (k1v + k2v.scale(2.0) + k3v.scale(2.0) + k4v).scale(h / 6.0);
            if params.admissible(npos) {
                Some((npos, nvel))
            } else {
                None
            }
        })();
        match step_ok {
            Some((npos, nvel)) => {
                pos = npos;
                vel = nvel;
                states.push(GeodesicState { s: (i + 1) as f64 * h, pos, vel });
            }
            None => return Ok(GeodesicPath { states, step: h, truncated: true }),
        }
    }
    Ok(GeodesicPath { states, step: h, truncated: false })
}

/// Projection onto the base surface: drop the fiber coordinate.
pub fn base_projection(p: AmbientPoint) -> [f64; 2] {
    [p.x, p.y]
}

/// Push a tangent vector down to the base: dpi is the same coordinate drop.
pub fn base_push(v: AmbientVector) -> [f64; 2] {
    [v.x, v.y]
}

/// Base metric at a base point: lambda^2 (dx^2 + dy^2).
pub fn base_metric(k: f64, q: [f64; 2]) -> [[f64; 2]; 2] {
    let lam = conformal_factor(k, q[0], q[1]);
    [[lam * lam, 0.0], [0.0, lam * lam]]
}

/// Horizontal lift of a base vector w at the fiber point p: the unique
/// tangent vector annihilated by the connection form that projects to w.
/// The lift is isometric onto the horizontal distribution.
pub fn horizontal_lift(params: &SpaceParams, p: AmbientPoint, w: [f64; 2]) -> Result<AmbientVector> {
    params.check_admissible(p)?;
    let lam = conformal_factor(params.k, p.x, p.y);
    let c = -params.tau * lam * (p.y * w[0] - p.x * w[1]);
    Ok(Vec3::new(w[0], w[1], c))
}

/// Trace the base geodesic through q0 with unit base direction w0 by
/// projecting a horizontally lifted ambient geodesic (horizontal geodesics
/// stay horizontal and project to base geodesics). Returns base points at
/// arclength resolution `step` on both sides of q0, ordered by arclength
/// from -length to +length.
pub fn base_geodesic(
    params: &SpaceParams,
    q0: [f64; 2],
    w0: [f64; 2],
    length: f64,
    step: f64,
) -> Result<Vec<[f64; 2]>> {
    let p0 = Vec3::new(q0[0], q0[1], 0.0);
    let v0 = horizontal_lift(params, p0, w0)?;
    let fwd = geodesic(params, p0, v0, length, step)?;
    let bwd = geodesic(params, p0, -v0, length, step)?;
    let mut pts: Vec<[f64; 2]> = bwd
        .states
        .iter()
        .rev()
        .map(|st| base_projection(st.pos))
        .collect();
    pts.extend(fwd.states.iter().skip(1).map(|st| base_projection(st.pos)));
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) const PARAM_GRID: [(f64, f64); 5] =
        [(-1.0, 0.0), (-1.0, 0.5), (0.0, 0.5), (1.0, 0.5), (1.0, 0.0)];

    fn sample_point(rng: &mut ChaCha8Rng) -> V3 {
        // Box inside every chart of the parameter grid (k = -1 needs r < 2).
        Vec3::new(
            rng.gen_range(-1.2..1.2),
            rng.gen_range(-1.2..1.2),
            rng.gen_range(-1.0..1.0),
        )
    }

    fn sample_vector(rng: &mut ChaCha8Rng) -> V3 {
        Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
    }

    #[test]
    fn metric_is_identity_at_origin_for_all_params() {
        for (k, tau) in PARAM_GRID {
            let params = SpaceParams::new(k, tau);
            let g = metric_at(&params, Vec3::new(0.0, 0.0, 0.3)).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g.m[i][j] - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn metric_matches_frozen_value_for_hyperbolic_case() {
        // k = -1, tau = 0 at (1, 0, 0): lambda = 1/(1 - 1/4) = 4/3,
        // metric = diag(16/9, 16/9, 1).
        let params = SpaceParams::new(-1.0, 0.0);
        let g = metric_at(&params, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        let lam2 = 16.0 / 9.0;
        assert!((g.m[0][0] - lam2).abs() < 1e-15);
        assert!((g.m[1][1] - lam2).abs() < 1e-15);
        assert!((g.m[2][2] - 1.0).abs() < 1e-15);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!(g.m[i][j].abs() < 1e-15);
        }
    }

    #[test]
    fn metric_is_symmetric_positive_definite_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (k, tau) in PARAM_GRID {
            let params = SpaceParams::new(k, tau);
            for _ in 0..50 {
                let p = sample_point(&mut rng);
                let g = metric_at(&params, p).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        assert!((g.m[i][j] - g.m[j][i]).abs() < 1e-15);
                    }
                }
                // Leading principal minors positive.
                let m = g.m;
                assert!(m[0][0] > 0.0);
                assert!(m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0);
                assert!(g.det() > 0.0);
            }
        }
    }

    #[test]
    fn metric_rejects_points_outside_chart() {
        let params = SpaceParams::new(-1.0, 0.3);
        let bad = Vec3::new(2.5, 0.0, 0.0); // r > 2 for k = -1
        assert!(matches!(
            metric_at(&params, bad),
            Err(GeomError::OutsideChart { .. })
        ));
    }

    #[test]
    fn christoffel_matches_frozen_values_at_origin() {
        // k = 0, tau = 0.5 at the origin: only Gamma^x_{yz} = tau and
        // Gamma^y_{xz} = -tau survive (plus jk-symmetry).
        let params = SpaceParams::new(0.0, 0.5);
        let c = christoffel_at(&params, Vec3::new(0.0, 0.0, 0.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let want = match (i, j, k) {
                        (0, 1, 2) | (0, 2, 1) => 0.5,
                        (1, 0, 2) | (1, 2, 0) => -0.5,
                        _ => 0.0,
                    };
                    assert!(
                        (c.g[i][j][k] - want).abs() < 1e-14,
                        "Gamma^{i}_{{{j}{k}}} = {}, want {want}",
                        c.g[i][j][k]
                    );
                }
            }
        }
    }

    #[test]
    fn christoffel_matches_finite_difference_metric_derivatives() {
        // Independent oracle: central differences of metric_at.
        let h = FD_STEP;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (k, tau) in PARAM_GRID {
            let params = SpaceParams::new(k, tau);
            for _ in 0..10 {
                let p = sample_point(&mut rng);
                let g = metric_at(&params, p).unwrap();
                let ginv = g.inverse();
                let mut dg = [[[0.0; 3]; 3]; 3];
                for dir in 0..3 {
                    let mut dp = V3::zero();
                    match dir {
                        0 => dp.x = h,
                        1 => dp.y = h,
                        _ => dp.z = h,
                    }
                    let gp = metric_at(&params, p + dp).unwrap();
                    let gm = metric_at(&params, p - dp).unwrap();
                    for i in 0..3 {
                        for j in 0..3 {
                            dg[dir][i][j] = (gp.m[i][j] - gm.m[i][j]) / (2.0 * h);
                        }
                    }
                }
                let c = christoffel_at(&params, p).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        for l in 0..3 {
                            let mut s = 0.0;
                            for m in 0..3 {
                                s += ginv.m[i][m] * (dg[j][m][l] + dg[l][m][j] - dg[m][j][l]);
                            }
                            let fd = 0.5 * s;
                            assert!(
                                (c.g[i][j][l] - fd).abs() < 1e-6,
                                "({k},{tau}) Gamma^{i}_{{{j}{l}}}: exact {} vs fd {}",
                                c.g[i][j][l],
                                fd
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn xi_is_unit_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = SpaceParams::new(-1.0, 0.7);
        for _ in 0..30 {
            let p = sample_point(&mut rng);
            let g = metric_at(&params, p).unwrap();
            let xi = xi_at(&params, p);
            assert!((g.inner(xi, xi) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cross_reduces_to_chart_cross_in_euclidean_space() {
        let params = SpaceParams::new(0.0, 0.0);
        let p = Vec3::new(0.4, -1.0, 2.0);
        let u = Vec3::new(1.0, 2.0, 3.0);
        let v = Vec3::new(-0.5, 0.0, 1.0);
        let c = cross(&params, p, u, v).unwrap();
        let e = u.cross_chart(v);
        assert!((c.x - e.x).abs() < 1e-15);
        assert!((c.y - e.y).abs() < 1e-15);
        assert!((c.z - e.z).abs() < 1e-15);
    }

    #[test]
    fn cross_is_metric_orthogonal_and_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for (k, tau) in PARAM_GRID {
            let params = SpaceParams::new(k, tau);
            for _ in 0..20 {
                let p = sample_point(&mut rng);
                let g = metric_at(&params, p).unwrap();
                let u = sample_vector(&mut rng);
                let v = sample_vector(&mut rng);
                let c = cross(&params, p, u, v).unwrap();
                assert!(g.inner(c, u).abs() < 1e-12);
                assert!(g.inner(c, v).abs() < 1e-12);
                // |u x v|^2 = |u|^2 |v|^2 - <u,v>^2
                let gram =
                    g.inner(u, u) * g.inner(v, v) - g.inner(u, v) * g.inner(u, v);
                assert!((g.inner(c, c) - gram).abs() < 1e-10 * (1.0 + gram.abs()));
            }
        }
    }

    #[test]
    fn nabla_xi_equals_tau_cross_with_xi() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (k, tau) in PARAM_GRID {
            let params = SpaceParams::new(k, tau);
            for _ in 0..40 {
                let p = sample_point(&mut rng);
                let x = sample_vector(&mut rng);
                let lhs = nabla_xi(&params, p, x).unwrap();
                let rhs = cross(&params, p, x, xi_at(&params, p)).unwrap().scale(tau);
                let d = lhs - rhs;
                assert!(
                    d.norm_chart() < TOL_EXACT,
                    "({k},{tau}): residual {}",
                    d.norm_chart()
                );
            }
        }
    }

    #[test]
    fn nabla_xi_is_killing_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for (k, tau) in PARAM_GRID {
            let params = SpaceParams::new(k, tau);
            for _ in 0..40 {
                let p = sample_point(&mut rng);
                let g = metric_at(&params, p).unwrap();
                let x = sample_vector(&mut rng);
                let y = sample_vector(&mut rng);
                let r = g.inner(nabla_xi(&params, p, x).unwrap(), y)
                    + g.inner(nabla_xi(&params, p, y).unwrap(), x);
                assert!(r.abs() < TOL_EXACT, "({k},{tau}): Killing residual {r}");
            }
        }
    }

    #[test]
    fn geodesics_are_straight_lines_in_euclidean_space() {
        let params = SpaceParams::new(0.0, 0.0);
        let p0 = Vec3::new(0.1, 0.2, 0.3);
        let v0 = Vec3::new(0.6, -0.8, 0.0);
        let path = geodesic(&params, p0, v0, 1.0, 1e-3).unwrap();
        let end = path.end();
        let want = p0 + v0;
        assert!((end.pos - want).norm_chart() < 1e-12);
        assert!(!path.truncated);
    }

    #[test]
    fn fibers_are_geodesics() {
        for (k, tau) in PARAM_GRID {
            let params = SpaceParams::new(k, tau);
            let p0 = Vec3::new(0.3, -0.2, 0.0);
            let path = geodesic(&params, p0, xi_at(&params, p0), 1.0, 1e-2).unwrap();
            for st in &path.states {
                assert!((st.pos.x - p0.x).abs() < 1e-12);
                assert!((st.pos.y - p0.y).abs() < 1e-12);
                assert!((st.vel.z - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geodesic_speed_drift_stays_below_threshold() {
        let params = SpaceParams::new(-1.0, 0.5);
        let p0 = Vec3::new(0.4, 0.1, 0.0);
        let g0 = metric_at(&params, p0).unwrap();
        let mut v0 = Vec3::new(0.7, -0.4, 0.5);
        v0 = v0.scale(1.0 / g0.inner(v0, v0).sqrt());
        let path = geodesic(&params, p0, v0, 1.0, RK_STEP).unwrap();
        let mut drift: f64 = 0.0;
        for st in &path.states {
            let g = metric_at(&params, st.pos).unwrap();
            drift = drift.max((g.inner(st.vel, st.vel) - 1.0).abs());
        }
        assert!(drift < TOL_EXACT, "speed drift {drift}");
    }

    #[test]
    fn geodesic_integrator_order_exceeds_three_and_a_half() {
        let params = SpaceParams::new(1.0, 0.5);
        let p0 = Vec3::new(0.2, -0.3, 0.1);
        let v0 = Vec3::new(0.5, 0.6, -0.3);
        let ends: Vec<[f64; 3]> = [4e-2, 2e-2, 1e-2]
            .iter()
            .map(|&h| {
                let e = geodesic(&params, p0, v0, 1.0, h).unwrap().end();
                [e.pos.x, e.pos.y, e.pos.z]
            })
            .collect();
        let p = crate::fd::observed_order_vec(&ends[0], &ends[1], &ends[2]);
        assert!(p > MIN_CONVERGENCE_ORDER, "observed order {p}");
    }

    #[test]
    fn geodesic_truncates_at_chart_boundary() {
        let params = SpaceParams::new(-1.0, 0.0);
        // Head straight for the rim of the k = -1 chart disk (radius 2).
        let p0 = Vec3::new(1.5, 0.0, 0.0);
        let path = geodesic(&params, p0, Vec3::new(1.0, 0.0, 0.0), 10.0, 1e-2).unwrap();
        assert!(path.truncated);
        let end = path.end();
        assert!(end.pos.x < 2.0);
    }

    #[test]
    fn covariant_derivative_matches_parallel_transport_oracle() {
        // Independent oracle: transport the field value at s back to 0 with
        // a separately integrated parallel-transport ODE and difference.
        let params = SpaceParams::new(1.0, 0.5);
        let p0 = Vec3::new(0.2, 0.1, 0.0);
        let v0 = Vec3::new(0.8, -0.2, 0.4);
        let path = geodesic(&params, p0, v0, 0.5, 1e-4).unwrap();

        // Field along the geodesic with known chart derivative.
        let field = |s: f64, pos: V3| -> V3 {
            Vec3::new((s + pos.x).sin(), pos.y * pos.y, 1.0 + s * pos.z)
        };
        let field_dot = |s: f64, st: &GeodesicState| -> V3 {
            Vec3::new(
                (s + st.pos.x).cos() * (1.0 + st.vel.x),
                2.0 * st.pos.y * st.vel.y,
                st.pos.z + s * st.vel.z,
            )
        };

        // Direct covariant derivative at s = 0.
        let d0 = covariant_derivative(
            &params,
            CurveJet { pos: p0, vel: v0 },
            FieldJet { val: field(0.0, p0), dot: field_dot(0.0, &path.states[0]) },
        )
        .unwrap();

        // Oracle: (P_{s->0} V(s) - V(0)) / s with transport integrated by
        // marching V' = -Gamma(x')(V) backwards along stored states.
        let transport_back = |idx: usize| -> V3 {
            let mut v = field(path.states[idx].s, path.states[idx].pos);
            let h = path.step;
            for j in (0..idx).rev() {
                // RK4 on V' = -Gamma(x(s))(x'(s), V) marching s downward.
                let a = &path.states[j + 1];
                let b = &path.states[j];
                let mid_pos = (a.pos + b.pos).scale(0.5);
                let mid_vel = (a.vel + b.vel).scale(0.5);
                let f = |pos: V3, vel: V3, v: V3| -> V3 {
                    let c = christoffel_at(&params, pos).unwrap();
                    c.contract(vel, v) // sign flips because we march backwards
                };
                let k1 = f(a.pos, a.vel, v);
                let k2 = f(mid_pos, mid_vel, v + k1.scale(h / 2.0));
                let k3 = f(mid_pos, mid_vel, v + k2.scale(h / 2.0));
                let k4 = f(b.pos, b.vel, v + k3.scale(h));
                v = v + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
            }
            v
        };

        // h-refinement: difference quotient at two scales converges to d0.
        let quotient = |idx: usize| -> V3 {
            let s = path.states[idx].s;
            (transport_back(idx) - field(0.0, p0)).scale(1.0 / s)
        };
        let q_coarse = quotient(400); // s = 0.04
        let q_fine = quotient(100); // s = 0.01
        let err_coarse = (q_coarse - d0).norm_chart();
        let err_fine = (q_fine - d0).norm_chart();
        assert!(err_fine < 1e-2, "fine quotient error {err_fine}");
        assert!(
            err_fine < err_coarse,
            "no convergence: coarse {err_coarse}, fine {err_fine}"
        );
    }

    #[test]
    fn horizontal_lift_is_isometric_and_projects_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for (k, tau) in PARAM_GRID {
            let params = SpaceParams::new(k, tau);
            for _ in 0..20 {
                let p = sample_point(&mut rng);
                let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let lift = horizontal_lift(&params, p, w).unwrap();
                assert_eq!(base_push(lift), w);
                // Horizontality: orthogonal to xi.
                let g = metric_at(&params, p).unwrap();
                assert!(g.inner(lift, xi_at(&params, p)).abs() < 1e-13);
                // Isometry onto the horizontal space.
                let gb = base_metric(k, base_projection(p));
                let base_sq = gb[0][0] * w[0] * w[0] + gb[1][1] * w[1] * w[1];
                assert!((g.inner(lift, lift) - base_sq).abs() < TOL_ISOMETRY);
            }
        }
    }

    #[test]
    fn base_geodesic_through_origin_is_radial() {
        let params = SpaceParams::new(-1.0, 0.5);
        let pts = base_geodesic(&params, [0.0, 0.0], [1.0, 0.0], 0.5, 1e-3).unwrap();
        for q in pts {
            assert!(q[1].abs() < 1e-12, "radial geodesic left the x-axis: {q:?}");
        }
    }
}

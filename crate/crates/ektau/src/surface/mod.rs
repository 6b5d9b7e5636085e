//! Immersed surfaces in E(k, tau): parametrizations, fundamental forms,
//! the frame adapted to the vertical direction, and the angle functions.
//!
//! The whole pointwise pipeline is one generic function of the parameter
//! pair, so evaluating it with dual numbers differentiates every derived
//! field exactly (see [`conn`]). Orientation and branch decisions are made
//! on value parts only; they are locally constant, so the derivative path
//! sees smooth formulas.

pub mod conn;
pub mod locate;

use crate::error::{GeomError, Result};
use crate::jet::Jet2;
use crate::linalg::{eig2_desc, solve_spd2, Mat3, Vec3, V3};
use crate::scalar::{AngleScalar, Scalar};
use crate::space::isometry::AffineIsometry;
use crate::space::{christoffel_components, cross_components, metric_components, SpaceParams};
use crate::tolerances::{EPS_GRAD_THETA, EPS_HORIZONTAL, EPS_IMMERSION};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Rectangular parameter domain, optionally periodic in v.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Domain {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub v_periodic: bool,
}

impl Domain {
    pub fn span_u(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn span_v(&self) -> f64 {
        self.v_max - self.v_min
    }

    /// Wrap the v-coordinate into the fundamental interval when periodic.
    pub fn wrap(&self, uv: [f64; 2]) -> [f64; 2] {
        if !self.v_periodic {
            return uv;
        }
        let span = self.span_v();
        let mut v = (uv[1] - self.v_min) % span;
        if v < 0.0 {
            v += span;
        }
        [uv[0], self.v_min + v]
    }

    pub fn contains(&self, uv: [f64; 2]) -> bool {
        let [u, v] = uv;
        let u_ok = u >= self.u_min - 1e-12 && u <= self.u_max + 1e-12;
        let v_ok = self.v_periodic || (v >= self.v_min - 1e-12 && v <= self.v_max + 1e-12);
        u_ok && v_ok
    }

    /// Difference uv_a - uv_b respecting v-periodicity (shortest branch).
    pub fn delta(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let du = a[0] - b[0];
        let mut dv = a[1] - b[1];
        if self.v_periodic {
            let span = self.span_v();
            dv = (dv + span / 2.0).rem_euclid(span) - span / 2.0;
        }
        [du, dv]
    }

    pub fn distance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let [du, dv] = self.delta(a, b);
        du.hypot(dv)
    }

    /// Interior sample grid: cell centers in u; cell centers in v unless
    /// periodic, in which case v-samples start at v_min.
    pub fn grid(&self, nu: usize, nv: usize) -> Vec<[f64; 2]> {
        let mut pts = Vec::with_capacity(nu * nv);
        for i in 0..nu {
            let u = self.u_min + (i as f64 + 0.5) / nu as f64 * self.span_u();
            for j in 0..nv {
                let v = if self.v_periodic {
                    self.v_min + j as f64 / nv as f64 * self.span_v()
                } else {
                    self.v_min + (j as f64 + 0.5) / nv as f64 * self.span_v()
                };
                pts.push([u, v]);
            }
        }
        pts
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        [
            rng.gen_range(self.u_min..self.u_max),
            rng.gen_range(self.v_min..self.v_max),
        ]
    }
}

/// How a radial perturbation is modulated over the parameter domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PerturbMode {
    /// Constant factor: scales the surface about the center.
    Uniform,
    /// Smooth non-constant modulation sin(u) sin(v); on a coordinate
    /// sphere this is the height function, so it is smooth on the surface.
    Bump,
}

/// Closed-form surface shapes, composable with chart-affine maps and
/// radial perturbations.
#[derive(Clone, Debug)]
pub enum Geometry {
    /// Chart-coordinate sphere with poles on the x-axis:
    /// center + r (cos u, sin u cos v, sin u sin v).
    Sphere { center: V3, r: f64 },
    /// Anisotropic variant of the sphere: semi-axes r, ar, br.
    Ellipsoid { center: V3, r: f64, a: f64, b: f64 },
    /// Preimage of the base line through the chart origin at angle beta;
    /// the line is a base geodesic, so this is a vertical plane.
    VerticalPlane { beta: f64 },
    /// Fiber-coordinate graph z = c0 + c1 u + c2 v + c3 u^2 + c4 uv + c5 v^2
    /// over the base chart (u, v).
    Graph { c: [f64; 6] },
    /// Image of another shape under a chart-affine ambient isometry.
    Mapped { base: Box<Geometry>, map: AffineIsometry },
    /// Radial perturbation about a center: p -> center + (1 + A s(u,v))(p - center).
    RadialPerturbed {
        base: Box<Geometry>,
        center: V3,
        amplitude: f64,
        mode: PerturbMode,
    },
}

fn affine_apply<S: Scalar>(map: &AffineIsometry, p: Vec3<S>) -> Vec3<S> {
    let pa = p.to_array();
    let mut out = [S::zero(); 3];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = S::from_f64(map.offset.to_array()[i]);
        for j in 0..3 {
            s = s + pa[j].scale(map.linear.m[i][j]);
        }
        *o = s;
    }
    Vec3::from_array(out)
}

impl Geometry {
    pub fn position<S: Scalar>(&self, u: S, v: S) -> Vec3<S> {
        match self {
            Geometry::Sphere { center, r } => {
                let (su, cu, sv, cv) = (u.sin(), u.cos(), v.sin(), v.cos());
                Vec3::new(
                    S::from_f64(center.x) + cu.scale(*r),
                    S::from_f64(center.y) + (su * cv).scale(*r),
                    S::from_f64(center.z) + (su * sv).scale(*r),
                )
            }
            Geometry::Ellipsoid { center, r, a, b } => {
                let (su, cu, sv, cv) = (u.sin(), u.cos(), v.sin(), v.cos());
                Vec3::new(
                    S::from_f64(center.x) + cu.scale(*r),
                    S::from_f64(center.y) + (su * cv).scale(r * a),
                    S::from_f64(center.z) + (su * sv).scale(r * b),
                )
            }
            Geometry::VerticalPlane { beta } => {
                Vec3::new(u.scale(beta.cos()), u.scale(beta.sin()), v)
            }
            Geometry::Graph { c } => {
                let h = S::from_f64(c[0])
                    + u.scale(c[1])
                    + v.scale(c[2])
                    + (u * u).scale(c[3])
                    + (u * v).scale(c[4])
                    + (v * v).scale(c[5]);
                Vec3::new(u, v, h)
            }
            Geometry::Mapped { base, map } => affine_apply(map, base.position(u, v)),
            Geometry::RadialPerturbed { base, center, amplitude, mode } => {
                let p = base.position(u, v);
                let c = Vec3::new(
                    S::from_f64(center.x),
                    S::from_f64(center.y),
                    S::from_f64(center.z),
                );
                let bump = match mode {
                    PerturbMode::Uniform => S::one(),
                    PerturbMode::Bump => u.sin() * v.sin(),
                };
                let factor = S::one() + bump.scale(*amplitude);
                c + (p - c).scale(factor)
            }
        }
    }
}

/// An immersed surface: shape, parameter domain, ambient parameters.
#[derive(Clone, Debug)]
pub struct ParametrizedSurface {
    pub space: SpaceParams,
    pub domain: Domain,
    pub geometry: Geometry,
}

/// Exact 2-jet of the parametrization at a point.
#[derive(Clone, Copy, Debug)]
pub struct SurfaceJets<S> {
    pub pos: Vec3<S>,
    pub fu: Vec3<S>,
    pub fv: Vec3<S>,
    pub fuu: Vec3<S>,
    pub fuv: Vec3<S>,
    pub fvv: Vec3<S>,
}

impl ParametrizedSurface {
    pub fn jets_generic<S: Scalar>(&self, u: S, v: S) -> SurfaceJets<S> {
        let p = self
            .geometry
            .position::<Jet2<S>>(Jet2::var_u(u), Jet2::var_v(v));
        let take = |f: &dyn Fn(Jet2<S>) -> S| Vec3::new(f(p.x), f(p.y), f(p.z));
        SurfaceJets {
            pos: take(&|j| j.v),
            fu: take(&|j| j.du),
            fv: take(&|j| j.dv),
            fuu: take(&|j| j.duu),
            fuv: take(&|j| j.duv),
            fvv: take(&|j| j.dvv),
        }
    }

    pub fn jets(&self, uv: [f64; 2]) -> SurfaceJets<f64> {
        self.jets_generic(uv[0], uv[1])
    }

    pub fn position_at(&self, uv: [f64; 2]) -> V3 {
        self.geometry.position(uv[0], uv[1])
    }

    /// Verify the immersion property on a sample grid.
    pub fn immersion_check(&self, nu: usize, nv: usize) -> Result<()> {
        for uv in self.domain.grid(nu, nv) {
            pipeline::<f64>(self, uv[0], uv[1], 1.0, FrameBranch::Principal)?;
        }
        Ok(())
    }
}

/// Branch of the angle function theta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FrameBranch {
    /// theta in [-pi/2, pi/2] (cos theta >= 0).
    #[default]
    Principal,
    /// theta in [pi/2, 3pi/2] (cos theta <= 0, epsilon_1 negated).
    Shifted,
}

/// Every pointwise field, generic over the scalar type.
#[derive(Clone, Copy, Debug)]
pub struct PointFields<S: Scalar> {
    pub pos: Vec3<S>,
    pub fu: Vec3<S>,
    pub fv: Vec3<S>,
    pub gmat: Mat3<S>,
    /// First fundamental form coefficients (E, F, G).
    pub first: [S; 3],
    /// Second fundamental form coefficients (l, m, n) in the (u,v) basis.
    pub second: [S; 3],
    pub normal: Vec3<S>,
    pub k_ext: S,
    pub mean: S,
    /// g = <N, xi> = sin(theta).
    pub xi_normal: S,
    pub frame: Option<FrameFields<S>>,
}

#[derive(Clone, Copy, Debug)]
pub struct FrameFields<S: Scalar> {
    /// cos(theta), signed by the branch; |cos theta| = |tangential part of xi|.
    pub cos_theta: S,
    pub theta: S,
    pub e1: Vec3<S>,
    pub e2: Vec3<S>,
    /// Algebraic (d theta(e1), d theta(e2)) recovered from the second
    /// fundamental form.
    pub dtheta: [S; 2],
    pub grad_theta: Vec3<S>,
    pub grad_norm: S,
    pub char_dir: Option<CharFields<S>>,
}

#[derive(Clone, Copy, Debug)]
pub struct CharFields<S: Scalar> {
    /// Unit field annihilating d theta.
    pub v: Vec3<S>,
    /// Jv = grad(theta)/|grad theta|.
    pub jv: Vec3<S>,
    /// Angle from e1 to v.
    pub phi: S,
}

/// Solve the 2x2 system I x = rhs for tangent-vector resolution, generic.
fn solve_first<S: Scalar>(first: &[S; 3], rhs: [S; 2]) -> [S; 2] {
    let [e, f, g] = *first;
    let det = e * g - f * f;
    [(g * rhs[0] - f * rhs[1]) / det, (e * rhs[1] - f * rhs[0]) / det]
}

/// Full pointwise pipeline. `flip` (+1/-1) fixes the normal orientation and
/// must be decided at the value level; `branch` selects the theta branch.
pub(crate) fn pipeline<S: AngleScalar>(
    surface: &ParametrizedSurface,
    u: S,
    v: S,
    flip: f64,
    branch: FrameBranch,
) -> Result<PointFields<S>> {
    let params = &surface.space;
    let jets = surface.jets_generic(u, v);
    let pos_val = jets.pos.map_value();
    params.check_admissible(pos_val)?;

    let gmat = metric_components(params, jets.pos);
    let e = gmat.inner(jets.fu, jets.fu);
    let f = gmat.inner(jets.fu, jets.fv);
    let g = gmat.inner(jets.fv, jets.fv);
    let area2 = e * g - f * f;
    let scale = e.value().abs() + g.value().abs();
    if area2.value() <= EPS_IMMERSION * scale * scale {
        return Err(GeomError::DegenerateTangentBasis {
            u: u.value(),
            v: v.value(),
            area: area2.value(),
        });
    }

    let n_raw = cross_components(&gmat, jets.fu, jets.fv);
    let n_len = gmat.inner(n_raw, n_raw).sqrt();
    let normal = n_raw.scale(S::from_f64(flip) / n_len);

    // Second fundamental form via the ambient connection:
    // II_ab = <f_ab + Gamma(f_a, f_b), N>.
    let chris = christoffel_components(params, jets.pos);
    let contract = |a: Vec3<S>, b: Vec3<S>| -> Vec3<S> {
        let (aa, ba) = (a.to_array(), b.to_array());
        let mut out = [S::zero(); 3];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = S::zero();
            for j in 0..3 {
                for k in 0..3 {
                    s = s + chris[i][j][k] * aa[j] * ba[k];
                }
            }
            *o = s;
        }
        Vec3::from_array(out)
    };
    let l = gmat.inner(jets.fuu + contract(jets.fu, jets.fu), normal);
    let m = gmat.inner(jets.fuv + contract(jets.fu, jets.fv), normal);
    let n2 = gmat.inner(jets.fvv + contract(jets.fv, jets.fv), normal);

    let k_ext = (l * n2 - m * m) / area2;
    let mean = (g * l - (f * m).scale(2.0) + e * n2) / area2.scale(2.0);

    let xi = Vec3::new(S::zero(), S::zero(), S::one());
    let xi_normal = gmat.inner(normal, xi);

    // Tangential part of xi and the adapted frame.
    let p_xi = xi - normal.scale(xi_normal);
    let cos_abs = gmat.inner(p_xi, p_xi).sqrt();
    let frame = if cos_abs.value() > EPS_HORIZONTAL {
        let branch_sign = match branch {
            FrameBranch::Principal => 1.0,
            FrameBranch::Shifted => -1.0,
        };
        let e1 = p_xi.scale(S::from_f64(branch_sign) / cos_abs);
        let e2 = cross_components(&gmat, normal, e1);
        let cos_theta = cos_abs.scale(branch_sign);
        let theta_principal = S::atan2(xi_normal, cos_abs);
        let theta = match branch {
            FrameBranch::Principal => theta_principal,
            FrameBranch::Shifted => S::from_f64(std::f64::consts::PI) - theta_principal,
        };

        // alpha on frame vectors, by resolving them in the (f_u, f_v) basis.
        let alpha = |x: Vec3<S>, y: Vec3<S>| -> S {
            let xc = solve_first(&[e, f, g], [gmat.inner(x, jets.fu), gmat.inner(x, jets.fv)]);
            let yc = solve_first(&[e, f, g], [gmat.inner(y, jets.fu), gmat.inner(y, jets.fv)]);
            l * xc[0] * yc[0] + m * (xc[0] * yc[1] + xc[1] * yc[0]) + n2 * xc[1] * yc[1]
        };
        let tau = surface.space.tau;
        let dtheta1 = -alpha(e1, e1);
        let dtheta2 = -alpha(e1, e2) - S::from_f64(tau);
        let grad_theta = e1.scale(dtheta1) + e2.scale(dtheta2);
        let grad_norm = (dtheta1 * dtheta1 + dtheta2 * dtheta2).sqrt();

        let char_dir = if grad_norm.value() > EPS_GRAD_THETA {
            let jv = grad_theta.scale(S::one() / grad_norm);
            let v_dir = -cross_components(&gmat, normal, jv);
            let phi = S::atan2(gmat.inner(v_dir, e2), gmat.inner(v_dir, e1));
            Some(CharFields { v: v_dir, jv, phi })
        } else {
            None
        };

        Some(FrameFields {
            cos_theta,
            theta,
            e1,
            e2,
            dtheta: [dtheta1, dtheta2],
            grad_theta,
            grad_norm,
            char_dir,
        })
    } else {
        None
    };

    Ok(PointFields {
        pos: jets.pos,
        fu: jets.fu,
        fv: jets.fv,
        gmat,
        first: [e, f, g],
        second: [l, m, n2],
        normal,
        k_ext,
        mean,
        xi_normal,
        frame,
    })
}

/// Decide the normal orientation at a point: flip so that H > 0 whenever
/// K_e > 0 (both principal curvatures positive on convex patches).
pub(crate) fn orientation_flip(surface: &ParametrizedSurface, uv: [f64; 2]) -> Result<f64> {
    let raw = pipeline::<f64>(surface, uv[0], uv[1], 1.0, FrameBranch::Principal)?;
    Ok(if raw.k_ext > 0.0 && raw.mean < 0.0 { -1.0 } else { 1.0 })
}

/// All pointwise data of a surface at a parameter point.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePointData {
    pub uv: [f64; 2],
    pub pos: V3,
    pub fu: V3,
    pub fv: V3,
    pub gmat: Mat3<f64>,
    pub first: [f64; 3],
    pub second: [f64; 3],
    pub normal: V3,
    pub shape: [[f64; 2]; 2],
    /// Principal curvatures, lambda1 >= lambda2.
    pub lambda: [f64; 2],
    /// Unit principal directions for (lambda1, lambda2), oriented so that
    /// principal[1] = N x principal[0].
    pub principal: [V3; 2],
    pub mean: f64,
    pub k_ext: f64,
    /// Intrinsic curvature from the curvature relation
    /// K = K_e + tau^2 + (k - 4 tau^2) g^2.
    pub k_int: f64,
    /// g = <N, xi> = sin(theta).
    pub xi_normal: f64,
    pub frame: Option<FrameData>,
}

#[derive(Clone, Copy, Debug)]
pub struct FrameData {
    pub branch: FrameBranch,
    pub theta: f64,
    pub cos_theta: f64,
    pub e1: V3,
    pub e2: V3,
    pub dtheta: [f64; 2],
    pub grad_theta: V3,
    pub grad_norm: f64,
    pub char_dir: Option<CharData>,
}

#[derive(Clone, Copy, Debug)]
pub struct CharData {
    pub v: V3,
    pub jv: V3,
    pub phi: f64,
}

impl SurfacePointData {
    /// Resolve a tangent vector in the (f_u, f_v) basis.
    pub fn tangent_components(&self, x: V3) -> [f64; 2] {
        let [e, f, g] = self.first;
        solve_spd2(e, f, g, [self.gmat.inner(x, self.fu), self.gmat.inner(x, self.fv)])
    }

    /// Second fundamental form on tangent vectors.
    pub fn alpha(&self, x: V3, y: V3) -> f64 {
        let xc = self.tangent_components(x);
        let yc = self.tangent_components(y);
        let [l, m, n] = self.second;
        l * xc[0] * yc[0] + m * (xc[0] * yc[1] + xc[1] * yc[0]) + n * xc[1] * yc[1]
    }

    /// (alpha(e1,e1), alpha(e1,e2), alpha(e2,e2)) in the adapted frame.
    pub fn alpha_frame(&self) -> Option<[f64; 3]> {
        let fr = self.frame.as_ref()?;
        Some([
            self.alpha(fr.e1, fr.e1),
            self.alpha(fr.e1, fr.e2),
            self.alpha(fr.e2, fr.e2),
        ])
    }

    pub fn frame_or_err(&self) -> Result<&FrameData> {
        self.frame.as_ref().ok_or(GeomError::FrameUndefined {
            u: self.uv[0],
            v: self.uv[1],
            cos_theta: (1.0 - self.xi_normal * self.xi_normal).max(0.0).sqrt(),
        })
    }

    pub fn char_or_err(&self) -> Result<&CharData> {
        let fr = self.frame_or_err()?;
        fr.char_dir.as_ref().ok_or(GeomError::GradThetaVanishes {
            u: self.uv[0],
            v: self.uv[1],
            norm: fr.grad_norm,
        })
    }
}

/// Evaluate every pointwise field at a domain point.
pub fn point_data(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
) -> Result<SurfacePointData> {
    let uv = surface.domain.wrap(uv);
    if !surface.domain.contains(uv) {
        return Err(GeomError::OutsideDomain { u: uv[0], v: uv[1] });
    }
    point_data_unchecked(surface, uv, branch)
}

/// Same as [`point_data`] without the domain check; used by finite
/// difference probes that step over the domain edge.
pub(crate) fn point_data_unchecked(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
) -> Result<SurfacePointData> {
    let flip = orientation_flip(surface, uv)?;
    let fields = pipeline::<f64>(surface, uv[0], uv[1], flip, branch)?;

    let [e, f, g] = fields.first;
    let [l, m, n] = fields.second;
    let det = e * g - f * f;
    // Shape operator I^{-1} II.
    let shape = [
        [(g * l - f * m) / det, (g * m - f * n) / det],
        [(e * m - f * l) / det, (e * n - f * m) / det],
    ];
    let (lambda1, lambda2) = eig2_desc(shape);

    // Principal direction for lambda1 in parameter components.
    let umbilic = (lambda1 - lambda2).abs() < 1e-9 * (1.0 + lambda1.abs());
    let w1 = if umbilic {
        [1.0, 0.0]
    } else {
        let r1 = [shape[0][0] - lambda1, shape[0][1]];
        let r2 = [shape[1][0], shape[1][1] - lambda1];
        // Null vector of (shape - lambda1 I): orthogonal to the larger row.
        let (a, b) = if r1[0].hypot(r1[1]) >= r2[0].hypot(r2[1]) {
            (-r1[1], r1[0])
        } else {
            (-r2[1], r2[0])
        };
        [a, b]
    };
    let dir1_raw = fields.fu.scale(w1[0]) + fields.fv.scale(w1[1]);
    let dir1 = dir1_raw.scale(1.0 / fields.gmat.inner(dir1_raw, dir1_raw).sqrt());
    let dir2 = cross_components(&fields.gmat, fields.normal, dir1);

    let params = &surface.space;
    let nu = fields.xi_normal;
    let k_int = fields.k_ext
        + params.tau * params.tau
        + (params.k - 4.0 * params.tau * params.tau) * nu * nu;

    let frame = fields.frame.map(|fr| FrameData {
        branch,
        theta: fr.theta,
        cos_theta: fr.cos_theta,
        e1: fr.e1,
        e2: fr.e2,
        dtheta: fr.dtheta,
        grad_theta: fr.grad_theta,
        grad_norm: fr.grad_norm,
        char_dir: fr.char_dir.map(|c| CharData { v: c.v, jv: c.jv, phi: c.phi }),
    });

    Ok(SurfacePointData {
        uv,
        pos: fields.pos,
        fu: fields.fu,
        fv: fields.fv,
        gmat: fields.gmat,
        first: fields.first,
        second: fields.second,
        normal: fields.normal,
        shape,
        lambda: [lambda1, lambda2],
        principal: [dir1, dir2],
        mean: fields.mean,
        k_ext: fields.k_ext,
        k_int,
        xi_normal: nu,
        frame,
    })
}

/// First and second fundamental forms, normal, curvatures (no frame data).
pub fn fundamental_forms(surface: &ParametrizedSurface, uv: [f64; 2]) -> Result<SurfacePointData> {
    let mut data = point_data(surface, uv, FrameBranch::Principal)?;
    data.frame = None;
    Ok(data)
}

/// The adapted frame (e1, e2) and the angle theta.
pub fn special_frame(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
) -> Result<(V3, V3, f64)> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    Ok((fr.e1, fr.e2, fr.theta))
}

/// Gradient of theta (vector and magnitude), recovered algebraically from
/// the second fundamental form.
pub fn grad_theta(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
) -> Result<(V3, f64)> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    Ok((fr.grad_theta, fr.grad_norm))
}

/// The characteristic direction v (annihilating d theta) and the angle phi
/// from e1 to v.
pub fn v_and_phi(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
) -> Result<(V3, f64)> {
    let data = point_data(surface, uv, branch)?;
    let ch = data.char_or_err()?;
    Ok((ch.v, ch.phi))
}

/// Result of the curvature cross-check: intrinsic curvature from the first
/// fundamental form alone (finite differences) against the closed form.
#[derive(Clone, Copy, Debug)]
pub struct GaussCheck {
    pub k_intrinsic_fd: f64,
    pub k_closed: f64,
    pub residual: f64,
}

fn intrinsic_curvature_fd(surface: &ParametrizedSurface, uv: [f64; 2], h: f64) -> Result<f64> {
    // 3x3 stencil of first-form coefficients.
    let mut st = [[[0.0f64; 3]; 3]; 3]; // st[i][j] = (E,F,G) at offsets (i-1, j-1)
    for i in 0..3 {
        for j in 0..3 {
            let u = uv[0] + (i as f64 - 1.0) * h;
            let v = uv[1] + (j as f64 - 1.0) * h;
            let p = pipeline::<f64>(surface, u, v, 1.0, FrameBranch::Principal)?;
            st[i][j] = p.first;
        }
    }
    let at = |i: usize, j: usize, c: usize| st[i][j][c];
    let du = |c: usize| (at(2, 1, c) - at(0, 1, c)) / (2.0 * h);
    let dv = |c: usize| (at(1, 2, c) - at(1, 0, c)) / (2.0 * h);
    let duu = |c: usize| (at(2, 1, c) - 2.0 * at(1, 1, c) + at(0, 1, c)) / (h * h);
    let dvv = |c: usize| (at(1, 2, c) - 2.0 * at(1, 1, c) + at(1, 0, c)) / (h * h);
    let duv = |c: usize| (at(2, 2, c) - at(2, 0, c) - at(0, 2, c) + at(0, 0, c)) / (4.0 * h * h);

    let (e, f, g) = (at(1, 1, 0), at(1, 1, 1), at(1, 1, 2));
    let m1 = Mat3::from_rows([
        [
            -0.5 * dvv(0) + duv(1) - 0.5 * duu(2),
            0.5 * du(0),
            du(1) - 0.5 * dv(0),
        ],
        [dv(1) - 0.5 * du(2), e, f],
        [0.5 * dv(2), f, g],
    ]);
    let m2 = Mat3::from_rows([
        [0.0, 0.5 * dv(0), 0.5 * du(2)],
        [0.5 * dv(0), e, f],
        [0.5 * du(2), f, g],
    ]);
    let det_i = e * g - f * f;
    Ok((m1.det() - m2.det()) / (det_i * det_i))
}

/// Compare the finite-difference intrinsic curvature with the closed-form
/// curvature relation K = K_e + tau^2 + (k - 4 tau^2) g^2.
pub fn gauss_check(surface: &ParametrizedSurface, uv: [f64; 2]) -> Result<GaussCheck> {
    let data = point_data(surface, uv, FrameBranch::Principal)?;
    let h = 1e-3 * (1.0 + surface.domain.span_u().min(surface.domain.span_v()));
    // One Richardson step on the whole curvature value.
    let k_h = intrinsic_curvature_fd(surface, uv, h)?;
    let k_h2 = intrinsic_curvature_fd(surface, uv, h / 2.0)?;
    let k_fd = (4.0 * k_h2 - k_h) / 3.0;
    Ok(GaussCheck {
        k_intrinsic_fd: k_fd,
        k_closed: data.k_int,
        residual: (k_fd - data.k_int).abs(),
    })
}

//! Every structural identity of the geometry as a numerical residual.
//!
//! Each check compares two routes to the same quantity: one through the
//! implementation under test, one through an independent oracle (finite
//! differences, traced curves, or a closed form). Residual reports carry
//! the raw values and a relative residual against a magnitude scale so
//! that pass/fail thresholds are meaningful across surfaces of very
//! different curvature scales.

use crate::error::{GeomError, Result};
use crate::linalg::{Vec3, V3};
use crate::space::{base_geodesic, base_metric, base_projection, base_push, christoffel_at,
    cross_components, xi_at, SpaceParams};
use crate::surface::conn::{dir_rates, dphi_fd, dtheta_fd};
use crate::surface::locate::{g_gradient, g_scalar, trace_zero_set, HorizontalPoint, TraceConfig};
use crate::surface::{
    gauss_check, orientation_flip, pipeline, point_data, FrameBranch, ParametrizedSurface,
};
use crate::dual::Dual;
use crate::tolerances::{
    EPS_COS_THETA, EPS_SIN_THETA, EPS_SPACE_FORM, TOL_DOUBLE_FD, TOL_EXACT, TOL_JET_VS_FD,
    TRAJECTORY_COS_CAP,
};
use serde::{Deserialize, Serialize};

/// The identities the engine can verify pointwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquationId {
    /// d theta(X) = -alpha(e1, X) - tau <X, e2>.
    AlphaE1,
    /// alpha(X, e2) = cot(theta) w12(X) + tau <e1, X>.
    AlphaE2,
    /// alpha(e1, e1) = W sin(phi).
    AlphaFrame11,
    /// alpha(e1, e2) = -W cos(phi) - tau.
    AlphaFrame12,
    /// d phi(v) = wt12(v) - tan(theta) (K_e + tau^2) / W.
    OdeV,
    /// d phi(Jv) = wt12(Jv) - tan(theta) [2 tau / sin(phi)
    ///             + cot(phi) (W + (K_e + tau^2)/W)].
    OdeJv,
    /// 2 H W sin(phi) - 2 tau W cos(phi) - (W^2 + tau^2 + K_e) = 0.
    PhiQuadratic,
    /// K = K_e + tau^2 + (k - 4 tau^2) nu^2 against intrinsic curvature
    /// from the first fundamental form alone.
    GaussEquation,
    /// dg_p(xi) equals the normal curvature of the tangency curve at a
    /// point of the vertical locus.
    VerticalRate,
    /// Jacobian structure of xi x N at a point with vertical normal.
    HorizontalJacobian,
}

impl EquationId {
    pub const ALL: [EquationId; 10] = [
        EquationId::AlphaE1,
        EquationId::AlphaE2,
        EquationId::AlphaFrame11,
        EquationId::AlphaFrame12,
        EquationId::OdeV,
        EquationId::OdeJv,
        EquationId::PhiQuadratic,
        EquationId::GaussEquation,
        EquationId::VerticalRate,
        EquationId::HorizontalJacobian,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EquationId::AlphaE1 => "alpha-e1",
            EquationId::AlphaE2 => "alpha-e2",
            EquationId::AlphaFrame11 => "alpha-frame-11",
            EquationId::AlphaFrame12 => "alpha-frame-12",
            EquationId::OdeV => "ode-v",
            EquationId::OdeJv => "ode-jv",
            EquationId::PhiQuadratic => "phi-quadratic",
            EquationId::GaussEquation => "gauss",
            EquationId::VerticalRate => "vertical-rate",
            EquationId::HorizontalJacobian => "horizontal-jacobian",
        }
    }

    /// Pinned default relative tolerance: exact-route identities sit at
    /// roundoff, finite-difference routes at their stencil accuracy.
    pub fn default_rel_tolerance(&self) -> f64 {
        match self {
            EquationId::AlphaE1 => TOL_JET_VS_FD,
            EquationId::AlphaE2 => TOL_EXACT,
            EquationId::AlphaFrame11 | EquationId::AlphaFrame12 => TOL_EXACT,
            EquationId::OdeV | EquationId::OdeJv => 1e-4,
            EquationId::PhiQuadratic => TOL_EXACT,
            EquationId::GaussEquation => 1e-4,
            EquationId::VerticalRate => TOL_DOUBLE_FD,
            EquationId::HorizontalJacobian => 1e-4,
        }
    }
}

/// One residual evaluation. `rel_residual = abs_residual / max(scale, 1)`
/// where `scale` sums the magnitudes of the terms entering the identity.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: EquationId,
    pub uv: [f64; 2],
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub scale: f64,
    pub rel_residual: f64,
}

fn report(equation: EquationId, uv: [f64; 2], lhs: f64, rhs: f64, scale: f64) -> ResidualReport {
    let abs_residual = (lhs - rhs).abs();
    ResidualReport {
        equation,
        uv,
        lhs,
        rhs,
        abs_residual,
        scale,
        rel_residual: abs_residual / scale.max(1.0),
    }
}

fn skip(uv: [f64; 2], what: &str) -> GeomError {
    GeomError::ResidualPrecondition { u: uv[0], v: uv[1], what: what.into() }
}

/// d theta(X) = -alpha(e1, X) - tau <X, e2>, with the left side from
/// finite differences of theta and the right side from the second
/// fundamental form. `dir` is X in parameter components.
pub fn residual_eq1(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
    dir: [f64; 2],
) -> Result<ResidualReport> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    let x = data.fu.scale(dir[0]) + data.fv.scale(dir[1]);
    let lhs = dtheta_fd(surface, uv, branch, dir)?;
    let t1 = -data.alpha(fr.e1, x);
    let t2 = -surface.space.tau * data.gmat.inner(x, fr.e2);
    Ok(report(
        EquationId::AlphaE1,
        uv,
        lhs,
        t1 + t2,
        lhs.abs() + t1.abs() + t2.abs(),
    ))
}

/// alpha(X, e2) = cot(theta) w12(X) + sigma tau <e1, X> for a sign choice
/// sigma; the derived identity holds with sigma = +1.
pub fn residual_alpha_e2_signed(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
    dir: [f64; 2],
    sigma: f64,
) -> Result<ResidualReport> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    if fr.theta.sin().abs() < EPS_SIN_THETA {
        return Err(skip(uv, "cot(theta) undefined near the vertical locus"));
    }
    let x = data.fu.scale(dir[0]) + data.fv.scale(dir[1]);
    let rates = dir_rates(surface, uv, branch, dir)?;
    let lhs = data.alpha(x, fr.e2);
    let cot = fr.theta.cos() / fr.theta.sin();
    let t1 = cot * rates.w12;
    let t2 = sigma * surface.space.tau * data.gmat.inner(fr.e1, x);
    Ok(report(
        EquationId::AlphaE2,
        uv,
        lhs,
        t1 + t2,
        lhs.abs() + t1.abs() + t2.abs(),
    ))
}

pub fn residual_alpha_e2(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
    dir: [f64; 2],
) -> Result<ResidualReport> {
    residual_alpha_e2_signed(surface, uv, branch, dir, 1.0)
}

/// The two frame components of alpha expressed through (W, phi):
/// alpha(e1,e1) = W sin(phi) and alpha(e1,e2) = -W cos(phi) - tau.
pub fn residual_alpha_frame(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
) -> Result<[ResidualReport; 2]> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    let ch = data.char_or_err()?;
    let [a11, a12, _] = data.alpha_frame().expect("frame present");
    let w = fr.grad_norm;
    let tau = surface.space.tau;
    let r11 = report(
        EquationId::AlphaFrame11,
        uv,
        a11,
        w * ch.phi.sin(),
        a11.abs() + w,
    );
    let rhs12 = -w * ch.phi.cos() - tau;
    let r12 = report(
        EquationId::AlphaFrame12,
        uv,
        a12,
        rhs12,
        a12.abs() + w + tau.abs(),
    );
    Ok([r11, r12])
}

/// Which characteristic curve an evolution statement refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CharCurve {
    V,
    Jv,
}

/// Geometry entering the phi evolution equations at one point: everything
/// except phi itself, which may be supplied externally during propagation.
#[derive(Clone, Copy, Debug)]
pub struct OdeCoeffs {
    /// Connection form of the characteristic frame along the curve
    /// direction: <nabla_X v, Jv> for X = v or Jv.
    pub wt12: f64,
    pub tan_theta: f64,
    pub k_ext: f64,
    /// W = |grad theta|.
    pub w: f64,
    pub tau: f64,
    /// The point's own phi (used when no external value is supplied).
    pub phi: f64,
}

pub fn ode_coeffs(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
    curve: CharCurve,
) -> Result<OdeCoeffs> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    let ch = data.char_or_err()?;
    if fr.cos_theta.abs() < EPS_COS_THETA {
        return Err(skip(uv, "tan(theta) undefined near a horizontal point"));
    }
    let along = match curve {
        CharCurve::V => ch.v,
        CharCurve::Jv => ch.jv,
    };
    let rates = dir_rates(surface, uv, branch, data.tangent_components(along))?;
    Ok(OdeCoeffs {
        wt12: rates.wt12.expect("characteristic direction defined"),
        tan_theta: fr.theta.sin() / fr.cos_theta,
        k_ext: data.k_ext,
        w: fr.grad_norm,
        tau: surface.space.tau,
        phi: ch.phi,
    })
}

/// The non-connection part of the phi evolution along the canonical curve
/// orientation: the full right-hand side minus wt12. Odd under reversal of
/// the curve direction, which is why it is kept separate: a propagation
/// that traverses the curve backwards negates this part while wt12 is
/// simply measured along the traveled direction.
pub fn ode_drive(c: &OdeCoeffs, curve: CharCurve, sigma: f64, phi: f64) -> f64 {
    let kq = c.k_ext + c.tau * c.tau;
    match (curve, sigma > 0.0) {
        (CharCurve::V, true) => -c.tan_theta * kq / c.w,
        (CharCurve::V, false) => -c.tan_theta * (kq / c.w + 2.0 * c.tau * phi.cos()),
        (CharCurve::Jv, true) => {
            let cot = phi.cos() / phi.sin();
            -c.tan_theta * (2.0 * c.tau / phi.sin() + cot * (c.w + kq / c.w))
        }
        (CharCurve::Jv, false) => {
            let cot = phi.cos() / phi.sin();
            -c.tan_theta * cot * (c.w + kq / c.w + 2.0 * c.tau * phi.cos())
        }
    }
}

/// Right-hand side of the phi evolution along the chosen curve, for a sign
/// choice sigma in the cross-term of the torsion (the derived sign is +1).
/// `phi_ext` supplies phi when propagating an external copy of the angle.
pub fn ode_rhs_from(c: &OdeCoeffs, curve: CharCurve, sigma: f64, phi_ext: Option<f64>) -> f64 {
    c.wt12 + ode_drive(c, curve, sigma, phi_ext.unwrap_or(c.phi))
}

/// Pointwise residual of the phi evolution equation: d phi along the curve
/// by finite differences against the closed-form right-hand side.
pub fn residual_ode(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
    curve: CharCurve,
    sigma: f64,
) -> Result<ResidualReport> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    let ch = data.char_or_err()?;
    if fr.cos_theta.abs() < TRAJECTORY_COS_CAP {
        return Err(skip(uv, "too close to a horizontal point for the evolution check"));
    }
    if matches!(curve, CharCurve::Jv) && ch.phi.sin().abs() < 1e-3 {
        return Err(skip(uv, "cot(phi) undefined"));
    }
    let coeffs = ode_coeffs(surface, uv, branch, curve)?;
    let rhs = ode_rhs_from(&coeffs, curve, sigma, None);
    let along = match curve {
        CharCurve::V => ch.v,
        CharCurve::Jv => ch.jv,
    };
    let lhs = dphi_fd(surface, uv, branch, data.tangent_components(along))?;
    let id = match curve {
        CharCurve::V => EquationId::OdeV,
        CharCurve::Jv => EquationId::OdeJv,
    };
    let scale = lhs.abs() + coeffs.wt12.abs() + (rhs - coeffs.wt12).abs();
    Ok(report(id, uv, lhs, rhs, scale))
}

/// The quadratic relation satisfied by phi at every point, its residual at
/// the point's own phi, and all roots in (-pi, pi].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadraticCheck {
    pub uv: [f64; 2],
    /// (A, B, C) with A sin(phi) + B cos(phi) + C = 0.
    pub coeffs: [f64; 3],
    pub phi: f64,
    pub residual: f64,
    pub roots: Vec<f64>,
    /// Index into `roots` of the root matching the point's phi.
    pub matched_root: Option<usize>,
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

pub fn phi_quadratic(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
) -> Result<QuadraticCheck> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    let ch = data.char_or_err()?;
    let tau = surface.space.tau;
    let w = fr.grad_norm;
    let a = 2.0 * data.mean * w;
    let b = -2.0 * tau * w;
    let c = -(w * w + tau * tau + data.k_ext);
    let residual = a * ch.phi.sin() + b * ch.phi.cos() + c;

    // A sin(phi) + B cos(phi) = R sin(phi + gamma) with R = |(A,B)| and
    // gamma = atan2(B, A); solve R sin(phi + gamma) = -C.
    let r = a.hypot(b);
    let mut roots = Vec::new();
    // Tolerate roundoff at the tangency boundary |C| = R (double root).
    let s = if r > 0.0 { -c / r } else { f64::NAN };
    if s.is_finite() && s.abs() <= 1.0 + 1e-9 {
        let gamma = b.atan2(a);
        let base = s.clamp(-1.0, 1.0).asin();
        let r1 = wrap_angle(base - gamma);
        let r2 = wrap_angle(std::f64::consts::PI - base - gamma);
        roots.push(r1);
        if (wrap_angle(r2 - r1)).abs() > 1e-12 {
            roots.push(r2);
        }
    }
    // Near a double root the angle is recovered only to the square root of
    // the residual, so the match tolerance is wider than the residual one.
    let matched_root = roots
        .iter()
        .enumerate()
        .filter(|(_, r)| wrap_angle(**r - ch.phi).abs() < 1e-4)
        .map(|(i, _)| i)
        .next();
    Ok(QuadraticCheck {
        uv,
        coeffs: [a, b, c],
        phi: ch.phi,
        residual,
        roots,
        matched_root,
    })
}

/// Residual form of the quadratic relation for the suite.
pub fn residual_phi_quadratic(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
) -> Result<ResidualReport> {
    let q = phi_quadratic(surface, uv, branch)?;
    let scale = q.coeffs.iter().map(|c| c.abs()).sum::<f64>();
    Ok(report(EquationId::PhiQuadratic, uv, q.residual, 0.0, scale))
}

/// Curvature relation as a residual: intrinsic curvature from the first
/// fundamental form (finite differences) against the closed form.
pub fn residual_gauss(surface: &ParametrizedSurface, uv: [f64; 2]) -> Result<ResidualReport> {
    let gc = gauss_check(surface, uv)?;
    Ok(report(
        EquationId::GaussEquation,
        uv,
        gc.k_intrinsic_fd,
        gc.k_closed,
        gc.k_intrinsic_fd.abs() + gc.k_closed.abs(),
    ))
}

/// Invert the curvature relation for nu = |sin theta|:
/// nu^2 = (K - K_e - tau^2) / (k - 4 tau^2).
pub fn solve_theta(params: &SpaceParams, k_int: f64, k_ext: f64) -> Result<f64> {
    let denom = params.k - 4.0 * params.tau * params.tau;
    if denom.abs() < EPS_SPACE_FORM {
        return Err(GeomError::SpaceForm { k: params.k, tau: params.tau });
    }
    let nu_sq = (k_int - k_ext - params.tau * params.tau) / denom;
    if !(-1e-12..=1.0 + 1e-12).contains(&nu_sq) {
        return Err(GeomError::InconsistentCurvature { nu_sq });
    }
    Ok(nu_sq.clamp(0.0, 1.0).sqrt())
}

/// Result of the tangency-rate check at a point of the vertical locus:
/// the rate dg(xi) against the normal curvature of the curve cut out of
/// the surface by the vertical cylinder over the base geodesic tangent to
/// the projected normal.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VerticalPointCheck {
    pub uv: [f64; 2],
    /// Exact derivative of g along the (tangent) vertical direction.
    pub dg_xi: f64,
    /// <T'' + Gamma(T,T), -N> / |T|^2 from the traced curve.
    pub curve_normal_curvature: f64,
    pub residual: f64,
    /// alpha(xi, xi): the normal-section convexity at the point.
    pub alpha_xi_xi: f64,
    /// |g| after pulling the seed onto the locus.
    pub g_residual: f64,
    pub curve_nodes: usize,
}

/// Run the tangency-rate check at (a point near) the vertical locus.
/// The seed is pulled onto {g = 0} first.
pub fn vertical_point_check(
    surface: &ParametrizedSurface,
    seed: [f64; 2],
    branch: FrameBranch,
) -> Result<VerticalPointCheck> {
    let flip = orientation_flip(surface, seed)?;
    let g_eval = g_scalar(surface, flip);
    let g_grad = g_gradient(surface, flip);

    // Pull the seed onto the locus with the same corrector the tracer uses.
    let mut uv = seed;
    for _ in 0..20 {
        let f = g_eval(uv)?;
        if f.abs() < 1e-12 {
            break;
        }
        let gr = g_grad(uv)?;
        let n2 = gr[0] * gr[0] + gr[1] * gr[1];
        if n2 < 1e-20 {
            return Err(skip(uv, "gradient of g vanishes"));
        }
        uv = [uv[0] - f * gr[0] / n2, uv[1] - f * gr[1] / n2];
    }
    let g_residual = g_eval(uv)?.abs();
    if g_residual > 1e-9 {
        return Err(skip(uv, "seed did not converge to the vertical locus"));
    }

    let data = point_data(surface, uv, branch)?;
    let params = &surface.space;
    let xi = xi_at(params, data.pos);
    // xi is tangent on the locus; dg(xi) through the exact jet route.
    let xi_comp = data.tangent_components(xi);
    let dg_xi = dir_rates(surface, uv, branch, xi_comp)?.dg;
    let alpha_xi_xi = data.alpha(xi, xi);

    // Base geodesic through pi(p) tangent to dpi(N); N is horizontal here,
    // so the pushforward is already a unit base vector.
    let q0 = base_projection(data.pos);
    let w0 = base_push(data.normal);
    let bm = base_metric(params.k, q0);
    let n = (bm[0][0] * w0[0] * w0[0]
        + 2.0 * bm[0][1] * w0[0] * w0[1]
        + bm[1][1] * w0[1] * w0[1])
        .sqrt();
    let w0 = [w0[0] / n, w0[1] / n];
    let poly = base_geodesic(params, q0, w0, 0.3, 2e-4)?;

    // Signed chart distance to the geodesic polyline; its zero set is the
    // geodesic, so {h(pi(f)) = 0} is the cylinder trace on the surface.
    let h_field = move |q: [f64; 2]| -> f64 {
        let mut best_d2 = f64::INFINITY;
        let mut best = 0.0;
        for seg in poly.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let r = [q[0] - a[0], q[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            if len2 == 0.0 {
                continue;
            }
            let t = ((r[0] * d[0] + r[1] * d[1]) / len2).clamp(0.0, 1.0);
            let c = [a[0] + t * d[0], a[1] + t * d[1]];
            let dd = [q[0] - c[0], q[1] - c[1]];
            let d2 = dd[0] * dd[0] + dd[1] * dd[1];
            if d2 < best_d2 {
                best_d2 = d2;
                let cr = d[0] * r[1] - d[1] * r[0];
                best = cr.signum() * d2.sqrt();
            }
        }
        best
    };
    let eval = |p: [f64; 2]| -> Result<f64> {
        let f = pipeline::<f64>(surface, p[0], p[1], flip, branch)?;
        Ok(h_field(base_projection(f.pos)))
    };
    let grad = |p: [f64; 2]| -> Result<[f64; 2]> {
        let hh = 1e-6;
        Ok([
            (eval([p[0] + hh, p[1]])? - eval([p[0] - hh, p[1]])?) / (2.0 * hh),
            (eval([p[0], p[1] + hh])? - eval([p[0], p[1] - hh])?) / (2.0 * hh),
        ])
    };

    // Trace the cut curve a few nodes to each side of p.
    let m = 5usize;
    let cfg = TraceConfig { step: 2e-3, max_nodes: m + 3, tol: 1e-10 };
    let curve = trace_zero_set(&surface.domain, eval, grad, uv, &cfg)?;
    let nodes = &curve.nodes;
    // Index of p among the nodes.
    let i0 = nodes
        .iter()
        .enumerate()
        .min_by(|a, b| {
            surface
                .domain
                .distance(*a.1, uv)
                .total_cmp(&surface.domain.distance(*b.1, uv))
        })
        .map(|(i, _)| i)
        .ok_or_else(|| skip(uv, "empty traced curve"))?;
    if i0 < m || i0 + m >= nodes.len() {
        return Err(skip(uv, "traced curve too short around the point"));
    }
    let delta = m as f64 * cfg.step;
    let q_at = |i: usize| surface.position_at(nodes[i]);
    let (qm, q0p, qp) = (q_at(i0 - m), q_at(i0), q_at(i0 + m));
    let t_vec = (qp - qm).scale(1.0 / (2.0 * delta));
    let t_pp = (qp - q0p.scale(2.0) + qm).scale(1.0 / (delta * delta));
    let chris = christoffel_at(params, q0p)?;
    let acc = t_pp + chris.contract(t_vec, t_vec);
    let speed2 = data.gmat.inner(t_vec, t_vec);
    let curve_normal_curvature = data.gmat.inner(acc, -data.normal) / speed2;

    Ok(VerticalPointCheck {
        uv,
        dg_xi,
        curve_normal_curvature,
        residual: (dg_xi - curve_normal_curvature).abs(),
        alpha_xi_xi,
        g_residual,
        curve_nodes: nodes.len(),
    })
}

/// The Jacobian structure of the section W = xi x N at a point with
/// vertical normal, measured exactly and compared to two targets: the
/// literal matrix [[tau, lambda2], [-lambda1, -tau]] and the orientation-
/// corrected form [[-eta tau, lambda2], [-lambda1, -eta tau]] with
/// eta = sign(<N, xi>). Determinants are compared to K_e -+ tau^2.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HorizontalPointCheck {
    pub uv: [f64; 2],
    pub eta: f64,
    pub lambda: [f64; 2],
    pub jacobian: [[f64; 2]; 2],
    pub literal_target: [[f64; 2]; 2],
    pub oriented_target: [[f64; 2]; 2],
    /// Max entrywise deviation from each target.
    pub literal_deviation: f64,
    pub oriented_deviation: f64,
    pub det_measured: f64,
    /// K_e - tau^2 (the literal target's determinant).
    pub det_literal: f64,
    /// K_e + tau^2 (the measured determinant in exact arithmetic).
    pub det_oriented: f64,
}

pub fn horizontal_point_check(
    surface: &ParametrizedSurface,
    hp: &HorizontalPoint,
) -> Result<HorizontalPointCheck> {
    let uv = hp.uv;
    let data = point_data(surface, uv, FrameBranch::Principal)?;
    let eta = if data.xi_normal >= 0.0 { 1.0 } else { -1.0 };
    // Principal basis oriented by xi: v2' = eta v2 makes (v1, v2') agree
    // with the orientation induced by xi at the point.
    let b1 = data.principal[0];
    let b2 = data.principal[1].scale(eta);
    let d1 = data.tangent_components(b1);
    let d2 = data.tangent_components(b2);
    let flip = orientation_flip(surface, uv)?;

    // G_i(q) = <xi x N, B_i>_g with the basis vectors frozen at p; since
    // the section vanishes at p the Jacobian does not depend on how the
    // basis is extended.
    let entry = |b: V3, dir: [f64; 2]| -> Result<f64> {
        let f = pipeline::<Dual<f64>>(
            surface,
            Dual::var(uv[0], dir[0]),
            Dual::var(uv[1], dir[1]),
            flip,
            FrameBranch::Principal,
        )?;
        let xi = Vec3::new(Dual::c(0.0), Dual::c(0.0), Dual::c(1.0));
        let w = cross_components(&f.gmat, xi, f.normal);
        let bv = Vec3::new(Dual::c(b.x), Dual::c(b.y), Dual::c(b.z));
        Ok(f.gmat.inner(w, bv).d)
    };
    let jacobian = [
        [entry(b1, d1)?, entry(b1, d2)?],
        [entry(b2, d1)?, entry(b2, d2)?],
    ];

    let tau = surface.space.tau;
    let [l1, l2] = data.lambda;
    let literal_target = [[tau, l2], [-l1, -tau]];
    let oriented_target = [[-eta * tau, l2], [-l1, -eta * tau]];
    let dev = |t: [[f64; 2]; 2]| {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((jacobian[i][j] - t[i][j]).abs());
            }
        }
        m
    };
    let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
    Ok(HorizontalPointCheck {
        uv,
        eta,
        lambda: data.lambda,
        jacobian,
        literal_target,
        oriented_target,
        literal_deviation: dev(literal_target),
        oriented_deviation: dev(oriented_target),
        det_measured: det,
        det_literal: data.k_ext - tau * tau,
        det_oriented: data.k_ext + tau * tau,
    })
}

/// Decide the torsion sign in an identity by evaluating both candidates
/// over sample points: returns the sign whose worst residual is tiny while
/// the opposite sign's is macroscopic, or None when the data cannot
/// separate them (tau = 0).
pub fn discriminate_sign<F>(points: &[[f64; 2]], mut residual_at: F) -> Option<f64>
where
    F: FnMut([f64; 2], f64) -> Option<f64>,
{
    let mut worst = [0.0f64; 2];
    let mut seen = 0usize;
    for &uv in points {
        let (Some(rp), Some(rm)) = (residual_at(uv, 1.0), residual_at(uv, -1.0)) else {
            continue;
        };
        worst[0] = worst[0].max(rp.abs());
        worst[1] = worst[1].max(rm.abs());
        seen += 1;
    }
    if seen == 0 {
        return None;
    }
    let (lo, hi) = (worst[0].min(worst[1]), worst[0].max(worst[1]));
    if hi > 100.0 * lo.max(1e-14) {
        Some(if worst[0] < worst[1] { 1.0 } else { -1.0 })
    } else {
        None
    }
}

/// Aggregated residual statistics for one identity over a point set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquationStat {
    pub equation: EquationId,
    pub checked: usize,
    /// Points skipped because a precondition failed (frame undefined,
    /// angle guards, locus proximity).
    pub skipped: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    pub mean_rel: f64,
    pub worst_uv: [f64; 2],
    pub tolerance: f64,
    pub pass: bool,
}

/// Suite result over one surface.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub label: String,
    pub stats: Vec<EquationStat>,
    pub pass: bool,
}

struct StatAcc {
    equation: EquationId,
    checked: usize,
    skipped: usize,
    max_abs: f64,
    max_rel: f64,
    sum_rel: f64,
    worst_uv: [f64; 2],
}

impl StatAcc {
    fn new(equation: EquationId) -> Self {
        StatAcc {
            equation,
            checked: 0,
            skipped: 0,
            max_abs: 0.0,
            max_rel: 0.0,
            sum_rel: 0.0,
            worst_uv: [f64::NAN; 2],
        }
    }

    fn add(&mut self, r: &ResidualReport) {
        self.checked += 1;
        self.max_abs = self.max_abs.max(r.abs_residual);
        self.sum_rel += r.rel_residual;
        if r.rel_residual >= self.max_rel {
            self.max_rel = r.rel_residual;
            self.worst_uv = r.uv;
        }
    }

    fn feed(&mut self, res: Result<ResidualReport>) -> Result<()> {
        match res {
            Ok(r) => {
                self.add(&r);
                Ok(())
            }
            Err(
                GeomError::ResidualPrecondition { .. }
                | GeomError::FrameUndefined { .. }
                | GeomError::GradThetaVanishes { .. },
            ) => {
                self.skipped += 1;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn finish(self, tolerance: f64) -> EquationStat {
        let mean_rel = if self.checked > 0 {
            self.sum_rel / self.checked as f64
        } else {
            0.0
        };
        // An identity that was never checkable is a failure unless it was
        // skipped for a legitimate precondition at every point.
        let pass = self.max_rel <= tolerance;
        EquationStat {
            equation: self.equation,
            checked: self.checked,
            skipped: self.skipped,
            max_abs: self.max_abs,
            max_rel: self.max_rel,
            mean_rel,
            worst_uv: self.worst_uv,
            tolerance,
            pass,
        }
    }
}

/// Evaluate the pointwise identities over a point set and aggregate
/// per-equation statistics. Tolerances default per equation and can be
/// scaled by `tol_scale` (CLI tiers).
pub fn equation_suite(
    surface: &ParametrizedSurface,
    label: &str,
    points: &[[f64; 2]],
    branch: FrameBranch,
    tol_scale: f64,
) -> Result<SuiteReport> {
    use EquationId::*;
    let mut acc: Vec<StatAcc> = [
        AlphaE1,
        AlphaE2,
        AlphaFrame11,
        AlphaFrame12,
        OdeV,
        OdeJv,
        PhiQuadratic,
        GaussEquation,
    ]
    .into_iter()
    .map(StatAcc::new)
    .collect();

    for &uv in points {
        let data = match point_data(surface, uv, branch) {
            Ok(d) => d,
            Err(GeomError::OutsideDomain { .. }) => continue,
            Err(e) => return Err(e),
        };
        let dirs: Vec<[f64; 2]> = match data.frame.as_ref() {
            Some(fr) => vec![
                data.tangent_components(fr.e1),
                data.tangent_components(fr.e2),
            ],
            None => vec![],
        };
        for &d in &dirs {
            acc[0].feed(residual_eq1(surface, uv, branch, d))?;
            acc[1].feed(residual_alpha_e2(surface, uv, branch, d))?;
        }
        if dirs.is_empty() {
            acc[0].skipped += 1;
            acc[1].skipped += 1;
        }
        match residual_alpha_frame(surface, uv, branch) {
            Ok([r11, r12]) => {
                acc[2].add(&r11);
                acc[3].add(&r12);
            }
            Err(
                GeomError::ResidualPrecondition { .. }
                | GeomError::FrameUndefined { .. }
                | GeomError::GradThetaVanishes { .. },
            ) => {
                acc[2].skipped += 1;
                acc[3].skipped += 1;
            }
            Err(e) => return Err(e),
        }
        acc[4].feed(residual_ode(surface, uv, branch, CharCurve::V, 1.0))?;
        acc[5].feed(residual_ode(surface, uv, branch, CharCurve::Jv, 1.0))?;
        acc[6].feed(residual_phi_quadratic(surface, uv, branch))?;
        acc[7].feed(residual_gauss(surface, uv))?;
    }

    let stats: Vec<EquationStat> = acc
        .into_iter()
        .map(|a| {
            let tol = a.equation.default_rel_tolerance() * tol_scale;
            a.finish(tol)
        })
        .collect();
    let pass = stats.iter().all(|s| s.pass);
    Ok(SuiteReport { label: label.into(), stats, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec3;
    use crate::surface::locate::find_horizontal_points;
    use crate::surface::tests::sphere;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn spheres() -> Vec<(&'static str, ParametrizedSurface)> {
        vec![
            ("euclidean", sphere(SpaceParams::new(0.0, 0.0), Vec3::new(0.0, 0.0, 0.0), 2.0)),
            ("nil", sphere(SpaceParams::new(0.0, 0.5), Vec3::new(0.0, 0.5, 0.0), 0.1)),
            ("hyperbolic", sphere(SpaceParams::new(-1.0, 0.5), Vec3::new(0.0, 0.5, 0.0), 0.1)),
            ("spherical", sphere(SpaceParams::new(1.0, 0.5), Vec3::new(0.1, 0.4, 0.0), 0.1)),
        ]
    }

    #[test]
    fn eq1_residual_is_small_across_surfaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        for (name, s) in spheres() {
            let mut checked = 0;
            for _ in 0..40 {
                let uv = s.domain.sample(&mut rng);
                let Ok(d) = point_data(&s, uv, FrameBranch::Principal) else { continue };
                let Some(fr) = d.frame else { continue };
                for dir in [
                    d.tangent_components(fr.e1),
                    d.tangent_components(fr.e2),
                    [1.0, 0.4],
                ] {
                    let r = residual_eq1(&s, uv, FrameBranch::Principal, dir).unwrap();
                    assert!(r.rel_residual < TOL_JET_VS_FD, "{name} at {uv:?}: {r:?}");
                    checked += 1;
                }
            }
            assert!(checked > 60, "{name}: too few checks ({checked})");
        }
    }

    #[test]
    fn alpha_e2_requires_the_positive_torsion_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        for (name, s) in spheres() {
            let tau = s.space.tau;
            let mut pts = Vec::new();
            while pts.len() < 25 {
                let uv = s.domain.sample(&mut rng);
                if point_data(&s, uv, FrameBranch::Principal)
                    .ok()
                    .and_then(|d| d.frame)
                    .is_some()
                {
                    pts.push(uv);
                }
            }
            let sign = discriminate_sign(&pts, |uv, sigma| {
                residual_alpha_e2_signed(&s, uv, FrameBranch::Principal, [0.8, 0.5], sigma)
                    .ok()
                    .map(|r| r.rel_residual)
            });
            if tau == 0.0 {
                assert_eq!(sign, None, "{name}: tau = 0 cannot separate the signs");
            } else {
                assert_eq!(sign, Some(1.0), "{name}");
            }
            // And the derived sign's residual is at roundoff.
            for &uv in &pts {
                match residual_alpha_e2(&s, uv, FrameBranch::Principal, [0.8, 0.5]) {
                    Ok(r) => assert!(r.rel_residual < TOL_EXACT, "{name}: {r:?}"),
                    Err(GeomError::ResidualPrecondition { .. }) => {}
                    Err(e) => panic!("{name}: {e}"),
                }
            }
        }
    }

    #[test]
    fn frame_alpha_components_hold_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        for (name, s) in spheres() {
            for _ in 0..30 {
                let uv = s.domain.sample(&mut rng);
                match residual_alpha_frame(&s, uv, FrameBranch::Principal) {
                    Ok([r11, r12]) => {
                        assert!(r11.rel_residual < 1e-12, "{name}: {r11:?}");
                        assert!(r12.rel_residual < 1e-12, "{name}: {r12:?}");
                    }
                    Err(
                        GeomError::FrameUndefined { .. } | GeomError::GradThetaVanishes { .. },
                    ) => {}
                    Err(e) => panic!("{name}: {e}"),
                }
            }
        }
    }

    #[test]
    fn phi_solves_the_quadratic_and_roots_are_at_most_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(137);
        for (name, s) in spheres() {
            for _ in 0..30 {
                let uv = s.domain.sample(&mut rng);
                let q = match phi_quadratic(&s, uv, FrameBranch::Principal) {
                    Ok(q) => q,
                    Err(_) => continue,
                };
                let scale = q.coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
                assert!(q.residual.abs() / scale < 1e-12, "{name}: {q:?}");
                assert!(q.roots.len() <= 2);
                assert!(q.matched_root.is_some(), "{name}: phi not among roots: {q:?}");
            }
        }
    }

    #[test]
    fn quadratic_with_flipped_torsion_sign_fails_on_twisted_spaces() {
        // Replacing B = -2 tau W by +2 tau W must produce a macroscopic
        // residual wherever cos(phi) is not tiny.
        let s = sphere(SpaceParams::new(-1.0, 0.5), Vec3::new(0.0, 0.5, 0.0), 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(139);
        let mut max_bad = 0.0f64;
        for _ in 0..60 {
            let uv = s.domain.sample(&mut rng);
            let Ok(q) = phi_quadratic(&s, uv, FrameBranch::Principal) else { continue };
            let [a, b, c] = q.coeffs;
            let flipped = a * q.phi.sin() - b * q.phi.cos() + c;
            max_bad = max_bad.max(flipped.abs() - q.residual.abs());
        }
        assert!(max_bad > 1e-3, "flipped sign residual never separated: {max_bad}");
    }

    #[test]
    fn phi_evolution_matches_finite_differences_with_the_derived_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(149);
        for (name, s) in spheres() {
            let mut checked = 0;
            for _ in 0..60 {
                let uv = s.domain.sample(&mut rng);
                for curve in [CharCurve::V, CharCurve::Jv] {
                    match residual_ode(&s, uv, FrameBranch::Principal, curve, 1.0) {
                        Ok(r) => {
                            assert!(
                                r.rel_residual < 1e-4,
                                "{name} {curve:?} at {uv:?}: {r:?}"
                            );
                            checked += 1;
                        }
                        Err(
                            GeomError::ResidualPrecondition { .. }
                            | GeomError::FrameUndefined { .. }
                            | GeomError::GradThetaVanishes { .. },
                        ) => {}
                        Err(e) => panic!("{name}: {e}"),
                    }
                }
            }
            assert!(checked > 40, "{name}: too few evolution checks ({checked})");
        }
    }

    #[test]
    fn phi_evolution_sign_is_unique_on_twisted_spaces() {
        let s = sphere(SpaceParams::new(0.0, 0.5), Vec3::new(0.0, 0.5, 0.0), 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(151);
        let pts: Vec<[f64; 2]> = (0..30).map(|_| s.domain.sample(&mut rng)).collect();
        for curve in [CharCurve::V, CharCurve::Jv] {
            let sign = discriminate_sign(&pts, |uv, sigma| {
                residual_ode(&s, uv, FrameBranch::Principal, curve, sigma)
                    .ok()
                    .map(|r| r.rel_residual)
            });
            assert_eq!(sign, Some(1.0), "{curve:?}");
        }
    }

    #[test]
    fn curvature_solver_round_trips_and_flags_degeneracies() {
        let mut rng = ChaCha8Rng::seed_from_u64(157);
        for (name, s) in spheres() {
            if (s.space.k - 4.0 * s.space.tau * s.space.tau).abs() < EPS_SPACE_FORM {
                continue; // handled by the explicit degenerate case below
            }
            for _ in 0..20 {
                let uv = s.domain.sample(&mut rng);
                let Ok(d) = point_data(&s, uv, FrameBranch::Principal) else { continue };
                let nu = solve_theta(&s.space, d.k_int, d.k_ext).unwrap();
                assert!(
                    (nu - d.xi_normal.abs()).abs() < 1e-9,
                    "{name}: nu {nu} vs |g| {}",
                    d.xi_normal.abs()
                );
            }
        }
        // k = 4 tau^2: the relation cannot see nu at all.
        let degenerate = SpaceParams::new(1.0, 0.5);
        assert!(matches!(
            solve_theta(&degenerate, 1.0, 0.5),
            Err(GeomError::SpaceForm { .. })
        ));
        // Curvature data inconsistent with any angle.
        let params = SpaceParams::new(-1.0, 0.5);
        assert!(matches!(
            solve_theta(&params, -10.0, 100.0),
            Err(GeomError::InconsistentCurvature { .. })
        ));
    }

    #[test]
    fn tangency_rate_matches_curve_curvature_on_the_round_sphere() {
        let s = sphere(SpaceParams::new(0.0, 0.0), Vec3::new(0.0, 0.0, 0.0), 2.0);
        // The vertical locus is {sin v = 0}; take points on both arcs.
        for seed in [[1.0, 0.0], [1.7, 0.0], [1.2, PI]] {
            let c = vertical_point_check(&s, seed, FrameBranch::Principal).unwrap();
            assert!((c.dg_xi + 0.5).abs() < 1e-10, "dg {}", c.dg_xi);
            assert!(
                (c.curve_normal_curvature + 0.5).abs() < 1e-4,
                "curvature {}",
                c.curve_normal_curvature
            );
            assert!(c.residual < TOL_DOUBLE_FD, "residual {}", c.residual);
            assert!(c.alpha_xi_xi > 0.0);
        }
    }

    #[test]
    fn tangency_rate_check_holds_on_twisted_spheres() {
        for (k, tau) in [(0.0, 0.5), (-1.0, 0.5)] {
            let s = sphere(SpaceParams::new(k, tau), Vec3::new(0.0, 0.5, 0.0), 0.1);
            // Find locus seeds from the traced locus itself.
            let curves =
                crate::surface::locate::vertical_locus(&s, 24, 48, &TraceConfig::default())
                    .unwrap();
            assert!(!curves.is_empty());
            let mut checked = 0;
            for curve in &curves {
                for idx in [curve.nodes.len() / 4, curve.nodes.len() / 2] {
                    let c = vertical_point_check(&s, curve.nodes[idx], FrameBranch::Principal)
                        .unwrap();
                    assert!(
                        c.residual < TOL_DOUBLE_FD,
                        "k={k} tau={tau}: residual {} (dg {} vs curvature {})",
                        c.residual,
                        c.dg_xi,
                        c.curve_normal_curvature
                    );
                    checked += 1;
                }
            }
            assert!(checked >= 2);
        }
    }

    #[test]
    fn horizontal_jacobian_matches_oriented_form_and_dets() {
        for (name, s) in spheres() {
            let tau = s.space.tau;
            let pts = find_horizontal_points(&s, 40, 80).unwrap();
            assert_eq!(pts.len(), 2, "{name}");
            for hp in &pts {
                let c = horizontal_point_check(&s, hp).unwrap();
                assert!(
                    c.oriented_deviation < 1e-8,
                    "{name}: oriented deviation {} at eta {}",
                    c.oriented_deviation,
                    c.eta
                );
                assert!(
                    (c.det_measured - c.det_oriented).abs() < 1e-8,
                    "{name}: det {} vs {}",
                    c.det_measured,
                    c.det_oriented
                );
                if tau == 0.0 {
                    assert!(c.literal_deviation < 1e-8, "{name}: {}", c.literal_deviation);
                } else {
                    // The literal form misses the orientation sign: off by
                    // exactly 2 tau on one diagonal entry.
                    assert!(
                        (c.literal_deviation - 2.0 * tau).abs() < 1e-6,
                        "{name}: literal deviation {} (expected {})",
                        c.literal_deviation,
                        2.0 * tau
                    );
                }
            }
        }
    }

    #[test]
    fn horizontal_jacobian_exact_route_agrees_with_finite_differences() {
        let s = sphere(SpaceParams::new(-1.0, 0.5), Vec3::new(0.0, 0.5, 0.0), 0.1);
        let pts = find_horizontal_points(&s, 40, 80).unwrap();
        let hp = &pts[0];
        let c = horizontal_point_check(&s, hp).unwrap();
        // Oracle: Richardson central differences of the same section
        // components along the same directions.
        let data = point_data(&s, hp.uv, FrameBranch::Principal).unwrap();
        let eta = c.eta;
        let b = [data.principal[0], data.principal[1].scale(eta)];
        let dirs = [data.tangent_components(b[0]), data.tangent_components(b[1])];
        let flip = orientation_flip(&s, hp.uv).unwrap();
        let field = |uv: [f64; 2], bv: V3| -> f64 {
            let f = pipeline::<f64>(&s, uv[0], uv[1], flip, FrameBranch::Principal).unwrap();
            let xi = xi_at(&s.space, f.pos);
            let w = cross_components(&f.gmat, xi, f.normal);
            f.gmat.inner(w, bv)
        };
        for i in 0..2 {
            for j in 0..2 {
                let fd = crate::fd::central_rich(
                    |t| field([hp.uv[0] + t * dirs[j][0], hp.uv[1] + t * dirs[j][1]], b[i]),
                    0.0,
                    1e-3,
                );
                assert!(
                    (c.jacobian[i][j] - fd).abs() < 1e-6,
                    "entry ({i},{j}): exact {} vs fd {fd}",
                    c.jacobian[i][j]
                );
            }
        }
    }

    #[test]
    fn suite_aggregates_and_passes_on_a_convex_sphere() {
        let s = sphere(SpaceParams::new(-1.0, 0.5), Vec3::new(0.0, 0.5, 0.0), 0.1);
        let pts = s.domain.grid(8, 10);
        let rep = equation_suite(&s, "hyperbolic-sphere", &pts, FrameBranch::Principal, 1.0)
            .unwrap();
        assert!(rep.pass, "{:#?}", rep.stats);
        for st in &rep.stats {
            assert!(st.checked > 0, "{:?} never checked", st.equation);
        }
    }
}

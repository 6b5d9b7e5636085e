//! Locating the distinguished point sets of a surface: points where the
//! normal is vertical (the frame degenerates) and the locus where the
//! surface is tangent to the fibers (g = 0).
//!
//! Horizontal points are found by a grid scan plus Newton refinement on the
//! tangential components of xi. The vertical locus is traced as a level
//! curve of g by a predictor-corrector continuation that understands the
//! periodic parameter direction. The tracer is generic over the scalar
//! field so other implicit curves can reuse it.

use super::{orientation_flip, pipeline, Domain, FrameBranch, ParametrizedSurface};
use crate::dual::Dual;
use crate::error::{GeomError, Result};
use crate::linalg::V3;

/// A point where the normal is parallel to xi.
#[derive(Clone, Copy, Debug)]
pub struct HorizontalPoint {
    pub uv: [f64; 2],
    pub pos: V3,
    /// g = <N, xi> there; +-1 up to the residual.
    pub xi_normal: f64,
    /// Norm of the tangential part of xi (zero at an exact solution).
    pub residual: f64,
}

/// Fix the normal orientation once per surface, at the domain center, so
/// scalar fields built from N are continuous across the scan.
fn global_flip(surface: &ParametrizedSurface) -> Result<f64> {
    let d = &surface.domain;
    let center = [
        0.5 * (d.u_min + d.u_max),
        0.5 * (d.v_min + d.v_max),
    ];
    orientation_flip(surface, center)
}

/// g = <N, xi> as a plain scalar field with a fixed orientation.
pub(crate) fn g_scalar(
    surface: &ParametrizedSurface,
    flip: f64,
) -> impl Fn([f64; 2]) -> Result<f64> + '_ {
    move |uv| {
        pipeline::<f64>(surface, uv[0], uv[1], flip, FrameBranch::Principal)
            .map(|f| f.xi_normal)
    }
}

/// Parameter gradient of g, exact via dual evaluation.
pub(crate) fn g_gradient(
    surface: &ParametrizedSurface,
    flip: f64,
) -> impl Fn([f64; 2]) -> Result<[f64; 2]> + '_ {
    move |uv| {
        let fu = pipeline::<Dual<f64>>(
            surface,
            Dual::var(uv[0], 1.0),
            Dual::c(uv[1]),
            flip,
            FrameBranch::Principal,
        )?
        .xi_normal
        .d;
        let fv = pipeline::<Dual<f64>>(
            surface,
            Dual::c(uv[0]),
            Dual::var(uv[1], 1.0),
            flip,
            FrameBranch::Principal,
        )?
        .xi_normal
        .d;
        Ok([fu, fv])
    }
}

/// Find all points with a vertical normal by scanning an nu x nv grid for
/// local maxima of g^2 and refining each candidate by Newton iteration on
/// the tangential components of xi.
pub fn find_horizontal_points(
    surface: &ParametrizedSurface,
    nu: usize,
    nv: usize,
) -> Result<Vec<HorizontalPoint>> {
    let flip = global_flip(surface)?;
    let dom = &surface.domain;
    let grid = dom.grid(nu, nv);
    let mut g2 = vec![0.0f64; grid.len()];
    for (i, uv) in grid.iter().enumerate() {
        let f = pipeline::<f64>(surface, uv[0], uv[1], flip, FrameBranch::Principal)?;
        g2[i] = f.xi_normal * f.xi_normal;
    }
    let idx = |i: usize, j: usize| i * nv + j;

    // Tangential components of xi in the parameter basis: both vanish
    // exactly at a horizontal point.
    let resid = |uv: [f64; 2]| -> Result<[f64; 2]> {
        let f = pipeline::<f64>(surface, uv[0], uv[1], flip, FrameBranch::Principal)?;
        let gxi = f.gmat.apply(crate::space::xi_at(&surface.space, f.pos.map_value()));
        Ok([gxi.x * f.fu.x + gxi.y * f.fu.y + gxi.z * f.fu.z,
            gxi.x * f.fv.x + gxi.y * f.fv.y + gxi.z * f.fv.z])
    };

    let cell = (dom.span_u() / nu as f64).max(dom.span_v() / nv as f64);
    let mut found: Vec<HorizontalPoint> = Vec::new();
    for i in 0..nu {
        for j in 0..nv {
            // Local maximum of g^2 among the 8 neighbors (v wraps when
            // periodic; missing neighbors at u-edges count as smaller).
            let here = g2[idx(i, j)];
            if here < 0.5 {
                continue; // a horizontal point has g^2 = 1
            }
            let mut is_max = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = i as i64 + di;
                    let jj = j as i64 + dj;
                    if ii < 0 || ii >= nu as i64 {
                        continue;
                    }
                    let jj = if dom.v_periodic {
                        jj.rem_euclid(nv as i64)
                    } else if jj < 0 || jj >= nv as i64 {
                        continue;
                    } else {
                        jj
                    };
                    if g2[idx(ii as usize, jj as usize)] > here {
                        is_max = false;
                    }
                }
            }
            if !is_max {
                continue;
            }

            // Newton refinement with a finite-difference Jacobian.
            let mut uv = grid[idx(i, j)];
            let h = 1e-6;
            let mut ok = false;
            for _ in 0..40 {
                let r = resid(uv)?;
                let rn = r[0].hypot(r[1]);
                if rn < 1e-12 {
                    ok = true;
                    break;
                }
                let ru = resid([uv[0] + h, uv[1]])?;
                let rl = resid([uv[0] - h, uv[1]])?;
                let rv = resid([uv[0], uv[1] + h])?;
                let rd = resid([uv[0], uv[1] - h])?;
                let jac = [
                    [(ru[0] - rl[0]) / (2.0 * h), (rv[0] - rd[0]) / (2.0 * h)],
                    [(ru[1] - rl[1]) / (2.0 * h), (rv[1] - rd[1]) / (2.0 * h)],
                ];
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                if det.abs() < 1e-14 {
                    break;
                }
                let step = [
                    -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
                    -(jac[0][0] * r[1] - jac[1][0] * r[0]) / det,
                ];
                let sn = step[0].hypot(step[1]);
                if sn > 3.0 * cell {
                    break; // running away from this basin
                }
                uv = dom.wrap([uv[0] + step[0], uv[1] + step[1]]);
                if sn < 1e-14 {
                    ok = true;
                    break;
                }
            }
            if !ok {
                continue;
            }
            if !dom.contains(uv) {
                continue;
            }
            if found.iter().any(|p| dom.distance(p.uv, uv) < 1e-5 * (1.0 + cell)) {
                continue;
            }
            let f = pipeline::<f64>(surface, uv[0], uv[1], flip, FrameBranch::Principal)?;
            let xi = crate::space::xi_at(&surface.space, f.pos.map_value());
            let p_xi = xi - f.normal.scale(f.xi_normal);
            let residual = f.gmat.inner(p_xi, p_xi).sqrt();
            found.push(HorizontalPoint {
                uv,
                pos: f.pos,
                xi_normal: f.xi_normal,
                residual,
            });
        }
    }
    found.sort_by(|a, b| a.uv[0].total_cmp(&b.uv[0]).then(a.uv[1].total_cmp(&b.uv[1])));
    Ok(found)
}

/// One traced connected component of a level set in the parameter domain.
#[derive(Clone, Debug)]
pub struct LevelCurve {
    pub nodes: Vec<[f64; 2]>,
    /// The curve returned to its start (in the cylinder topology).
    pub closed: bool,
    /// The curve hit the domain boundary (or the node cap) and stopped.
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct TraceConfig {
    /// Arclength step in the parameter plane.
    pub step: f64,
    pub max_nodes: usize,
    /// Corrector target for |field|.
    pub tol: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig { step: 2e-3, max_nodes: 60_000, tol: 1e-9 }
    }
}

/// Pull a point back onto the zero set along the gradient.
fn correct<F, G>(eval: &F, grad: &G, mut uv: [f64; 2], tol: f64) -> Result<[f64; 2]>
where
    F: Fn([f64; 2]) -> Result<f64>,
    G: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    for _ in 0..12 {
        let f = eval(uv)?;
        if f.abs() < tol {
            return Ok(uv);
        }
        let g = grad(uv)?;
        let gn2 = g[0] * g[0] + g[1] * g[1];
        if gn2 < 1e-20 {
            return Err(GeomError::ContinuationStall {
                u: uv[0],
                v: uv[1],
                what: "gradient vanishes on level set".into(),
            });
        }
        uv = [uv[0] - f * g[0] / gn2, uv[1] - f * g[1] / gn2];
    }
    let f = eval(uv)?;
    if f.abs() < tol * 10.0 {
        Ok(uv)
    } else {
        Err(GeomError::ContinuationStall {
            u: uv[0],
            v: uv[1],
            what: format!("corrector stalled at |f| = {:.3e}", f.abs()),
        })
    }
}

fn trace_one_direction<F, G>(
    domain: &Domain,
    eval: &F,
    grad: &G,
    seed: [f64; 2],
    sign: f64,
    cfg: &TraceConfig,
) -> Result<(Vec<[f64; 2]>, bool, bool)>
where
    F: Fn([f64; 2]) -> Result<f64>,
    G: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let mut nodes = vec![seed];
    let mut prev_tan: Option<[f64; 2]> = None;
    let mut uv = seed;
    loop {
        if nodes.len() >= cfg.max_nodes {
            return Ok((nodes, false, true));
        }
        let g = grad(uv)?;
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gn < 1e-12 {
            return Err(GeomError::ContinuationStall {
                u: uv[0],
                v: uv[1],
                what: "gradient vanishes while tracing".into(),
            });
        }
        // Tangent to the level curve, oriented consistently.
        let mut t = [-g[1] / gn, g[0] / gn];
        match prev_tan {
            None => {
                t = [t[0] * sign, t[1] * sign];
            }
            Some(p) => {
                if t[0] * p[0] + t[1] * p[1] < 0.0 {
                    t = [-t[0], -t[1]];
                }
            }
        }
        prev_tan = Some(t);
        let predicted = [uv[0] + cfg.step * t[0], uv[1] + cfg.step * t[1]];

        // Domain exit check in the non-wrapped coordinates.
        let out_u = predicted[0] < domain.u_min || predicted[0] > domain.u_max;
        let out_v = !domain.v_periodic
            && (predicted[1] < domain.v_min || predicted[1] > domain.v_max);
        if out_u || out_v {
            return Ok((nodes, false, true));
        }

        uv = correct(eval, grad, predicted, cfg.tol)?;
        // Closure test against the seed, wrap-aware.
        if nodes.len() >= 5 && domain.distance(uv, seed) < 0.75 * cfg.step {
            return Ok((nodes, true, false));
        }
        nodes.push(uv);
    }
}

/// Trace the connected component of {field = 0} through `seed`.
///
/// The seed is first pulled onto the zero set. If the component hits the
/// domain boundary, the other direction is traced too and the halves are
/// joined, so the result always covers the full component.
pub fn trace_zero_set<F, G>(
    domain: &Domain,
    eval: F,
    grad: G,
    seed: [f64; 2],
    cfg: &TraceConfig,
) -> Result<LevelCurve>
where
    F: Fn([f64; 2]) -> Result<f64>,
    G: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    let seed = correct(&eval, &grad, seed, cfg.tol)?;
    let (fwd, closed, trunc_f) = trace_one_direction(domain, &eval, &grad, seed, 1.0, cfg)?;
    if closed {
        return Ok(LevelCurve { nodes: fwd, closed: true, truncated: false });
    }
    let (bwd, _, trunc_b) = trace_one_direction(domain, &eval, &grad, seed, -1.0, cfg)?;
    let mut nodes: Vec<[f64; 2]> = bwd.into_iter().skip(1).rev().collect();
    nodes.extend(fwd);
    Ok(LevelCurve { nodes, closed: false, truncated: trunc_f || trunc_b })
}

/// Locate and trace every component of the locus {g = 0} where the surface
/// is tangent to the vertical direction.
pub fn vertical_locus(
    surface: &ParametrizedSurface,
    nu: usize,
    nv: usize,
    cfg: &TraceConfig,
) -> Result<Vec<LevelCurve>> {
    let flip = global_flip(surface)?;
    let eval = g_scalar(surface, flip);
    let grad = g_gradient(surface, flip);
    let dom = &surface.domain;

    // Sample g on the grid and collect sign-change edges as seeds.
    let grid = dom.grid(nu, nv);
    let mut vals = vec![0.0f64; grid.len()];
    for (i, uv) in grid.iter().enumerate() {
        vals[i] = eval(*uv)?;
    }
    let idx = |i: usize, j: usize| i * nv + j;
    let mut seeds: Vec<[f64; 2]> = Vec::new();
    let mut push_edge = |a: [f64; 2], fa: f64, b: [f64; 2], fb: f64| {
        if fa == 0.0 {
            seeds.push(a);
        } else if fa * fb < 0.0 {
            // Linear interpolation along the edge; note b may sit one period
            // up in v, so interpolate in unwrapped coordinates.
            let t = fa / (fa - fb);
            seeds.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    };
    for i in 0..nu {
        for j in 0..nv {
            let a = grid[idx(i, j)];
            let fa = vals[idx(i, j)];
            if i + 1 < nu {
                push_edge(a, fa, grid[idx(i + 1, j)], vals[idx(i + 1, j)]);
            }
            if j + 1 < nv {
                push_edge(a, fa, grid[idx(i, j + 1)], vals[idx(i, j + 1)]);
            } else if dom.v_periodic {
                let b = grid[idx(i, 0)];
                push_edge(a, fa, [b[0], b[1] + dom.span_v()], vals[idx(i, 0)]);
            }
        }
    }

    let mut curves: Vec<LevelCurve> = Vec::new();
    'seed: for s in seeds {
        let s = dom.wrap(s);
        for c in &curves {
            let cell = (dom.span_u() / nu as f64).max(dom.span_v() / nv as f64);
            if c.nodes.iter().any(|n| dom.distance(*n, s) < cell) {
                continue 'seed;
            }
        }
        curves.push(trace_zero_set(dom, &eval, &grad, s, cfg)?);
    }
    Ok(curves)
}

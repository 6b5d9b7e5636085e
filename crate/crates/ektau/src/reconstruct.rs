//! Characteristic curves, external propagation of the angle phi, and the
//! congruence decision built on both.
//!
//! The direction field v is defined pointwise by the surface geometry, so
//! its integral curves can be traced without knowing phi; the evolution
//! equation then reconstructs phi along a curve from a single initial
//! value. Comparing a reconstructed angle with the pointwise one, and the
//! full invariant set between two surfaces, yields the congruence test.

use crate::equations::{ode_drive, CharCurve, OdeCoeffs, phi_quadratic};
use crate::error::{GeomError, Result};
use crate::linalg::V3;
use crate::space::isometry::{AffineIsometry, IsometryDescriptor};
use crate::surface::conn::dir_rates;
use crate::surface::{point_data, FrameBranch, ParametrizedSurface};
use crate::tolerances::{RK_STEP, TOL_CONGRUENT, TRAJECTORY_COS_CAP};
use serde::{Deserialize, Serialize};

/// One node of a traced characteristic curve: arclength, parameters, the
/// parameter components of the traveled unit direction, and the evolution
/// coefficients measured along that direction.
#[derive(Clone, Copy, Debug)]
pub struct TrajNode {
    pub s: f64,
    pub uv: [f64; 2],
    pub field: [f64; 2],
    pub coeffs: OdeCoeffs,
}

/// A traced characteristic curve sampled at half the propagation step, so
/// the angle integrator has midpoint coefficients available.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub curve: CharCurve,
    /// +1 follows the canonical field, -1 its reverse.
    pub direction: f64,
    /// Propagation step; nodes are spaced at step / 2.
    pub step: f64,
    pub nodes: Vec<TrajNode>,
    pub truncated: bool,
    pub stop_reason: Option<String>,
}

fn guard(uv: [f64; 2], what: &str) -> GeomError {
    GeomError::ResidualPrecondition { u: uv[0], v: uv[1], what: what.into() }
}

/// Evaluate the traveled unit direction and evolution coefficients at one
/// point. Fails where the curve must stop: horizontal-point guard, missing
/// direction field, or (for Jv curves) the angle guard.
fn field_and_coeffs(
    surface: &ParametrizedSurface,
    uv: [f64; 2],
    branch: FrameBranch,
    curve: CharCurve,
    direction: f64,
) -> Result<([f64; 2], OdeCoeffs)> {
    let data = point_data(surface, uv, branch)?;
    let fr = data.frame_or_err()?;
    if fr.cos_theta.abs() < TRAJECTORY_COS_CAP {
        return Err(guard(uv, "horizontal-point guard"));
    }
    let ch = data.char_or_err()?;
    if matches!(curve, CharCurve::Jv) && ch.phi.sin().abs() < 1e-3 {
        return Err(guard(uv, "angle guard"));
    }
    let vec = match curve {
        CharCurve::V => ch.v,
        CharCurve::Jv => ch.jv,
    };
    let comps = data.tangent_components(vec);
    let comps = [direction * comps[0], direction * comps[1]];
    let rates = dir_rates(surface, uv, branch, comps)?;
    let wt12 = rates
        .wt12
        .ok_or_else(|| guard(uv, "characteristic direction undefined"))?;
    Ok((
        comps,
        OdeCoeffs {
            wt12,
            tan_theta: fr.theta.sin() / fr.cos_theta,
            k_ext: data.k_ext,
            w: fr.grad_norm,
            tau: surface.space.tau,
            phi: ch.phi,
        },
    ))
}

/// Trace an integral curve of the characteristic field from `start` for
/// the given arclength. The curve stops early (truncated) at the domain
/// boundary or when a pointwise guard trips; a failure at the start point
/// itself is an error.
pub fn integral_curve(
    surface: &ParametrizedSurface,
    start: [f64; 2],
    branch: FrameBranch,
    curve: CharCurve,
    direction: f64,
    length: f64,
    step: f64,
) -> Result<TrajectoryRecord> {
    let ds = 0.5 * step;
    let mut n_steps = (length / ds).round() as usize;
    if n_steps % 2 == 1 {
        n_steps += 1;
    }
    n_steps = n_steps.max(2);

    let eval = |uv: [f64; 2]| field_and_coeffs(surface, uv, branch, curve, direction);
    let mut nodes = Vec::with_capacity(n_steps + 1);
    let mut uv = start;
    let mut truncated = false;
    let mut stop_reason = None;
    let stop = |e: GeomError| -> Option<String> { Some(e.to_string()) };

    for i in 0..=n_steps {
        let (field, coeffs) = match eval(uv) {
            Ok(fc) => fc,
            Err(e) if i == 0 => return Err(e),
            Err(e) => {
                truncated = true;
                stop_reason = stop(e);
                break;
            }
        };
        nodes.push(TrajNode { s: i as f64 * ds, uv, field, coeffs });
        if i == n_steps {
            break;
        }
        // Classical RK4 step of the unit direction field.
        let k1 = field;
        let probe = |p: [f64; 2]| -> Result<[f64; 2]> { Ok(eval(p)?.0) };
        let mid = |k: [f64; 2]| [uv[0] + 0.5 * ds * k[0], uv[1] + 0.5 * ds * k[1]];
        let step_result = (|| -> Result<[f64; 2]> {
            let k2 = probe(mid(k1))?;
            let k3 = probe(mid(k2))?;
            let k4 = probe([uv[0] + ds * k3[0], uv[1] + ds * k3[1]])?;
            Ok([
                uv[0] + ds / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                uv[1] + ds / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ])
        })();
        match step_result {
            Ok(next) => uv = next,
            Err(e) => {
                truncated = true;
                stop_reason = stop(e);
                break;
            }
        }
    }

    Ok(TrajectoryRecord { curve, direction, step, nodes, truncated, stop_reason })
}

/// Angle values reconstructed along a curve, at the even trajectory nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiTrack {
    pub node_indices: Vec<usize>,
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
    /// True when propagation stopped early (angle guard for Jv curves).
    pub truncated: bool,
}

/// Core integrator: stride-2 RK4 over a sampled coefficient sequence. The
/// sequence must be sampled at uniform arclength intervals of step / 2;
/// `drive_sign` is the orientation of the traveled direction against the
/// canonical field (the connection part of the coefficients is already
/// measured along the traveled direction).
pub fn propagate_core(
    curve: CharCurve,
    sigma: f64,
    drive_sign: f64,
    phi0: f64,
    s: &[f64],
    coeffs: &[OdeCoeffs],
) -> PhiTrack {
    assert_eq!(s.len(), coeffs.len());
    let rhs = |c: &OdeCoeffs, phi: f64| c.wt12 + drive_sign * ode_drive(c, curve, sigma, phi);
    let angle_ok =
        |phi: f64| !matches!(curve, CharCurve::Jv) || phi.sin().abs() > 1e-6;

    let mut track = PhiTrack {
        node_indices: vec![0],
        s: vec![if s.is_empty() { 0.0 } else { s[0] }],
        phi: vec![phi0],
        truncated: false,
    };
    let mut phi = phi0;
    let mut i = 0;
    while i + 2 < s.len() {
        let h = s[i + 2] - s[i];
        let stages = (|| -> Option<f64> {
            if !angle_ok(phi) {
                return None;
            }
            let k1 = rhs(&coeffs[i], phi);
            let p2 = phi + 0.5 * h * k1;
            if !angle_ok(p2) {
                return None;
            }
            let k2 = rhs(&coeffs[i + 1], p2);
            let p3 = phi + 0.5 * h * k2;
            if !angle_ok(p3) {
                return None;
            }
            let k3 = rhs(&coeffs[i + 1], p3);
            let p4 = phi + h * k3;
            if !angle_ok(p4) {
                return None;
            }
            let k4 = rhs(&coeffs[i + 2], p4);
            Some(phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        })();
        match stages {
            Some(next) => phi = next,
            None => {
                track.truncated = true;
                break;
            }
        }
        i += 2;
        track.node_indices.push(i);
        track.s.push(s[i]);
        track.phi.push(phi);
    }
    track
}

/// Propagate an external copy of phi along a traced curve from `phi0`.
pub fn propagate_phi(record: &TrajectoryRecord, phi0: f64, sigma: f64) -> PhiTrack {
    let s: Vec<f64> = record.nodes.iter().map(|n| n.s).collect();
    let coeffs: Vec<OdeCoeffs> = record.nodes.iter().map(|n| n.coeffs).collect();
    propagate_core(record.curve, sigma, record.direction, phi0, &s, &coeffs)
}

/// The stages of the congruence pipeline, in evaluation order. Witness is
/// diagnostic: the verdict is decided by the stages before it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CongruenceStage {
    /// First fundamental form at the probe grid.
    Metric,
    /// Extrinsic curvature at the probe grid.
    ExtrinsicCurvature,
    /// |<N, xi>| at the probe grid (sign is not congruence-invariant).
    NormalAngle,
    /// Mean curvature magnitude at the probe grid.
    MeanCurvature,
    /// The member's phi satisfies the reference angle quadratic at seeds.
    SeedAngle,
    /// Frame invariants and reconstructed phi along characteristic curves.
    FrameField,
    /// An explicit ambient isometry fitted and verified by pullback.
    Witness,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: CongruenceStage,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub checked: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessReport {
    pub descriptor: IsometryDescriptor,
    /// Max chart distance between the mapped reference and the member.
    pub pullback_error: f64,
    /// True when the snapped isometry reproduces the member to roundoff.
    pub fitted: bool,
}

/// Outcome of the congruence test. `congruent` is decided by the stages
/// up to FrameField; the witness is reported separately because failing
/// to express the congruence in the supported isometry families does not
/// contradict the invariant agreement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CongruenceVerdict {
    pub congruent: bool,
    pub failed_stage: Option<CongruenceStage>,
    pub stages: Vec<StageReport>,
    /// Max discrepancy of the second-fundamental-form frame components.
    pub alpha_discrepancy: f64,
    pub witness: Option<WitnessReport>,
}

#[derive(Clone, Debug)]
pub struct CongruenceOptions {
    /// Probe grid for the pointwise stages.
    pub probe: (usize, usize),
    /// Seed net for characteristic curves.
    pub net: (usize, usize),
    /// Explicit curve seeds. When set they replace the net, and every one
    /// of them must be usable: a supplied point sitting on a frame guard
    /// (for instance a horizontal point) is a precondition violation, not
    /// something to skip.
    pub seeds: Option<Vec<[f64; 2]>>,
    /// Arclength per characteristic curve.
    pub curve_length: f64,
    /// Trajectory propagation step.
    pub step: f64,
    pub tol: f64,
}

impl Default for CongruenceOptions {
    fn default() -> Self {
        CongruenceOptions {
            probe: (10, 12),
            net: (2, 3),
            seeds: None,
            curve_length: 0.2,
            step: RK_STEP,
            tol: TOL_CONGRUENT,
        }
    }
}

fn precondition(what: &str) -> GeomError {
    GeomError::CongruencePrecondition { what: what.into() }
}

fn skippable(e: &GeomError) -> bool {
    matches!(
        e,
        GeomError::ResidualPrecondition { .. }
            | GeomError::FrameUndefined { .. }
            | GeomError::GradThetaVanishes { .. }
            | GeomError::OutsideDomain { .. }
            | GeomError::ContinuationStall { .. }
    )
}

/// Decide what a failed seed means: auto-generated seeds are skipped on
/// guard errors, explicitly supplied ones are load-bearing and turn the
/// same errors into precondition violations.
fn seed_guard(explicit: bool, seed: [f64; 2], e: GeomError) -> Result<()> {
    if !skippable(&e) {
        return Err(e);
    }
    if explicit {
        return Err(GeomError::CongruencePrecondition {
            what: format!("supplied point ({}, {}) is unusable: {e}", seed[0], seed[1]),
        });
    }
    Ok(())
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

fn wrap_gap(a: f64, b: f64) -> f64 {
    use std::f64::consts::PI;
    let mut d = (a - b + PI).rem_euclid(2.0 * PI) - PI;
    if d <= -PI {
        d += 2.0 * PI;
    }
    d.abs()
}

/// Solve a 4x4 linear system by Gaussian elimination with partial
/// pivoting; used by the affine witness fit.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for c in col..4 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let mut s = b[row];
        for c in row + 1..4 {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Least-squares affine map p -> L p + t sending `ps` to `qs`.
fn fit_affine(ps: &[V3], qs: &[V3]) -> Option<AffineIsometry> {
    let mut gram = [[0.0f64; 4]; 4];
    let mut rhs = [[0.0f64; 4]; 3];
    for (p, q) in ps.iter().zip(qs) {
        let row = [p.x, p.y, p.z, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                gram[i][j] += row[i] * row[j];
            }
            rhs[0][i] += row[i] * q.x;
            rhs[1][i] += row[i] * q.y;
            rhs[2][i] += row[i] * q.z;
        }
    }
    let rows: Vec<[f64; 4]> = (0..3)
        .map(|i| solve4(gram, rhs[i]))
        .collect::<Option<Vec<_>>>()?;
    Some(AffineIsometry {
        linear: crate::linalg::Mat3::from_rows([
            [rows[0][0], rows[0][1], rows[0][2]],
            [rows[1][0], rows[1][1], rows[1][2]],
            [rows[2][0], rows[2][1], rows[2][2]],
        ]),
        offset: crate::linalg::Vec3::new(rows[0][3], rows[1][3], rows[2][3]),
    })
}

/// Snap a fitted affine map to the supported isometry families. The base
/// block of a candidate is a rotation (direct) or a reflection (fiber-
/// reversing); translations come straight from the fitted offset.
fn snap_candidates(fit: &AffineIsometry, k: f64) -> Vec<IsometryDescriptor> {
    let m = &fit.linear.m;
    let t = fit.offset;
    let mut parts = Vec::new();
    if m[2][2] >= 0.0 {
        let beta = (m[1][0] - m[0][1]).atan2(m[0][0] + m[1][1]);
        parts.push(IsometryDescriptor::FiberRotation { beta });
    } else {
        let chi = (m[0][1] + m[1][0]).atan2(m[0][0] - m[1][1]);
        parts.push(IsometryDescriptor::HorizontalFlip { beta: 0.5 * chi });
    }
    if k == 0.0 {
        parts.push(IsometryDescriptor::HorizontalTranslation { a: t.x, b: t.y });
    }
    parts.push(IsometryDescriptor::VerticalTranslation { c: t.z });
    vec![IsometryDescriptor::Compose(parts)]
}

/// Run the congruence pipeline: pointwise invariants, the seed angle
/// against the reference quadratic, frame invariants and reconstructed
/// phi along characteristic curves, then an explicit witness isometry.
pub fn congruence_test(
    reference: &ParametrizedSurface,
    member: &ParametrizedSurface,
    branch: FrameBranch,
    opts: &CongruenceOptions,
) -> Result<CongruenceVerdict> {
    if reference.space.k != member.space.k || reference.space.tau != member.space.tau {
        return Err(precondition("surfaces live in different ambient spaces"));
    }
    let (dr, dm) = (&reference.domain, &member.domain);
    if (dr.u_min - dm.u_min).abs() > 1e-12
        || (dr.u_max - dm.u_max).abs() > 1e-12
        || (dr.v_min - dm.v_min).abs() > 1e-12
        || (dr.v_max - dm.v_max).abs() > 1e-12
        || dr.v_periodic != dm.v_periodic
    {
        return Err(precondition("parameter domains differ"));
    }

    let mut verdict = CongruenceVerdict {
        congruent: false,
        failed_stage: None,
        stages: Vec::new(),
        alpha_discrepancy: f64::NAN,
        witness: None,
    };
    let push_stage = |verdict: &mut CongruenceVerdict,
                          stage: CongruenceStage,
                          disc: f64,
                          tol: f64,
                          checked: usize|
     -> bool {
        let pass = disc <= tol && checked > 0;
        verdict.stages.push(StageReport {
            stage,
            max_discrepancy: disc,
            tolerance: tol,
            checked,
            pass,
        });
        if !pass && verdict.failed_stage.is_none() {
            verdict.failed_stage = Some(stage);
        }
        pass
    };

    // Pointwise stages share one sweep over the probe grid.
    let grid = reference.domain.grid(opts.probe.0, opts.probe.1);
    let mut disc_metric = 0.0f64;
    let mut disc_kext = 0.0f64;
    let mut disc_nu = 0.0f64;
    let mut disc_mean = 0.0f64;
    let mut checked = 0usize;
    for &uv in &grid {
        let a = point_data(reference, uv, branch)?;
        let b = point_data(member, uv, branch)?;
        for i in 0..3 {
            disc_metric = disc_metric.max(rel_gap(a.first[i], b.first[i]));
        }
        disc_kext = disc_kext.max(rel_gap(a.k_ext, b.k_ext));
        disc_nu = disc_nu.max((a.xi_normal.abs() - b.xi_normal.abs()).abs());
        disc_mean = disc_mean.max(rel_gap(a.mean.abs(), b.mean.abs()));
        checked += 1;
    }
    for (stage, disc) in [
        (CongruenceStage::Metric, disc_metric),
        (CongruenceStage::ExtrinsicCurvature, disc_kext),
        (CongruenceStage::NormalAngle, disc_nu),
        (CongruenceStage::MeanCurvature, disc_mean),
    ] {
        if !push_stage(&mut verdict, stage, disc, opts.tol, checked) {
            return Ok(verdict);
        }
    }

    // Seed stage: the member angle must satisfy the reference quadratic.
    // Evaluating the quadratic at the member's phi instead of matching
    // against solved roots keeps the comparison free of root conditioning:
    // for identical surfaces the residual is exactly the reference's own,
    // at roundoff.
    let explicit = opts.seeds.is_some();
    let seeds = match &opts.seeds {
        Some(s) => s.clone(),
        None => reference.domain.grid(opts.net.0, opts.net.1),
    };
    let mut disc_seed = 0.0f64;
    let mut seed_checked = 0usize;
    for &seed in &seeds {
        let q = match phi_quadratic(reference, seed, branch) {
            Ok(q) => q,
            Err(e) => {
                seed_guard(explicit, seed, e)?;
                continue;
            }
        };
        let phi_m = match point_data(member, seed, branch).map(|d| d.char_or_err().map(|c| c.phi))
        {
            Ok(Ok(p)) => p,
            Ok(Err(e)) | Err(e) => {
                seed_guard(explicit, seed, e)?;
                continue;
            }
        };
        let scale = q.coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
        let resid =
            (q.coeffs[0] * phi_m.sin() + q.coeffs[1] * phi_m.cos() + q.coeffs[2]).abs() / scale;
        disc_seed = disc_seed.max(resid);
        seed_checked += 1;
    }
    if seed_checked == 0 {
        return Err(precondition("no usable seeds for the angle stage"));
    }
    if !push_stage(&mut verdict, CongruenceStage::SeedAngle, disc_seed, opts.tol, seed_checked) {
        return Ok(verdict);
    }

    // Frame stage: trace characteristic curves on the reference, compare
    // invariants pointwise on both surfaces along them, then reconstruct
    // the angle along the same path from each surface's own evolution data
    // and compare the two reconstructions. Propagating both sides through
    // the same integrator over the same nodes cancels the integrator's own
    // drift, so identical surfaces sit at exactly zero here.
    let mut disc_frame = 0.0f64;
    let mut disc_alpha = 0.0f64;
    let mut frame_checked = 0usize;
    for &seed in &seeds {
        for curve in [CharCurve::V, CharCurve::Jv] {
            let rec = match integral_curve(
                reference,
                seed,
                branch,
                curve,
                1.0,
                opts.curve_length,
                opts.step,
            ) {
                Ok(r) => r,
                Err(e) => {
                    seed_guard(explicit, seed, e)?;
                    continue;
                }
            };
            if rec.nodes.len() < 3 {
                if explicit {
                    return Err(precondition(&format!(
                        "curve from supplied point ({}, {}) is too short to compare",
                        seed[0], seed[1]
                    )));
                }
                continue;
            }
            let mut member_coeffs = Vec::with_capacity(rec.nodes.len());
            let mut member_phi = Vec::with_capacity(rec.nodes.len());
            let mut drive_sign = 0.0f64;
            let mut ok = true;
            for node in &rec.nodes {
                let (a, b) = (
                    point_data(reference, node.uv, branch)?,
                    point_data(member, node.uv, branch)?,
                );
                let (fa, fb) = match (a.alpha_frame(), b.alpha_frame()) {
                    (Some(fa), Some(fb)) => (fa, fb),
                    _ => {
                        ok = false;
                        break;
                    }
                };
                for i in 0..3 {
                    disc_alpha = disc_alpha.max(rel_gap(fa[i], fb[i]));
                }
                let (wa, wb) = (
                    a.frame.as_ref().expect("frame present").grad_norm,
                    b.frame.as_ref().expect("frame present").grad_norm,
                );
                disc_frame = disc_frame.max(rel_gap(wa, wb));
                let (ca, cb) = (
                    a.frame.as_ref().unwrap().char_dir.as_ref().expect("char present"),
                    b.frame.as_ref().unwrap().char_dir.as_ref().expect("char present"),
                );
                disc_frame = disc_frame.max(wrap_gap(ca.phi, cb.phi));
                // Member coefficients along the reference-traveled path.
                let rates = dir_rates(member, node.uv, branch, node.field)?;
                let Some(wt12) = rates.wt12 else {
                    ok = false;
                    break;
                };
                let bfr = b.frame.as_ref().unwrap();
                if bfr.cos_theta.abs() < TRAJECTORY_COS_CAP {
                    ok = false;
                    break;
                }
                member_coeffs.push(OdeCoeffs {
                    wt12,
                    tan_theta: bfr.theta.sin() / bfr.cos_theta,
                    k_ext: b.k_ext,
                    w: bfr.grad_norm,
                    tau: member.space.tau,
                    phi: cb.phi,
                });
                member_phi.push(cb.phi);
                if drive_sign == 0.0 {
                    let vm = match curve {
                        CharCurve::V => cb.v,
                        CharCurve::Jv => cb.jv,
                    };
                    let comp = b.tangent_components(vm);
                    let dot = comp[0] * node.field[0] + comp[1] * node.field[1];
                    drive_sign = if dot >= 0.0 { 1.0 } else { -1.0 };
                }
            }
            if !ok || member_coeffs.len() < 3 {
                continue;
            }
            let n = member_coeffs.len();
            let s: Vec<f64> = rec.nodes[..n].iter().map(|nd| nd.s).collect();
            let ref_coeffs: Vec<OdeCoeffs> = rec.nodes[..n].iter().map(|nd| nd.coeffs).collect();
            let track_ref = propagate_core(curve, 1.0, 1.0, ref_coeffs[0].phi, &s, &ref_coeffs);
            let track_mem =
                propagate_core(curve, 1.0, drive_sign, member_phi[0], &s, &member_coeffs);
            let common = track_ref.phi.len().min(track_mem.phi.len());
            for i in 0..common {
                disc_frame = disc_frame.max(wrap_gap(track_ref.phi[i], track_mem.phi[i]));
            }
            frame_checked += 1;
        }
    }
    if frame_checked == 0 {
        return Err(precondition("no characteristic curve could be traced"));
    }
    verdict.alpha_discrepancy = disc_alpha;
    let frame_disc = disc_frame.max(disc_alpha);
    if !push_stage(&mut verdict, CongruenceStage::FrameField, frame_disc, opts.tol, frame_checked)
    {
        return Ok(verdict);
    }

    // Witness: fit the affine map on the probe grid, snap it to the
    // supported isometry families, verify by pullback.
    let ps: Vec<V3> = grid.iter().map(|&uv| reference.position_at(uv)).collect();
    let qs: Vec<V3> = grid.iter().map(|&uv| member.position_at(uv)).collect();
    let scale = qs.iter().map(|q| q.norm_chart()).fold(1.0f64, f64::max);
    let witness_tol = 1e-8 * scale;
    let mut best: Option<WitnessReport> = None;
    if let Some(fit) = fit_affine(&ps, &qs) {
        for cand in snap_candidates(&fit, reference.space.k) {
            let Ok(aff) = cand.to_affine(&reference.space) else { continue };
            let err = ps
                .iter()
                .zip(&qs)
                .map(|(p, q)| (aff.apply_point(*p) - *q).norm_chart())
                .fold(0.0f64, f64::max);
            if best.as_ref().map_or(true, |b| err < b.pullback_error) {
                best = Some(WitnessReport {
                    descriptor: cand,
                    pullback_error: err,
                    fitted: err <= witness_tol,
                });
            }
        }
    }
    let (w_disc, w_checked) = best
        .as_ref()
        .map_or((f64::INFINITY, 0), |b| (b.pullback_error, ps.len()));
    push_stage(&mut verdict, CongruenceStage::Witness, w_disc, witness_tol, w_checked);
    verdict.witness = best;

    // The verdict rests on the invariant stages; the witness is reported.
    verdict.congruent = verdict
        .stages
        .iter()
        .filter(|s| s.stage != CongruenceStage::Witness)
        .all(|s| s.pass);
    if verdict.failed_stage == Some(CongruenceStage::Witness) {
        verdict.failed_stage = None;
    }
    Ok(verdict)
}

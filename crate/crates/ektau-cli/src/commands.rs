//! The four subcommands. Heavy sweeps fan out over cells or grid rows
//! with deterministic per-cell RNG streams; all file output is assembled
//! in index order so identical configs produce identical bytes.

use crate::config::RunConfig;
use crate::report::{fmt_e, write_text};
use crate::CliError;
use ektau::equations::{
    equation_suite, horizontal_point_check, vertical_point_check, EquationId, EquationStat,
};
use ektau::examples::{
    isometric_family, perturbed_family, standard_iso_path, standard_specs, BuiltSurface,
    SurfaceSpec,
};
use ektau::exec::map_indexed;
use ektau::reconstruct::{congruence_test, CongruenceOptions, CongruenceStage, StageReport, WitnessReport};
use ektau::space::SpaceParams;
use ektau::surface::locate::{find_horizontal_points, vertical_locus, TraceConfig};
use ektau::surface::{point_data, FrameBranch, ParametrizedSurface, PerturbMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;

fn config_err(context: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{context}: {e}"))
}

fn empty_stat(equation: EquationId, tolerance: f64) -> EquationStat {
    EquationStat {
        equation,
        checked: 0,
        skipped: 0,
        max_abs: 0.0,
        max_rel: 0.0,
        mean_rel: 0.0,
        worst_uv: [f64::NAN; 2],
        tolerance,
        pass: true,
    }
}

fn feed_stat(st: &mut EquationStat, abs: f64, rel: f64, uv: [f64; 2]) {
    st.checked += 1;
    st.max_abs = st.max_abs.max(abs);
    // mean_rel holds the running sum until finish_stat.
    st.mean_rel += rel;
    if rel >= st.max_rel {
        st.max_rel = rel;
        st.worst_uv = uv;
    }
}

fn finish_stat(st: &mut EquationStat) {
    if st.checked > 0 {
        st.mean_rel /= st.checked as f64;
        st.pass = st.pass && st.max_rel <= st.tolerance;
    }
}

struct CellOutcome {
    stats: Vec<EquationStat>,
    notes: Vec<String>,
    error: Option<String>,
}

// ---------------------------------------------------------------- verify

pub fn cmd_verify(cfg: &RunConfig, out_dir: &Path) -> Result<i32, CliError> {
    let mut cells: Vec<(SpaceParams, &SurfaceSpec)> = Vec::new();
    for space in &cfg.verify.spaces {
        for spec in &cfg.surfaces {
            cells.push((*space, spec));
        }
    }
    // Build every surface up front: a config that cannot be realized is a
    // config error, not a verification failure.
    let mut built = Vec::with_capacity(cells.len());
    for (space, spec) in &cells {
        let b = spec.build(*space).map_err(|e| {
            config_err(
                &format!("surface {:?} in (k={}, tau={})", spec.name, space.k, space.tau),
                e,
            )
        })?;
        built.push(b);
    }

    let outcomes = map_indexed(cells.len(), |i| run_cell(cfg, cells[i].0, &built[i], i as u64));

    let mut csv = String::from(
        "k,tau,surface,equation,checked,skipped,max_abs,max_rel,mean_rel,tolerance,pass\n",
    );
    let mut summary = String::new();
    let mut first_fail: Option<String> = None;
    for (i, oc) in outcomes.iter().enumerate() {
        let (space, spec) = (cells[i].0, cells[i].1);
        summary.push_str(&format!("(k={}, tau={}) {}\n", space.k, space.tau, spec.name));
        if let Some(err) = &oc.error {
            summary.push_str(&format!("  ERROR {err}\n"));
            first_fail.get_or_insert_with(|| {
                format!("{} (k={}, tau={}): {err}", spec.name, space.k, space.tau)
            });
            continue;
        }
        for st in &oc.stats {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt_e(space.k),
                fmt_e(space.tau),
                spec.name,
                st.equation.name(),
                st.checked,
                st.skipped,
                fmt_e(st.max_abs),
                fmt_e(st.max_rel),
                fmt_e(st.mean_rel),
                fmt_e(st.tolerance),
                st.pass,
            ));
            summary.push_str(&format!(
                "  {:<22} checked {:>4} skipped {:>3} max rel {:>10.3e} tol {:.0e} {}\n",
                st.equation.name(),
                st.checked,
                st.skipped,
                st.max_rel,
                st.tolerance,
                if st.pass { "pass" } else { "FAIL" },
            ));
            if !st.pass {
                first_fail.get_or_insert_with(|| {
                    format!(
                        "equation {} on {} (k={}, tau={}): max rel {:.3e} exceeds {:.0e}",
                        st.equation.name(),
                        spec.name,
                        space.k,
                        space.tau,
                        st.max_rel,
                        st.tolerance
                    )
                });
            }
        }
        for note in &oc.notes {
            summary.push_str(&format!("  note: {note}\n"));
        }
    }
    let verdict = match &first_fail {
        None => "verification PASSED".to_string(),
        Some(f) => format!("verification FAILED: {f}"),
    };
    summary.push_str(&verdict);
    summary.push('\n');

    write_text(&out_dir.join("verify.csv"), &csv)?;
    write_text(&out_dir.join("verify_summary.txt"), &summary)?;
    print!("{summary}");
    Ok(if first_fail.is_none() { 0 } else { 1 })
}

fn run_cell(cfg: &RunConfig, space: SpaceParams, built: &BuiltSurface, stream: u64) -> CellOutcome {
    match run_cell_inner(cfg, space, built, stream) {
        Ok(oc) => oc,
        Err(e) => CellOutcome { stats: Vec::new(), notes: Vec::new(), error: Some(e.to_string()) },
    }
}

fn run_cell_inner(
    cfg: &RunConfig,
    space: SpaceParams,
    built: &BuiltSurface,
    stream: u64,
) -> ektau::error::Result<CellOutcome> {
    let surface = &built.surface;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream + 1);
    let points: Vec<[f64; 2]> = (0..cfg.grid.samples)
        .map(|_| surface.domain.sample(&mut rng))
        .collect();
    let label = format!("{} (k={}, tau={})", built.name, space.k, space.tau);
    let suite = equation_suite(surface, &label, &points, FrameBranch::Principal, 1.0)?;
    let mut stats = suite.stats;
    for st in stats.iter_mut() {
        st.tolerance = cfg.tolerances.for_equation(st.equation);
        st.pass = st.max_rel <= st.tolerance;
    }
    let mut notes = Vec::new();
    stats.push(vertical_rate_stat(cfg, built, &mut notes));
    stats.push(horizontal_stat(cfg, built, &mut notes));
    Ok(CellOutcome { stats, notes, error: None })
}

/// Compare dg(xi) against the normal curvature of the traced fiber-cut
/// curve at points pulled onto the vertical locus. Only meaningful (and
/// well conditioned) on convex surfaces.
fn vertical_rate_stat(cfg: &RunConfig, built: &BuiltSurface, notes: &mut Vec<String>) -> EquationStat {
    let mut stat = empty_stat(EquationId::VerticalRate, cfg.tolerances.traced);
    if !built.convexity.convex {
        return stat;
    }
    let surface = &built.surface;
    let curves = match vertical_locus(
        surface,
        cfg.grid.locus_scan[0],
        cfg.grid.locus_scan[1],
        &TraceConfig::default(),
    ) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("vertical locus trace failed: {e}"));
            stat.pass = false;
            return stat;
        }
    };
    let Some(curve) = curves.iter().max_by_key(|c| c.nodes.len()) else {
        notes.push("no vertical locus inside the domain".into());
        return stat;
    };
    let n = cfg.grid.vertical_checks.max(1);
    let mut first_err: Option<String> = None;
    for j in 0..n {
        let node = curve.nodes[(2 * j + 1) * curve.nodes.len() / (2 * n)];
        match vertical_point_check(surface, node, FrameBranch::Principal) {
            Ok(c) => {
                let scale = c.dg_xi.abs().max(c.curve_normal_curvature.abs()).max(1.0);
                feed_stat(&mut stat, c.residual, c.residual / scale, node);
            }
            Err(e) => {
                stat.skipped += 1;
                first_err.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if let Some(e) = first_err {
        notes.push(format!("vertical-rate check errors ({} of {n}): {e}", stat.skipped));
    }
    if stat.checked == 0 {
        // Convex with a locus present: the check was expected to run.
        stat.pass = false;
    }
    finish_stat(&mut stat);
    stat
}

/// Exact dual-route Jacobian of the horizontal projection of xi at the
/// horizontal points, against the target built from the principal
/// curvatures in the xi-oriented basis.
fn horizontal_stat(cfg: &RunConfig, built: &BuiltSurface, notes: &mut Vec<String>) -> EquationStat {
    let mut stat = empty_stat(EquationId::HorizontalJacobian, cfg.tolerances.integrated);
    if !built.convexity.convex {
        return stat;
    }
    let pts = match find_horizontal_points(
        &built.surface,
        cfg.grid.horizontal_scan[0],
        cfg.grid.horizontal_scan[1],
    ) {
        Ok(p) => p,
        Err(e) => {
            notes.push(format!("horizontal point scan failed: {e}"));
            stat.pass = false;
            return stat;
        }
    };
    for hp in &pts {
        match horizontal_point_check(&built.surface, hp) {
            Ok(c) => {
                let scale = c
                    .oriented_target
                    .iter()
                    .flatten()
                    .fold(0.0f64, |m, e| m.max(e.abs()))
                    .max(1.0);
                feed_stat(&mut stat, c.oriented_deviation, c.oriented_deviation / scale, hp.uv);
                notes.push(format!(
                    "horizontal point (u={:.4}, v={:.4}): oriented deviation {:.2e}, \
                     unoriented deviation {:.2e}, det {:.6} (target {:.6})",
                    hp.uv[0],
                    hp.uv[1],
                    c.oriented_deviation,
                    c.literal_deviation,
                    c.det_measured,
                    c.det_oriented,
                ));
            }
            Err(e) => {
                stat.skipped += 1;
                stat.pass = false;
                notes.push(format!(
                    "horizontal check failed at (u={:.4}, v={:.4}): {e}",
                    hp.uv[0], hp.uv[1]
                ));
            }
        }
    }
    finish_stat(&mut stat);
    stat
}

// --------------------------------------------------------------- analyze

const ANALYZE_HEADER: &str =
    "u,v,x,y,z,E,F,G,H,K_e,K,g,theta,phi,grad_theta_norm,lambda1,lambda2,horizontal_flag\n";

pub fn cmd_analyze(cfg: &RunConfig, name: Option<&str>, out_dir: &Path) -> Result<i32, CliError> {
    let name = name.unwrap_or(&cfg.surfaces[0].name);
    let spec = cfg.surface_by_name(name)?;
    let built = spec
        .build(cfg.space)
        .map_err(|e| config_err(&format!("surface {:?}", spec.name), e))?;
    let grid = built.surface.domain.grid(cfg.grid.analyze[0], cfg.grid.analyze[1]);
    let rows = map_indexed(grid.len(), |i| analyze_row(&built.surface, grid[i]));
    let mut csv = String::from(ANALYZE_HEADER);
    for row in rows {
        csv.push_str(&row.map_err(|e| CliError::Runtime(e.to_string()))?);
    }
    let path = out_dir.join(format!("analyze_{}.csv", spec.name));
    write_text(&path, &csv)?;
    println!(
        "wrote {} rows for {} (k={}, tau={}) to {}",
        grid.len(),
        spec.name,
        cfg.space.k,
        cfg.space.tau,
        path.display()
    );
    Ok(0)
}

fn analyze_row(surface: &ParametrizedSurface, uv: [f64; 2]) -> ektau::error::Result<String> {
    let d = point_data(surface, uv, FrameBranch::Principal)?;
    let (theta, phi, grad_norm, flag) = match &d.frame {
        Some(f) => (
            f.theta,
            f.char_dir.map(|c| c.phi).unwrap_or(f64::NAN),
            f.grad_norm,
            0,
        ),
        // At a horizontal point the frame degenerates but the angle is
        // still pinned by g = sin(theta).
        None => (d.xi_normal.clamp(-1.0, 1.0).asin(), f64::NAN, f64::NAN, 1),
    };
    let cells = [
        uv[0],
        uv[1],
        d.pos.x,
        d.pos.y,
        d.pos.z,
        d.first[0],
        d.first[1],
        d.first[2],
        d.mean,
        d.k_ext,
        d.k_int,
        d.xi_normal,
        theta,
        phi,
        grad_norm,
        d.lambda[0],
        d.lambda[1],
    ];
    let mut line = String::new();
    for c in cells {
        line.push_str(&fmt_e(c));
        line.push(',');
    }
    line.push_str(&format!("{flag}\n"));
    Ok(line)
}

// -------------------------------------------------------------- rigidity

#[derive(Serialize)]
struct MemberReport {
    parameter: f64,
    congruent: bool,
    error: Option<String>,
    failed_stage: Option<CongruenceStage>,
    alpha_discrepancy: Option<f64>,
    stages: Vec<StageReport>,
    witness: Option<WitnessReport>,
}

#[derive(Serialize)]
struct RigidityReport<'a> {
    space: SpaceParams,
    reference: &'a str,
    family: &'a str,
    congruence_tolerance: f64,
    members: Vec<MemberReport>,
    all_congruent: bool,
}

pub fn cmd_rigidity(cfg: &RunConfig, out_dir: &Path) -> Result<i32, CliError> {
    let spec = cfg.surface_by_name(&cfg.rigidity.reference)?;
    let built = spec
        .build(cfg.space)
        .map_err(|e| config_err(&format!("surface {:?}", spec.name), e))?;
    let reference = &built.surface;
    let opts = CongruenceOptions {
        probe: (cfg.trajectories.probe[0], cfg.trajectories.probe[1]),
        net: (cfg.trajectories.net[0], cfg.trajectories.net[1]),
        seeds: cfg.rigidity.points.clone(),
        curve_length: cfg.trajectories.curve_length,
        step: cfg.trajectories.step,
        tol: cfg.tolerances.congruence,
    };

    let members: Vec<(f64, ParametrizedSurface)> = match cfg.rigidity.family.as_str() {
        "isometric" => {
            isometric_family(reference, standard_iso_path(cfg.space.k), &cfg.rigidity.t_values)
                .map_err(|e| config_err("isometric family", e))?
                .into_iter()
                .map(|m| (m.t, m.surface))
                .collect()
        }
        "perturbed" => {
            let center = spec.perturbation_center(reference);
            perturbed_family(reference, center, PerturbMode::Bump, &cfg.rigidity.amplitudes)
                .into_iter()
                .map(|m| (m.amplitude, m.surface))
                .collect()
        }
        other => return Err(CliError::Config(format!("unknown family {other:?}"))),
    };

    let verdicts = map_indexed(members.len(), |i| {
        congruence_test(reference, &members[i].1, FrameBranch::Principal, &opts)
    });

    let param_name = if cfg.rigidity.family == "isometric" { "t" } else { "amplitude" };
    let mut reports = Vec::with_capacity(members.len());
    let mut all_congruent = true;
    let mut lines = String::new();
    for ((parameter, _), verdict) in members.iter().zip(verdicts) {
        let entry = match verdict {
            Ok(v) => {
                all_congruent &= v.congruent;
                if v.congruent {
                    let witness = match &v.witness {
                        Some(w) if w.fitted => {
                            format!("witness {:?} (pullback {:.2e})", w.descriptor, w.pullback_error)
                        }
                        _ => "no fitted witness".to_string(),
                    };
                    lines.push_str(&format!(
                        "{param_name}={parameter}: congruent, alpha discrepancy {:.3e}, {witness}\n",
                        v.alpha_discrepancy
                    ));
                } else {
                    let stage = v
                        .failed_stage
                        .map(|s| format!("{s:?}"))
                        .unwrap_or_else(|| "unknown".into());
                    let disc = v
                        .stages
                        .iter()
                        .find(|s| !s.pass)
                        .map(|s| format!(" (discrepancy {:.3e} > {:.0e})", s.max_discrepancy, s.tolerance))
                        .unwrap_or_default();
                    lines.push_str(&format!(
                        "{param_name}={parameter}: NOT congruent, failed at {stage}{disc}\n"
                    ));
                }
                MemberReport {
                    parameter: *parameter,
                    congruent: v.congruent,
                    error: None,
                    failed_stage: v.failed_stage,
                    alpha_discrepancy: Some(v.alpha_discrepancy),
                    stages: v.stages,
                    witness: v.witness,
                }
            }
            Err(e) => {
                all_congruent = false;
                lines.push_str(&format!("{param_name}={parameter}: ERROR {e}\n"));
                MemberReport {
                    parameter: *parameter,
                    congruent: false,
                    error: Some(e.to_string()),
                    failed_stage: None,
                    alpha_discrepancy: None,
                    stages: Vec::new(),
                    witness: None,
                }
            }
        };
        reports.push(entry);
    }

    let report = RigidityReport {
        space: cfg.space,
        reference: &cfg.rigidity.reference,
        family: &cfg.rigidity.family,
        congruence_tolerance: opts.tol,
        members: reports,
        all_congruent,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("report serialization: {e}")))?;
    write_text(&out_dir.join("rigidity.json"), &(json + "\n"))?;
    print!("{lines}");
    println!(
        "rigidity: {} of {} members congruent",
        report.members.iter().filter(|m| m.congruent).count(),
        report.members.len()
    );
    Ok(if all_congruent { 0 } else { 1 })
}

// -------------------------------------------------------------- examples

#[derive(Serialize)]
struct ExampleReport {
    name: String,
    family: &'static str,
    source: &'static str,
    convex: bool,
    points: usize,
    min_k_ext: f64,
    max_k_ext: f64,
    min_margin: f64,
    min_lambda: f64,
    horizontal_points: Option<usize>,
}

pub fn cmd_examples(cfg: &RunConfig, out_dir: &Path) -> Result<i32, CliError> {
    let mut catalog: Vec<(&'static str, SurfaceSpec)> =
        cfg.surfaces.iter().cloned().map(|s| ("configured", s)).collect();
    for spec in standard_specs(cfg.space) {
        if !catalog.iter().any(|(_, s)| s.name == spec.name) {
            catalog.push(("standard", spec));
        }
    }
    let entries = map_indexed(catalog.len(), |i| example_entry(cfg, catalog[i].0, &catalog[i].1));
    let mut reports = Vec::with_capacity(entries.len());
    for entry in entries {
        reports.push(entry.map_err(CliError::Config)?);
    }

    println!("examples in (k={}, tau={}):", cfg.space.k, cfg.space.tau);
    for r in &reports {
        let horizontal = match r.horizontal_points {
            Some(n) => format!(", {n} horizontal points"),
            None => String::new(),
        };
        println!(
            "  {:<16} {:<18} [{}] convex={} min K_e={:.4} margin={:.4} min lambda={:.4}{}",
            r.name, r.family, r.source, r.convex, r.min_k_ext, r.min_margin, r.min_lambda, horizontal
        );
    }
    let json = serde_json::to_string_pretty(&reports)
        .map_err(|e| CliError::Runtime(format!("report serialization: {e}")))?;
    write_text(&out_dir.join("examples.json"), &(json + "\n"))?;
    Ok(0)
}

fn example_entry(
    cfg: &RunConfig,
    source: &'static str,
    spec: &SurfaceSpec,
) -> Result<ExampleReport, String> {
    let built = spec
        .build(cfg.space)
        .map_err(|e| format!("surface {:?}: {e}", spec.name))?;
    let horizontal_points = if built.convexity.convex && built.surface.domain.v_periodic {
        find_horizontal_points(
            &built.surface,
            cfg.grid.horizontal_scan[0],
            cfg.grid.horizontal_scan[1],
        )
        .map(|p| p.len())
        .ok()
    } else {
        None
    };
    let c = built.convexity;
    Ok(ExampleReport {
        name: built.name,
        family: spec.family.label(),
        source,
        convex: c.convex,
        points: c.points,
        min_k_ext: c.min_k_ext,
        max_k_ext: c.max_k_ext,
        min_margin: c.min_margin,
        min_lambda: c.min_lambda,
        horizontal_points,
    })
}

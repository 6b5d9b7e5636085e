//! Reproducible surface families: the convex stock (coordinate spheres
//! and squashed variants), flat vertical planes, graphs, and the
//! deformation families driven through the congruence test.
//!
//! Coordinate shapes rather than geodesic ones: their jets are closed
//! forms, and convexity is verified at runtime by a report instead of
//! being assumed.

use crate::error::{GeomError, Result};
use crate::linalg::{Vec3, V3};
use crate::space::isometry::IsometryDescriptor;
use crate::space::SpaceParams;
use crate::surface::{
    point_data, Domain, FrameBranch, Geometry, ParametrizedSurface, PerturbMode,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Margin kept between the sphere domain and its coordinate poles, where
/// the (u, v) parametrization degenerates.
pub const SPHERE_POLE_MARGIN: f64 = 0.35;

/// Convexity summary over a sample grid: extremes of the extrinsic
/// curvature, the convexity margin K_e - tau^2, and the smaller principal
/// curvature.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub points: usize,
    pub min_k_ext: f64,
    pub max_k_ext: f64,
    /// min over the grid of K_e - tau^2.
    pub min_margin: f64,
    /// min over the grid of the smaller principal curvature.
    pub min_lambda: f64,
    pub convex: bool,
}

pub fn convexity_report(
    surface: &ParametrizedSurface,
    nu: usize,
    nv: usize,
) -> Result<ConvexityReport> {
    let tau = surface.space.tau;
    let mut rep = ConvexityReport {
        points: 0,
        min_k_ext: f64::INFINITY,
        max_k_ext: f64::NEG_INFINITY,
        min_margin: f64::INFINITY,
        min_lambda: f64::INFINITY,
        convex: false,
    };
    for uv in surface.domain.grid(nu, nv) {
        let d = point_data(surface, uv, FrameBranch::Principal)?;
        rep.points += 1;
        rep.min_k_ext = rep.min_k_ext.min(d.k_ext);
        rep.max_k_ext = rep.max_k_ext.max(d.k_ext);
        rep.min_margin = rep.min_margin.min(d.k_ext - tau * tau);
        rep.min_lambda = rep.min_lambda.min(d.lambda[1]);
    }
    rep.convex = rep.points > 0 && rep.min_margin > 0.0 && rep.min_lambda > 0.0;
    Ok(rep)
}

fn sphere_domain() -> Domain {
    Domain {
        u_min: SPHERE_POLE_MARGIN,
        u_max: PI - SPHERE_POLE_MARGIN,
        v_min: 0.0,
        v_max: 2.0 * PI,
        v_periodic: true,
    }
}

/// Chart-coordinate sphere. Convexity is a property of the ambient
/// geometry, not the chart shape, so check the report on the result.
pub fn coordinate_sphere(params: SpaceParams, center: V3, r: f64) -> ParametrizedSurface {
    ParametrizedSurface {
        space: params,
        domain: sphere_domain(),
        geometry: Geometry::Sphere { center, r },
    }
}

/// Preimage of the base geodesic through the chart origin at angle
/// `direction`: flat, extrinsic curvature identically -tau^2, totally
/// geodesic exactly when tau = 0.
pub fn vertical_plane(params: SpaceParams, direction: f64) -> ParametrizedSurface {
    ParametrizedSurface {
        space: params,
        domain: Domain { u_min: -0.8, u_max: 0.8, v_min: -1.0, v_max: 1.0, v_periodic: false },
        geometry: Geometry::VerticalPlane { beta: direction },
    }
}

/// Quadratic graph z = c0 + c1 u + c2 v + c3 u^2 + c4 u v + c5 v^2 over a
/// small chart square. The square is kept small: far from the axis the
/// twisted metric shears the normal enough to lose convexity even for a
/// Euclidean-convex bowl.
pub fn quadratic_graph(params: SpaceParams, coefficients: [f64; 6]) -> ParametrizedSurface {
    ParametrizedSurface {
        space: params,
        domain: Domain { u_min: -0.3, u_max: 0.3, v_min: -0.3, v_max: 0.3, v_periodic: false },
        geometry: Geometry::Graph { c: coefficients },
    }
}

/// Squashed coordinate sphere with semi-axes r, a r, b r: the stock
/// "custom expression" example.
pub fn chart_ellipsoid(
    params: SpaceParams,
    center: V3,
    r: f64,
    axis_scales: [f64; 2],
) -> ParametrizedSurface {
    ParametrizedSurface {
        space: params,
        domain: sphere_domain(),
        geometry: Geometry::Ellipsoid { center, r, a: axis_scales[0], b: axis_scales[1] },
    }
}

/// Declarative surface description: the config-file schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    CoordinateSphere { center: [f64; 3], radius: f64 },
    VerticalPlane { direction: f64 },
    Graph { coefficients: [f64; 6] },
    CustomExpression { center: [f64; 3], radius: f64, axis_scales: [f64; 2] },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub u: [f64; 2],
    pub v: [f64; 2],
    #[serde(default)]
    pub v_periodic: bool,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub amplitude: f64,
    pub mode: PerturbMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub name: String,
    #[serde(flatten)]
    pub family: FamilySpec,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub perturbation: Option<PerturbSpec>,
}

/// A spec realized as geometry, with its invariants checked: the surface
/// is verified to be an immersion on its domain and carries a convexity
/// report.
#[derive(Clone, Debug)]
pub struct BuiltSurface {
    pub name: String,
    pub surface: ParametrizedSurface,
    pub convexity: ConvexityReport,
}

fn invalid(what: String) -> GeomError {
    GeomError::InvalidConfig { what }
}

impl FamilySpec {
    pub fn label(&self) -> &'static str {
        match self {
            FamilySpec::CoordinateSphere { .. } => "coordinate-sphere",
            FamilySpec::VerticalPlane { .. } => "vertical-plane",
            FamilySpec::Graph { .. } => "graph",
            FamilySpec::CustomExpression { .. } => "custom-expression",
        }
    }
}

impl SurfaceSpec {
    /// Center used for radial perturbations: the family's natural center
    /// when it has one, else the chart point over the domain midpoint.
    pub fn perturbation_center(&self, surface: &ParametrizedSurface) -> V3 {
        match &self.family {
            FamilySpec::CoordinateSphere { center, .. }
            | FamilySpec::CustomExpression { center, .. } => {
                Vec3::new(center[0], center[1], center[2])
            }
            _ => {
                let mid = [
                    0.5 * (surface.domain.u_min + surface.domain.u_max),
                    0.5 * (surface.domain.v_min + surface.domain.v_max),
                ];
                surface.position_at(mid)
            }
        }
    }

    pub fn build(&self, params: SpaceParams) -> Result<BuiltSurface> {
        let mut surface = match &self.family {
            FamilySpec::CoordinateSphere { center, radius } => {
                if *radius <= 0.0 {
                    return Err(invalid(format!(
                        "surface {}: radius must be positive, got {radius}",
                        self.name
                    )));
                }
                coordinate_sphere(params, Vec3::new(center[0], center[1], center[2]), *radius)
            }
            FamilySpec::VerticalPlane { direction } => vertical_plane(params, *direction),
            FamilySpec::Graph { coefficients } => quadratic_graph(params, *coefficients),
            FamilySpec::CustomExpression { center, radius, axis_scales } => {
                if *radius <= 0.0 || axis_scales.iter().any(|s| *s <= 0.0) {
                    return Err(invalid(format!(
                        "surface {}: radius and axis scales must be positive",
                        self.name
                    )));
                }
                chart_ellipsoid(
                    params,
                    Vec3::new(center[0], center[1], center[2]),
                    *radius,
                    *axis_scales,
                )
            }
        };
        if let Some(d) = &self.domain {
            if d.u[1] <= d.u[0] || d.v[1] <= d.v[0] {
                return Err(invalid(format!("surface {}: empty domain", self.name)));
            }
            surface.domain = Domain {
                u_min: d.u[0],
                u_max: d.u[1],
                v_min: d.v[0],
                v_max: d.v[1],
                v_periodic: d.v_periodic,
            };
        }
        if let Some(p) = &self.perturbation {
            if p.amplitude < 0.0 {
                return Err(invalid(format!(
                    "surface {}: perturbation amplitude must be nonnegative",
                    self.name
                )));
            }
            let center = self.perturbation_center(&surface);
            surface.geometry = Geometry::RadialPerturbed {
                base: Box::new(surface.geometry.clone()),
                center,
                amplitude: p.amplitude,
                mode: p.mode,
            };
        }
        surface.immersion_check(24, 24)?;
        let convexity = convexity_report(&surface, 24, 24)?;
        Ok(BuiltSurface { name: self.name.clone(), surface, convexity })
    }
}

/// The default example set for one ambient space: a small convex sphere,
/// its squashed variant, a convex graph, and a vertical plane. For the
/// untwisted Euclidean space the classical round sphere of radius 2 is
/// included as well.
pub fn standard_specs(params: SpaceParams) -> Vec<SurfaceSpec> {
    let mut specs = vec![
        SurfaceSpec {
            name: "sphere-small".into(),
            family: FamilySpec::CoordinateSphere { center: [0.0, 0.5, 0.0], radius: 0.1 },
            domain: None,
            perturbation: None,
        },
        SurfaceSpec {
            name: "sphere-squashed".into(),
            family: FamilySpec::CustomExpression {
                center: [0.0, 0.5, 0.0],
                radius: 0.1,
                axis_scales: [1.15, 0.9],
            },
            domain: None,
            perturbation: None,
        },
        SurfaceSpec {
            name: "bowl".into(),
            family: FamilySpec::Graph { coefficients: [0.0, 0.0, 0.0, 1.5, 0.0, 1.5] },
            domain: None,
            perturbation: None,
        },
        SurfaceSpec {
            name: "plane-vertical".into(),
            family: FamilySpec::VerticalPlane { direction: 0.6 },
            domain: None,
            perturbation: None,
        },
    ];
    if params.k == 0.0 && params.tau == 0.0 {
        specs.insert(
            0,
            SurfaceSpec {
                name: "sphere-round".into(),
                family: FamilySpec::CoordinateSphere { center: [0.0, 0.0, 0.0], radius: 2.0 },
                domain: None,
                perturbation: None,
            },
        );
    }
    specs
}

/// One member of a deformation family.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub t: f64,
    pub descriptor: IsometryDescriptor,
    pub surface: ParametrizedSurface,
}

/// Push a surface through a path of ambient isometries. The path must
/// start at the identity; every member is congruent to the base by
/// construction, which is what the congruence test is fed to confirm.
pub fn isometric_family<F>(
    surface: &ParametrizedSurface,
    iso_path: F,
    ts: &[f64],
) -> Result<Vec<FamilyMember>>
where
    F: Fn(f64) -> IsometryDescriptor,
{
    let at_zero = iso_path(0.0).to_affine(&surface.space)?;
    let mut dev = at_zero.offset.norm_chart();
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((at_zero.linear.m[i][j] - id).abs());
        }
    }
    if dev > 1e-12 {
        return Err(invalid("family path must start at the identity".into()));
    }
    ts.iter()
        .map(|&t| {
            let descriptor = iso_path(t);
            let aff = descriptor.to_affine(&surface.space)?;
            Ok(FamilyMember {
                t,
                descriptor,
                surface: ParametrizedSurface {
                    space: surface.space,
                    domain: surface.domain,
                    geometry: Geometry::Mapped {
                        base: Box::new(surface.geometry.clone()),
                        map: aff,
                    },
                },
            })
        })
        .collect()
}

/// The stock isometry path: fiber rotation plus vertical translation,
/// with a horizontal translation mixed in when the base is flat.
pub fn standard_iso_path(k: f64) -> impl Fn(f64) -> IsometryDescriptor {
    move |t: f64| {
        let mut parts = vec![IsometryDescriptor::FiberRotation { beta: 0.9 * t }];
        if k == 0.0 {
            parts.push(IsometryDescriptor::HorizontalTranslation { a: 0.12 * t, b: -0.2 * t });
        }
        parts.push(IsometryDescriptor::VerticalTranslation { c: 0.35 * t });
        IsometryDescriptor::Compose(parts)
    }
}

/// One member of a perturbation family.
#[derive(Clone, Debug)]
pub struct PerturbedMember {
    pub amplitude: f64,
    pub surface: ParametrizedSurface,
}

/// Radially perturbed copies of a surface: the negative controls for the
/// congruence test. Amplitude zero reproduces the base exactly.
pub fn perturbed_family(
    surface: &ParametrizedSurface,
    center: V3,
    mode: PerturbMode,
    amplitudes: &[f64],
) -> Vec<PerturbedMember> {
    amplitudes
        .iter()
        .map(|&amplitude| PerturbedMember {
            amplitude,
            surface: ParametrizedSurface {
                space: surface.space,
                domain: surface.domain,
                geometry: Geometry::RadialPerturbed {
                    base: Box::new(surface.geometry.clone()),
                    center,
                    amplitude,
                    mode,
                },
            },
        })
        .collect()
}

//! Ambient isometries of E(k, tau) expressible in the chart.
//!
//! Every supported isometry is affine in chart coordinates, so the
//! differential is a constant matrix and jets of any order transport
//! exactly. Supported families:
//!
//! * vertical translation along the fibers (all k, tau),
//! * rotation about the fiber through the chart origin (all k, tau),
//! * horizontal translation with its fiber shear (k = 0 only; for k != 0
//!   translations of the base do not act affinely in this chart),
//! * half-turn about a horizontal geodesic through the origin, which
//!   reverses the fibers (all k, tau).

use super::{metric_at, SpaceParams};
use crate::error::{GeomError, Result};
use crate::linalg::{Mat3, Vec3, M3, V3};
use serde::{Deserialize, Serialize};

/// Description of one ambient isometry, or a composition applied
/// left-to-right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IsometryDescriptor {
    Identity,
    /// (x, y, z) -> (x, y, z + c).
    VerticalTranslation { c: f64 },
    /// Rotation of the base disk about the origin by angle beta, lifted to
    /// fix the fiber coordinate.
    FiberRotation { beta: f64 },
    /// (x, y, z) -> (x + a, y + b, z + tau (a y - b x)). Only isometric for
    /// k = 0.
    HorizontalTranslation { a: f64, b: f64 },
    /// Half-turn about the horizontal geodesic through the origin whose
    /// base direction makes angle beta with the x-axis. Reverses xi.
    HorizontalFlip { beta: f64 },
    /// Members applied in order: first element acts first.
    Compose(Vec<IsometryDescriptor>),
}

/// An affine chart map p -> linear p + offset.
#[derive(Clone, Copy, Debug)]
pub struct AffineIsometry {
    pub linear: M3,
    pub offset: V3,
}

impl AffineIsometry {
    pub fn identity() -> Self {
        AffineIsometry { linear: Mat3::identity(), offset: V3::zero() }
    }

    pub fn apply_point(&self, p: V3) -> V3 {
        self.linear.apply(p) + self.offset
    }

    /// The differential: constant, equal to the linear part.
    pub fn apply_vector(&self, v: V3) -> V3 {
        self.linear.apply(v)
    }

    /// self after other (i.e. p -> self(other(p))).
    pub fn after(&self, other: &AffineIsometry) -> AffineIsometry {
        let mut linear = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += self.linear.m[i][l] * other.linear.m[l][j];
                }
                linear[i][j] = s;
            }
        }
        AffineIsometry {
            linear: Mat3::from_rows(linear),
            offset: self.linear.apply(other.offset) + self.offset,
        }
    }
}

impl IsometryDescriptor {
    /// Lower the descriptor to its affine chart form, validating that the
    /// family exists for these parameters.
    pub fn to_affine(&self, params: &SpaceParams) -> Result<AffineIsometry> {
        match self {
            IsometryDescriptor::Identity => Ok(AffineIsometry::identity()),
            IsometryDescriptor::VerticalTranslation { c } => Ok(AffineIsometry {
                linear: Mat3::identity(),
                offset: Vec3::new(0.0, 0.0, *c),
            }),
            IsometryDescriptor::FiberRotation { beta } => {
                let (s, c) = beta.sin_cos();
                Ok(AffineIsometry {
                    linear: Mat3::from_rows([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]),
                    offset: V3::zero(),
                })
            }
            IsometryDescriptor::HorizontalTranslation { a, b } => {
                if params.k != 0.0 {
                    return Err(GeomError::UnsupportedIsometry {
                        kind: "horizontal translation".into(),
                        k: params.k,
                        tau: params.tau,
                    });
                }
                let tau = params.tau;
                Ok(AffineIsometry {
                    linear: Mat3::from_rows([
                        [1.0, 0.0, 0.0],
                        [0.0, 1.0, 0.0],
                        [-tau * b, tau * a, 1.0],
                    ]),
                    offset: Vec3::new(*a, *b, 0.0),
                })
            }
            IsometryDescriptor::HorizontalFlip { beta } => {
                // Conjugate the flip about the x-axis geodesic,
                // (x, y, z) -> (x, -y, -z), by the fiber rotation of angle
                // beta. The xy-block is the reflection across the beta-line.
                let c2 = (2.0 * beta).cos();
                let s2 = (2.0 * beta).sin();
                Ok(AffineIsometry {
                    linear: Mat3::from_rows([
                        [c2, s2, 0.0],
                        [s2, -c2, 0.0],
                        [0.0, 0.0, -1.0],
                    ]),
                    offset: V3::zero(),
                })
            }
            IsometryDescriptor::Compose(parts) => {
                let mut acc = AffineIsometry::identity();
                for part in parts {
                    acc = part.to_affine(params)?.after(&acc);
                }
                Ok(acc)
            }
        }
    }

    /// True when the differential reverses the vertical Killing field.
    pub fn reverses_fibers(&self, params: &SpaceParams) -> Result<bool> {
        Ok(self.to_affine(params)?.linear.m[2][2] < 0.0)
    }
}

/// Apply an isometry: image point together with the (constant) differential.
pub fn apply_isometry(
    params: &SpaceParams,
    iso: &IsometryDescriptor,
    p: V3,
) -> Result<(V3, M3)> {
    let aff = iso.to_affine(params)?;
    let q = aff.apply_point(p);
    params.check_admissible(q)?;
    Ok((q, aff.linear))
}

/// Supremum over the sample points of the pullback-metric defect
/// `max_ij |(J^T g(h p) J - g(p))_ij|`. Zero for a genuine isometry.
pub fn isometry_residual(
    params: &SpaceParams,
    iso: &IsometryDescriptor,
    points: &[V3],
) -> Result<f64> {
    let aff = iso.to_affine(params)?;
    let mut worst: f64 = 0.0;
    for &p in points {
        let q = aff.apply_point(p);
        params.check_admissible(p)?;
        params.check_admissible(q)?;
        let g_p = metric_at(params, p)?;
        let g_q = metric_at(params, q)?;
        let j = &aff.linear;
        for a in 0..3 {
            for b in 0..3 {
                // (J^T g J)_{ab} = J_{ia} g_{ij} J_{jb}
                let mut s = 0.0;
                for i in 0..3 {
                    for jj in 0..3 {
                        s += j.m[i][a] * g_q.m[i][jj] * j.m[jj][b];
                    }
                }
                worst = worst.max((s - g_p.m[a][b]).abs());
            }
        }
    }
    Ok(worst)
}

//! Run configuration: one TOML file, field-level overlay on top of the
//! shipped defaults, validated before any command runs.

use crate::CliError;
use ektau::equations::EquationId;
use ektau::examples::SurfaceSpec;
use ektau::space::SpaceParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The single source of every numeric default.
pub const DEFAULTS: &str = include_str!("../defaults.toml");

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub analyze: [usize; 2],
    pub samples: usize,
    pub horizontal_scan: [usize; 2],
    pub locus_scan: [usize; 2],
    pub vertical_checks: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub probe: [usize; 2],
    pub net: [usize; 2],
    pub curve_length: f64,
    pub step: f64,
}

/// Tolerance tiers, keyed by how the compared quantities are obtained.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceTiers {
    pub algebraic: f64,
    pub first_difference: f64,
    pub integrated: f64,
    pub traced: f64,
    pub congruence: f64,
}

impl ToleranceTiers {
    /// The tier an identity is judged against.
    pub fn for_equation(&self, eq: EquationId) -> f64 {
        use EquationId::*;
        match eq {
            AlphaE2 | AlphaFrame11 | AlphaFrame12 | PhiQuadratic => self.algebraic,
            AlphaE1 => self.first_difference,
            OdeV | OdeJv | GaussEquation | HorizontalJacobian => self.integrated,
            VerticalRate => self.traced,
        }
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        let slot = match name {
            "algebraic" => &mut self.algebraic,
            "first_difference" => &mut self.first_difference,
            "integrated" => &mut self.integrated,
            "traced" => &mut self.traced,
            "congruence" => &mut self.congruence,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown tolerance tier {name:?} (expected algebraic, \
                     first_difference, integrated, traced, or congruence)"
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub spaces: Vec<SpaceParams>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidityConfig {
    pub reference: String,
    pub family: String,
    pub t_values: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub points: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: String,
    pub seed: u64,
    pub space: SpaceParams,
    pub grid: GridConfig,
    pub trajectories: TrajectoryConfig,
    pub tolerances: ToleranceTiers,
    pub verify: VerifyConfig,
    pub rigidity: RigidityConfig,
    pub surfaces: Vec<SurfaceSpec>,
}

/// Overlay `over` onto `base`: tables merge key by key, everything else
/// (scalars and arrays) replaces.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (key, value) in o {
                match b.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        b.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let mut value: toml::Value =
            toml::from_str(DEFAULTS).map_err(|e| CliError::Config(format!("defaults: {e}")))?;
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            let user: toml::Value = toml::from_str(&text).map_err(|e| {
                CliError::Config(format!("cannot parse config {}: {e}", path.display()))
            })?;
            merge(&mut value, user);
        }
        let cfg: RunConfig = value
            .try_into()
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::Config(what.to_string()));
        let t = &self.tolerances;
        for (name, v) in [
            ("algebraic", t.algebraic),
            ("first_difference", t.first_difference),
            ("integrated", t.integrated),
            ("traced", t.traced),
            ("congruence", t.congruence),
        ] {
            if !(v > 0.0) {
                return bad(&format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if self.grid.samples == 0 {
            return bad("grid.samples must be at least 1");
        }
        for (name, [a, b]) in [
            ("grid.analyze", self.grid.analyze),
            ("grid.horizontal_scan", self.grid.horizontal_scan),
            ("grid.locus_scan", self.grid.locus_scan),
        ] {
            if a < 2 || b < 2 {
                return bad(&format!("{name} must be at least 2 x 2"));
            }
        }
        if !(self.trajectories.step > 0.0) || !(self.trajectories.curve_length > 0.0) {
            return bad("trajectories.step and trajectories.curve_length must be positive");
        }
        if self.verify.spaces.is_empty() {
            return bad("verify.spaces must not be empty");
        }
        if self.surfaces.is_empty() {
            return bad("at least one surface must be configured");
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            if self.surfaces[..i].iter().any(|o| o.name == s.name) {
                return bad(&format!("duplicate surface name {:?}", s.name));
            }
        }
        match self.rigidity.family.as_str() {
            "isometric" | "perturbed" => {}
            other => {
                return bad(&format!(
                    "rigidity.family must be \"isometric\" or \"perturbed\", got {other:?}"
                ))
            }
        }
        if self.rigidity.t_values.is_empty() || self.rigidity.amplitudes.is_empty() {
            return bad("rigidity.t_values and rigidity.amplitudes must not be empty");
        }
        if let Some(points) = &self.rigidity.points {
            if points.len() != 3 {
                return bad(&format!(
                    "rigidity.points must hold exactly three [u, v] pairs, got {}",
                    points.len()
                ));
            }
        }
        // rigidity.reference is resolved against the surface list when the
        // rigidity command actually runs.
        Ok(())
    }

    pub fn surface_by_name(&self, name: &str) -> Result<&SurfaceSpec, CliError> {
        self.surfaces.iter().find(|s| s.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.surfaces.iter().map(|s| s.name.as_str()).collect();
            CliError::Config(format!(
                "surface {name:?} is not configured (known: {})",
                known.join(", ")
            ))
        })
    }
}

/// Parse a `tier=value` override from the command line.
pub fn parse_tier_override(arg: &str) -> Result<(String, f64), CliError> {
    let (name, value) = arg.split_once('=').ok_or_else(|| {
        CliError::Config(format!("tolerance override {arg:?} must look like tier=value"))
    })?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("bad tolerance value in {arg:?}: {e}")))?;
    if !(value > 0.0) {
        return Err(CliError::Config(format!(
            "tolerance override {arg:?} must be positive"
        )));
    }
    Ok((name.trim().to_string(), value))
}

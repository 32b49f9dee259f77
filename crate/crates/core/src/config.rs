//! JSON run configuration: scenario selection and numerical budgets.

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::fields::{
    builtin_scenario, cube_sin_scenario, perturb_with_gradient, piecewise_smooth_scenario, rotation,
    GoldenScenario, Potential, VectorField, BUILTIN_SCENARIOS,
};
use crate::geometry::{FinitePerimeterSet, Window};
use crate::measure::Quadrature;
use crate::mollify::MollifyConfig;
use crate::trace::TraceConfig;
use crate::verify::SuiteConfig;
use crate::vec3::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Ball {
        center: Vec3,
        radius: f64,
    },
    HalfSpace {
        inner_normal: Vec3,
        #[serde(default)]
        offset: f64,
        window: Window,
    },
    Cube {
        face_normal: Vec3,
        corner: Vec3,
        side: f64,
    },
}

impl ShapeSpec {
    pub fn build(&self) -> crate::Result<FinitePerimeterSet> {
        match *self {
            ShapeSpec::Ball { center, radius } => FinitePerimeterSet::ball(center, radius),
            ShapeSpec::HalfSpace {
                inner_normal,
                offset,
                window,
            } => FinitePerimeterSet::half_space(inner_normal, offset, Some(window)),
            ShapeSpec::Cube {
                face_normal,
                corner,
                side,
            } => FinitePerimeterSet::build_oriented_cube(face_normal, corner, side),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Linear,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    BallRotation {},
    HalfSpaceJump {
        #[serde(rename = "F1")]
        f1: Vec3,
        #[serde(rename = "F2")]
        f2: Vec3,
    },
    CubeSin {},
    GradientPerturbed {
        base: Box<FieldSpec>,
        f: PotentialKind,
        coeffs: Vec3,
    },
}

impl FieldSpec {
    fn name(&self) -> &'static str {
        match self {
            FieldSpec::BallRotation {} => "ball_rotation",
            FieldSpec::HalfSpaceJump { .. } => "half_space_jump",
            FieldSpec::CubeSin {} => "cube_sin",
            FieldSpec::GradientPerturbed { .. } => "gradient_perturbed",
        }
    }

    /// Scenario for this field glued across `set`.
    pub fn scenario(&self, set: FinitePerimeterSet) -> Result<GoldenScenario, ConfigError> {
        let built = match self {
            FieldSpec::BallRotation {} => piecewise_smooth_scenario(
                self.name(),
                "rotation inside a faster rotation",
                set,
                rotation(1.0),
                rotation(2.0),
            ),
            FieldSpec::HalfSpaceJump { f1, f2 } => piecewise_smooth_scenario(
                self.name(),
                "constant fields glued across the boundary",
                set,
                VectorField::constant(*f1),
                VectorField::constant(*f2),
            ),
            FieldSpec::CubeSin {} => {
                if !matches!(set.shape, crate::geometry::Shape::OrientedCube { .. }) {
                    return Err(invalid("cube_sin needs a cube shape"));
                }
                let mut s = cube_sin_scenario(set);
                s.name = self.name().into();
                Ok(s)
            }
            FieldSpec::GradientPerturbed { base, f, coeffs } => {
                let base = base.scenario(set)?;
                let PotentialKind::Linear = f;
                let mut s = perturb_with_gradient(&base, &Potential::linear(*coeffs));
                s.name = self.name().into();
                s.anchor = format!("{} plus a linear gradient", base.name);
                Ok(s)
            }
        };
        built.map_err(|e| invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineScenario {
    pub field: FieldSpec,
    pub shape: ShapeSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    Builtin(String),
    Inline(InlineScenario),
}

impl<'de> Deserialize<'de> for ScenarioSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        match Value::deserialize(d)? {
            Value::String(name) => Ok(ScenarioSpec::Builtin(name)),
            v @ Value::Object(_) => serde_json::from_value(v).map(ScenarioSpec::Inline).map_err(D::Error::custom),
            _ => Err(D::Error::custom("scenario must be a builtin name or a {field, shape} object")),
        }
    }
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<GoldenScenario, ConfigError> {
        match self {
            ScenarioSpec::Builtin(name) => builtin_scenario(name).ok_or_else(|| {
                invalid(format!("unknown scenario {name:?}; expected one of {BUILTIN_SCENARIOS:?}"))
            }),
            ScenarioSpec::Inline(inline) => {
                let set = inline.shape.build().map_err(|e| invalid(e.to_string()))?;
                let scenario = inline.field.scenario(set)?;
                let (c, r) = set.bounding_ball().map_err(|e| invalid(e.to_string()))?;
                if !scenario.field.domain.contains_ball(c, r) {
                    return Err(invalid("shape does not fit in the working box [-4, 4]^3"));
                }
                Ok(scenario)
            }
        }
    }
}

/// Parsed run configuration. Nested `trace` and `quadrature` sections
/// inherit the top-level seed unless they set their own.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub seed: u64,
    pub trace: TraceConfig,
    pub quadrature: Quadrature,
    #[serde(default)]
    pub mollify: MollifyConfig,
    #[serde(default)]
    pub out: Option<String>,
    /// Trace sweep size; scenario default when absent.
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default = "default_mollified_points")]
    pub mollified_points: usize,
    #[serde(default)]
    pub record_timing: bool,
}

fn default_mollified_points() -> usize {
    5
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut root: Value = serde_json::from_str(text)?;
        let obj = root.as_object_mut().ok_or_else(|| invalid("config must be a JSON object"))?;
        let seed = obj
            .get("seed")
            .cloned()
            .ok_or_else(|| invalid("missing required key \"seed\""))?;
        for key in ["trace", "quadrature"] {
            let section = obj.entry(key).or_insert_with(|| Value::Object(Map::new()));
            let section = section
                .as_object_mut()
                .ok_or_else(|| invalid(format!("\"{key}\" must be an object")))?;
            section.entry("seed").or_insert_with(|| seed.clone());
        }
        let cfg: RunConfig = serde_json::from_value(root)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.trace;
        if !(t.r0 > 0.0 && t.r0 < 1.0) {
            return Err(invalid("trace.r0 must lie in (0, 1)"));
        }
        if t.levels < 3 {
            return Err(invalid("trace.levels must be at least 3"));
        }
        if t.samples_per_radius < 8 {
            return Err(invalid("trace.samples_per_radius must be at least 8"));
        }
        let m = &self.mollify;
        if !(m.eps0 > 0.0 && m.eps0 < 1.0) || m.levels < 3 {
            return Err(invalid("mollify needs eps0 in (0, 1) and at least 3 levels"));
        }
        let q = &self.quadrature;
        if q.volume_samples < 20 || q.surface_samples < 6 {
            return Err(invalid("quadrature sample counts are too small"));
        }
        if self.points == Some(0) {
            return Err(invalid("points must be positive"));
        }
        if let ScenarioSpec::Builtin(name) = &self.scenario {
            if !BUILTIN_SCENARIOS.contains(&name.as_str()) {
                return Err(invalid(format!(
                    "unknown scenario {name:?}; expected one of {BUILTIN_SCENARIOS:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            trace: self.trace,
            quad: self.quadrature,
            mollify: self.mollify,
            points: self.points,
            mollified_points: self.mollified_points,
            record_timing: self.record_timing,
        }
    }
}

//! Scenario configuration.
//!
//! Every top-level section is optional and defaults to the reference
//! apartment; a section that is present must list all of its fields.

use std::path::Path;

use hvac_core::control::{Bounds, ControlVector, CostWeights, Horizon, OptimizerSettings, ProblemSettings};
use hvac_core::fem::Coefficients;
use hvac_core::flow::NewtonSettings;
use hvac_core::mesh::{canonical_zone, FloorPlan, MeshPattern, Rect, Zone, CANONICAL_ZONE_COUNT};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub floor_plan: FloorPlanSpec,
    #[serde(default)]
    pub zone: ZoneSpec,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub horizon: Horizon,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default)]
    pub bounds: Bounds,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Controls for `simulate`; the optimizer's start otherwise. Lower
    /// bounds when absent.
    #[serde(default)]
    pub controls: Option<ControlsConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Makes `optimize` run the zone sweep.
    #[serde(default)]
    pub sweep: bool,
}

fn default_theta() -> f64 {
    1.0
}

fn default_output_dir() -> String {
    "out".into()
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            floor_plan: FloorPlanSpec::default(),
            zone: ZoneSpec::default(),
            physics: Physics::default(),
            horizon: Horizon::default(),
            weights: Weights::default(),
            bounds: Bounds::default(),
            mesh: MeshConfig::default(),
            solver: SolverConfig::default(),
            theta: default_theta(),
            controls: None,
            output_dir: default_output_dir(),
            sweep: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum FloorPlanSpec {
    #[default]
    #[serde(with = "canonical_name")]
    Canonical,
    Custom(FloorPlan),
}

mod canonical_name {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("canonical")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let name = String::deserialize(d)?;
        if name == "canonical" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("unknown floor plan \"{name}\"")))
        }
    }
}

/// Canonical zone index, `"whole"`, or an explicit rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum ZoneSpec {
    Index(usize),
    #[default]
    #[serde(with = "whole_name")]
    Whole,
    Rect(Rect),
}

mod whole_name {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("whole")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let name = String::deserialize(d)?;
        if name == "whole" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("unknown zone \"{name}\"")))
        }
    }
}

impl ZoneSpec {
    /// Parses the `--zone` flag.
    pub fn parse(s: &str) -> Result<Self, String> {
        if s == "whole" {
            return Ok(Self::Whole);
        }
        match s.parse::<usize>() {
            Ok(i) if i < CANONICAL_ZONE_COUNT => Ok(Self::Index(i)),
            _ => Err(format!("zone must be 0..{} or \"whole\", got \"{s}\"", CANONICAL_ZONE_COUNT - 1)),
        }
    }

    pub fn to_zone(self) -> Result<Zone, CliError> {
        Ok(match self {
            Self::Whole => Zone::Whole,
            Self::Index(i) => Zone::Rect(canonical_zone(i).map_err(|e| CliError::Config(format!("zone: {e}")))?),
            Self::Rect(r) => Zone::Rect(r),
        })
    }

    pub fn label(self) -> String {
        match self {
            Self::Whole => "whole".into(),
            Self::Index(i) => format!("{i}"),
            Self::Rect(r) => format!("[{}, {}] x [{}, {}]", r.x0, r.x1, r.y0, r.y1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub reynolds: f64,
    /// Recorded for reference; the temperature equation uses the
    /// diffusivities directly.
    pub prandtl: f64,
    pub kappa_air: f64,
    pub kappa_wall: f64,
    pub alpha_air: f64,
    pub alpha_wall: f64,
    /// kPa.
    pub ambient_pressure: f64,
    /// °C.
    pub ambient_temperature: f64,
    /// °C.
    pub target_temperature: f64,
    /// kg/m³.
    pub density: f64,
}

impl Default for Physics {
    fn default() -> Self {
        let c = Coefficients::default();
        Self {
            reynolds: c.reynolds,
            prandtl: 1.2,
            kappa_air: c.kappa_air,
            kappa_wall: c.kappa_wall,
            alpha_air: c.alpha_air,
            alpha_wall: c.alpha_wall,
            ambient_pressure: 101.3,
            ambient_temperature: 23.83,
            target_temperature: 24.83,
            density: c.density,
        }
    }
}

impl Physics {
    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            kappa_air: self.kappa_air,
            kappa_wall: self.kappa_wall,
            alpha_air: self.alpha_air,
            alpha_wall: self.alpha_wall,
            reynolds: self.reynolds,
            density: self.density,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub lambda_heater: f64,
    pub lambda_fan: f64,
}

impl Default for Weights {
    fn default() -> Self {
        let w = CostWeights::default();
        Self {
            lambda_heater: w.heater,
            lambda_fan: w.fan,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Target element size, m.
    pub target_h: f64,
    pub pattern: MeshPattern,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            target_h: 0.5,
            pattern: MeshPattern::Diagonal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    pub optimizer_max_iterations: usize,
    pub gradient_tolerance: f64,
    pub relative_decrease: f64,
    pub fan_fd_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let n = NewtonSettings::default();
        let o = OptimizerSettings::default();
        Self {
            newton_tolerance: n.tolerance,
            newton_max_iterations: n.max_iterations,
            optimizer_max_iterations: o.max_iterations,
            gradient_tolerance: o.gradient_tolerance,
            relative_decrease: o.relative_decrease,
            fan_fd_step: 1e-3,
        }
    }
}

/// A heater schedule: one value for every step or a full list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    Steps(Vec<f64>),
}

impl Schedule {
    fn expand(&self, steps: usize, name: &str) -> Result<Vec<f64>, CliError> {
        match self {
            Self::Constant(v) => Ok(vec![*v; steps]),
            Self::Steps(v) if v.len() == steps => Ok(v.clone()),
            Self::Steps(v) => Err(CliError::Config(format!(
                "controls.{name}: {} values given, horizon has {steps} steps",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsConfig {
    pub fan_speed_1: f64,
    pub fan_speed_2: f64,
    pub heater1: Schedule,
    pub heater2: Schedule,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.horizon.steps().map_err(|e| CliError::Config(format!("horizon: {e}")))?;
        self.bounds.validate().map_err(|e| CliError::Config(format!("bounds: {e}")))?;
        self.physics
            .coefficients()
            .validate()
            .map_err(|e| CliError::Config(format!("physics: {e}")))?;
        let p = &self.physics;
        for (name, v) in [
            ("physics.prandtl", p.prandtl),
            ("physics.ambient_pressure", p.ambient_pressure),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(p.ambient_temperature.is_finite() && p.target_temperature.is_finite()) {
            return bad("physics temperatures must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !(self.weights.lambda_heater >= 0.0 && self.weights.lambda_fan >= 0.0) {
            return bad("weights must be nonnegative".into());
        }
        if !(self.mesh.target_h > 0.0) {
            return bad(format!("mesh.target_h must be positive, got {}", self.mesh.target_h));
        }
        let s = &self.solver;
        if !(s.newton_tolerance > 0.0 && s.gradient_tolerance >= 0.0 && s.relative_decrease >= 0.0 && s.fan_fd_step > 0.0) {
            return bad("solver tolerances must be positive".into());
        }
        self.zone.to_zone()?;
        self.floor_plan().validate().map_err(|e| CliError::Config(format!("floor_plan: {e}")))?;
        if let Some(c) = &self.controls {
            let steps = self.horizon.steps().expect("checked above");
            c.heater1.expand(steps, "heater1")?;
            c.heater2.expand(steps, "heater2")?;
        }
        Ok(())
    }

    /// Floor plan with the configured zone applied.
    pub fn floor_plan(&self) -> FloorPlan {
        let base = match &self.floor_plan {
            FloorPlanSpec::Canonical => FloorPlan::canonical(),
            FloorPlanSpec::Custom(fp) => fp.clone(),
        };
        base.with_zone(self.zone.to_zone().unwrap_or(Zone::Whole))
    }

    pub fn target(&self) -> f64 {
        self.physics.target_temperature - self.physics.ambient_temperature
    }

    pub fn problem_settings(&self) -> ProblemSettings {
        ProblemSettings {
            coefficients: self.physics.coefficients(),
            horizon: self.horizon,
            theta: self.theta,
            target: self.target(),
            weights: CostWeights {
                heater: self.weights.lambda_heater,
                fan: self.weights.lambda_fan,
            },
            bounds: self.bounds,
            newton: NewtonSettings {
                tolerance: self.solver.newton_tolerance,
                max_iterations: self.solver.newton_max_iterations,
                ..NewtonSettings::default()
            },
            fan_fd_step: self.solver.fan_fd_step,
        }
    }

    pub fn optimizer_settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            max_iterations: self.solver.optimizer_max_iterations,
            gradient_tolerance: self.solver.gradient_tolerance,
            relative_decrease: self.solver.relative_decrease,
            ..OptimizerSettings::default()
        }
    }

    /// Configured controls, or every control at its lower bound.
    pub fn controls(&self) -> Result<ControlVector, CliError> {
        let steps = self.horizon.steps().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(match &self.controls {
            None => ControlVector::lower_bounds(&self.bounds, steps),
            Some(c) => ControlVector {
                fan_speed_1: c.fan_speed_1,
                fan_speed_2: c.fan_speed_2,
                heater1: c.heater1.expand(steps, "heater1")?,
                heater2: c.heater2.expand(steps, "heater2")?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_reference_scenario() {
        let cfg = ScenarioConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.horizon.steps().unwrap(), 30);
        assert!((cfg.target() - 1.0).abs() < 1e-12);
        assert_eq!(cfg.floor_plan(), FloorPlan::canonical());
    }

    #[test]
    fn missing_field_is_named() {
        let err = ScenarioConfig::from_json(r#"{"horizon": {"dt": 10.0}}"#).unwrap_err();
        assert!(err.to_string().contains("t_f"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn zone_forms() {
        for (text, zone) in [
            (r#"{"zone": 4}"#, ZoneSpec::Index(4)),
            (r#"{"zone": "whole"}"#, ZoneSpec::Whole),
            (
                r#"{"zone": {"x0": 0.5, "y0": 0.5, "x1": 1.5, "y1": 2.0}}"#,
                ZoneSpec::Rect(Rect::new(0.5, 0.5, 1.5, 2.0)),
            ),
        ] {
            assert_eq!(ScenarioConfig::from_json(text).unwrap().zone, zone);
        }
        assert!(ScenarioConfig::from_json(r#"{"zone": 18}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"zone": "kitchen"}"#).is_err());
        assert_eq!(ZoneSpec::parse("17").unwrap(), ZoneSpec::Index(17));
        assert!(ZoneSpec::parse("18").is_err());
    }

    #[test]
    fn schedules_expand() {
        let cfg = ScenarioConfig::from_json(
            r#"{"horizon": {"t_f": 30.0, "dt": 10.0},
                "controls": {"fan_speed_1": 0.5, "fan_speed_2": 0.4, "heater1": 2.0, "heater2": [1.0, 0.0, 3.0]}}"#,
        )
        .unwrap();
        let c = cfg.controls().unwrap();
        assert_eq!(c.heater1, vec![2.0; 3]);
        assert_eq!(c.heater2, vec![1.0, 0.0, 3.0]);
        assert!(ScenarioConfig::from_json(
            r#"{"horizon": {"t_f": 30.0, "dt": 10.0},
                "controls": {"fan_speed_1": 0.5, "fan_speed_2": 0.4, "heater1": 2.0, "heater2": [1.0]}}"#,
        )
        .is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            r#"{"horizon": {"t_f": 305.0, "dt": 10.0}}"#,
            r#"{"theta": 1.5}"#,
            r#"{"unknown": 1}"#,
            r#"{"floor_plan": "mansion"}"#,
            r#"{"mesh": {"target_h": -1.0, "pattern": "diagonal"}}"#,
        ] {
            assert!(ScenarioConfig::from_json(text).is_err(), "{text}");
        }
    }
}

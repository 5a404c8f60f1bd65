//! Experiment configuration: five TOML blocks, every key checked.

use std::fmt;
use std::path::{Path, PathBuf};

use dtqm::action::{
    gauged_action, quartic_action, sine_action, standard_action, vector_potential_action_2d, ActionModel,
    GaugeFunction, PhysicalConstants, Potential, PotentialShape, VectorPotentialFn,
};
use dtqm::grid::{make_grid, make_grid_2d, Axis, SpatialGrid};
use dtqm::propagator::magic_time_step;
use serde::de::{self, DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: Option<GridBlock>,
    pub constants: ConstantsBlock,
    pub action: ActionBlock,
    #[serde(default)]
    pub run: toml::Table,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n_points: usize,
    pub x_min: f64,
    pub spacing: f64,
    /// 2 builds the square product grid of the same axis.
    #[serde(default = "one")]
    pub dimension: usize,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsBlock {
    #[serde(default = "unit")]
    pub mass: f64,
    pub hbar: Option<f64>,
    pub tau: Option<TimeStep>,
}

/// `tau = 0.25` or `tau = "magic"` for the exactly unitary step of the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Magic,
    Value(f64),
}

impl<'de> Deserialize<'de> for TimeStep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(TimeStep::Value(x)),
            Raw::Word(w) if w == "magic" => Ok(TimeStep::Magic),
            Raw::Word(w) => Err(de::Error::custom(format!(
                "tau must be a number or \"magic\", got \"{w}\""
            ))),
        }
    }
}

impl Serialize for TimeStep {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TimeStep::Magic => s.serialize_str("magic"),
            TimeStep::Value(x) => s.serialize_f64(*x),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ActionChoice {
    Standard,
    Gauged,
    Quartic,
    Sine,
    #[serde(rename = "vector_potential_2d")]
    VectorPotential2d,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ActionBlock {
    pub kind: ActionChoice,
    #[serde(default = "zero_potential")]
    pub potential: PotentialShape,
    #[serde(default)]
    pub potential_offset: f64,
    pub gauge: Option<GaugeFunction>,
    pub epsilon: Option<f64>,
    pub coupling: Option<f64>,
    pub a1: Option<VectorPotentialFn>,
    pub a2: Option<VectorPotentialFn>,
}

fn zero_potential() -> PotentialShape {
    PotentialShape::Zero
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// File stem shared by every output of the run.
    pub name: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from(".")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            name: None,
            formats: default_formats(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    /// Decodes the `[run]` block into the subcommand's own schema.
    pub fn run_block<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        T::deserialize(toml::Value::Table(self.run.clone()))
            .map_err(|e| CliError::Config(format!("[run]: {}", e.to_string().trim_end())))
    }

    pub fn grid(&self) -> Result<SpatialGrid, CliError> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| CliError::Config("this subcommand needs a [grid] block".into()))?;
        match g.dimension {
            1 => Ok(make_grid(g.n_points, g.x_min, g.spacing)?),
            2 => {
                let axis = Axis::new(g.n_points, g.x_min, g.spacing)?;
                Ok(make_grid_2d(axis, axis)?)
            }
            d => Err(CliError::Config(format!("grid.dimension must be 1 or 2, got {d}"))),
        }
    }

    pub fn hbar(&self) -> f64 {
        self.constants.hbar.unwrap_or(1.0)
    }

    pub fn time_step(&self) -> Result<f64, CliError> {
        match self.constants.tau {
            Some(TimeStep::Value(t)) => Ok(t),
            Some(TimeStep::Magic) => Ok(magic_time_step(&self.grid()?, self.constants.mass, self.hbar())),
            None => Err(CliError::Config("constants.tau is required".into())),
        }
    }

    pub fn physical_constants(&self) -> Result<PhysicalConstants, CliError> {
        Ok(PhysicalConstants::new(self.constants.mass, self.time_step()?, self.hbar())?)
    }

    pub fn potential(&self) -> Potential {
        Potential {
            shape: self.action.potential,
            offset: self.action.potential_offset,
        }
    }

    pub fn model(&self) -> Result<ActionModel, CliError> {
        self.model_with(self.physical_constants()?)
    }

    /// Builds the action after checking that exactly the parameters of
    /// `action.kind` are present.
    pub fn model_with(&self, constants: PhysicalConstants) -> Result<ActionModel, CliError> {
        let a = &self.action;
        let present = [
            ("gauge", a.gauge.is_some()),
            ("epsilon", a.epsilon.is_some()),
            ("coupling", a.coupling.is_some()),
            ("a1", a.a1.is_some()),
            ("a2", a.a2.is_some()),
        ];
        let wanted: &[&str] = match a.kind {
            ActionChoice::Standard => &[],
            ActionChoice::Gauged => &["gauge"],
            ActionChoice::Quartic => &["epsilon"],
            ActionChoice::Sine => &["coupling"],
            ActionChoice::VectorPotential2d => &["a1", "a2"],
        };
        for (key, set) in present {
            let expected = wanted.contains(&key);
            if set != expected {
                let verb = if set { "does not take" } else { "requires" };
                return Err(CliError::Config(format!("action kind {:?} {verb} `{key}`", a.kind)));
            }
        }
        if a.kind == ActionChoice::Sine && (a.potential != PotentialShape::Zero || a.potential_offset != 0.0) {
            return Err(CliError::Config("the sine action has no potential".into()));
        }
        let v = self.potential();
        Ok(match a.kind {
            ActionChoice::Standard => standard_action(constants, v),
            ActionChoice::Gauged => gauged_action(constants, v, a.gauge.unwrap()),
            ActionChoice::Quartic => quartic_action(constants, v, a.epsilon.unwrap()),
            ActionChoice::Sine => sine_action(constants, a.coupling.unwrap())?,
            ActionChoice::VectorPotential2d => {
                vector_potential_action_2d(constants, v, a.a1.unwrap(), a.a2.unwrap())
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
n_points = 64
x_min = -4.0
spacing = 0.125

[constants]
tau = "magic"

[action]
kind = "standard"
potential = { shape = "harmonic", stiffness = 1.0 }
"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.constants.tau, Some(TimeStep::Magic));
        assert_eq!(c.output.formats, vec![Format::Csv]);
        let t = c.time_step().unwrap();
        assert!((t - 0.125 * 8.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(c.model().unwrap().is_standard_family());
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replace("spacing = 0.125", "spacing = 0.125\nspcaing = 1");
        match ExperimentConfig::parse(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("spcaing"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_potential_field_is_rejected() {
        let text = MINIMAL.replace("stiffness = 1.0", "stiffness = 1.0, omega = 2.0");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn bad_tau_word() {
        let text = MINIMAL.replace("\"magic\"", "\"auto\"");
        match ExperimentConfig::parse(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("auto"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn action_parameters_must_match_kind() {
        let stray = MINIMAL.replace("kind = \"standard\"", "kind = \"standard\"\nepsilon = 0.1");
        assert!(ExperimentConfig::parse(&stray).unwrap().model().is_err());
        let missing = MINIMAL.replace("kind = \"standard\"", "kind = \"quartic\"");
        assert!(ExperimentConfig::parse(&missing).unwrap().model().is_err());
    }

    #[test]
    fn run_block_is_strict() {
        #[derive(Debug, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct R {
            #[allow(dead_code)]
            n_steps: usize,
        }
        let c = ExperimentConfig::parse(&format!("{MINIMAL}\n[run]\nn_steps = 3\nn_stpes = 4\n")).unwrap();
        match c.run_block::<R>() {
            Err(CliError::Config(msg)) => assert!(msg.contains("n_stpes"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}

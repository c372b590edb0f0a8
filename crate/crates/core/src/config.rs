//! Versioned JSON scenario files.
//!
//! ```json
//! {
//!   "schema": "gateservo/scenario/v1",
//!   "scenario": { "name": "...", "duration": 20.0, "start_pose": {...}, "gates": [...] },
//!   "experiment": { "kind": "orientation", "orientations_deg": [-45, 0, 45] }
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MotionLaw;
use crate::scenario::Scenario;

pub const SCHEMA: &str = "gateservo/scenario/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Experiment {
    Orientation {
        #[serde(default = "default_orientations")]
        orientations_deg: Vec<f64>,
        #[serde(default = "default_distance")]
        distance: f64,
    },
    MovingGate {
        motion: MotionLaw,
    },
}

fn default_orientations() -> Vec<f64> {
    vec![-45.0, 0.0, 45.0]
}

fn default_distance() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: String,
    pub scenario: Scenario,
    #[serde(default)]
    pub experiment: Option<Experiment>,
}

impl ScenarioFile {
    pub fn new(scenario: Scenario) -> Self {
        ScenarioFile {
            schema: SCHEMA.to_string(),
            scenario,
            experiment: None,
        }
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::config(format!(
                "schema: expected \"{SCHEMA}\", found \"{}\"",
                self.schema
            )));
        }
        self.scenario.validate()?;
        match &self.experiment {
            Some(Experiment::Orientation {
                orientations_deg,
                distance,
            }) => {
                if orientations_deg.is_empty() || !orientations_deg.iter().all(|d| d.is_finite()) {
                    return Err(Error::config(
                        "experiment: orientations_deg must be non-empty and finite",
                    ));
                }
                if !(*distance > 0.0) {
                    return Err(Error::config("experiment: distance must be > 0"));
                }
            }
            Some(Experiment::MovingGate { motion }) => motion.validate()?,
            None => {}
        }
        Ok(())
    }
}

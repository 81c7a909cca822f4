//! Experiment configuration: one JSON file, schema version 1.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rotorbit_core::dynamics::{ShearSpec, TorusMapSpec, TorusProfile};
use rotorbit_core::realization::RealizeConfig;
use rotorbit_core::rotation::{Basepoint, RotationConfig};
use rotorbit_core::{GroupWord, SurfaceGroup};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SurfaceCheck,
    FillingCheck,
    EquivarianceCheck,
    MzEstimate,
    LebesgueVector,
    Deviation,
    Realize,
    PeriodicPoint,
    TorusOracle,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::SurfaceCheck,
        Task::FillingCheck,
        Task::EquivarianceCheck,
        Task::MzEstimate,
        Task::LebesgueVector,
        Task::Deviation,
        Task::Realize,
        Task::PeriodicPoint,
        Task::TorusOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::SurfaceCheck => "surface-check",
            Task::FillingCheck => "filling-check",
            Task::EquivarianceCheck => "equivariance-check",
            Task::MzEstimate => "mz-estimate",
            Task::LebesgueVector => "lebesgue-vector",
            Task::Deviation => "deviation",
            Task::Realize => "realize",
            Task::PeriodicPoint => "periodic-point",
            Task::TorusOracle => "torus-oracle",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Task::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s.trim())
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RotationSection {
    pub n_iters: usize,
    pub n_samples: usize,
    pub basepoint: Basepoint,
}

impl Default for RotationSection {
    fn default() -> Self {
        RotationSection {
            n_iters: 256,
            n_samples: 2000,
            basepoint: Basepoint::Origin,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LebesgueSection {
    pub n_samples: usize,
}

impl Default for LebesgueSection {
    fn default() -> Self {
        LebesgueSection { n_samples: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviationSection {
    pub n_iters: usize,
    pub n_samples: usize,
    /// Random supporting directions added to the `±e_j` axes.
    pub random_directions: usize,
}

impl Default for DeviationSection {
    fn default() -> Self {
        DeviationSection {
            n_iters: 10_000,
            n_samples: 200,
            random_directions: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicSection {
    pub words: Vec<GroupWord>,
    pub n_max: usize,
    pub tol: f64,
}

impl Default for PeriodicSection {
    fn default() -> Self {
        PeriodicSection {
            words: vec!["A1".parse().expect("word")],
            n_max: 16,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TorusSection {
    pub map: TorusMapSpec,
    pub n_iters: usize,
    pub n_samples: usize,
    /// Known rotation segment.
    pub segment: [[f64; 2]; 2],
    pub tolerance: f64,
}

impl Default for TorusSection {
    fn default() -> Self {
        TorusSection {
            map: TorusMapSpec {
                horizontal: TorusProfile::Cosine { amplitude: 1.0 },
                vertical: TorusProfile::Zero,
            },
            n_iters: 10_000,
            n_samples: 10_000,
            segment: [[0.0, 0.0], [1.0, 0.0]],
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub genus: usize,
    #[serde(default)]
    pub curves: Vec<GroupWord>,
    #[serde(default)]
    pub shears: Vec<ShearSpec>,
    #[serde(default)]
    pub rotation: RotationSection,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_area_samples")]
    pub area_samples: usize,
    #[serde(default)]
    pub lebesgue: LebesgueSection,
    #[serde(default)]
    pub deviation: DeviationSection,
    #[serde(default)]
    pub realize: RealizeConfig,
    #[serde(default)]
    pub periodic_point: PeriodicSection,
    #[serde(default)]
    pub torus: TorusSection,
}

fn default_area_samples() -> usize {
    1000
}

#[derive(Debug, Error, PartialEq)]
#[error("config error at {pointer}: {message}")]
pub struct ConfigError {
    /// JSON pointer to the offending value.
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    fn at(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(variant);
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

impl ExperimentConfig {
    /// Parses and validates; errors carry the JSON pointer of the fault.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = pointer_of(e.path());
            ConfigError::at(pointer, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA {
            return Err(ConfigError::at(
                "/schema",
                format!("unsupported schema {} (expected {SCHEMA})", self.schema),
            ));
        }
        let group = SurfaceGroup::standard(self.genus).map_err(|e| ConfigError::at("/genus", e))?;
        for (i, w) in self.curves.iter().enumerate() {
            group
                .check_word(w)
                .map_err(|e| ConfigError::at(format!("/curves/{i}"), e))?;
        }
        for (i, s) in self.shears.iter().enumerate() {
            group
                .check_word(&s.curve)
                .map_err(|e| ConfigError::at(format!("/shears/{i}/curve"), e))?;
            s.validate()
                .map_err(|e| ConfigError::at(format!("/shears/{i}"), e))?;
        }
        for (i, w) in self.periodic_point.words.iter().enumerate() {
            group
                .check_word(w)
                .map_err(|e| ConfigError::at(format!("/periodic_point/words/{i}"), e))?;
        }
        self.rotation_config()
            .validate()
            .map_err(|e| ConfigError::at("/rotation", e))?;
        if self.tasks.is_empty() {
            return Err(ConfigError::at("/tasks", "no tasks requested"));
        }
        let positive = [
            ("/area_samples", self.area_samples),
            ("/lebesgue/n_samples", self.lebesgue.n_samples),
            ("/deviation/n_iters", self.deviation.n_iters),
            ("/deviation/n_samples", self.deviation.n_samples),
            ("/torus/n_iters", self.torus.n_iters),
            ("/torus/n_samples", self.torus.n_samples),
        ];
        for (p, v) in positive {
            if v == 0 {
                return Err(ConfigError::at(p, "must be positive"));
            }
        }
        if !(self.periodic_point.tol > 0.0) {
            return Err(ConfigError::at("/periodic_point/tol", "must be positive"));
        }
        Ok(())
    }

    pub fn rotation_config(&self) -> RotationConfig {
        RotationConfig {
            n_iters: self.rotation.n_iters,
            n_samples: self.rotation.n_samples,
            seed: self.seed,
            basepoint: self.rotation.basepoint,
        }
    }

    /// Tasks in execution order, without repeats.
    pub fn ordered_tasks(&self) -> Vec<Task> {
        let mut t = self.tasks.clone();
        t.sort();
        t.dedup();
        t
    }

    /// Canonical JSON of the effective configuration.
    pub fn canonical_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("serializable")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical_json()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_json(r#"{"schema":1,"genus":2,"tasks":["surface-check"]}"#).unwrap();
        assert_eq!(c.ordered_tasks(), vec![Task::SurfaceCheck]);
        assert_eq!(c.area_samples, 1000);
    }

    #[test]
    fn pointer_for_bad_task() {
        let e = ExperimentConfig::from_json(r#"{"schema":1,"genus":2,"tasks":["surface-check","fly"]}"#)
            .unwrap_err();
        assert_eq!(e.pointer, "/tasks/1");
    }

    #[test]
    fn pointer_for_bad_word() {
        let e = ExperimentConfig::from_json(r#"{"schema":1,"genus":2,"curves":["a1","x9"],"tasks":["filling-check"]}"#)
            .unwrap_err();
        assert_eq!(e.pointer, "/curves/1");
        let e = ExperimentConfig::from_json(r#"{"schema":1,"genus":2,"curves":["a3"],"tasks":["filling-check"]}"#)
            .unwrap_err();
        assert_eq!(e.pointer, "/curves/0");
    }

    #[test]
    fn pointer_for_bad_shear() {
        let e = ExperimentConfig::from_json(
            r#"{"schema":1,"genus":2,"shears":[{"curve":"a1","width":-1,"strength":1}],"tasks":["equivariance-check"]}"#,
        )
        .unwrap_err();
        assert_eq!(e.pointer, "/shears/0");
        let e = ExperimentConfig::from_json(
            r#"{"schema":1,"genus":2,"shears":[{"curve":"a1","width":"wide","strength":1}],"tasks":["equivariance-check"]}"#,
        )
        .unwrap_err();
        assert_eq!(e.pointer, "/shears/0/width");
    }

    #[test]
    fn schema_genus_and_unknown_fields() {
        let e = ExperimentConfig::from_json(r#"{"schema":2,"genus":2,"tasks":["surface-check"]}"#).unwrap_err();
        assert_eq!(e.pointer, "/schema");
        let e = ExperimentConfig::from_json(r#"{"schema":1,"genus":1,"tasks":["surface-check"]}"#).unwrap_err();
        assert_eq!(e.pointer, "/genus");
        let e = ExperimentConfig::from_json(r#"{"schema":1,"genus":2,"tasks":["surface-check"],"colour":1}"#)
            .unwrap_err();
        assert!(e.message.contains("colour"));
        let e = ExperimentConfig::from_json(r#"{"schema":1,"genus":2,"tasks":[]}"#).unwrap_err();
        assert_eq!(e.pointer, "/tasks");
    }

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_json(r#"{"schema":1,"genus":2,"tasks":["surface-check"]}"#).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
    }
}

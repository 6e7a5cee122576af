//! Built-in example configs and where to load named configs from.

use std::path::PathBuf;

use crate::config::ProblemConfig;
use crate::error::{Error, Result};

/// A named built-in config.
#[derive(Debug, Clone, Copy)]
pub struct Example {
    pub name: &'static str,
    pub json: &'static str,
}

macro_rules! examples {
    ($($name:literal),* $(,)?) => {
        &[$(Example { name: $name, json: include_str!(concat!("../configs/", $name, ".json")) }),*]
    };
}

pub const EXAMPLES: &[Example] = examples![
    "trivial",
    "skew3d",
    "degenerate",
    "crossing-degeneracy",
    "perturbed-trivial",
    "g-perturbed",
    "delta-perturbed",
    "skew3d-cubic",
    "identical-family",
    "reflection-symmetric",
    "odd-perturbation",
    "graph-bump-symmetric",
    "graph-bump-asymmetric",
    "contact-cubic",
];

pub fn example(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

impl Example {
    pub fn config(&self) -> Result<ProblemConfig> {
        ProblemConfig::from_json(self.json)
    }

    pub fn description(&self) -> String {
        self.config().ok().and_then(|c| c.description).unwrap_or_default()
    }
}

/// Where named configs come from: the built-ins or `<dir>/<name>.json`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ConfigSource {
    #[default]
    BuiltIn,
    Dir(PathBuf),
}

impl ConfigSource {
    pub fn raw(&self, name: &str) -> Result<String> {
        match self {
            ConfigSource::BuiltIn => example(name)
                .map(|e| e.json.to_string())
                .ok_or_else(|| Error::Config(format!("no built-in example named {name}"))),
            ConfigSource::Dir(dir) => {
                let path = dir.join(format!("{name}.json"));
                std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn load(&self, name: &str) -> Result<ProblemConfig> {
        ProblemConfig::from_json(&self.raw(name)?).map_err(|e| Error::Config(format!("{name}: {e}")))
    }
}

//! JSON description of a system.
//!
//! ```json
//! {"name": "cantor3", "maps": [{"family": "affine", "a": 0.333, "b": 0.0}, ...], "core": [0, 2]}
//! {"name": "cantor3", "core_maps": [...], "auto_fill": true}
//! ```

use serde::{Deserialize, Serialize};

use super::{Contraction, IFSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MapSpec {
    Affine { a: f64, b: f64 },
    Quadratic { alpha: f64, beta: f64, gamma: f64 },
    Logexp { s: f64, base: f64, t: f64 },
}

impl From<&MapSpec> for Contraction {
    fn from(spec: &MapSpec) -> Self {
        match *spec {
            MapSpec::Affine { a, b } => Contraction::affine(a, b),
            MapSpec::Quadratic { alpha, beta, gamma } => Contraction::quadratic(alpha, beta, gamma),
            MapSpec::Logexp { s, base, t } => Contraction::log_exp(s, base, t),
        }
    }
}

impl TryFrom<&Contraction> for MapSpec {
    type Error = Error;

    fn try_from(map: &Contraction) -> Result<Self> {
        match *map {
            Contraction::Affine { a, b } => Ok(MapSpec::Affine { a, b }),
            Contraction::Quadratic { alpha, beta, gamma } => {
                Ok(MapSpec::Quadratic { alpha, beta, gamma })
            }
            Contraction::LogExp { s, base, t } => Ok(MapSpec::Logexp { s, base, t }),
            Contraction::Generic(_) => Err(Error::InvalidArgument(
                "generic maps have no JSON form".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub name: String,
    /// The gap-filled list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<MapSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<Vec<usize>>,
    /// Original maps to be gap filled when `auto_fill` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_maps: Option<Vec<MapSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_fill: Option<bool>,
    /// Fillers per gap slot, `p + 1` entries; defaults to one per gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdivisions: Option<Vec<usize>>,
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_system(system: &IFSystem) -> Result<Self> {
        let maps = system
            .maps()
            .iter()
            .map(MapSpec::try_from)
            .collect::<Result<Vec<_>>>()?;
        Ok(SystemSpec {
            name: system.name().to_string(),
            maps: Some(maps),
            core: Some(system.core().to_vec()),
            ..Default::default()
        })
    }

    pub fn build(&self) -> Result<IFSystem> {
        match (&self.maps, &self.core_maps) {
            (Some(maps), None) => {
                let core = self
                    .core
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument("\"maps\" requires \"core\"".into()))?;
                IFSystem::new(&self.name, maps.iter().map(Contraction::from).collect(), core)
            }
            (None, Some(core_maps)) => {
                if self.auto_fill != Some(true) {
                    return Err(Error::InvalidArgument(
                        "\"core_maps\" requires \"auto_fill\": true".into(),
                    ));
                }
                let subdivisions = self.subdivisions.clone().unwrap_or_default();
                IFSystem::gap_fill(
                    &self.name,
                    core_maps.iter().map(Contraction::from).collect(),
                    &subdivisions,
                )
            }
            (Some(_), Some(_)) => Err(Error::InvalidArgument(
                "give either \"maps\" or \"core_maps\", not both".into(),
            )),
            (None, None) => Err(Error::InvalidArgument(
                "missing \"maps\" or \"core_maps\"".into(),
            )),
        }
    }
}

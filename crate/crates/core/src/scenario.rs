//! TOML scenario files shared by every command.
//!
//! ```toml
//! seed = 7
//! vertices = ["u", "v"]
//!
//! [[edges]]
//! from = "u"
//! to = "v"
//! coefficients = [1.0, 0.0, 0.0]
//! noise = { family = "uniform", half_width = 0.2 }
//!
//! [[commodities]]
//! source = "u"
//! dest = "v"
//! ```
//!
//! Experiment settings live in optional `[poa_study]`, `[regret_study]` and
//! `[g_bound]` tables.

use std::collections::HashMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::dsee::GBoundOptions;
use crate::error::{Error, Result};
use crate::model::{Commodity, Edge, EdgeCostModel, Instance, NoiseSpec, Topology};
use crate::poa::PoaStudyConfig;
use crate::regret::RegretStudyConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommoditySpec {
    pub source: String,
    pub dest: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub commodities: Vec<CommoditySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poa_study: Option<PoaStudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret_study: Option<RegretStudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_bound: Option<GBoundOptions>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn has_network(&self) -> bool {
        !self.vertices.is_empty()
    }

    /// Validated instance; the scenario seed becomes the instance seed.
    pub fn build_instance(&self) -> Result<Instance> {
        let mut index = HashMap::new();
        for (i, name) in self.vertices.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(Error::Config(format!("duplicate vertex {name:?}")));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownVertex(name.to_string()))
        };
        let edges = self
            .edges
            .iter()
            .map(|e| Ok(Edge::new(lookup(&e.from)?, lookup(&e.to)?)))
            .collect::<Result<Vec<_>>>()?;
        let models = self
            .edges
            .iter()
            .map(|e| EdgeCostModel::new(e.coefficients.clone(), e.noise.clone()))
            .collect();
        let commodities = self
            .commodities
            .iter()
            .map(|c| {
                Ok(Commodity {
                    source: lookup(&c.source)?,
                    dest: lookup(&c.dest)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let topology = Topology::new(self.vertices.len(), edges)?;
        let inst = Instance::new(self.vertices.clone(), topology, models, commodities, self.seed)?;
        if self.edges.iter().any(|e| e.name.is_some()) {
            let names = self
                .edges
                .iter()
                .enumerate()
                .map(|(i, e)| e.name.clone().unwrap_or_else(|| format!("e{}", i + 1)))
                .collect();
            return inst.with_edge_names(names);
        }
        Ok(inst)
    }
}

//! JSON problem files.
//!
//! ```json
//! { "vertices": ["a", "b"],
//!   "edges": [{"id": "e0", "from": "a", "to": "b", "g": 9.8696}],
//!   "density": {"e0": 1.0},
//!   "mesh_per_edge": 256 }
//! ```
//!
//! Densities default to 1; a scalar density is broadcast over the edge and an
//! array must carry exactly `mesh_per_edge + 1` samples.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DiscreteGraph, EdgeSamples, MetricDensity, DEFAULT_MESH_PER_EDGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Constant(f64),
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub density: BTreeMap<String, DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_per_edge: Option<usize>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|err| Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Problem description for an existing graph and metric/density.
    pub fn describe(graph: &DiscreteGraph, md: &MetricDensity) -> Self {
        let edges = graph
            .edges()
            .iter()
            .zip(md.g())
            .map(|(edge, &g)| EdgeSpec {
                id: edge.id.clone(),
                from: graph.vertices()[edge.tail].clone(),
                to: graph.vertices()[edge.head].clone(),
                g,
            })
            .collect();
        let density = graph
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let row = md.rho().edge(e);
                let spec = if md.has_constant_density_on(e) {
                    DensitySpec::Constant(row[0])
                } else {
                    DensitySpec::Samples(row.to_vec())
                };
                (edge.id.clone(), spec)
            })
            .collect();
        ProblemFile {
            vertices: graph.vertices().to_vec(),
            edges,
            density,
            mesh_per_edge: Some(md.mesh()),
        }
    }

    /// Validated graph and metric/density, with defaults applied.
    pub fn build(&self, mesh_override: Option<usize>) -> Result<(DiscreteGraph, MetricDensity)> {
        let graph = DiscreteGraph::new(
            self.vertices.iter().cloned(),
            self.edges.iter().map(|e| (e.id.clone(), e.from.clone(), e.to.clone())),
        )?;
        let mesh = mesh_override
            .or(self.mesh_per_edge)
            .unwrap_or(DEFAULT_MESH_PER_EDGE);
        if mesh < 2 {
            return Err(Error::Validation("mesh_per_edge must be at least 2".into()));
        }
        for id in self.density.keys() {
            if graph.edge_index(id).is_none() {
                return Err(Error::Validation(format!("density given for unknown edge `{id}`")));
            }
        }
        let rows = self
            .edges
            .iter()
            .map(|edge| match self.density.get(&edge.id) {
                None => Ok(vec![1.0; mesh + 1]),
                Some(DensitySpec::Constant(v)) => Ok(vec![*v; mesh + 1]),
                Some(DensitySpec::Samples(samples)) if samples.len() == mesh + 1 => Ok(samples.clone()),
                Some(DensitySpec::Samples(samples)) => Err(Error::Validation(format!(
                    "density of edge `{}` has {} samples, expected mesh_per_edge + 1 = {}",
                    edge.id,
                    samples.len(),
                    mesh + 1
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let rho = EdgeSamples::new(mesh, rows)?;
        let g = self.edges.iter().map(|e| e.g).collect();
        let md = MetricDensity::new(&graph, g, rho)?;
        Ok((graph, md))
    }
}

/// Reads and validates a problem file.
pub fn parse_problem_file(path: impl AsRef<Path>) -> Result<(DiscreteGraph, MetricDensity)> {
    ProblemFile::read(path)?.build(None)
}

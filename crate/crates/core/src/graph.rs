//! Combinatorial graphs, metric/density data and functions sampled on edges.
//!
//! Every edge is parametrized by the unit interval `[0, 1]`; the physical
//! coordinate on edge `e` is `x_g = sqrt(g_e) * x`, so changing the metric
//! only rescales coefficients and never remeshes. Sample `j` of an edge sits
//! at `x = j / mesh`; sample `0` is the tail vertex and sample `mesh` the head.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of mesh intervals per edge.
pub const DEFAULT_MESH_PER_EDGE: usize = 256;

/// Which end of an edge is attached to a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum End {
    /// Parameter value `x = 0`.
    Tail,
    /// Parameter value `x = 1`.
    Head,
}

/// One edge end incident to a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeEnd {
    pub edge: usize,
    pub end: End,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }

    pub fn vertex_at(&self, end: End) -> usize {
        match end {
            End::Tail => self.tail,
            End::Head => self.head,
        }
    }
}

/// Connected multigraph; loops and parallel edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    incidence: Vec<Vec<EdgeEnd>>,
}

impl DiscreteGraph {
    /// Validates and builds a graph from vertex names and `(id, from, to)` triples.
    pub fn new<V, E>(vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, String, String)>,
    {
        let vertices: Vec<String> = vertices.into_iter().map(Into::into).collect();
        if vertices.is_empty() {
            return Err(Error::Validation("graph must have at least one vertex".into()));
        }
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, name) in vertices.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate vertex `{name}`")));
            }
        }

        let mut seen = HashSet::new();
        let mut built = Vec::new();
        for (id, from, to) in edges {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateEdgeId(id));
            }
            let lookup = |name: &str| {
                index
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::UnknownVertexReference {
                        edge: id.clone(),
                        vertex: name.to_string(),
                    })
            };
            let tail = lookup(&from)?;
            let head = lookup(&to)?;
            built.push(Edge { id, tail, head });
        }
        if built.is_empty() {
            return Err(Error::Validation("graph must have at least one edge".into()));
        }

        let mut incidence = vec![Vec::new(); vertices.len()];
        for (e, edge) in built.iter().enumerate() {
            incidence[edge.tail].push(EdgeEnd { edge: e, end: End::Tail });
            incidence[edge.head].push(EdgeEnd { edge: e, end: End::Head });
        }

        let graph = DiscreteGraph {
            vertices,
            edges: built,
            incidence,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    fn check_connected(&self) -> Result<()> {
        let mut visited = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(v) = queue.pop_front() {
            for end in &self.incidence[v] {
                let edge = &self.edges[end.edge];
                let other = if edge.tail == v { edge.head } else { edge.tail };
                if !visited[other] {
                    visited[other] = true;
                    queue.push_back(other);
                }
            }
        }
        match visited.iter().position(|&seen| !seen) {
            Some(v) => Err(Error::DisconnectedGraph(self.vertices[v].clone())),
            None => Ok(()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Edge ends attached to vertex `v`; a loop contributes two entries.
    pub fn incident(&self, v: usize) -> &[EdgeEnd] {
        &self.incidence[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Two vertices joined by a single edge.
    pub fn interval() -> Self {
        Self::pumpkin(1)
    }

    /// One vertex carrying one loop.
    pub fn single_loop() -> Self {
        Self::flower(1)
    }

    /// Two vertices `a`, `b` joined by `m` parallel edges oriented `a -> b`.
    pub fn pumpkin(m: usize) -> Self {
        let edges = (0..m).map(|i| (format!("e{i}"), "a".to_string(), "b".to_string()));
        Self::new(["a", "b"], edges).expect("pumpkin graph is valid")
    }

    /// One vertex `o` with `m` loops.
    pub fn flower(m: usize) -> Self {
        let edges = (0..m).map(|i| (format!("p{i}"), "o".to_string(), "o".to_string()));
        Self::new(["o"], edges).expect("flower graph is valid")
    }

    /// Chain `v0 - v1 - ... - v_pairs` where consecutive vertices share two
    /// parallel edges `e{j}a`, `e{j}b`.
    pub fn necklace(pairs: usize) -> Self {
        let vertices: Vec<String> = (0..=pairs).map(|j| format!("v{j}")).collect();
        let mut edges = Vec::with_capacity(2 * pairs);
        for j in 0..pairs {
            for side in ["a", "b"] {
                edges.push((format!("e{j}{side}"), vertices[j].clone(), vertices[j + 1].clone()));
            }
        }
        Self::new(vertices, edges).expect("necklace graph is valid")
    }
}

/// Anything stored as one sample array of length `mesh + 1` per edge.
pub trait Sampled {
    fn mesh(&self) -> usize;
    fn edge_samples(&self, e: usize) -> &[f64];
    fn edge_len(&self) -> usize;
}

/// Per-edge sample arrays with no vertex coupling (densities, gradients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSamples {
    mesh: usize,
    values: Vec<Vec<f64>>,
}

impl EdgeSamples {
    pub fn new(mesh: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        for row in &values {
            if row.len() != mesh + 1 {
                return Err(Error::MeshMismatch {
                    expected: mesh + 1,
                    found: row.len(),
                });
            }
        }
        Ok(EdgeSamples { mesh, values })
    }

    pub fn constant(edges: usize, mesh: usize, value: f64) -> Self {
        EdgeSamples {
            mesh,
            values: vec![vec![value; mesh + 1]; edges],
        }
    }

    /// One constant per edge, broadcast over the samples.
    pub fn per_edge(mesh: usize, per_edge: &[f64]) -> Self {
        EdgeSamples {
            mesh,
            values: per_edge.iter().map(|&v| vec![v; mesh + 1]).collect(),
        }
    }

    pub fn from_fn(edges: usize, mesh: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        let values = (0..edges)
            .map(|e| (0..=mesh).map(|j| f(e, j as f64 / mesh as f64)).collect())
            .collect();
        EdgeSamples { mesh, values }
    }

    pub fn edge(&self, e: usize) -> &[f64] {
        &self.values[e]
    }

    pub fn edge_mut(&mut self, e: usize) -> &mut [f64] {
        &mut self.values[e]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        EdgeSamples {
            mesh: self.mesh,
            values: self.values.iter().map(|r| r.iter().map(|&v| f(v)).collect()).collect(),
        }
    }

    /// Pointwise combination of two sample sets on the same mesh.
    pub fn zip_with(&self, other: &impl Sampled, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same_mesh(self, other)?;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(e, r)| r.iter().zip(other.edge_samples(e)).map(|(&a, &b)| f(a, b)).collect())
            .collect();
        Ok(EdgeSamples { mesh: self.mesh, values })
    }

    pub fn scale_edges(&self, factors: &[f64]) -> Self {
        EdgeSamples {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(factors)
                .map(|(r, &c)| r.iter().map(|&v| v * c).collect())
                .collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when every sample on edge `e` equals its first sample.
    pub fn is_constant_on(&self, e: usize) -> bool {
        let row = &self.values[e];
        row.iter().all(|&v| v == row[0])
    }
}

impl Sampled for EdgeSamples {
    fn mesh(&self) -> usize {
        self.mesh
    }
    fn edge_samples(&self, e: usize) -> &[f64] {
        &self.values[e]
    }
    fn edge_len(&self) -> usize {
        self.values.len()
    }
}

fn check_same_mesh(a: &impl Sampled, b: &impl Sampled) -> Result<()> {
    if a.mesh() != b.mesh() || a.edge_len() != b.edge_len() {
        return Err(Error::MeshMismatch {
            expected: a.mesh() + 1,
            found: b.mesh() + 1,
        });
    }
    Ok(())
}

fn check_mesh(md: &MetricDensity, f: &impl Sampled) -> Result<()> {
    if f.mesh() != md.mesh() || f.edge_len() != md.edge_count() {
        return Err(Error::MeshMismatch {
            expected: md.mesh() + 1,
            found: f.mesh() + 1,
        });
    }
    Ok(())
}

/// Metric coefficients `g_e` (length `sqrt(g_e)`) and sampled densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDensity {
    g: Vec<f64>,
    rho: EdgeSamples,
}

impl MetricDensity {
    pub fn new(graph: &DiscreteGraph, g: Vec<f64>, rho: EdgeSamples) -> Result<Self> {
        if g.len() != graph.edge_count() {
            return Err(Error::Validation(format!(
                "expected {} metric coefficients, found {}",
                graph.edge_count(),
                g.len()
            )));
        }
        if rho.edge_len() != graph.edge_count() {
            return Err(Error::Validation(format!(
                "expected {} density arrays, found {}",
                graph.edge_count(),
                rho.edge_len()
            )));
        }
        if rho.mesh() < 2 {
            return Err(Error::Validation("mesh_per_edge must be at least 2".into()));
        }
        if let Some(e) = g.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Validation(format!(
                "g must be positive (edge `{}` has g = {})",
                graph.edge(e).id,
                g[e]
            )));
        }
        for e in 0..graph.edge_count() {
            if rho.edge(e).iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(Error::Validation(format!(
                    "density must be positive (edge `{}`)",
                    graph.edge(e).id
                )));
            }
        }
        Ok(MetricDensity { g, rho })
    }

    /// Metric `g` with unit density.
    pub fn with_unit_density(graph: &DiscreteGraph, g: Vec<f64>, mesh: usize) -> Result<Self> {
        let rho = EdgeSamples::constant(graph.edge_count(), mesh, 1.0);
        Self::new(graph, g, rho)
    }

    /// Metric with prescribed edge lengths and unit density.
    pub fn from_lengths(graph: &DiscreteGraph, lengths: &[f64], mesh: usize) -> Result<Self> {
        Self::with_unit_density(graph, lengths.iter().map(|l| l * l).collect(), mesh)
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn rho(&self) -> &EdgeSamples {
        &self.rho
    }

    pub fn mesh(&self) -> usize {
        self.rho.mesh()
    }

    pub fn edge_count(&self) -> usize {
        self.g.len()
    }

    /// Parameter spacing `1 / mesh`.
    pub fn h(&self) -> f64 {
        1.0 / self.mesh() as f64
    }

    pub fn length(&self, e: usize) -> f64 {
        self.g[e].sqrt()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.g.iter().map(|g| g.sqrt()).collect()
    }

    /// `(a g, b rho)`.
    pub fn scaled(&self, a: f64, b: f64) -> Self {
        MetricDensity {
            g: self.g.iter().map(|g| a * g).collect(),
            rho: self.rho.map(|r| b * r),
        }
    }

    /// Same density, different metric; caller guarantees positivity.
    pub fn with_metric(&self, g: Vec<f64>) -> Self {
        MetricDensity { g, rho: self.rho.clone() }
    }

    pub fn with_density(&self, rho: EdgeSamples) -> Self {
        MetricDensity { g: self.g.clone(), rho }
    }

    pub fn has_constant_density_on(&self, e: usize) -> bool {
        self.rho.is_constant_on(e)
    }
}

/// `L(g) = sum_e sqrt(g_e)`.
pub fn total_length(md: &MetricDensity) -> f64 {
    md.g.iter().map(|g| g.sqrt()).sum()
}

/// Continuous function on the metric graph: edge samples whose end samples
/// coincide with the incident vertex values.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFunction {
    mesh: usize,
    edges: Vec<Vec<f64>>,
    vertex_values: Vec<f64>,
}

impl GraphFunction {
    /// Builds from vertex values and edge interiors (`mesh - 1` samples each).
    pub fn from_parts(
        graph: &DiscreteGraph,
        mesh: usize,
        vertex_values: Vec<f64>,
        interiors: &[&[f64]],
    ) -> Self {
        let edges = graph
            .edges()
            .iter()
            .zip(interiors)
            .map(|(edge, interior)| {
                let mut row = Vec::with_capacity(mesh + 1);
                row.push(vertex_values[edge.tail]);
                row.extend_from_slice(interior);
                row.push(vertex_values[edge.head]);
                row
            })
            .collect();
        GraphFunction { mesh, edges, vertex_values }
    }

    /// Builds from a global degree-of-freedom vector laid out by [`DofLayout`].
    pub fn from_dofs(graph: &DiscreteGraph, mesh: usize, dofs: &[f64]) -> Self {
        let layout = DofLayout::new(graph, mesh);
        let nv = graph.vertex_count();
        let interiors: Vec<&[f64]> = (0..graph.edge_count())
            .map(|e| {
                let start = layout.interior_start(e);
                &dofs[start..start + mesh - 1]
            })
            .collect();
        Self::from_parts(graph, mesh, dofs[..nv].to_vec(), &interiors)
    }

    /// Samples `f(edge, x)` on every edge. Vertex values are the mean of the
    /// incident end samples, which then overwrite those end samples.
    pub fn from_fn(graph: &DiscreteGraph, mesh: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut edges: Vec<Vec<f64>> = (0..graph.edge_count())
            .map(|e| (0..=mesh).map(|j| f(e, j as f64 / mesh as f64)).collect())
            .collect();
        let mut vertex_values = vec![0.0; graph.vertex_count()];
        for (v, value) in vertex_values.iter_mut().enumerate() {
            let ends = graph.incident(v);
            let sum: f64 = ends
                .iter()
                .map(|end| match end.end {
                    End::Tail => edges[end.edge][0],
                    End::Head => edges[end.edge][mesh],
                })
                .sum();
            *value = if ends.is_empty() { 0.0 } else { sum / ends.len() as f64 };
        }
        for (e, edge) in graph.edges().iter().enumerate() {
            edges[e][0] = vertex_values[edge.tail];
            edges[e][mesh] = vertex_values[edge.head];
        }
        GraphFunction { mesh, edges, vertex_values }
    }

    pub fn constant(graph: &DiscreteGraph, mesh: usize, value: f64) -> Self {
        GraphFunction {
            mesh,
            edges: vec![vec![value; mesh + 1]; graph.edge_count()],
            vertex_values: vec![value; graph.vertex_count()],
        }
    }

    pub fn vertex_values(&self) -> &[f64] {
        &self.vertex_values
    }

    pub fn edge(&self, e: usize) -> &[f64] {
        &self.edges[e]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn to_dofs(&self) -> Vec<f64> {
        let mut dofs = self.vertex_values.clone();
        for row in &self.edges {
            dofs.extend_from_slice(&row[1..self.mesh]);
        }
        dofs
    }

    pub fn to_samples(&self) -> EdgeSamples {
        EdgeSamples {
            mesh: self.mesh,
            values: self.edges.clone(),
        }
    }

    fn combine(&self, other: &GraphFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same_mesh(self, other)?;
        let edges = self
            .edges
            .iter()
            .zip(&other.edges)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        let vertex_values = self
            .vertex_values
            .iter()
            .zip(&other.vertex_values)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok(GraphFunction {
            mesh: self.mesh,
            edges,
            vertex_values,
        })
    }

    pub fn add(&self, other: &GraphFunction) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &GraphFunction) -> Result<Self> {
        self.combine(other, |a, b| a * b)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GraphFunction {
            mesh: self.mesh,
            edges: self.edges.iter().map(|r| r.iter().map(|&v| f(v)).collect()).collect(),
            vertex_values: self.vertex_values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Linear combination `sum_i c_i f_i` of functions on one mesh.
    pub fn linear_combination(coeffs: &[f64], functions: &[GraphFunction]) -> Self {
        let first = &functions[0];
        let mut out = first.scale(0.0);
        for (c, f) in coeffs.iter().zip(functions) {
            for (row, src) in out.edges.iter_mut().zip(&f.edges) {
                for (a, &b) in row.iter_mut().zip(src) {
                    *a += c * b;
                }
            }
            for (a, &b) in out.vertex_values.iter_mut().zip(&f.vertex_values) {
                *a += c * b;
            }
        }
        out
    }

    /// Largest mismatch between an edge end sample and its vertex value.
    pub fn continuity_defect(&self, graph: &DiscreteGraph) -> f64 {
        graph
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let row = &self.edges[e];
                (row[0] - self.vertex_values[edge.tail])
                    .abs()
                    .max((row[self.mesh] - self.vertex_values[edge.head]).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.edges.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.edges.iter().flatten().all(|&v| v == 0.0)
    }
}

impl Sampled for GraphFunction {
    fn mesh(&self) -> usize {
        self.mesh
    }
    fn edge_samples(&self, e: usize) -> &[f64] {
        &self.edges[e]
    }
    fn edge_len(&self) -> usize {
        self.edges.len()
    }
}

/// Global numbering: vertices first, then the `mesh - 1` interior samples of
/// each edge in edge order.
#[derive(Debug, Clone, Copy)]
pub struct DofLayout {
    vertices: usize,
    edges: usize,
    mesh: usize,
}

impl DofLayout {
    pub fn new(graph: &DiscreteGraph, mesh: usize) -> Self {
        DofLayout {
            vertices: graph.vertex_count(),
            edges: graph.edge_count(),
            mesh,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices + self.edges * (self.mesh - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interior_start(&self, e: usize) -> usize {
        self.vertices + e * (self.mesh - 1)
    }

    /// Global index of sample `j` on edge `e`.
    pub fn index(&self, edge: &Edge, e: usize, j: usize) -> usize {
        if j == 0 {
            edge.tail
        } else if j == self.mesh {
            edge.head
        } else {
            self.interior_start(e) + j - 1
        }
    }
}

/// `∫ f · w dx_g` by the composite trapezoid rule on each edge.
pub fn integrate(f: &impl Sampled, md: &MetricDensity, weight: Option<&dyn Sampled>) -> Result<f64> {
    check_mesh(md, f)?;
    if let Some(w) = weight {
        if w.mesh() != md.mesh() || w.edge_len() != md.edge_count() {
            return Err(Error::MeshMismatch {
                expected: md.mesh() + 1,
                found: w.mesh() + 1,
            });
        }
    }
    let h = md.h();
    let mut total = 0.0;
    for e in 0..md.edge_count() {
        let fe = f.edge_samples(e);
        let sum = match weight {
            Some(w) => trapezoid(fe.iter().zip(w.edge_samples(e)).map(|(a, b)| a * b)),
            None => trapezoid(fe.iter().copied()),
        };
        total += md.length(e) * h * sum;
    }
    Ok(total)
}

/// Trapezoid weights on unit spacing: half weight on the first and last sample.
fn trapezoid(samples: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = samples.len();
    samples
        .enumerate()
        .map(|(j, v)| if j == 0 || j + 1 == n { 0.5 * v } else { v })
        .sum()
}

/// Parameter derivative `df/dx` on edge samples: centered in the interior,
/// second-order one-sided at the ends.
pub fn parameter_derivative(samples: &[f64], h: f64) -> Vec<f64> {
    let n = samples.len() - 1;
    let mut d = Vec::with_capacity(n + 1);
    d.push((-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2.0 * h));
    for j in 1..n {
        d.push((samples[j + 1] - samples[j - 1]) / (2.0 * h));
    }
    d.push((3.0 * samples[n] - 4.0 * samples[n - 1] + samples[n - 2]) / (2.0 * h));
    d
}

/// `|∇_g f|² = (f')² / g_e` in the unit parameter.
pub fn grad_norm_sq(f: &GraphFunction, md: &MetricDensity) -> Result<EdgeSamples> {
    check_mesh(md, f)?;
    let h = md.h();
    let values = (0..md.edge_count())
        .map(|e| {
            let g = md.g()[e];
            parameter_derivative(f.edge(e), h)
                .into_iter()
                .map(|d| d * d / g)
                .collect()
        })
        .collect();
    Ok(EdgeSamples { mesh: md.mesh(), values })
}

/// A pair of functions in `L²(G, g) × L²(G, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub metric: EdgeSamples,
    pub density: EdgeSamples,
}

/// `<(f1, f2), (h1, h2)> = ∫ f1 h1 + f2 h2 dx_g`.
pub fn h_inner(a: &FieldPair, b: &FieldPair, md: &MetricDensity) -> Result<f64> {
    Ok(integrate(&a.metric, md, Some(&b.metric))? + integrate(&a.density, md, Some(&b.density))?)
}

/// Tangent direction `(phi, eta)`: per-edge metric change and sampled density change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPair {
    pub phi: Vec<f64>,
    pub eta: EdgeSamples,
}

impl PerturbationPair {
    pub fn new(phi: Vec<f64>, eta: EdgeSamples) -> Result<Self> {
        if phi.iter().any(|v| !v.is_finite()) || eta.rows().iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("perturbation entries must be finite".into()));
        }
        if phi.len() != eta.edge_len() {
            return Err(Error::Validation("phi and eta disagree on the edge count".into()));
        }
        Ok(PerturbationPair { phi, eta })
    }

    pub fn zero(edges: usize, mesh: usize) -> Self {
        PerturbationPair {
            phi: vec![0.0; edges],
            eta: EdgeSamples::constant(edges, mesh, 0.0),
        }
    }

    /// The scaling direction `(g, rho)`.
    pub fn scaling(md: &MetricDensity) -> Self {
        PerturbationPair {
            phi: md.g().to_vec(),
            eta: md.rho().clone(),
        }
    }

    pub fn as_fields(&self) -> FieldPair {
        FieldPair {
            metric: EdgeSamples::per_edge(self.eta.mesh(), &self.phi),
            density: self.eta.clone(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        PerturbationPair {
            phi: self.phi.iter().map(|v| c * v).collect(),
            eta: self.eta.map(|v| c * v),
        }
    }

    pub fn axpy(&self, c: f64, other: &PerturbationPair) -> Self {
        PerturbationPair {
            phi: self.phi.iter().zip(&other.phi).map(|(a, b)| a + c * b).collect(),
            eta: self.eta.zip_with(&other.eta, |a, b| a + c * b).expect("same mesh"),
        }
    }

    /// `(g + t phi, rho + t eta)`, or `StepTooLarge` if that leaves the cone.
    pub fn apply(&self, md: &MetricDensity, t: f64) -> Result<MetricDensity> {
        let g: Vec<f64> = md.g().iter().zip(&self.phi).map(|(g, p)| g + t * p).collect();
        let rho = md.rho().zip_with(&self.eta, |r, e| r + t * e)?;
        if g.iter().any(|&v| v <= 0.0) || rho.min() <= 0.0 {
            return Err(Error::StepTooLarge { step: t });
        }
        Ok(MetricDensity { g, rho })
    }
}

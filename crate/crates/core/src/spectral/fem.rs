//! Piecewise-linear finite elements on the unit-parametrized edges.
//!
//! On edge `e` with spacing `h = 1/mesh`, the element stiffness is
//! `1 / (h sqrt(g_e))` times the usual `[1 -1; -1 1]`, and the element mass
//! integrates `rho` interpolated linearly, scaled by `h sqrt(g_e)`. Vertex
//! samples are shared degrees of freedom, so continuity is built in and the
//! Kirchhoff condition is natural.

use crate::graph::{DiscreteGraph, DofLayout, Edge, GraphFunction, MetricDensity, Sampled};

/// Entries `(m00, m01, m11)` of one symmetric 2×2 element mass matrix.
pub(crate) type ElementMass = [f64; 3];

/// Exact `∫ N_a N_b w` over one element for linear `w`, times `scale`.
pub(crate) fn element_mass(scale: f64, w0: f64, w1: f64) -> ElementMass {
    [
        scale * (w0 / 4.0 + w1 / 12.0),
        scale * (w0 + w1) / 12.0,
        scale * (w0 / 12.0 + w1 / 4.0),
    ]
}

/// Assembled operators for one graph, metric and density.
#[derive(Debug, Clone)]
pub struct FemSystem {
    layout: DofLayout,
    edges: Vec<Edge>,
    vertices: usize,
    mesh: usize,
    stiffness: Vec<f64>,
    mass: Vec<Vec<ElementMass>>,
    element_scale: Vec<f64>,
}

impl FemSystem {
    pub fn new(graph: &DiscreteGraph, md: &MetricDensity) -> Self {
        let mesh = md.mesh();
        let h = md.h();
        let element_scale: Vec<f64> = (0..graph.edge_count()).map(|e| h * md.length(e)).collect();
        let stiffness = element_scale.iter().map(|s| 1.0 / s).collect();
        let mass = (0..graph.edge_count())
            .map(|e| {
                let rho = md.rho().edge(e);
                (0..mesh)
                    .map(|j| element_mass(element_scale[e], rho[j], rho[j + 1]))
                    .collect()
            })
            .collect();
        FemSystem {
            layout: DofLayout::new(graph, mesh),
            edges: graph.edges().to_vec(),
            vertices: graph.vertex_count(),
            mesh,
            stiffness,
            mass,
            element_scale,
        }
    }

    pub fn dof(&self) -> usize {
        self.layout.len()
    }

    pub fn mesh(&self) -> usize {
        self.mesh
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub(crate) fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub(crate) fn layout(&self) -> &DofLayout {
        &self.layout
    }

    /// Stiffness coefficient `1 / (h sqrt(g_e))`.
    pub(crate) fn stiffness(&self, e: usize) -> f64 {
        self.stiffness[e]
    }

    pub(crate) fn element_masses(&self, e: usize) -> &[ElementMass] {
        &self.mass[e]
    }

    fn node(&self, e: usize, j: usize) -> usize {
        self.layout.index(&self.edges[e], e, j)
    }

    /// `y = K x`.
    pub fn apply_stiffness(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..self.edges.len() {
            let k = self.stiffness[e];
            for j in 0..self.mesh {
                let (a, b) = (self.node(e, j), self.node(e, j + 1));
                let flux = k * (x[a] - x[b]);
                y[a] += flux;
                y[b] -= flux;
            }
        }
    }

    /// `y = M x`.
    pub fn apply_mass(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..self.edges.len() {
            for (j, m) in self.mass[e].iter().enumerate() {
                let (a, b) = (self.node(e, j), self.node(e, j + 1));
                y[a] += m[0] * x[a] + m[1] * x[b];
                y[b] += m[1] * x[a] + m[2] * x[b];
            }
        }
    }

    /// `∫_e u' v' / sqrt(g) dx` for P1 functions given by edge samples.
    pub fn edge_energy(&self, e: usize, u: &[f64], v: &[f64]) -> f64 {
        let sum: f64 = (0..self.mesh)
            .map(|j| (u[j + 1] - u[j]) * (v[j + 1] - v[j]))
            .sum();
        self.stiffness[e] * sum
    }

    /// `∫_e u v rho dx_g` with the consistent element mass.
    pub fn edge_mass(&self, e: usize, u: &[f64], v: &[f64]) -> f64 {
        self.mass[e]
            .iter()
            .enumerate()
            .map(|(j, m)| {
                m[0] * u[j] * v[j] + m[1] * (u[j] * v[j + 1] + u[j + 1] * v[j]) + m[2] * u[j + 1] * v[j + 1]
            })
            .sum()
    }

    /// `∫_e u v w dx_g` with `w` interpolated linearly, for an arbitrary weight.
    pub fn edge_weighted_mass(&self, e: usize, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let s = self.element_scale[e];
        (0..self.mesh)
            .map(|j| {
                let m = element_mass(s, w[j], w[j + 1]);
                m[0] * u[j] * v[j] + m[1] * (u[j] * v[j + 1] + u[j + 1] * v[j]) + m[2] * u[j + 1] * v[j + 1]
            })
            .sum()
    }

    pub fn energy(&self, u: &GraphFunction, v: &GraphFunction) -> f64 {
        (0..self.edges.len())
            .map(|e| self.edge_energy(e, u.edge_samples(e), v.edge_samples(e)))
            .sum()
    }

    pub fn mass_inner(&self, u: &GraphFunction, v: &GraphFunction) -> f64 {
        (0..self.edges.len())
            .map(|e| self.edge_mass(e, u.edge_samples(e), v.edge_samples(e)))
            .sum()
    }

    /// Dense stiffness and mass matrices, for small reference solves.
    pub fn dense_matrices(&self) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
        let n = self.dof();
        let mut k = nalgebra::DMatrix::zeros(n, n);
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for e in 0..self.edges.len() {
            let ke = self.stiffness[e];
            for (j, me) in self.mass[e].iter().enumerate() {
                let (a, b) = (self.node(e, j), self.node(e, j + 1));
                k[(a, a)] += ke;
                k[(b, b)] += ke;
                k[(a, b)] -= ke;
                k[(b, a)] -= ke;
                m[(a, a)] += me[0];
                m[(a, b)] += me[1];
                m[(b, a)] += me[1];
                m[(b, b)] += me[2];
            }
        }
        (k, m)
    }
}

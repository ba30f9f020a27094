//! Laplacian eigenproblems `-(1/ρ) Δ_g u = λ u` with Kirchhoff conditions.

pub mod fem;
pub mod oracle;
mod solver;

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{parameter_derivative, total_length, DiscreteGraph, End, GraphFunction, MetricDensity};
pub use fem::FemSystem;

/// Default relative tolerance for grouping eigenvalues into clusters.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

/// Lowest eigenpairs of one graph with mass-orthonormal eigenfunctions.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<GraphFunction>,
    clusters: Vec<Range<usize>>,
    cluster_tol: f64,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[GraphFunction] {
        &self.eigenfunctions
    }

    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Cluster containing index `k`.
    pub fn cluster_of(&self, k: usize) -> Range<usize> {
        self.clusters
            .iter()
            .find(|c| c.contains(&k))
            .cloned()
            .unwrap_or(k..k + 1)
    }

    /// Whether the cluster of `k` ends strictly before the last computed
    /// eigenvalue, so the whole eigenspace is known.
    pub fn cluster_is_complete(&self, k: usize) -> bool {
        self.cluster_of(k).end < self.eigenvalues.len()
    }

    /// Regroups the eigenvalues with a different tolerance and
    /// re-orthonormalizes within the new clusters.
    pub fn recluster(&self, graph: &DiscreteGraph, md: &MetricDensity, rel_tol: f64) -> Self {
        let clusters = cluster_eigenspaces(&self.eigenvalues, rel_tol);
        let sys = FemSystem::new(graph, md);
        let mut eigenfunctions = self.eigenfunctions.clone();
        for c in &clusters {
            lowdin(&sys, &mut eigenfunctions[c.clone()]);
        }
        Spectrum {
            eigenvalues: self.eigenvalues.clone(),
            eigenfunctions,
            clusters,
            cluster_tol: rel_tol,
        }
    }

    /// Eigenvalues and eigenfunctions of one cluster.
    pub fn cluster(&self, k: usize) -> (Vec<f64>, &[GraphFunction]) {
        let c = self.cluster_of(k);
        (self.eigenvalues[c.clone()].to_vec(), &self.eigenfunctions[c])
    }
}

/// Negative shift of the order of the first nonzero eigenvalue.
fn default_shift(md: &MetricDensity) -> f64 {
    let l = total_length(md);
    let mass: f64 = (0..md.edge_count())
        .map(|e| {
            let row = md.rho().edge(e);
            let n = row.len() - 1;
            let trap: f64 = row.iter().sum::<f64>() - 0.5 * (row[0] + row[n]);
            md.length(e) * trap / n as f64
        })
        .sum();
    -(PI / l).powi(2) * l / mass
}

/// First `k_max + 1` eigenpairs.
pub fn solve_spectrum(graph: &DiscreteGraph, md: &MetricDensity, k_max: usize) -> Result<Spectrum> {
    solve_spectrum_with_tol(graph, md, k_max, DEFAULT_CLUSTER_TOL)
}

pub fn solve_spectrum_with_tol(
    graph: &DiscreteGraph,
    md: &MetricDensity,
    k_max: usize,
    cluster_tol: f64,
) -> Result<Spectrum> {
    if md.edge_count() != graph.edge_count() {
        return Err(Error::Validation("metric does not match the graph".into()));
    }
    let sys = FemSystem::new(graph, md);
    let count = k_max + 1;
    if count > sys.dof() {
        return Err(Error::MeshTooCoarse {
            requested: count,
            dof: sys.dof(),
        });
    }
    let pairs = solver::lowest_eigenpairs(&sys, count, default_shift(md))?;
    let mut eigenvalues = pairs.values;
    for v in eigenvalues.iter_mut() {
        if *v < 0.0 && *v > -1e-9 {
            *v = 0.0;
        }
    }
    let mut eigenfunctions: Vec<GraphFunction> = pairs
        .vectors
        .iter()
        .map(|v| GraphFunction::from_dofs(graph, md.mesh(), &orient(v)))
        .collect();
    let clusters = cluster_eigenspaces(&eigenvalues, cluster_tol);
    for c in &clusters {
        lowdin(&sys, &mut eigenfunctions[c.clone()]);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenfunctions,
        clusters,
        cluster_tol,
    })
}

/// Solves far enough that the cluster containing `k` is complete.
pub fn spectrum_through_cluster(
    graph: &DiscreteGraph,
    md: &MetricDensity,
    k: usize,
    cluster_tol: f64,
) -> Result<Spectrum> {
    let dof = FemSystem::new(graph, md).dof();
    let mut k_max = k + 3;
    loop {
        let spec = solve_spectrum_with_tol(graph, md, k_max.min(dof - 1), cluster_tol)?;
        if spec.cluster_is_complete(k) || k_max + 1 >= dof {
            return Ok(spec);
        }
        k_max = 2 * k_max + 2;
    }
}

/// Flips the sign so that the entry of largest magnitude is positive.
fn orient(v: &[f64]) -> Vec<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter().map(|x| -x).collect()
    } else {
        v.to_vec()
    }
}

/// Symmetric (Löwdin) mass-orthonormalization of a set of functions.
fn lowdin(sys: &FemSystem, fs: &mut [GraphFunction]) {
    let m = fs.len();
    if m == 0 {
        return;
    }
    let gram = DMatrix::from_fn(m, m, |i, j| sys.mass_inner(&fs[i], &fs[j]));
    let eig = SymmetricEigen::new(gram);
    if eig.eigenvalues.iter().any(|&s| !(s > 0.0)) {
        return;
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|s| 1.0 / s.sqrt()));
    let t = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let originals = fs.to_vec();
    for (j, f) in fs.iter_mut().enumerate() {
        let coeffs: Vec<f64> = (0..m).map(|i| t[(i, j)]).collect();
        *f = GraphFunction::linear_combination(&coeffs, &originals);
    }
}

/// Groups sorted eigenvalues: a cluster starting at `λ_s` holds every
/// following `λ_i` with `λ_i - λ_s <= rel_tol (1 + λ_s)`.
pub fn cluster_eigenspaces(values: &[f64], rel_tol: f64) -> Vec<Range<usize>> {
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[start] > rel_tol * (1.0 + values[start].abs()) {
            clusters.push(start..i);
            start = i;
        }
    }
    clusters
}

/// Rayleigh quotient `∫|∇_g f|² dx_g / ∫ f² ρ dx_g` with exact P1 integrals.
pub fn rayleigh(f: &GraphFunction, graph: &DiscreteGraph, md: &MetricDensity) -> Result<f64> {
    if f.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let sys = FemSystem::new(graph, md);
    Ok(sys.energy(f, f) / sys.mass_inner(f, f))
}

/// Physical derivative `df/dx_g` at an edge end, pointing into the edge.
fn outward_derivative(samples: &[f64], length: f64, end: End) -> f64 {
    let n = samples.len() - 1;
    let h = 1.0 / n as f64;
    let d = match end {
        End::Tail => (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2.0 * h),
        End::Head => -(3.0 * samples[n] - 4.0 * samples[n - 1] + samples[n - 2]) / (2.0 * h),
    };
    d / length
}

/// `|Σ_{e∈E_v} f'_e(v)|` per vertex, derivatives taken into the edge in
/// physical arclength.
pub fn kirchhoff_residuals(f: &GraphFunction, graph: &DiscreteGraph, md: &MetricDensity) -> Vec<f64> {
    (0..graph.vertex_count())
        .map(|v| {
            graph
                .incident(v)
                .iter()
                .map(|end| outward_derivative(f.edge(end.edge), md.length(end.edge), end.end))
                .sum::<f64>()
                .abs()
        })
        .collect()
}

/// Derivative of a discrete eigenfunction on one edge together with the
/// eigenvalue it locally represents.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGradient {
    /// `du/dx_g` at every sample.
    pub slope: Vec<f64>,
    /// Local eigenvalue `ω²/ρ`.
    pub lambda: f64,
}

/// Frequency `ω` and `θ = ωH` of the sinusoid a P1 eigenvector with
/// eigenvalue `lambda` samples on edge `e`, when the density there is
/// constant and the mode is resolved.
fn dispersion(md: &MetricDensity, e: usize, lambda: f64) -> Option<(f64, f64)> {
    if !md.has_constant_density_on(e) || lambda <= 0.0 {
        return None;
    }
    let r = md.rho().edge(e)[0];
    let big_h = md.length(e) * md.h();
    let mu_h2 = lambda * r * big_h * big_h;
    let cos = (6.0 - 2.0 * mu_h2) / (6.0 + mu_h2);
    if !(-1.0..1.0).contains(&cos) {
        return None;
    }
    let theta = cos.acos();
    if theta < 1e-7 || theta.sin() < 1e-6 {
        return None;
    }
    Some((theta / big_h, theta))
}

/// Eigenvalue of the continuous problem that a discrete eigenvalue
/// represents: the length-weighted mean of the per-edge `ω²/ρ`, or `lambda`
/// itself on edges without a constant density.
pub fn effective_eigenvalue(md: &MetricDensity, lambda: f64) -> f64 {
    let total = total_length(md);
    (0..md.edge_count())
        .map(|e| {
            let local = match dispersion(md, e, lambda) {
                Some((omega, _)) => omega * omega / md.rho().edge(e)[0],
                None => lambda,
            };
            md.length(e) * local
        })
        .sum::<f64>()
        / total
}

/// Derivatives of a discrete eigenfunction with eigenvalue `lambda`.
///
/// On an edge with constant density the P1 eigenvector is exactly a sampled
/// sinusoid of frequency `ω` with `cos(ωH) = (6 - 2μH²)/(6 + μH²)`, where
/// `μ = λρ` and `H` the physical spacing, so derivatives and the local
/// eigenvalue are read off that sinusoid. Other edges use finite differences.
pub fn eigen_gradient(u: &GraphFunction, md: &MetricDensity, lambda: f64) -> Vec<EdgeGradient> {
    (0..md.edge_count())
        .map(|e| {
            let samples = u.edge(e);
            let length = md.length(e);
            let Some((omega, theta)) = dispersion(md, e, lambda) else {
                return EdgeGradient {
                    slope: parameter_derivative(samples, md.h()).into_iter().map(|d| d / length).collect(),
                    lambda,
                };
            };
            let (sin, cos) = theta.sin_cos();
            let n = samples.len() - 1;
            let c = omega / sin;
            let mut slope = Vec::with_capacity(n + 1);
            slope.push(c * (samples[1] - samples[0] * cos));
            for j in 1..n {
                slope.push(c * 0.5 * (samples[j + 1] - samples[j - 1]));
            }
            slope.push(c * (samples[n] * cos - samples[n - 1]));
            EdgeGradient {
                slope,
                lambda: omega * omega / md.rho().edge(e)[0],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clusters_of_loop_spectrum() {
        let c = cluster_eigenspaces(&[0.0, 1.0, 1.0 + 1e-9, 4.0, 4.0], 1e-6);
        assert_eq!(c, vec![0..1, 1..3, 3..5]);
        let c = cluster_eigenspaces(&[0.0, 1.0, 2.0], 1e-6);
        assert_eq!(c, vec![0..1, 1..2, 2..3]);
        let c = cluster_eigenspaces(&[0.0, 1.0, 1.0 + 2e-5], 1e-6);
        assert_eq!(c, vec![0..1, 1..2, 2..3]);
    }

    #[test]
    fn interval_eigenvalues() {
        let graph = DiscreteGraph::interval();
        let md = MetricDensity::from_lengths(&graph, &[PI], 256).unwrap();
        let spec = solve_spectrum(&graph, &md, 2).unwrap();
        for (k, &v) in spec.eigenvalues().iter().enumerate() {
            let exact = (k * k) as f64;
            assert!((v - exact).abs() <= 1e-3 * exact.max(1e-6), "λ_{k} = {v}");
        }
    }

    #[test]
    fn gradient_is_exact_on_equilateral_loop() {
        let graph = DiscreteGraph::single_loop();
        let md = MetricDensity::from_lengths(&graph, &[2.0 * PI], 64).unwrap();
        let spec = solve_spectrum(&graph, &md, 2).unwrap();
        for k in 1..=2 {
            let u = &spec.eigenfunctions()[k];
            let grads = eigen_gradient(u, &md, spec.eigenvalues()[k]);
            assert!((grads[0].lambda - 1.0).abs() < 1e-10, "{}", grads[0].lambda);
            // u² + u'² is constant for a unit-frequency sinusoid
            let row = u.edge(0);
            let e0 = row[0].powi(2) + grads[0].slope[0].powi(2);
            for (a, b) in row.iter().zip(&grads[0].slope) {
                assert!((a * a + b * b - e0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kirchhoff_residual_of_interval_mode_is_small() {
        let graph = DiscreteGraph::interval();
        let md = MetricDensity::from_lengths(&graph, &[PI], 256).unwrap();
        let spec = solve_spectrum(&graph, &md, 1).unwrap();
        let r = kirchhoff_residuals(&spec.eigenfunctions()[1], &graph, &md);
        assert!(r.iter().all(|&v| v < 1e-3), "{r:?}");
    }
}

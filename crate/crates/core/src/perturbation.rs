//! Eigenvalue derivatives along metric/density perturbations and gradients
//! of the normalizing functionals.
//!
//! The eigenvalue gradient is represented by the pair
//! `Q(u) = -((|∇_g u|² + λ u² ρ) / 2g, λ u²)`, paired with a direction
//! `(φ, η)` through `∫ q_metric φ + q_density η dx_g`. Pairings are evaluated
//! with the exact P1 element integrals, so they reproduce the derivative of
//! the discrete eigenvalue.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{grad_norm_sq, total_length, DiscreteGraph, EdgeSamples, GraphFunction, MetricDensity, PerturbationPair};
use crate::spectral::{spectrum_through_cluster, FemSystem, Spectrum, DEFAULT_CLUSTER_TOL};

const NORMALIZATION_TOL: f64 = 1e-8;

/// Pointwise representative of `∇λ_k` at a normalized eigenfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct QPair {
    pub q_metric: EdgeSamples,
    pub q_density: EdgeSamples,
    pub lambda: f64,
    u: GraphFunction,
}

impl QPair {
    /// `⟨Q(u), (φ, η)⟩` with exact element integrals.
    pub fn pair(&self, graph: &DiscreteGraph, md: &MetricDensity, dir: &PerturbationPair) -> f64 {
        let sys = FemSystem::new(graph, md);
        q_bilinear(&sys, md, &self.u, &self.u, self.lambda, dir)
    }

    pub fn eigenfunction(&self) -> &GraphFunction {
        &self.u
    }
}

/// `Q(u)` for a mass-normalized `u` with eigenvalue `lambda`.
pub fn q_functional(u: &GraphFunction, graph: &DiscreteGraph, md: &MetricDensity, lambda: f64) -> Result<QPair> {
    let sys = FemSystem::new(graph, md);
    let norm = sys.mass_inner(u, u);
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let grad = grad_norm_sq(u, md)?;
    let rows = (0..md.edge_count())
        .map(|e| {
            let g = md.g()[e];
            let rho = md.rho().edge(e);
            let (metric, density): (Vec<f64>, Vec<f64>) = u
                .edge(e)
                .iter()
                .zip(grad.edge(e))
                .zip(rho)
                .map(|((&v, &d), &r)| (-(d + lambda * v * v * r) / (2.0 * g), -lambda * v * v))
                .unzip();
            (metric, density)
        })
        .collect::<Vec<_>>();
    let (metric, density): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(QPair {
        q_metric: EdgeSamples::new(md.mesh(), metric)?,
        q_density: EdgeSamples::new(md.mesh(), density)?,
        lambda,
        u: u.clone(),
    })
}

/// Symmetric bilinear form `⟨Q(u, v), (φ, η)⟩` whose diagonal is the pairing
/// of `Q(u)`.
pub(crate) fn q_bilinear(
    sys: &FemSystem,
    md: &MetricDensity,
    u: &GraphFunction,
    v: &GraphFunction,
    lambda: f64,
    dir: &PerturbationPair,
) -> f64 {
    (0..md.edge_count())
        .map(|e| {
            let (ue, ve) = (u.edge(e), v.edge(e));
            let mut total = 0.0;
            let phi = dir.phi[e];
            if phi != 0.0 {
                let g = md.g()[e];
                total -= phi / (2.0 * g) * (sys.edge_energy(e, ue, ve) + lambda * sys.edge_mass(e, ue, ve));
            }
            let eta = dir.eta.edge(e);
            if eta.iter().any(|&x| x != 0.0) {
                total -= lambda * sys.edge_weighted_mass(e, ue, ve, eta);
            }
            total
        })
        .sum()
}

/// Normalizing functional `N` with `λ̄ = λ N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum NormKind {
    /// `N(g) = L(g)²`; the density is held fixed.
    MetricOnly,
    /// `N(g, ρ) = L(g) ∫ρ dx_g`.
    Natural,
    /// `N_α(g, ρ) = F_α(g) H_α(g, ρ)`.
    Alpha(f64),
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::MetricOnly => write!(f, "metric"),
            NormKind::Natural => write!(f, "natural"),
            NormKind::Alpha(a) => write!(f, "alpha({a})"),
        }
    }
}

/// `∫_0^1 ρ_e dx` by the trapezoid rule, which is also what the P1 mass
/// matrix integrates.
pub(crate) fn unit_density_integral(md: &MetricDensity, e: usize) -> f64 {
    let row = md.rho().edge(e);
    let n = row.len() - 1;
    (row.iter().sum::<f64>() - 0.5 * (row[0] + row[n])) / n as f64
}

/// `∫ ρ dx_g`.
pub fn total_mass(md: &MetricDensity) -> f64 {
    (0..md.edge_count())
        .map(|e| md.length(e) * unit_density_integral(md, e))
        .sum()
}

/// `F_α(g) = Σ g_e^{1-α}`.
pub fn f_alpha(md: &MetricDensity, alpha: f64) -> f64 {
    md.g().iter().map(|g| g.powf(1.0 - alpha)).sum()
}

/// `H_α(g, ρ) = Σ g_e^α ∫_0^1 ρ_e dx`.
pub fn h_alpha(md: &MetricDensity, alpha: f64) -> f64 {
    (0..md.edge_count())
        .map(|e| md.g()[e].powf(alpha) * unit_density_integral(md, e))
        .sum()
}

/// Value of the normalizing functional.
pub fn normalization(kind: NormKind, md: &MetricDensity) -> f64 {
    match kind {
        NormKind::MetricOnly => total_length(md).powi(2),
        NormKind::Natural => total_length(md) * total_mass(md),
        NormKind::Alpha(a) => f_alpha(md, a) * h_alpha(md, a),
    }
}

/// `λ̄ = λ N`.
pub fn normalized_eigenvalue(kind: NormKind, lambda: f64, md: &MetricDensity) -> f64 {
    lambda * normalization(kind, md)
}

/// Gradient of `N` in the `ℋ(g)` inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct NormGrad {
    pub n_metric: EdgeSamples,
    pub n_density: EdgeSamples,
    pub kind: NormKind,
}

impl NormGrad {
    /// `⟨∇N, (φ, η)⟩` by edgewise trapezoid sums, which is exact for the
    /// piecewise-linear densities the solver sees.
    pub fn pair(&self, md: &MetricDensity, dir: &PerturbationPair) -> f64 {
        let mesh = md.mesh();
        (0..md.edge_count())
            .map(|e| {
                let nm = self.n_metric.edge(e);
                let nd = self.n_density.edge(e);
                let eta = dir.eta.edge(e);
                let sum: f64 = (0..=mesh)
                    .map(|j| {
                        let w = if j == 0 || j == mesh { 0.5 } else { 1.0 };
                        w * (nm[j] * dir.phi[e] + nd[j] * eta[j])
                    })
                    .sum();
                md.length(e) * sum / mesh as f64
            })
            .sum()
    }
}

/// Closed-form gradient of the normalizing functional.
pub fn norm_grad(kind: NormKind, md: &MetricDensity) -> NormGrad {
    let mesh = md.mesh();
    let edges = md.edge_count();
    let l = total_length(md);
    let (metric, density): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..edges)
        .map(|e| {
            let g = md.g()[e];
            let rho = md.rho().edge(e);
            match kind {
                NormKind::MetricOnly => (vec![l / g; mesh + 1], vec![0.0; mesh + 1]),
                NormKind::Natural => {
                    let mass = total_mass(md);
                    (rho.iter().map(|r| (mass + r * l) / (2.0 * g)).collect(), vec![l; mesh + 1])
                }
                NormKind::Alpha(a) => {
                    let f = f_alpha(md, a);
                    let h = h_alpha(md, a);
                    let metric = rho
                        .iter()
                        .map(|r| a * r * g.powf(a - 1.5) * f + (1.0 - a) * g.powf(-a - 0.5) * h)
                        .collect();
                    (metric, vec![g.powf(a - 0.5) * f; mesh + 1])
                }
            }
        })
        .unzip();
    NormGrad {
        n_metric: EdgeSamples::new(mesh, metric).expect("rows sized to mesh"),
        n_density: EdgeSamples::new(mesh, density).expect("rows sized to mesh"),
        kind,
    }
}

/// Largest relative mismatch between `norm_grad` and central differences of
/// `N` along each edge's metric and density coordinates.
pub fn norm_grad_fd_error(kind: NormKind, graph: &DiscreteGraph, md: &MetricDensity, step: f64) -> Result<f64> {
    let grad = norm_grad(kind, md);
    let mesh = md.mesh();
    let mut worst = 0.0f64;
    for e in 0..graph.edge_count() {
        let mut dirs = Vec::new();
        let mut phi = vec![0.0; graph.edge_count()];
        phi[e] = md.g()[e];
        dirs.push(PerturbationPair::new(phi, EdgeSamples::constant(graph.edge_count(), mesh, 0.0))?);
        if kind != NormKind::MetricOnly {
            let mut eta = EdgeSamples::constant(graph.edge_count(), mesh, 0.0);
            eta.edge_mut(e).copy_from_slice(md.rho().edge(e));
            dirs.push(PerturbationPair::new(vec![0.0; graph.edge_count()], eta)?);
        }
        for dir in dirs {
            let plus = normalization(kind, &dir.apply(md, step)?);
            let minus = normalization(kind, &dir.apply(md, -step)?);
            let fd = (plus - minus) / (2.0 * step);
            let exact = grad.pair(md, &dir);
            worst = worst.max((fd - exact).abs() / exact.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// Derivative of `λ_k` along a direction. At a multiple eigenvalue the
/// branches through the cluster have slopes `slopes` (ascending); `lo`/`hi`
/// are their extremes, `right`/`left` the one-sided derivatives of `λ_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionalDerivative {
    pub lo: f64,
    pub hi: f64,
    pub right: f64,
    pub left: f64,
    pub slopes: Vec<f64>,
    pub lambda: f64,
    pub cluster: (usize, usize),
}

/// `P_ij = ⟨Q(u_i, u_j), dir⟩` over an orthonormal cluster basis.
pub fn cluster_pairing_matrix(
    basis: &[GraphFunction],
    lambda: f64,
    graph: &DiscreteGraph,
    md: &MetricDensity,
    dir: &PerturbationPair,
) -> DMatrix<f64> {
    let sys = FemSystem::new(graph, md);
    let m = basis.len();
    let mut p = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = q_bilinear(&sys, md, &basis[i], &basis[j], lambda, dir);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    p
}

/// Ascending eigenvalues of a symmetric matrix.
pub(crate) fn sorted_eigenvalues(p: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(p).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Rejects clusters that nearly merge with their neighbours.
pub fn check_cluster_separation(spec: &Spectrum, k: usize) -> Result<()> {
    let c = spec.cluster_of(k);
    let values = spec.eigenvalues();
    let lam = values[k];
    let margin = 10.0 * spec.cluster_tol() * (1.0 + lam.abs());
    let below = c.start.checked_sub(1).map(|i| values[c.start] - values[i]);
    let above = values.get(c.end).map(|v| v - values[c.end - 1]);
    for gap in [below, above].into_iter().flatten() {
        if gap < margin {
            return Err(Error::ClusterAmbiguous { index: k, gap });
        }
    }
    Ok(())
}

/// One-sided derivatives of `λ_k` from a solved spectrum.
pub fn directional_derivative_from(
    spec: &Spectrum,
    graph: &DiscreteGraph,
    md: &MetricDensity,
    k: usize,
    dir: &PerturbationPair,
) -> Result<DirectionalDerivative> {
    check_cluster_separation(spec, k)?;
    let c = spec.cluster_of(k);
    let (values, basis) = spec.cluster(k);
    let lambda = values.iter().sum::<f64>() / values.len() as f64;
    let slopes = sorted_eigenvalues(cluster_pairing_matrix(basis, lambda, graph, md, dir));
    let pos = k - c.start;
    let m = slopes.len();
    Ok(DirectionalDerivative {
        lo: slopes[0],
        hi: slopes[m - 1],
        right: slopes[pos],
        left: slopes[m - 1 - pos],
        slopes,
        lambda: spec.eigenvalues()[k],
        cluster: (c.start, c.end),
    })
}

/// Derivative interval of `λ_k` at `(g, ρ)` along `dir`.
pub fn directional_derivative(
    graph: &DiscreteGraph,
    md: &MetricDensity,
    k: usize,
    dir: &PerturbationPair,
) -> Result<DirectionalDerivative> {
    let spec = spectrum_through_cluster(graph, md, k, DEFAULT_CLUSTER_TOL)?;
    directional_derivative_from(&spec, graph, md, k, dir)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdSlope {
    pub step: f64,
    pub central: f64,
    pub forward: f64,
    pub backward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdReport {
    pub analytic: DirectionalDerivative,
    pub slopes: Vec<FdSlope>,
    /// Largest `|central - right| / |right|` over the steps.
    pub max_rel_error: f64,
    /// Largest distance of a one-sided slope outside `[lo, hi]`.
    pub bracket_violation: f64,
}

/// Finite differences of `λ_k` along `(g + tφ, ρ + tη)` against the
/// analytic derivative.
pub fn fd_check(
    graph: &DiscreteGraph,
    md: &MetricDensity,
    k: usize,
    dir: &PerturbationPair,
    steps: &[f64],
) -> Result<FdReport> {
    let spec = spectrum_through_cluster(graph, md, k, DEFAULT_CLUSTER_TOL)?;
    let analytic = directional_derivative_from(&spec, graph, md, k, dir)?;
    let base = spec.eigenvalues()[k];
    let lambda_at = |t: f64| -> Result<f64> {
        let moved = dir.apply(md, t)?;
        Ok(crate::spectral::solve_spectrum(graph, &moved, k)?.eigenvalues()[k])
    };
    let slopes = steps
        .par_iter()
        .map(|&t| {
            let plus = lambda_at(t)?;
            let minus = lambda_at(-t)?;
            Ok(FdSlope {
                step: t,
                central: (plus - minus) / (2.0 * t),
                forward: (plus - base) / t,
                backward: (base - minus) / t,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rel_error = slopes
        .iter()
        .map(|s| (s.central - analytic.right).abs() / analytic.right.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let bracket_violation = slopes
        .iter()
        .flat_map(|s| [s.forward, s.backward])
        .map(|v| (analytic.lo - v).max(v - analytic.hi).max(0.0))
        .fold(0.0, f64::max);
    Ok(FdReport {
        analytic,
        slopes,
        max_rel_error,
        bracket_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::solve_spectrum;
    use std::f64::consts::PI;

    #[test]
    fn natural_gradient_on_unit_metric() {
        let graph = DiscreteGraph::pumpkin(3);
        let md = MetricDensity::from_lengths(&graph, &[1.0; 3], 8).unwrap();
        let g = norm_grad(NormKind::Natural, &md);
        assert!(g.n_metric.rows().iter().flatten().all(|&v| (v - 3.0).abs() < 1e-14));
        assert!(g.n_density.rows().iter().flatten().all(|&v| (v - 3.0).abs() < 1e-14));
        let g = norm_grad(NormKind::MetricOnly, &md);
        assert!(g.n_metric.rows().iter().flatten().all(|&v| (v - 3.0).abs() < 1e-14));
        assert!(g.n_density.rows().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn alpha_half_is_natural() {
        let graph = DiscreteGraph::necklace(2);
        let rho = EdgeSamples::from_fn(4, 16, |e, x| 1.0 + 0.1 * e as f64 + x * x);
        let md = MetricDensity::new(&graph, vec![1.0, 2.0, 0.5, 3.0], rho).unwrap();
        let a = norm_grad(NormKind::Alpha(0.5), &md);
        let n = norm_grad(NormKind::Natural, &md);
        for (x, y) in a.n_metric.rows().iter().flatten().zip(n.n_metric.rows().iter().flatten()) {
            assert!((x - y).abs() < 1e-12 * y.abs());
        }
        for (x, y) in a.n_density.rows().iter().flatten().zip(n.n_density.rows().iter().flatten()) {
            assert!((x - y).abs() < 1e-12 * y.abs());
        }
        let diff = normalization(NormKind::Alpha(0.5), &md) - normalization(NormKind::Natural, &md);
        assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn q_of_ground_state_vanishes() {
        let graph = DiscreteGraph::pumpkin(3);
        let md = MetricDensity::from_lengths(&graph, &[1.0, 2.0, 3.0], 32).unwrap();
        let spec = solve_spectrum(&graph, &md, 1).unwrap();
        let q = q_functional(&spec.eigenfunctions()[0], &graph, &md, 0.0).unwrap();
        assert!(q.q_metric.rows().iter().flatten().all(|v| v.abs() < 1e-12));
        assert!(q.q_density.rows().iter().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn q_density_on_interval() {
        let graph = DiscreteGraph::interval();
        let md = MetricDensity::from_lengths(&graph, &[PI], 256).unwrap();
        let spec = solve_spectrum(&graph, &md, 1).unwrap();
        let u = &spec.eigenfunctions()[1];
        let q = q_functional(u, &graph, &md, 1.0).unwrap();
        let sign = u.edge(0)[0].signum();
        for (j, &v) in q.q_density.edge(0).iter().enumerate() {
            let x = PI * j as f64 / 256.0;
            let want = -(2.0 / PI) * x.cos().powi(2);
            assert!((v - want).abs() < 1e-4, "j={j} {v} {want} {sign}");
        }
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let graph = DiscreteGraph::interval();
        let md = MetricDensity::from_lengths(&graph, &[1.0], 16).unwrap();
        let u = GraphFunction::constant(&graph, 16, 2.0);
        assert!(matches!(q_functional(&u, &graph, &md, 0.0), Err(Error::NotNormalized(_))));
    }
}

//! Extremality certificates and the 4λ test.
//!
//! A certificate is a positive-semidefinite matrix `C` over an orthonormal
//! basis `u_1..u_m` of one eigenspace such that `f = C^{1/2} u` realizes the
//! pointwise identities of the chosen normalization:
//!
//! * `thm1`: `Σ |∇f_i|² + λ ρ f_i² = 1`
//! * `thm2`: `Σ |∇f_i|² = 1` and `λ Σ f_i² = L(g) / ∫ρ dx_g`
//! * `thm3(α)`: the general identities `Σ|∇f_i|² = 2gN₁ - ρN₂`,
//!   `λ Σ f_i² = N₂` for `N_α`, rescaled so their length-weighted mean
//!   gradient target is 1.
//!
//! The search alternates projections between the least-squares solution set
//! of the pointwise linear constraints and the PSD cone.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{total_length, DiscreteGraph, EdgeSamples, GraphFunction, MetricDensity};
use crate::perturbation::{norm_grad, total_mass, NormKind};
use crate::spectral::{
    effective_eigenvalue, eigen_gradient, kirchhoff_residuals, rayleigh, solve_spectrum_with_tol, spectrum_through_cluster, EdgeGradient,
    FemSystem, DEFAULT_CLUSTER_TOL,
};

pub const DEFAULT_CERTIFY_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_FOUR_LAMBDA_WINDOW: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "alpha", rename_all = "snake_case")]
pub enum TargetKind {
    Thm1,
    Thm2,
    Thm3(f64),
}

impl TargetKind {
    pub fn norm_kind(self) -> NormKind {
        match self {
            TargetKind::Thm1 => NormKind::MetricOnly,
            TargetKind::Thm2 => NormKind::Natural,
            TargetKind::Thm3(a) => NormKind::Alpha(a),
        }
    }
}

/// Pointwise right-hand sides. For `thm1` `t_grad` is the combined target
/// for `Σ |∇f_i|² + λρ f_i²` and `t_val` is absent; otherwise `t_grad`
/// targets `Σ |∇f_i|²` and `t_val` targets `λ Σ f_i²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPair {
    pub kind: TargetKind,
    pub t_grad: EdgeSamples,
    pub t_val: Option<EdgeSamples>,
    /// Factor applied to the general identities (`2gN₁ - ρN₂`, `N₂`).
    pub scale: f64,
}

impl TargetPair {
    /// Splits a combined `thm1` target `T` into `Σ|∇f_i|² = T - ρ/2` and
    /// `λ Σ f_i² = 1/2`, the identities of a constant-norm map with
    /// `|F|² = 1/(2λ)`. Other kinds are returned unchanged.
    pub fn constant_norm_split(&self, md: &MetricDensity) -> Self {
        if self.t_val.is_some() {
            return self.clone();
        }
        TargetPair {
            kind: self.kind,
            t_grad: self.t_grad.zip_with(md.rho(), |t, r| t - 0.5 * r).expect("same mesh"),
            t_val: Some(self.t_grad.map(|_| 0.5)),
            scale: self.scale,
        }
    }

    /// Whether `t_grad` targets `Σ|∇f_i|² + λρ f_i²` as a whole.
    pub fn is_combined(&self) -> bool {
        self.t_val.is_none()
    }

    /// Whether the targets force `λ Σ f_i²` to be constant.
    pub fn forces_constant_norm(&self) -> bool {
        self.t_val
            .as_ref()
            .is_some_and(|t| t.max() - t.min() <= 1e-12 * t.max().abs().max(1.0))
    }

    pub fn scaled(&self, c: f64) -> Self {
        TargetPair {
            kind: self.kind,
            t_grad: self.t_grad.map(|v| c * v),
            t_val: self.t_val.as_ref().map(|t| t.map(|v| c * v)),
            scale: c * self.scale,
        }
    }
}

/// Targets for the identities of one normalization.
pub fn build_targets(kind: TargetKind, md: &MetricDensity) -> TargetPair {
    let grad = norm_grad(kind.norm_kind(), md);
    let mesh = md.mesh();
    let edges = md.edge_count();
    match kind {
        TargetKind::Thm1 => {
            let scale = 1.0 / (2.0 * total_length(md));
            let rows = (0..edges)
                .map(|e| grad.n_metric.edge(e).iter().map(|n| scale * 2.0 * md.g()[e] * n).collect())
                .collect();
            TargetPair {
                kind,
                t_grad: EdgeSamples::new(mesh, rows).expect("mesh-sized rows"),
                t_val: None,
                scale,
            }
        }
        TargetKind::Thm2 | TargetKind::Thm3(_) => {
            let raw_grad: Vec<Vec<f64>> = (0..edges)
                .map(|e| {
                    let g = md.g()[e];
                    grad.n_metric
                        .edge(e)
                        .iter()
                        .zip(grad.n_density.edge(e))
                        .zip(md.rho().edge(e))
                        .map(|((n1, n2), r)| 2.0 * g * n1 - r * n2)
                        .collect()
                })
                .collect();
            let scale = match kind {
                TargetKind::Thm2 => 1.0 / total_mass(md),
                _ => {
                    let mean: f64 = raw_grad
                        .iter()
                        .enumerate()
                        .map(|(e, row)| md.length(e) * row.iter().sum::<f64>() / row.len() as f64)
                        .sum::<f64>()
                        / total_length(md);
                    1.0 / mean
                }
            };
            let t_grad = raw_grad
                .into_iter()
                .map(|row| row.into_iter().map(|v| scale * v).collect())
                .collect();
            let t_val = (0..edges)
                .map(|e| grad.n_density.edge(e).iter().map(|v| scale * v).collect())
                .collect();
            TargetPair {
                kind,
                t_grad: EdgeSamples::new(mesh, t_grad).expect("mesh-sized rows"),
                t_val: Some(EdgeSamples::new(mesh, t_val).expect("mesh-sized rows")),
                scale,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub coeff: DMatrix<f64>,
    /// Sup-norm constraint residual relative to the largest target.
    pub residual_sup: f64,
    /// Root-mean-square residual relative to the largest target.
    pub residual_l2: f64,
    pub rank: usize,
    pub iterations: usize,
}

impl Certificate {
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.coeff.clone()).eigenvalues.min()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertifyOutcome {
    Found(Certificate),
    /// No certificate within tolerance; this is not a proof of infeasibility.
    NotFound { best: Certificate, iterations: usize },
}

impl CertifyOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CertifyOutcome::Found(c) => Some(c),
            CertifyOutcome::NotFound { .. } => None,
        }
    }

    pub fn best(&self) -> &Certificate {
        match self {
            CertifyOutcome::Found(c) => c,
            CertifyOutcome::NotFound { best, .. } => best,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, CertifyOutcome::Found(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifySettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CertifySettings {
    fn default() -> Self {
        CertifySettings {
            tol: DEFAULT_CERTIFY_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Index pairs `(i, j)`, `i <= j`, of the packed symmetric unknown.
fn packed_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..m).map(|i| (i, i)).collect();
    for i in 0..m {
        for j in i + 1..m {
            out.push((i, j));
        }
    }
    out
}

fn pack(c: &DMatrix<f64>) -> DVector<f64> {
    let m = c.nrows();
    let pairs = packed_pairs(m);
    DVector::from_iterator(
        pairs.len(),
        pairs
            .iter()
            .map(|&(i, j)| if i == j { c[(i, i)] } else { std::f64::consts::SQRT_2 * c[(i, j)] }),
    )
}

fn unpack(v: &DVector<f64>, m: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(m, m);
    for (k, &(i, j)) in packed_pairs(m).iter().enumerate() {
        if i == j {
            c[(i, i)] = v[k];
        } else {
            let x = v[k] / std::f64::consts::SQRT_2;
            c[(i, j)] = x;
            c[(j, i)] = x;
        }
    }
    c
}

fn project_psd(c: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(c.clone());
    let clipped = eig.eigenvalues.map(|s| s.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Linear constraint system `A c = t` over the packed unknown.
struct Constraints {
    rows: DMatrix<f64>,
    targets: DVector<f64>,
    scale: f64,
}

fn cluster_gradients(basis: &[GraphFunction], md: &MetricDensity, lambda: f64) -> Vec<Vec<EdgeGradient>> {
    basis.iter().map(|u| eigen_gradient(u, md, lambda)).collect()
}

fn assemble(basis: &[GraphFunction], targets: &TargetPair, md: &MetricDensity, lambda: f64) -> Constraints {
    let m = basis.len();
    let pairs = packed_pairs(m);
    let grads = cluster_gradients(basis, md, lambda);
    let mesh = md.mesh();
    let per_node = if targets.t_val.is_some() { 2 } else { 1 };
    let n_rows = md.edge_count() * (mesh + 1) * per_node;
    let mut rows = DMatrix::zeros(n_rows, pairs.len());
    let mut t = DVector::zeros(n_rows);
    let mut r = 0;
    for e in 0..md.edge_count() {
        let rho = md.rho().edge(e);
        for j in 0..=mesh {
            let slope = |i: usize| grads[i][e].slope[j];
            let value = |i: usize| basis[i].edge(e)[j];
            let lam_e = |i: usize| grads[i][e].lambda;
            let weight = |i: usize, k: usize| if i == k { 1.0 } else { std::f64::consts::SQRT_2 };
            for (col, &(i, k)) in pairs.iter().enumerate() {
                let lam = 0.5 * (lam_e(i) + lam_e(k));
                let grad = slope(i) * slope(k);
                let val = lam * value(i) * value(k);
                if targets.t_val.is_some() {
                    rows[(r, col)] = weight(i, k) * grad;
                    rows[(r + 1, col)] = weight(i, k) * val;
                } else {
                    rows[(r, col)] = weight(i, k) * (grad + rho[j] * val);
                }
            }
            t[r] = targets.t_grad.edge(e)[j];
            if let Some(tv) = &targets.t_val {
                t[r + 1] = tv.edge(e)[j];
            }
            r += per_node;
        }
    }
    let scale = t.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    Constraints { rows, targets: t, scale }
}

impl Constraints {
    fn residuals(&self, c: &DVector<f64>) -> (f64, f64) {
        let diff = &self.rows * c - &self.targets;
        let sup = diff.amax() / self.scale;
        let l2 = (diff.norm_squared() / diff.len() as f64).sqrt() / self.scale;
        (sup, l2)
    }
}

fn pseudo_inverse(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let top = eig.eigenvalues.amax();
    let inv = eig
        .eigenvalues
        .map(|s| if s > 1e-13 * top { 1.0 / s } else { 0.0 });
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&inv) * v.transpose()
}

fn numerical_rank(c: &DMatrix<f64>) -> usize {
    let eig = SymmetricEigen::new(c.clone());
    let trace = c.trace().abs().max(f64::MIN_POSITIVE);
    eig.eigenvalues.iter().filter(|&&s| s > 1e-8 * trace).count()
}

/// Searches for a PSD certificate over an orthonormal eigenspace basis.
pub fn certify(
    basis: &[GraphFunction],
    targets: &TargetPair,
    md: &MetricDensity,
    lambda: f64,
    settings: CertifySettings,
) -> Result<CertifyOutcome> {
    if basis.is_empty() {
        return Err(Error::Validation("certificate basis is empty".into()));
    }
    let m = basis.len();
    let cons = assemble(basis, targets, md, lambda);
    let at = cons.rows.transpose();
    let gram = &at * &cons.rows;
    let rhs = &at * &cons.targets;
    let gram_pinv = pseudo_inverse(&gram);

    let mut c = &gram_pinv * &rhs;
    let mut best: Option<(f64, DMatrix<f64>, f64, usize)> = None;
    for it in 1..=settings.max_iter.max(1) {
        let psd = project_psd(&unpack(&c, m));
        let packed = pack(&psd);
        let (sup, l2) = cons.residuals(&packed);
        if best.as_ref().is_none_or(|b| sup < b.0) {
            best = Some((sup, psd.clone(), l2, it));
        }
        if sup <= settings.tol {
            return Ok(CertifyOutcome::Found(Certificate {
                rank: numerical_rank(&psd),
                coeff: psd,
                residual_sup: sup,
                residual_l2: l2,
                iterations: it,
            }));
        }
        let step = &gram_pinv * (&gram * &packed - &rhs);
        let next = &packed - step;
        if (&next - &c).norm() <= 1e-15 * c.norm().max(1.0) {
            break;
        }
        c = next;
    }
    let (sup, coeff, l2, it) = best.expect("at least one iteration");
    Ok(CertifyOutcome::NotFound {
        best: Certificate {
            rank: numerical_rank(&coeff),
            coeff,
            residual_sup: sup,
            residual_l2: l2,
            iterations: it,
        },
        iterations: settings.max_iter,
    })
}

/// `f_p = √σ_p Σ_i V_ip u_i` from `C = V Σ Vᵀ`, dropping `σ_p <= 1e-12 tr C`.
pub fn recover_eigenfunctions(coeff: &DMatrix<f64>, basis: &[GraphFunction]) -> Vec<GraphFunction> {
    let eig = SymmetricEigen::new(coeff.clone());
    let trace = coeff.trace().abs();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order
        .into_iter()
        .filter(|&p| eig.eigenvalues[p] > 1e-12 * trace)
        .map(|p| {
            let s = eig.eigenvalues[p].sqrt();
            let coeffs: Vec<f64> = (0..basis.len()).map(|i| s * eig.eigenvectors[(i, p)]).collect();
            GraphFunction::linear_combination(&coeffs, basis)
        })
        .collect()
}

/// Realized left-hand sides for functions of one eigenspace: `Σ|∇f_i|²`
/// (plus `λρ f_i²` when `combined`) and `λ Σ f_i²`.
pub fn realized_identities(
    fs: &[GraphFunction],
    md: &MetricDensity,
    lambda: f64,
    combined: bool,
) -> (EdgeSamples, EdgeSamples) {
    let grads = cluster_gradients(fs, md, lambda);
    let mesh = md.mesh();
    let mut grad_rows = vec![vec![0.0; mesh + 1]; md.edge_count()];
    let mut val_rows = vec![vec![0.0; mesh + 1]; md.edge_count()];
    for (f, g) in fs.iter().zip(&grads) {
        for e in 0..md.edge_count() {
            let rho = md.rho().edge(e);
            for j in 0..=mesh {
                let v = g[e].lambda * f.edge(e)[j].powi(2);
                grad_rows[e][j] += g[e].slope[j].powi(2) + if combined { rho[j] * v } else { 0.0 };
                val_rows[e][j] += v;
            }
        }
    }
    (
        EdgeSamples::new(mesh, grad_rows).expect("mesh-sized rows"),
        EdgeSamples::new(mesh, val_rows).expect("mesh-sized rows"),
    )
}

/// `|F|² = Σ f_i²`.
pub fn norm_squared(fs: &[GraphFunction]) -> GraphFunction {
    let mut acc = fs[0].mul(&fs[0]).expect("same mesh");
    for f in &fs[1..] {
        acc = acc.add(&f.mul(f).expect("same mesh")).expect("same mesh");
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FourLambda {
    /// No eigenvalue within the window; `gap` is the distance to the nearest one.
    Absent { nearest_index: usize, gap: f64 },
    Present { index: usize, gap: f64 },
}

impl FourLambda {
    pub fn is_present(&self) -> bool {
        matches!(self, FourLambda::Present { .. })
    }
}

/// Whether `4λ` lies within `window (1 + 4λ)` of a computed eigenvalue.
pub fn four_lambda_test(graph: &DiscreteGraph, md: &MetricDensity, lambda: f64, window: f64) -> Result<FourLambda> {
    let target = 4.0 * lambda;
    let margin = window * (1.0 + target);
    let dof = FemSystem::new(graph, md).dof();
    let mut k_max = 8usize;
    let spec = loop {
        let spec = solve_spectrum_with_tol(graph, md, k_max.min(dof - 1), DEFAULT_CLUSTER_TOL)?;
        let top = *spec.eigenvalues().last().expect("nonempty spectrum");
        if top > target + margin {
            break spec;
        }
        if k_max + 1 >= dof {
            return Err(Error::SpectrumRangeTooSmall {
                top,
                needed: target + margin,
            });
        }
        k_max = 2 * k_max + 1;
    };
    let (index, gap) = spec
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, v)| (i, (v - target).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty spectrum");
    Ok(if gap <= margin {
        FourLambda::Present { index, gap }
    } else {
        FourLambda::Absent { nearest_index: index, gap }
    })
}

/// Both branches of the `|F|²` dichotomy for a thm1-scaled map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualCheck {
    /// `sup |w|` with `w = |F|² - 1/(2λ)`.
    pub w_sup: f64,
    /// Oscillation `sup |F|² - inf |F|²`.
    pub norm_variation: f64,
    pub constant_norm: bool,
    /// Rayleigh quotient of `w` when `|F|²` is not constant.
    pub w_rayleigh: Option<f64>,
    pub w_kirchhoff: Option<f64>,
    pub w_continuity: f64,
}

/// `lambda` is the discrete eigenvalue; `w` uses its dispersion-corrected
/// value, which is the one the certificate identities hold for.
pub fn residual_eigenfunction_check(
    fs: &[GraphFunction],
    graph: &DiscreteGraph,
    md: &MetricDensity,
    lambda: f64,
    tol: f64,
) -> Result<ResidualCheck> {
    let lambda = effective_eigenvalue(md, lambda);
    let norm = norm_squared(fs);
    let w = norm.map(|v| v - 1.0 / (2.0 * lambda));
    let samples = norm.to_samples();
    let norm_variation = samples.max() - samples.min();
    let w_sup = w.sup_norm();
    let constant_norm = w_sup <= tol;
    let (w_rayleigh, w_kirchhoff) = if constant_norm {
        (None, None)
    } else {
        let k = kirchhoff_residuals(&w, graph, md).into_iter().fold(0.0, f64::max);
        (Some(rayleigh(&w, graph, md)?), Some(k))
    };
    Ok(ResidualCheck {
        w_sup,
        norm_variation,
        constant_norm,
        w_rayleigh,
        w_kirchhoff,
        w_continuity: w.continuity_defect(graph),
    })
}

/// Everything produced by certifying the eigenspace of `λ_k`.
#[derive(Debug, Clone)]
pub struct ClusterCertification {
    pub k: usize,
    pub lambda: f64,
    pub cluster: (usize, usize),
    pub basis: Vec<GraphFunction>,
    pub targets: TargetPair,
    pub outcome: CertifyOutcome,
    /// Whether the found certificate was searched with `|F|²` held constant.
    pub constant_norm: bool,
}

/// Solves for the eigenspace of `λ_k` and certifies it.
///
/// For `thm1` a constant-norm certificate is tried first; the combined
/// target is used only when none is found.
pub fn certify_eigenspace(
    graph: &DiscreteGraph,
    md: &MetricDensity,
    k: usize,
    kind: TargetKind,
    cluster_tol: f64,
    settings: CertifySettings,
) -> Result<ClusterCertification> {
    let spec = spectrum_through_cluster(graph, md, k, cluster_tol)?;
    let (values, basis) = spec.cluster(k);
    let lambda = values.iter().sum::<f64>() / values.len() as f64;
    let targets = build_targets(kind, md);
    if targets.is_combined() {
        let split = targets.constant_norm_split(md);
        let outcome = certify(basis, &split, md, lambda, settings)?;
        if outcome.is_found() {
            let c = spec.cluster_of(k);
            return Ok(ClusterCertification {
                k,
                lambda,
                cluster: (c.start, c.end),
                basis: basis.to_vec(),
                targets: split,
                outcome,
                constant_norm: true,
            });
        }
    }
    let constant_norm = targets.forces_constant_norm();
    let outcome = certify(basis, &targets, md, lambda, settings)?;
    let c = spec.cluster_of(k);
    Ok(ClusterCertification {
        k,
        lambda,
        cluster: (c.start, c.end),
        basis: basis.to_vec(),
        targets,
        outcome,
        constant_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_round_trips_and_preserves_norm() {
        let c = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -1.0, 0.5, 1.0, 0.25, -1.0, 0.25, 3.0]);
        let v = pack(&c);
        assert_eq!(unpack(&v, 3), c);
        assert!((v.norm() - c.norm()).abs() < 1e-14);
    }

    #[test]
    fn psd_projection_clips_negative_part() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let p = project_psd(&c);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-15 && p[(1, 1)].abs() < 1e-15);
    }

    #[test]
    fn thm2_targets_on_unit_metric() {
        let graph = DiscreteGraph::pumpkin(3);
        let md = MetricDensity::from_lengths(&graph, &[1.0; 3], 8).unwrap();
        let t = build_targets(TargetKind::Thm2, &md);
        assert!(t.t_grad.rows().iter().flatten().all(|v| (v - 1.0).abs() < 1e-14));
        let tv = t.t_val.unwrap();
        assert!(tv.rows().iter().flatten().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn thm1_target_is_one() {
        let graph = DiscreteGraph::necklace(2);
        let md = MetricDensity::from_lengths(&graph, &[0.3, 1.0, 2.0, 0.7], 8).unwrap();
        let t = build_targets(TargetKind::Thm1, &md);
        assert!(t.t_grad.rows().iter().flatten().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(t.t_val.is_none());
    }

    #[test]
    fn thm3_alpha_zero_closed_form() {
        // Regular metric, constant density r: λΣf² = 1/r after rescaling.
        let graph = DiscreteGraph::pumpkin(3);
        let rho = EdgeSamples::constant(3, 8, 2.5);
        let md = MetricDensity::new(&graph, vec![1.7; 3], rho).unwrap();
        let t = build_targets(TargetKind::Thm3(0.0), &md);
        assert!(t.t_grad.rows().iter().flatten().all(|v| (v - 1.0).abs() < 1e-13));
        let tv = t.t_val.unwrap();
        assert!(tv.rows().iter().flatten().all(|v| (v - 1.0 / 2.5).abs() < 1e-13));
    }
}

//! Search for extremal metrics and metric/density pairs.
//!
//! The search runs in log coordinates `x_e = ln g_e` (and `y_e = ln ρ_e` for
//! per-edge constant densities), renormalizing after each step so that
//! `L(g) = 1` and `N = 1`. At an eigenvalue cluster the step follows the
//! minimum-norm element of the convex hull of the branch gradients of every
//! eigenvalue within `ε` of `λ_k` on the relevant side, which is the
//! steepest direction for the min (or max) of those branches.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{total_length, DiscreteGraph, EdgeSamples, GraphFunction, MetricDensity, PerturbationPair};
use crate::perturbation::{norm_grad, normalization, NormKind};
use crate::spectral::{solve_spectrum, FemSystem, Spectrum, DEFAULT_CLUSTER_TOL};
use crate::DEFAULT_MESH_PER_EDGE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Maximize => 1.0,
            Direction::Minimize => -1.0,
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" | "maximize" => Ok(Direction::Maximize),
            "min" | "minimize" => Ok(Direction::Minimize),
            other => Err(Error::Validation(format!("unknown direction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stationarity threshold on `|v| / λ̄` for the minimum-norm subgradient `v`.
    pub tol: f64,
    pub initial_step: f64,
    pub step_floor: f64,
    /// Floor on `g_e` after normalization; reaching it aborts the restart.
    pub g_min: f64,
    /// Relative width of the eigenvalue group treated as one cluster.
    pub cluster_eps: f64,
    /// Group width at which stationarity counts as convergence.
    pub cluster_eps_min: f64,
    /// Largest quasi-Newton step, in log coordinates, accepted as converged.
    pub step_tol: f64,
    /// Mesh used during the search.
    pub mesh: usize,
    /// Mesh of the returned metric and of the reported objective.
    pub report_mesh: usize,
    /// Edge lengths for the first restart; later restarts are random.
    pub start: Option<Vec<f64>>,
    /// Per-edge densities for the first restart of a pair search.
    pub start_density: Option<Vec<f64>>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iter: 400,
            restarts: 5,
            seed: 0,
            tol: 1e-6,
            initial_step: 0.1,
            step_floor: 1e-9,
            g_min: 1e-8,
            cluster_eps: 1e-3,
            cluster_eps_min: 1e-7,
            step_tol: 1e-6,
            mesh: 64,
            report_mesh: DEFAULT_MESH_PER_EDGE,
            start: None,
            start_density: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub step: f64,
    pub cluster_size: usize,
    pub stationarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    NonConvergence,
    /// An edge length or density reached the floor.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartResult {
    pub restart: usize,
    pub status: Status,
    pub objective: f64,
    pub iterations: usize,
    pub lengths: Vec<f64>,
    pub density: Vec<f64>,
    pub max_norm_drift: f64,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub kind: NormKind,
    pub direction: Direction,
    pub k: usize,
    /// Best restart, evaluated on the report mesh.
    pub md: MetricDensity,
    pub objective: f64,
    pub status: Status,
    pub best_restart: usize,
    pub restarts: Vec<RestartResult>,
}

impl OptimizeResult {
    pub fn trace(&self) -> &[TraceEntry] {
        &self.restarts[self.best_restart].trace
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Maximizes or minimizes `λ_k L(g)²` over metrics with unit density.
pub fn optimize_metric(
    graph: &DiscreteGraph,
    k: usize,
    direction: Direction,
    settings: &OptimizerSettings,
) -> Result<OptimizeResult> {
    optimize(graph, k, NormKind::MetricOnly, direction, settings)
}

/// Maximizes or minimizes `λ̄_k^(α)` over metrics and per-edge constant densities.
pub fn optimize_pair(
    graph: &DiscreteGraph,
    k: usize,
    alpha: f64,
    direction: Direction,
    settings: &OptimizerSettings,
) -> Result<OptimizeResult> {
    optimize(graph, k, NormKind::Alpha(alpha), direction, settings)
}

fn optimize(
    graph: &DiscreteGraph,
    k: usize,
    kind: NormKind,
    direction: Direction,
    settings: &OptimizerSettings,
) -> Result<OptimizeResult> {
    if k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    if settings.restarts == 0 || settings.mesh < 2 || settings.report_mesh < 2 {
        return Err(Error::Validation("restarts and meshes must be positive".into()));
    }
    let m = graph.edge_count();
    for (what, v) in [("start", &settings.start), ("start_density", &settings.start_density)] {
        if let Some(v) = v {
            if v.len() != m || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::Validation(format!("{what} needs {m} positive values")));
            }
        }
    }
    let problem = Problem {
        graph,
        k,
        kind,
        direction,
        settings,
    };
    let runs: Vec<Result<RestartResult>> = (0..settings.restarts)
        .into_par_iter()
        .map(|i| problem.run(i))
        .collect();
    let restarts = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let sign = direction.sign();
    let better = |a: &RestartResult, b: &RestartResult| sign * a.objective > sign * b.objective;
    let pick = |want: Status| {
        restarts
            .iter()
            .filter(|r| r.status == want)
            .fold(None::<&RestartResult>, |best, r| match best {
                Some(b) if !better(r, b) => Some(b),
                _ => Some(r),
            })
    };
    let best = pick(Status::Converged)
        .or_else(|| pick(Status::NonConvergence))
        .or_else(|| pick(Status::Degenerate))
        .expect("at least one restart");
    let md = problem.metric(&best.lengths, &best.density, settings.report_mesh)?;
    let objective = match solve_spectrum(graph, &md, k) {
        Ok(spec) => spec.eigenvalues()[k] * normalization(kind, &md),
        // Collapsed pairs can be too ill-conditioned for the finer mesh.
        Err(Error::SolverFailure(_)) if best.status == Status::Degenerate => best.objective,
        Err(e) => return Err(e),
    };
    Ok(OptimizeResult {
        kind,
        direction,
        k,
        md,
        objective,
        status: best.status,
        best_restart: best.restart,
        restarts,
    })
}

struct Problem<'a> {
    graph: &'a DiscreteGraph,
    k: usize,
    kind: NormKind,
    direction: Direction,
    settings: &'a OptimizerSettings,
}

/// One evaluated point of the search.
struct Point {
    log_g: Vec<f64>,
    log_rho: Vec<f64>,
    md: MetricDensity,
    spec: Spectrum,
    objective: f64,
    drift: f64,
}

impl Problem<'_> {
    fn with_density(&self) -> bool {
        self.kind != NormKind::MetricOnly
    }

    /// Metric with `L(g) = 1` and, for pair searches, `N = 1`.
    fn metric(&self, lengths: &[f64], density: &[f64], mesh: usize) -> Result<MetricDensity> {
        let total: f64 = lengths.iter().sum();
        let g: Vec<f64> = lengths.iter().map(|l| (l / total).powi(2)).collect();
        let md = MetricDensity::new(self.graph, g, EdgeSamples::per_edge(mesh, density))?;
        if !self.with_density() {
            return Ok(md);
        }
        let n = normalization(self.kind, &md);
        let rho: Vec<f64> = density.iter().map(|r| r / n).collect();
        Ok(md.with_density(EdgeSamples::per_edge(mesh, &rho)))
    }

    fn evaluate(&self, log_g: Vec<f64>, log_rho: Vec<f64>) -> Result<Point> {
        let lengths: Vec<f64> = log_g.iter().map(|x| (0.5 * x).exp()).collect();
        let density: Vec<f64> = log_rho.iter().map(|y| y.exp()).collect();
        let md = self.metric(&lengths, &density, self.settings.mesh)?;
        let n = normalization(self.kind, &md);
        let spec = solve_spectrum(self.graph, &md, self.k + 4)?;
        let objective = spec.eigenvalues()[self.k] * n;
        // Store the normalized coordinates so steps start from them.
        let log_g = md.g().iter().map(|g| g.ln()).collect();
        let log_rho = (0..md.edge_count()).map(|e| md.rho().edge(e)[0].ln()).collect();
        Ok(Point {
            log_g,
            log_rho,
            md,
            spec,
            objective,
            drift: (n - 1.0).abs(),
        })
    }

    fn start(&self, restart: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.graph.edge_count();
        let mut rng = ChaCha8Rng::seed_from_u64(self.settings.seed.wrapping_add(restart as u64));
        let mut lengths: Vec<f64> = (0..m).map(|_| rng.random_range(-0.4f64..0.4).exp()).collect();
        let mut density: Vec<f64> = if self.with_density() {
            (0..m).map(|_| rng.random_range(-0.4f64..0.4).exp()).collect()
        } else {
            vec![1.0; m]
        };
        if restart == 0 {
            if let Some(s) = &self.settings.start {
                lengths = s.clone();
            }
            if let (Some(d), true) = (&self.settings.start_density, self.with_density()) {
                density = d.clone();
            }
        }
        (
            lengths.iter().map(|l| 2.0 * l.ln()).collect(),
            density.iter().map(|r| r.ln()).collect(),
        )
    }

    /// Eigenvalue indices treated as one cluster with `λ_k`.
    fn group(&self, spec: &Spectrum, eps: f64) -> Vec<usize> {
        let values = spec.eigenvalues();
        let lam = values[self.k];
        let width = eps * lam.abs().max(f64::MIN_POSITIVE);
        match self.direction {
            Direction::Maximize => (self.k..values.len()).take_while(|&i| values[i] - lam <= width).collect(),
            Direction::Minimize => {
                let mut g: Vec<usize> = (1..=self.k).rev().take_while(|&i| lam - values[i] <= width).collect();
                g.reverse();
                g
            }
        }
    }

    /// Gradient matrices of `λ̄` over the group, one per coordinate.
    fn coordinate_matrices(&self, p: &Point, group: &[usize]) -> Result<Vec<DMatrix<f64>>> {
        let md = &p.md;
        let sys = FemSystem::new(self.graph, md);
        let values = p.spec.eigenvalues();
        let basis: Vec<&GraphFunction> = group.iter().map(|&i| &p.spec.eigenfunctions()[i]).collect();
        let m = group.len();
        let edges = md.edge_count();
        let n = normalization(self.kind, md);
        let ngrad = norm_grad(self.kind, md);
        let zero = EdgeSamples::constant(edges, md.mesh(), 0.0);
        let mut out = Vec::new();
        for e in 0..edges {
            let mut phi = vec![0.0; edges];
            phi[e] = md.g()[e];
            let dn = ngrad.pair(md, &PerturbationPair::new(phi, zero.clone())?);
            out.push(DMatrix::from_fn(m, m, |i, j| {
                let (ui, uj) = (basis[i].edge(e), basis[j].edge(e));
                let lam = 0.5 * (values[group[i]] + values[group[j]]);
                let b = -0.5 * (sys.edge_energy(e, ui, uj) + lam * sys.edge_mass(e, ui, uj));
                n * b + if i == j { values[group[i]] * dn } else { 0.0 }
            }));
        }
        if self.with_density() {
            for e in 0..edges {
                let mut eta = zero.clone();
                eta.edge_mut(e).copy_from_slice(md.rho().edge(e));
                let dn = ngrad.pair(md, &PerturbationPair::new(vec![0.0; edges], eta)?);
                out.push(DMatrix::from_fn(m, m, |i, j| {
                    let (ui, uj) = (basis[i].edge(e), basis[j].edge(e));
                    let lam = 0.5 * (values[group[i]] + values[group[j]]);
                    let b = -lam * sys.edge_mass(e, ui, uj);
                    n * b + if i == j { values[group[i]] * dn } else { 0.0 }
                }));
            }
        }
        Ok(out)
    }

    fn degenerate(&self, p: &Point) -> bool {
        let g_bad = p.md.g().iter().any(|&g| g < self.settings.g_min);
        let rho: Vec<f64> = (0..p.md.edge_count()).map(|e| p.md.rho().edge(e)[0]).collect();
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        g_bad || rho.iter().any(|&r| r < self.settings.g_min * mean)
    }

    fn coordinates(&self, p: &Point) -> DVector<f64> {
        let mut x = p.log_g.clone();
        if self.with_density() {
            x.extend_from_slice(&p.log_rho);
        }
        DVector::from_vec(x)
    }

    fn evaluate_at(&self, x: &DVector<f64>, like: &Point) -> Result<Point> {
        let m = like.log_g.len();
        let log_rho = if self.with_density() {
            x.as_slice()[m..].to_vec()
        } else {
            like.log_rho.clone()
        };
        self.evaluate(x.as_slice()[..m].to_vec(), log_rho)
    }

    /// Removes the components along the scaling directions, which leave the
    /// objective unchanged.
    fn project(&self, x: &mut DVector<f64>) {
        let m = self.graph.edge_count();
        let blocks = if self.with_density() { 2 } else { 1 };
        for b in 0..blocks {
            let mut block = x.rows_mut(b * m, m);
            let mean = block.mean();
            block.add_scalar_mut(-mean);
        }
    }

    fn run(&self, restart: usize) -> Result<RestartResult> {
        let s = self.settings;
        let sign = self.direction.sign();
        let (log_g, log_rho) = self.start(restart);
        let mut point = self.evaluate(log_g, log_rho)?;
        let mut trace = Vec::new();
        let mut eps = s.cluster_eps;
        let mut t_prev = 1.0f64;
        let mut drift = point.drift;
        let mut status = Status::NonConvergence;
        let mut iterations = 0;
        // Inverse Hessian model of `-sign * J`, used while the group is a
        // single eigenvalue.
        let mut hess: Option<DMatrix<f64>> = None;
        let mut last: Option<(DVector<f64>, DVector<f64>, usize)> = None;
        let mut passes = 0;
        while iterations < s.max_iter && passes < 20 * s.max_iter {
            passes += 1;
            if self.degenerate(&point) {
                status = Status::Degenerate;
                break;
            }
            let group = self.group(&point.spec, eps);
            let mats = self.coordinate_matrices(&point, &group)?;
            let v = min_norm_subgradient(&mats);
            let x = self.coordinates(&point);
            if let Some((x0, v0, size)) = last.take() {
                if size == 1 && group.len() == 1 {
                    let mut step = &x - &x0;
                    self.project(&mut step);
                    let y = (&v - &v0) * -sign;
                    let sy = step.dot(&y);
                    if sy > 1e-12 * step.norm() * y.norm() {
                        let h = hess.get_or_insert_with(|| DMatrix::identity(x.len(), x.len()) * (sy / y.dot(&y)));
                        let r = 1.0 / sy;
                        let left = DMatrix::identity(x.len(), x.len()) - &step * y.transpose() * r;
                        *h = &left * &*h * left.transpose() + &step * step.transpose() * r;
                    }
                } else {
                    hess = None;
                }
            }
            if group.len() > 1 {
                hess = None;
            }
            let v_norm = v.norm();
            let stationarity = v_norm / point.objective.abs();
            let newton = hess.as_ref().map(|h| h * &v);
            let small = match &newton {
                _ if group.len() > 1 => true,
                Some(d) => d.amax() <= s.step_tol,
                None => stationarity <= 1e-3 * s.tol,
            };
            if stationarity <= s.tol && small {
                if eps <= s.cluster_eps_min {
                    status = Status::Converged;
                    break;
                }
                eps = (eps * 0.1).max(s.cluster_eps_min);
                continue;
            }
            let (dir, mut t) = match newton {
                Some(d) => {
                    let t = (0.5 / d.amax()).min(1.0);
                    (d, t)
                }
                None => (&v * (s.initial_step / v_norm), (4.0 * t_prev).min(1.0)),
            };
            // Guaranteed first-order rate over every branch in the group.
            let rate = if group.len() == 1 { v.dot(&dir) } else { lambda_min(&combine(&mats, &dir)) };
            let mut accepted = None;
            while rate > 0.0 && t >= s.step_floor {
                let trial = self.evaluate_at(&(&x + &dir * (sign * t)), &point);
                match trial {
                    Ok(p) if sign * (p.objective - point.objective) >= 1e-4 * t * rate => {
                        accepted = Some(p);
                        break;
                    }
                    Ok(_) | Err(Error::SolverFailure(_)) => t *= 0.5,
                    Err(e) => return Err(e),
                }
            }
            let Some(next) = accepted else {
                if hess.take().is_some() {
                    continue;
                }
                if eps >= 0.1 {
                    break;
                }
                eps = (eps * 10.0).min(0.1);
                t_prev = 1.0;
                continue;
            };
            iterations += 1;
            t_prev = t;
            drift = drift.max(next.drift);
            trace.push(TraceEntry {
                iteration: iterations,
                objective: next.objective,
                step: t * dir.amax(),
                cluster_size: group.len(),
                stationarity,
            });
            last = Some((x, v, group.len()));
            point = next;
            if eps > s.cluster_eps {
                eps = (eps * 0.5).max(s.cluster_eps);
            }
        }
        Ok(RestartResult {
            restart,
            status,
            objective: point.objective,
            iterations,
            lengths: point.md.lengths(),
            density: (0..point.md.edge_count()).map(|e| point.md.rho().edge(e)[0]).collect(),
            max_norm_drift: drift,
            trace,
        })
    }
}

/// `Σ_c w_c G_c`.
fn combine(mats: &[DMatrix<f64>], w: &DVector<f64>) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for (g, &x) in mats.iter().zip(w.iter()) {
        acc += g * x;
    }
    acc
}

fn lambda_min(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

/// Minimum-norm point of `{ (tr(C G_c))_c : C ⪰ 0, tr C = 1 }`, found by a
/// log-det barrier method on the packed entries of `C`.
fn min_norm_subgradient(mats: &[DMatrix<f64>]) -> DVector<f64> {
    let m = mats[0].nrows();
    if m == 1 {
        return DVector::from_iterator(mats.len(), mats.iter().map(|g| g[(0, 0)]));
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let p = pairs.len();
    let basis = |k: usize| -> DMatrix<f64> {
        let (i, j) = pairs[k];
        let mut e = DMatrix::zeros(m, m);
        e[(i, j)] = 1.0;
        e[(j, i)] = 1.0;
        e
    };
    let a = DMatrix::from_fn(mats.len(), p, |c, k| {
        let (i, j) = pairs[k];
        if i == j {
            mats[c][(i, i)]
        } else {
            2.0 * mats[c][(i, j)]
        }
    });
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let a = a / scale;
    let h = a.transpose() * &a;
    let trace_row = DVector::from_iterator(p, pairs.iter().map(|&(i, j)| if i == j { 1.0 } else { 0.0 }));
    let to_matrix = |c: &DVector<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m, m);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            out[(i, j)] = c[k];
            out[(j, i)] = c[k];
        }
        out
    };
    let objective = |c: &DVector<f64>, mu: f64| -> Option<f64> {
        let chol = to_matrix(c).cholesky()?;
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        Some(c.dot(&(&h * c)) - mu * logdet)
    };
    let bases: Vec<DMatrix<f64>> = (0..p).map(basis).collect();
    let mut c = DVector::from_iterator(p, pairs.iter().map(|&(i, j)| if i == j { 1.0 / m as f64 } else { 0.0 }));
    let mut mu = 1.0;
    while mu > 1e-17 {
        for _ in 0..60 {
            let inv = to_matrix(&c).try_inverse().expect("iterate stays positive definite");
            let prods: Vec<DMatrix<f64>> = bases.iter().map(|e| &inv * e).collect();
            let grad = DVector::from_fn(p, |k, _| 2.0 * (&h * &c)[k] - mu * prods[k].trace());
            let mut kkt = DMatrix::zeros(p + 1, p + 1);
            for k in 0..p {
                for l in 0..p {
                    kkt[(k, l)] = 2.0 * h[(k, l)] + mu * (&prods[k] * &prods[l]).trace();
                }
                kkt[(k, p)] = trace_row[k];
                kkt[(p, k)] = trace_row[k];
            }
            let mut rhs = DVector::zeros(p + 1);
            rhs.rows_mut(0, p).copy_from(&(-&grad));
            let Some(sol) = kkt.lu().solve(&rhs) else { break };
            let dc = sol.rows(0, p).into_owned();
            let decrement = -grad.dot(&dc);
            if decrement <= 1e-15 * mu.max(1e-300) || !decrement.is_finite() {
                break;
            }
            let f0 = objective(&c, mu).expect("current iterate is positive definite");
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let trial = &c + &dc * t;
                if let Some(f) = objective(&trial, mu) {
                    if f <= f0 - 0.25 * t * decrement {
                        c = trial;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        mu *= 0.1;
    }
    (a * c) * scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub regular: bool,
    /// `max ℓ_e / min ℓ_e - 1`.
    pub max_rel_spread: f64,
    pub rho_constant: bool,
    /// `(sup ρ - inf ρ) / mean ρ` with the mass-weighted mean.
    pub rho_spread: f64,
}

/// Whether all edges have one length and the density is constant.
pub fn check_regularity(md: &MetricDensity, tol: f64) -> Regularity {
    let lengths = md.lengths();
    let (lo, hi) = lengths
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    let spread = hi / lo - 1.0;
    let mean = crate::perturbation::total_mass(md) / total_length(md);
    let rho_spread = (md.rho().max() - md.rho().min()) / mean;
    Regularity {
        regular: spread <= tol,
        max_rel_spread: spread,
        rho_constant: rho_spread <= tol,
        rho_spread,
    }
}

/// Largest `|ℓ_a / ℓ_b - 1|` over edges joining the same two vertices.
pub fn parallel_spread(graph: &DiscreteGraph, md: &MetricDensity) -> f64 {
    let edges = graph.edges();
    let key = |e: usize| {
        let (a, b) = (edges[e].tail, edges[e].head);
        (a.min(b), a.max(b))
    };
    let mut worst = 0.0f64;
    for a in 0..edges.len() {
        for b in a + 1..edges.len() {
            if key(a) == key(b) {
                worst = worst.max((md.length(a) / md.length(b) - 1.0).abs());
            }
        }
    }
    worst
}

/// Size of the eigenvalue cluster containing `λ_k`.
pub fn cluster_size(spec: &Spectrum, k: usize) -> usize {
    let c = crate::spectral::cluster_eigenspaces(spec.eigenvalues(), DEFAULT_CLUSTER_TOL);
    c.iter().find(|r| r.contains(&k)).map_or(1, |r| r.len())
}

//! Generalized eigensolver for `K u = λ M u`.
//!
//! Large systems use shift-invert subspace iteration. The shifted matrix
//! `K - σ M` is factored by eliminating each edge's interior unknowns (a
//! tridiagonal block) onto the vertex unknowns, which leaves a small dense
//! Schur complement. Small systems go straight to a dense solve.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fem::FemSystem;
use crate::error::{Error, Result};

/// Systems up to this size use the dense reference solver.
const DENSE_LIMIT: usize = 100;
const MAX_ITERATIONS: usize = 3000;
const RESIDUAL_TOL: f64 = 1e-12;
const ACCEPTABLE_RESIDUAL: f64 = 1e-7;
const STALL_LIMIT: usize = 8;

/// `LDLᵀ` factor of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
struct Tridiagonal {
    pivots: Vec<f64>,
    multipliers: Vec<f64>,
}

impl Tridiagonal {
    fn factor(diag: &[f64], off: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut pivots = Vec::with_capacity(n);
        let mut multipliers = Vec::with_capacity(n.saturating_sub(1));
        pivots.push(diag[0]);
        for i in 0..n - 1 {
            let l = off[i] / pivots[i];
            multipliers.push(l);
            pivots.push(diag[i + 1] - l * off[i]);
        }
        if pivots.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::SolverFailure("shifted edge block is not positive definite".into()));
        }
        Ok(Tridiagonal { pivots, multipliers })
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n - 1 {
            b[i + 1] -= self.multipliers[i] * b[i];
        }
        b[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = b[i] / self.pivots[i] - self.multipliers[i] * b[i + 1];
        }
    }
}

#[derive(Debug, Clone)]
struct EdgeBlock {
    tail: usize,
    head: usize,
    start: usize,
    tri: Tridiagonal,
    // Response of the interior to unit tail / head vertex values.
    tail_response: Vec<f64>,
    head_response: Vec<f64>,
    tail_coupling: f64,
    head_coupling: f64,
}

/// Direct solver for `(K - σ M) x = b`.
#[derive(Debug, Clone)]
pub(crate) struct ShiftedFactor {
    vertices: usize,
    blocks: Vec<EdgeBlock>,
    schur: Cholesky<f64, nalgebra::Dyn>,
}

impl ShiftedFactor {
    pub(crate) fn new(sys: &FemSystem, sigma: f64) -> Result<Self> {
        let nv = sys.vertex_count();
        let n = sys.mesh();
        let mut schur = DMatrix::<f64>::zeros(nv, nv);
        let mut blocks = Vec::with_capacity(sys.edge_count());
        for (e, edge) in sys.edges().iter().enumerate() {
            let k = sys.stiffness(e);
            let local: Vec<[f64; 3]> = sys
                .element_masses(e)
                .iter()
                .map(|m| [k - sigma * m[0], -k - sigma * m[1], k - sigma * m[2]])
                .collect();
            let (t, h) = (edge.tail, edge.head);
            schur[(t, t)] += local[0][0];
            schur[(h, h)] += local[n - 1][2];

            let diag: Vec<f64> = (1..n).map(|i| local[i - 1][2] + local[i][0]).collect();
            let off: Vec<f64> = (1..n - 1).map(|i| local[i][1]).collect();
            let tri = Tridiagonal::factor(&diag, &off)?;
            let tail_coupling = local[0][1];
            let head_coupling = local[n - 1][1];

            let mut tail_response = vec![0.0; n - 1];
            tail_response[0] = tail_coupling;
            tri.solve_in_place(&mut tail_response);
            let mut head_response = vec![0.0; n - 1];
            head_response[n - 2] = head_coupling;
            tri.solve_in_place(&mut head_response);

            schur[(t, t)] -= tail_coupling * tail_response[0];
            schur[(h, h)] -= head_coupling * head_response[n - 2];
            let cross = tail_coupling * head_response[0];
            schur[(t, h)] -= cross;
            schur[(h, t)] -= cross;

            blocks.push(EdgeBlock {
                tail: t,
                head: h,
                start: sys.layout().interior_start(e),
                tri,
                tail_response,
                head_response,
                tail_coupling,
                head_coupling,
            });
        }
        let schur = Cholesky::new(schur)
            .ok_or_else(|| Error::SolverFailure("vertex Schur complement is not positive definite".into()))?;
        Ok(ShiftedFactor { vertices: nv, blocks, schur })
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let mut rhs_v = DVector::from_column_slice(&b[..self.vertices]);
        for block in &self.blocks {
            let interior = &mut x[block.start..block.start + block.tail_response.len()];
            block.tri.solve_in_place(interior);
            rhs_v[block.tail] -= block.tail_coupling * interior[0];
            rhs_v[block.head] -= block.head_coupling * interior[interior.len() - 1];
        }
        let xv = self.schur.solve(&rhs_v);
        x[..self.vertices].copy_from_slice(xv.as_slice());
        for block in &self.blocks {
            let (xt, xh) = (xv[block.tail], xv[block.head]);
            let interior = &mut x[block.start..block.start + block.tail_response.len()];
            for (i, v) in interior.iter_mut().enumerate() {
                *v -= xt * block.tail_response[i] + xh * block.head_response[i];
            }
        }
        x
    }
}

/// Eigenvalues ascending with mass-orthonormal eigenvectors.
pub(crate) struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Lowest `count` eigenpairs. `shift` must be negative; it only sets the
/// spectral transformation and does not change the result.
pub(crate) fn lowest_eigenpairs(sys: &FemSystem, count: usize, shift: f64) -> Result<EigenPairs> {
    if sys.dof() <= DENSE_LIMIT {
        dense_eigenpairs(sys, count)
    } else {
        subspace_iteration(sys, count, shift)
    }
}

/// Dense reduction `L⁻¹ K L⁻ᵀ` with `M = L Lᵀ`.
pub(crate) fn dense_eigenpairs(sys: &FemSystem, count: usize) -> Result<EigenPairs> {
    let (k, m) = sys.dense_matrices();
    let chol = Cholesky::new(m).ok_or_else(|| Error::SolverFailure("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SolverFailure("singular mass factor".into()))?;
    let mut reduced = &l_inv * k * l_inv.transpose();
    reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let back = l_inv.transpose();
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        values.push(eig.eigenvalues[i]);
        let v = &back * eig.eigenvectors.column(i);
        vectors.push(v.as_slice().to_vec());
    }
    Ok(EigenPairs { values, vectors })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Mass-orthonormalizes the columns in place by modified Gram–Schmidt with
/// one reorthogonalization pass; columns that collapse are re-seeded.
fn mass_orthonormalize(sys: &FemSystem, block: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let n = sys.dof();
    let mut mv = vec![0.0; n];
    let mut massed: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for i in 0..block.len() {
        for _pass in 0..3 {
            for _ in 0..2 {
                for (j, mj) in massed.iter().enumerate() {
                    let c = dot(&block[i], mj);
                    let (head, tail) = block.split_at_mut(i);
                    for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                        *x -= c * y;
                    }
                }
            }
            sys.apply_mass(&block[i], &mut mv);
            let nrm = dot(&block[i], &mv).sqrt();
            if nrm > 1e-10 * norm(&block[i]).max(f64::MIN_POSITIVE) && nrm.is_finite() {
                block[i].iter_mut().for_each(|x| *x /= nrm);
                massed.push(mv.iter().map(|x| x / nrm).collect());
                break;
            }
            block[i] = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        }
        if massed.len() <= i {
            sys.apply_mass(&block[i], &mut mv);
            let nrm = dot(&block[i], &mv).sqrt();
            block[i].iter_mut().for_each(|x| *x /= nrm);
            massed.push(mv.iter().map(|x| x / nrm).collect());
        }
    }
}

fn subspace_iteration(sys: &FemSystem, count: usize, shift: f64) -> Result<EigenPairs> {
    let n = sys.dof();
    let p = (2 * count).max(count + 8).min(n);
    let factor = ShiftedFactor::new(sys, shift)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0005_eed0_f9a5);
    let mut block: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            if i == 0 {
                vec![1.0; n]
            } else {
                (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
            }
        })
        .collect();
    mass_orthonormalize(sys, &mut block, &mut rng);

    let mut kv = vec![0.0; n];
    let mut mv = vec![0.0; n];
    let mut ritz = vec![0.0; p];
    let mut worst = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..MAX_ITERATIONS {
        for col in block.iter_mut() {
            sys.apply_mass(col, &mut mv);
            *col = factor.solve(&mv);
        }
        mass_orthonormalize(sys, &mut block, &mut rng);

        let kblock: Vec<Vec<f64>> = block
            .iter()
            .map(|col| {
                sys.apply_stiffness(col, &mut kv);
                kv.clone()
            })
            .collect();
        let reduced = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&block[i], &kblock[j]) + dot(&block[j], &kblock[i])));
        let eig = SymmetricEigen::new(reduced);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            order
                .iter()
                .map(|&c| {
                    let mut out = vec![0.0; n];
                    for (r, col) in src.iter().enumerate() {
                        let w = eig.eigenvectors[(r, c)];
                        for (o, x) in out.iter_mut().zip(col) {
                            *o += w * x;
                        }
                    }
                    out
                })
                .collect()
        };
        block = rotate(&block);
        let kblock = rotate(&kblock);
        for (slot, &c) in ritz.iter_mut().zip(&order) {
            *slot = eig.eigenvalues[c];
        }

        worst = 0.0;
        for i in 0..count {
            sys.apply_mass(&block[i], &mut mv);
            let scale = norm(&kblock[i]) + (ritz[i].abs() + shift.abs()) * norm(&mv);
            let res: f64 = kblock[i]
                .iter()
                .zip(&mv)
                .map(|(k, m)| (k - ritz[i] * m).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(res / scale);
        }
        if worst <= RESIDUAL_TOL {
            break;
        }
        // Past the rounding floor the residual only jitters.
        if worst < 0.5 * best {
            best = worst;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_LIMIT && best <= ACCEPTABLE_RESIDUAL {
                break;
            }
        }
    }
    if !(worst <= ACCEPTABLE_RESIDUAL) {
        return Err(Error::SolverFailure(format!(
            "subspace iteration stalled at relative residual {worst:e}"
        )));
    }
    block.truncate(count);
    ritz.truncate(count);
    Ok(EigenPairs {
        values: ritz,
        vectors: block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DiscreteGraph, MetricDensity};

    #[test]
    fn shifted_solve_matches_dense() {
        let graph = DiscreteGraph::new(
            ["a", "b", "c"],
            vec![
                ("x".into(), "a".into(), "b".into()),
                ("y".into(), "b".into(), "c".into()),
                ("z".into(), "c".into(), "c".into()),
                ("w".into(), "a".into(), "b".into()),
            ],
        )
        .unwrap();
        let md = MetricDensity::from_lengths(&graph, &[1.0, 0.7, 2.0, 1.3], 6).unwrap();
        let sys = FemSystem::new(&graph, &md);
        let sigma = -0.8;
        let factor = ShiftedFactor::new(&sys, sigma).unwrap();
        let (k, m) = sys.dense_matrices();
        let a = k - m * sigma;
        let b: Vec<f64> = (0..sys.dof()).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let x = factor.solve(&b);
        let ax = &a * DVector::from_column_slice(&x);
        for i in 0..sys.dof() {
            assert!((ax[i] - b[i]).abs() < 1e-10, "row {i}: {} vs {}", ax[i], b[i]);
        }
    }

    #[test]
    fn subspace_iteration_agrees_with_dense() {
        let graph = DiscreteGraph::necklace(2);
        let md = MetricDensity::from_lengths(&graph, &[1.0, 1.4, 0.6, 0.9], 40).unwrap();
        let sys = FemSystem::new(&graph, &md);
        let dense = dense_eigenpairs(&sys, 6).unwrap();
        let iter = subspace_iteration(&sys, 6, -1.0).unwrap();
        for (a, b) in dense.values.iter().zip(&iter.values) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}

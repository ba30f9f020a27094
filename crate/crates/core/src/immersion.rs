//! Sphere maps built from certificates, geodesic nets and the analytic
//! obstructions for flowers and necklaces.
//!
//! Curves are lists of points in `ℝⁿ`. A curve counts as parametrized by
//! arclength when its consecutive chords are equal; [`resample_arclength`]
//! produces such a sampling from any curve.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremality::residual_eigenfunction_check;
use crate::graph::{DiscreteGraph, GraphFunction, MetricDensity};
use crate::spectral::oracle::OracleFamily;
use crate::spectral::{effective_eigenvalue, eigen_gradient};

/// Samples per arc used by [`pumpkin_net`] and map exports.
pub const NET_SAMPLES: usize = 512;

pub type Point = Vec<f64>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

/// Piecewise cubic Hermite curve through the samples, parametrized by
/// cumulative chord length, with three-point tangents.
struct Hermite<'a> {
    points: &'a [Point],
    knots: Vec<f64>,
    tangents: Vec<Point>,
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl<'a> Hermite<'a> {
    fn new(points: &'a [Point]) -> Self {
        let n = points.len();
        let mut knots = vec![0.0; n];
        for j in 1..n {
            knots[j] = knots[j - 1] + dist(&points[j], &points[j - 1]);
        }
        let dim = points[0].len();
        let combine = |c: [f64; 3], idx: [usize; 3]| -> Point {
            (0..dim)
                .map(|d| c[0] * points[idx[0]][d] + c[1] * points[idx[1]][d] + c[2] * points[idx[2]][d])
                .collect()
        };
        let tangents = if n < 3 {
            let w = (knots[n - 1] - knots[0]).max(f64::MIN_POSITIVE);
            vec![sub(&points[n - 1], &points[0]).iter().map(|x| x / w).collect(); n]
        } else {
            (0..n)
                .map(|j| {
                    let j = j.clamp(1, n - 2);
                    let (h0, h1) = (knots[j] - knots[j - 1], knots[j + 1] - knots[j]);
                    (h0, h1, j)
                })
                .enumerate()
                .map(|(i, (h0, h1, j))| {
                    let s = h0 + h1;
                    let idx = [j - 1, j, j + 1];
                    if i == 0 {
                        combine([-(2.0 * h0 + h1) / (h0 * s), s / (h0 * h1), -h0 / (h1 * s)], idx)
                    } else if i == n - 1 {
                        combine([h1 / (h0 * s), -s / (h0 * h1), (2.0 * h1 + h0) / (h1 * s)], idx)
                    } else {
                        combine([-h1 / (h0 * s), (h1 - h0) / (h0 * h1), h0 / (h1 * s)], idx)
                    }
                })
                .collect()
        };
        Hermite { points, knots, tangents }
    }

    fn width(&self, j: usize) -> f64 {
        self.knots[j + 1] - self.knots[j]
    }

    fn eval(&self, j: usize, u: f64) -> Point {
        let w = self.width(j);
        let (u2, u3) = (u * u, u * u * u);
        let c = [2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2];
        (0..self.points[0].len())
            .map(|d| {
                c[0] * self.points[j][d]
                    + c[1] * w * self.tangents[j][d]
                    + c[2] * self.points[j + 1][d]
                    + c[3] * w * self.tangents[j + 1][d]
            })
            .collect()
    }

    /// `|dp/du|` on segment `j`.
    fn speed(&self, j: usize, u: f64) -> f64 {
        let w = self.width(j);
        let c = [6.0 * u * u - 6.0 * u, 3.0 * u * u - 4.0 * u + 1.0, -6.0 * u * u + 6.0 * u, 3.0 * u * u - 2.0 * u];
        (0..self.points[0].len())
            .map(|d| {
                c[0] * self.points[j][d]
                    + c[1] * w * self.tangents[j][d]
                    + c[2] * self.points[j + 1][d]
                    + c[3] * w * self.tangents[j + 1][d]
            })
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Length of segment `j` between `u = 0` and `u = upper`.
    fn partial_length(&self, j: usize, upper: f64) -> f64 {
        GAUSS_NODES
            .iter()
            .zip(GAUSS_WEIGHTS)
            .map(|(x, w)| w * self.speed(j, 0.5 * upper * (x + 1.0)))
            .sum::<f64>()
            * 0.5
            * upper
    }

    fn segments(&self) -> usize {
        self.points.len() - 1
    }
}

/// Length of a sampled curve.
pub fn arc_length(samples: &[Point]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let curve = Hermite::new(samples);
    (0..curve.segments()).map(|j| curve.partial_length(j, 1.0)).sum()
}

/// `count` points equally spaced in arclength along the curve.
pub fn resample_arclength(samples: &[Point], count: usize) -> Vec<Point> {
    if samples.len() < 2 || count < 2 {
        return samples.to_vec();
    }
    let curve = Hermite::new(samples);
    let lengths: Vec<f64> = (0..curve.segments()).map(|j| curve.partial_length(j, 1.0)).collect();
    let total: f64 = lengths.iter().sum();
    let mut out = Vec::with_capacity(count);
    out.push(samples[0].clone());
    let (mut seg, mut before) = (0, 0.0);
    for i in 1..count - 1 {
        let s = total * i as f64 / (count - 1) as f64;
        while seg + 1 < lengths.len() && before + lengths[seg] < s {
            before += lengths[seg];
            seg += 1;
        }
        let want = s - before;
        let mut u = (want / lengths[seg]).clamp(0.0, 1.0);
        for _ in 0..4 {
            let f = curve.partial_length(seg, u) - want;
            let df = curve.speed(seg, u);
            if df <= 0.0 {
                break;
            }
            u = (u - f / df).clamp(0.0, 1.0);
        }
        out.push(curve.eval(seg, u));
    }
    out.push(samples[samples.len() - 1].clone());
    out
}

/// Largest relative deviation of a chord from the mean chord.
pub fn speed_deviation(samples: &[Point]) -> f64 {
    let chords: Vec<f64> = samples.windows(2).map(|w| dist(&w[0], &w[1])).collect();
    if chords.is_empty() {
        return 0.0;
    }
    let mean = chords.iter().sum::<f64>() / chords.len() as f64;
    if mean == 0.0 {
        return f64::INFINITY;
    }
    chords.iter().fold(0.0, |m, c| m.max((c / mean - 1.0).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TakahashiReport {
    /// `sup |γ'' + γ/R²|` over interior samples.
    pub residual: f64,
    /// The same residual with `R⁻¹` in place of `R⁻²`.
    pub residual_r1: f64,
    pub speed_deviation: f64,
    pub length: f64,
    pub passes: bool,
}

/// Checks `-γ'' = γ/R²` for a curve sampled uniformly in arclength.
pub fn verify_takahashi(arc: &[Point], radius: f64, tol: f64) -> Result<TakahashiReport> {
    if arc.len() < 3 {
        return Err(Error::Validation("an arc needs at least 3 samples".into()));
    }
    let speed = speed_deviation(arc);
    if speed > tol {
        return Err(Error::NotUnitSpeed(speed));
    }
    let length = arc_length(arc);
    let h = length / (arc.len() - 1) as f64;
    let (mut r2, mut r1) = (0.0f64, 0.0f64);
    for j in 1..arc.len() - 1 {
        let mut a = 0.0;
        let mut b = 0.0;
        for d in 0..arc[j].len() {
            let second = (arc[j + 1][d] - 2.0 * arc[j][d] + arc[j - 1][d]) / (h * h);
            a += (second + arc[j][d] / (radius * radius)).powi(2);
            b += (second + arc[j][d] / radius).powi(2);
        }
        r2 = r2.max(a.sqrt());
        r1 = r1.max(b.sqrt());
    }
    Ok(TakahashiReport {
        residual: r2,
        residual_r1: r1,
        speed_deviation: speed,
        length,
        passes: r2 <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetArc {
    pub edge_id: String,
    pub tail: usize,
    pub head: usize,
    pub samples: Vec<Point>,
}

/// Points on a sphere joined by arcs; `tail`/`head` index `vertices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicNet {
    pub radius: f64,
    pub vertices: Vec<Point>,
    pub arcs: Vec<NetArc>,
}

impl GeodesicNet {
    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|a| arc_length(&a.samples)).sum()
    }

    pub fn dimension(&self) -> usize {
        self.vertices.first().map_or(0, Vec::len)
    }
}

/// Outward unit tangent at the first sample, projected onto the tangent
/// space of the sphere there (exact for great circles).
fn outward_tangent(first: &[f64], second: &[f64]) -> Point {
    let r = norm(first);
    let mut t = sub(second, first);
    if r > 0.0 {
        let along = dot(second, first) / (r * r);
        t = second.iter().zip(first).map(|(s, f)| s - along * f).collect();
    }
    let n = norm(&t);
    if n > 0.0 {
        t.iter_mut().for_each(|x| *x /= n);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    /// Per-arc Takahashi residual after arclength resampling.
    pub takahashi: Vec<f64>,
    /// Per-vertex norm of the sum of outward unit tangents.
    pub balance: Vec<f64>,
    /// `sup | |p| - R |` over vertices and samples.
    pub sphere_residual: f64,
    /// Largest distance between an arc end and its vertex.
    pub endpoint_residual: f64,
    pub takahashi_max: f64,
    pub balance_max: f64,
    pub total_length: f64,
    pub tol: f64,
    pub passes: bool,
}

/// Minimum samples per arc accepted by [`verify_net`].
pub const MIN_ARC_SAMPLES: usize = 16;

pub fn verify_net(net: &GeodesicNet, tol: f64) -> NetReport {
    let r = net.radius;
    let mut sphere = net.vertices.iter().fold(0.0f64, |m, p| m.max((norm(p) - r).abs()));
    let mut endpoint = 0.0f64;
    let mut sums = vec![vec![0.0; net.dimension()]; net.vertices.len()];
    let mut takahashi = Vec::with_capacity(net.arcs.len());
    let mut sampled_enough = true;
    for arc in &net.arcs {
        let s = &arc.samples;
        sampled_enough &= s.len() >= MIN_ARC_SAMPLES;
        sphere = s.iter().fold(sphere, |m, p| m.max((norm(p) - r).abs()));
        if s.len() < 2 {
            takahashi.push(f64::INFINITY);
            continue;
        }
        let n = s.len();
        endpoint = endpoint
            .max(dist(&s[0], &net.vertices[arc.tail]))
            .max(dist(&s[n - 1], &net.vertices[arc.head]));
        for (v, t) in [(arc.tail, outward_tangent(&s[0], &s[1])), (arc.head, outward_tangent(&s[n - 1], &s[n - 2]))] {
            sums[v].iter_mut().zip(&t).for_each(|(a, b)| *a += b);
        }
        let uniform = resample_arclength(s, n);
        let residual = verify_takahashi(&uniform, r, f64::INFINITY).map_or(f64::INFINITY, |rep| rep.residual);
        takahashi.push(residual);
    }
    let balance: Vec<f64> = sums.iter().map(|s| norm(s)).collect();
    let takahashi_max = takahashi.iter().fold(0.0f64, |m, &x| m.max(x));
    let balance_max = balance.iter().fold(0.0f64, |m, &x| m.max(x));
    let passes = sampled_enough && takahashi_max <= tol && balance_max <= tol && sphere <= tol && endpoint <= tol;
    NetReport {
        takahashi,
        balance,
        sphere_residual: sphere,
        endpoint_residual: endpoint,
        takahashi_max,
        balance_max,
        total_length: net.total_length(),
        tol,
        passes,
    }
}

/// Meridians `N cos s + P_i sin s`, `s ∈ [0, π]`, through `m` equally spaced
/// equatorial points of the unit sphere in `ℝ³`.
pub fn pumpkin_net(m: usize) -> Result<GeodesicNet> {
    pumpkin_net_with(m, NET_SAMPLES)
}

pub fn pumpkin_net_with(m: usize, samples: usize) -> Result<GeodesicNet> {
    if m < 2 {
        return Err(Error::Validation("a pumpkin net needs at least 2 edges".into()));
    }
    if samples < 3 {
        return Err(Error::Validation("a net arc needs at least 3 samples".into()));
    }
    let graph = DiscreteGraph::pumpkin(m);
    let arcs = (0..m)
        .map(|i| {
            let (sin_a, cos_a) = (2.0 * PI * i as f64 / m as f64).sin_cos();
            let points = (0..samples)
                .map(|j| {
                    let (sin_s, cos_s) = (PI * j as f64 / (samples - 1) as f64).sin_cos();
                    vec![cos_a * sin_s, sin_a * sin_s, cos_s]
                })
                .collect();
            NetArc {
                edge_id: graph.edge(i).id.clone(),
                tail: 0,
                head: 1,
                samples: points,
            }
        })
        .collect();
    Ok(GeodesicNet {
        radius: 1.0,
        vertices: vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]],
        arcs,
    })
}

/// The scaled map `F̃ = √2 F` into the sphere of radius `R = λ^{-1/2}`.
#[derive(Debug, Clone)]
pub struct SphereMap {
    pub components: Vec<GraphFunction>,
    pub radius: f64,
    /// Eigenvalue the map is built for; `radius` uses its
    /// dispersion-corrected value.
    pub lambda: f64,
    /// `sup | |F̃| - R |`.
    pub radius_deviation: f64,
    /// `sup | |dF̃/dx_g| - 1 |`.
    pub speed_deviation: f64,
}

/// Builds the sphere map of a `thm1`-scaled certificate map.
pub fn build_sphere_map(
    fs: &[GraphFunction],
    graph: &DiscreteGraph,
    md: &MetricDensity,
    lambda: f64,
    tol: f64,
) -> Result<SphereMap> {
    if fs.is_empty() {
        return Err(Error::Validation("a sphere map needs at least one component".into()));
    }
    let check = residual_eigenfunction_check(fs, graph, md, lambda, tol)?;
    if !check.constant_norm {
        return Err(Error::NonConstantNorm(check.w_sup));
    }
    let radius = effective_eigenvalue(md, lambda).powf(-0.5);
    let components: Vec<GraphFunction> = fs.iter().map(|f| f.scale(std::f64::consts::SQRT_2)).collect();
    let mesh = md.mesh();
    let grads: Vec<_> = components.iter().map(|f| eigen_gradient(f, md, lambda)).collect();
    let (mut radius_dev, mut speed_dev) = (0.0f64, 0.0f64);
    for e in 0..md.edge_count() {
        for j in 0..=mesh {
            let r2: f64 = components.iter().map(|f| f.edge(e)[j].powi(2)).sum();
            let s2: f64 = grads.iter().map(|g| g[e].slope[j].powi(2)).sum();
            radius_dev = radius_dev.max((r2.sqrt() - radius).abs());
            speed_dev = speed_dev.max((s2.sqrt() - 1.0).abs());
        }
    }
    Ok(SphereMap {
        components,
        radius,
        lambda,
        radius_deviation: radius_dev,
        speed_deviation: speed_dev,
    })
}

impl SphereMap {
    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    /// Image of vertex `v`.
    pub fn vertex(&self, v: usize) -> Point {
        self.components.iter().map(|f| f.vertex_values()[v]).collect()
    }

    /// The image of the graph as a net, each edge resampled to `samples`
    /// points equally spaced in arclength.
    pub fn to_net(&self, graph: &DiscreteGraph, samples: usize) -> GeodesicNet {
        let vertices = (0..graph.vertex_count()).map(|v| self.vertex(v)).collect();
        let arcs = graph
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let raw: Vec<Point> = (0..self.components[0].edge(e).len())
                    .map(|j| self.components.iter().map(|f| f.edge(e)[j]).collect())
                    .collect();
                NetArc {
                    edge_id: edge.id.clone(),
                    tail: edge.tail,
                    head: edge.head,
                    samples: resample_arclength(&raw, samples),
                }
            })
            .collect();
        GeodesicNet {
            radius: self.radius,
            vertices,
            arcs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Orthogonal `Q` with `source · Q ≈ target` (points as rows).
    pub rotation: DMatrix<f64>,
    pub sup_error: f64,
    pub rms_error: f64,
}

fn pad(p: &[f64], dim: usize) -> Vec<f64> {
    let mut out = p.to_vec();
    out.resize(dim, 0.0);
    out
}

/// Orthogonal Procrustes: the rotation or reflection that best maps the
/// `source` points onto `target` in least squares, with no scaling.
pub fn procrustes(source: &[Point], target: &[Point]) -> Result<Alignment> {
    if source.len() != target.len() || source.is_empty() {
        return Err(Error::Validation("procrustes needs two equally long nonempty point lists".into()));
    }
    let dim = source.iter().chain(target).map(Vec::len).max().unwrap_or(0);
    let n = source.len();
    let s = DMatrix::from_fn(n, dim, |i, d| pad(&source[i], dim)[d]);
    let t = DMatrix::from_fn(n, dim, |i, d| pad(&target[i], dim)[d]);
    let svd = (s.transpose() * &t).svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
    let rotation = u * v_t;
    let diff = &s * &rotation - &t;
    let (mut sup, mut sq) = (0.0f64, 0.0);
    for i in 0..n {
        let r = diff.row(i).norm();
        sup = sup.max(r);
        sq += r * r;
    }
    Ok(Alignment {
        rotation,
        sup_error: sup,
        rms_error: (sq / n as f64).sqrt(),
    })
}

/// Aligns one net onto another with matching arcs (same order, same sample
/// counts) and vertices.
pub fn align_nets(source: &GeodesicNet, target: &GeodesicNet) -> Result<Alignment> {
    if source.arcs.len() != target.arcs.len() || source.vertices.len() != target.vertices.len() {
        return Err(Error::Validation("nets have different shapes".into()));
    }
    let mut a = source.vertices.clone();
    let mut b = target.vertices.clone();
    for (x, y) in source.arcs.iter().zip(&target.arcs) {
        if x.samples.len() != y.samples.len() {
            return Err(Error::Validation(format!("arc `{}` has a different sample count", x.edge_id)));
        }
        a.extend(x.samples.iter().cloned());
        b.extend(y.samples.iter().cloned());
    }
    procrustes(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoImmersion,
    NotApplicable,
}

/// Consequences for the density problems that follow from the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorollaryFlags {
    pub no_maximising_pair: bool,
    pub no_minimising_pair: bool,
    /// No extremal pair for `λ̄₁^(α)` whenever `α ∉ {1/2, 1}`.
    pub no_extremal_pair_alpha: bool,
}

impl CorollaryFlags {
    const NONE: CorollaryFlags = CorollaryFlags {
        no_maximising_pair: false,
        no_minimising_pair: false,
        no_extremal_pair_alpha: false,
    };

    pub fn excludes_extremal_pair(&self, alpha: f64) -> bool {
        self.no_extremal_pair_alpha && alpha != 0.5 && alpha != 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionVerdict {
    pub family: OracleFamily,
    pub verdict: Verdict,
    /// Closed-form first nonzero eigenvalue at the given lengths.
    pub lambda1: f64,
    pub reasons: Vec<String>,
    pub flags: CorollaryFlags,
}

/// Why no isometric minimal immersion by first eigenfunctions exists for a
/// regular flower or a symmetric necklace.
pub fn obstruction_verdict(family: &OracleFamily) -> Result<ObstructionVerdict> {
    let fmt = |x: f64| format!("{x}");
    match family {
        OracleFamily::EquilateralFlower { m, length } => {
            let lambda1 = (PI / length).powi(2);
            if *m < 2 {
                return Ok(ObstructionVerdict {
                    family: family.clone(),
                    verdict: Verdict::NotApplicable,
                    lambda1,
                    reasons: vec!["a single loop is a circle and maps onto a great circle of any sphere".into()],
                    flags: CorollaryFlags::NONE,
                });
            }
            Ok(ObstructionVerdict {
                family: family.clone(),
                verdict: Verdict::NoImmersion,
                lambda1,
                reasons: vec![
                    format!("regular flower with {m} loops of length ℓ = {}: λ₁ = (π/ℓ)² = {}", fmt(*length), fmt(lambda1)),
                    "an isometric minimal immersion into the unit sphere by λ₁-eigenfunctions forces λ₁ = 1 (Takahashi), hence ℓ = π".into(),
                    "each loop is mapped onto a closed geodesic, which covers a great circle n ≥ 1 times, hence ℓ = 2nπ".into(),
                    "ℓ = π and ℓ = 2nπ are incompatible: no such immersion exists".into(),
                    "regular metrics are the unique maximisers of λ̄₁(g) on flowers, so λ̄₁(g, ρ) has no maximising pair".into(),
                    "for α ∉ {1/2, 1} an extremal pair would have a regular metric carrying such an immersion, so λ̄₁^(α) has no extremal pair".into(),
                ],
                flags: CorollaryFlags {
                    no_maximising_pair: true,
                    no_minimising_pair: false,
                    no_extremal_pair_alpha: true,
                },
            })
        }
        OracleFamily::SymmetricNecklace { lengths } => {
            let total: f64 = lengths.iter().sum();
            let lambda1 = (PI / total).powi(2);
            if lengths.len() < 2 {
                return Ok(ObstructionVerdict {
                    family: family.clone(),
                    verdict: Verdict::NotApplicable,
                    lambda1,
                    reasons: vec!["a necklace with one pair of edges is a circle and maps onto a great circle".into()],
                    flags: CorollaryFlags::NONE,
                });
            }
            Ok(ObstructionVerdict {
                family: family.clone(),
                verdict: Verdict::NoImmersion,
                lambda1,
                reasons: vec![
                    format!(
                        "symmetric necklace with {} pairs, Σℓ_j = {}: λ₁ = (π/Σℓ_j)² = {}",
                        lengths.len(),
                        fmt(total),
                        fmt(lambda1)
                    ),
                    "an isometric minimal immersion into the unit sphere by λ₁-eigenfunctions forces λ₁ = 1 (Takahashi), hence Σℓ_j = π".into(),
                    "the two arcs of the first pair have opposite tangents at the image of v₀, so they lie in one plane and together cover a great circle c₁ ≥ 1 times, hence ℓ₁ = c₁π".into(),
                    "ℓ₁ = c₁π ≥ π contradicts Σℓ_j = π with at least two pairs: no such immersion exists".into(),
                    "symmetric metrics are the unique minimisers of λ̄₁(g) on necklaces, so λ̄₁(g, ρ) has no minimising pair".into(),
                    "for α ∉ {1/2, 1} an extremal pair would have a symmetric regular metric carrying such an immersion, so λ̄₁^(α) has no extremal pair".into(),
                ],
                flags: CorollaryFlags {
                    no_maximising_pair: false,
                    no_minimising_pair: true,
                    no_extremal_pair_alpha: true,
                },
            })
        }
        other => Err(Error::UnsupportedFamily(format!(
            "no obstruction argument for {}",
            serde_json::to_value(other)
                .ok()
                .and_then(|v| v.get("family").and_then(|f| f.as_str()).map(str::to_string))
                .unwrap_or_else(|| "this family".into())
        ))),
    }
}

use std::collections::BTreeMap;
use std::path::Path;

use qnet_core::extremality::{
    certify_eigenspace, four_lambda_test, recover_eigenfunctions, CertifySettings, ClusterCertification, TargetKind,
    DEFAULT_FOUR_LAMBDA_WINDOW,
};
use qnet_core::immersion::{build_sphere_map, obstruction_verdict, pumpkin_net_with, verify_net, GeodesicNet};
use qnet_core::optimizer::{
    check_regularity, optimize_metric, optimize_pair, parallel_spread, Direction, OptimizeResult, OptimizerSettings,
    Status,
};
use qnet_core::perturbation::{directional_derivative_from, fd_check, norm_grad, norm_grad_fd_error, normalization, NormKind};
use qnet_core::problem::DensitySpec;
use qnet_core::spectral::oracle::{oracle_spectrum, OracleFamily};
use qnet_core::spectral::{kirchhoff_residuals, solve_spectrum_with_tol, spectrum_through_cluster};
use qnet_core::{DiscreteGraph, EdgeSamples, Error, MetricDensity, PerturbationPair, ProblemFile, Result};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::report::{csv_table, to_value, versions, Artifact, Outcome, RunReport};
use crate::{
    CertifyArgs, DirectionArg, GradientArgs, ImmerseArgs, KindArg, NetArgs, OptimizeArgs, OracleArgs, ProblemArgs,
    SpectrumArgs, TargetArg,
};

const FD_STEPS: [f64; 3] = [1e-4, 1e-5, 1e-6];
const NORM_FD_STEP: f64 = 1e-6;

fn load(p: &ProblemArgs) -> Result<(DiscreteGraph, MetricDensity, Value)> {
    load_path(&p.problem, p.mesh_per_edge)
}

fn load_path(path: &Path, mesh: Option<usize>) -> Result<(DiscreteGraph, MetricDensity, Value)> {
    let (graph, md) = ProblemFile::read(path)?.build(mesh)?;
    let canonical = to_value(&ProblemFile::describe(&graph, &md));
    Ok((graph, md, canonical))
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} must be positive")))
    }
}

fn norm_kind(kind: KindArg, alpha: f64) -> NormKind {
    match kind {
        KindArg::Metric => NormKind::MetricOnly,
        KindArg::Natural => NormKind::Natural,
        KindArg::Alpha => NormKind::Alpha(alpha),
    }
}

fn kind_name(kind: KindArg) -> &'static str {
    match kind {
        KindArg::Metric => "metric",
        KindArg::Natural => "natural",
        KindArg::Alpha => "alpha",
    }
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn outcome(command: &str, inputs: Value, outputs: Value, versions: Value) -> Outcome {
    Outcome {
        report: RunReport {
            command: command.into(),
            inputs,
            outputs,
            versions,
            wall_time: None,
        },
        artifacts: Vec::new(),
        code: 0,
    }
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Outcome> {
    let (graph, md, problem) = load(&a.problem)?;
    check_positive("cluster-tol", a.problem.cluster_tol)?;
    let spec = solve_spectrum_with_tol(&graph, &md, a.k, a.problem.cluster_tol)?;
    let residuals: Vec<f64> = spec
        .eigenfunctions()
        .iter()
        .map(|f| kirchhoff_residuals(f, &graph, &md).into_iter().fold(0.0_f64, |m, r| m.max(r.abs())))
        .collect();
    let clusters: Vec<[usize; 2]> = spec.clusters().iter().map(|c| [c.start, c.end]).collect();
    let outputs = json!({
        "eigenvalues": spec.eigenvalues(),
        "clusters": clusters,
        "kirchhoff_residuals": residuals,
    });
    let inputs = json!({"problem": problem, "flags": {"k": a.k, "eigenfunctions": a.eigenfunctions}});
    let mut out = outcome(
        "spectrum",
        inputs,
        outputs,
        versions(Some(md.mesh()), json!({"cluster_tol": a.problem.cluster_tol})),
    );
    let rows = spec.eigenvalues().iter().enumerate().map(|(k, l)| vec![k.to_string(), fmt(*l)]);
    out.artifacts.push(Artifact {
        name: "spectrum.csv".into(),
        contents: csv_table(&["k", "lambda"], rows)?,
    });
    if a.eigenfunctions {
        let mut header = vec!["edge".to_string(), "t".into(), "x".into()];
        header.extend((0..spec.len()).map(|k| format!("u{k}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mesh = md.mesh();
        let mut rows = Vec::new();
        for (e, edge) in graph.edges().iter().enumerate() {
            for j in 0..=mesh {
                let t = j as f64 / mesh as f64;
                let mut row = vec![edge.id.clone(), fmt(t), fmt(t * md.length(e))];
                row.extend(spec.eigenfunctions().iter().map(|f| fmt(f.edge(e)[j])));
                rows.push(row);
            }
        }
        out.artifacts.push(Artifact {
            name: "eigenfunctions.csv".into(),
            contents: csv_table(&header, rows)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirFile {
    #[serde(default)]
    phi: BTreeMap<String, f64>,
    #[serde(default)]
    eta: BTreeMap<String, DensitySpec>,
}

fn read_direction(path: &Path, graph: &DiscreteGraph, md: &MetricDensity) -> Result<PerturbationPair> {
    let text = std::fs::read_to_string(path)?;
    let file: DirFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let index = |id: &String| {
        graph
            .edge_index(id)
            .ok_or_else(|| Error::Validation(format!("direction names unknown edge `{id}`")))
    };
    let mut phi = vec![0.0; graph.edge_count()];
    for (id, v) in &file.phi {
        phi[index(id)?] = *v;
    }
    let mesh = md.mesh();
    let mut eta = EdgeSamples::constant(graph.edge_count(), mesh, 0.0);
    for (id, spec) in &file.eta {
        let row = eta.edge_mut(index(id)?);
        match spec {
            DensitySpec::Constant(v) => row.fill(*v),
            DensitySpec::Samples(s) if s.len() == mesh + 1 => row.copy_from_slice(s),
            DensitySpec::Samples(s) => {
                return Err(Error::MeshMismatch {
                    expected: mesh + 1,
                    found: s.len(),
                })
            }
        }
    }
    PerturbationPair::new(phi, eta)
}

pub fn gradient(a: &GradientArgs) -> Result<Outcome> {
    let (graph, md, problem) = load(&a.problem)?;
    check_positive("cluster-tol", a.problem.cluster_tol)?;
    if a.k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    let dir = match &a.dir {
        Some(path) => read_direction(path, &graph, &md)?,
        None => PerturbationPair::scaling(&md),
    };
    let kind = norm_kind(a.kind, a.alpha);
    let spec = spectrum_through_cluster(&graph, &md, a.k, a.problem.cluster_tol)?;
    let d = directional_derivative_from(&spec, &graph, &md, a.k, &dir)?;
    let n = normalization(kind, &md);
    let dn = norm_grad(kind, &md).pair(&md, &dir);
    let lam = spec.eigenvalues()[a.k];
    let bar = |s: f64| n * s + lam * dn;
    let mut outputs = json!({
        "lambda": lam,
        "cluster": [d.cluster.0, d.cluster.1],
        "lo": d.lo,
        "hi": d.hi,
        "left": d.left,
        "right": d.right,
        "slopes": d.slopes,
        "normalization": n,
        "normalization_derivative": dn,
        "normalized": {"lo": bar(d.lo), "hi": bar(d.hi), "left": bar(d.left), "right": bar(d.right)},
        "norm_grad_check": norm_grad_fd_error(kind, &graph, &md, NORM_FD_STEP)?,
    });
    if a.fd {
        let fd = fd_check(&graph, &md, a.k, &dir, &FD_STEPS)?;
        outputs["fd_slopes"] = to_value(&fd.slopes);
        outputs["fd_max_rel_error"] = json!(fd.max_rel_error);
        outputs["fd_bracket_violation"] = json!(fd.bracket_violation);
    }
    let inputs = json!({
        "problem": problem,
        "direction": to_value(&dir),
        "flags": {"k": a.k, "kind": kind_name(a.kind), "alpha": a.alpha, "fd": a.fd},
    });
    let tolerances = json!({
        "cluster_tol": a.problem.cluster_tol,
        "fd_steps": FD_STEPS,
        "norm_fd_step": NORM_FD_STEP,
    });
    Ok(outcome("gradient", inputs, outputs, versions(Some(md.mesh()), tolerances)))
}

fn target_kind(kind: TargetArg, alpha: f64) -> TargetKind {
    match kind {
        TargetArg::Thm1 => TargetKind::Thm1,
        TargetArg::Thm2 => TargetKind::Thm2,
        TargetArg::Thm3 => TargetKind::Thm3(alpha),
    }
}

fn certification_value(cert: &ClusterCertification) -> Value {
    let best = cert.outcome.best();
    let coeff: Vec<Vec<f64>> = (0..best.coeff.nrows())
        .map(|i| best.coeff.row(i).iter().copied().collect())
        .collect();
    json!({
        "feasible": cert.outcome.is_found(),
        "residual_sup": best.residual_sup,
        "residual_l2": best.residual_l2,
        "rank": best.rank,
        "coeff": coeff,
        "iterations": best.iterations,
        "lambda": cert.lambda,
        "cluster": [cert.cluster.0, cert.cluster.1],
        "constant_norm": cert.constant_norm,
    })
}

pub fn certify(a: &CertifyArgs) -> Result<Outcome> {
    let (graph, md, problem) = load(&a.problem)?;
    check_positive("tol", a.tol)?;
    check_positive("window", a.window)?;
    check_positive("cluster-tol", a.problem.cluster_tol)?;
    if a.k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    let kind = target_kind(a.kind, a.alpha);
    let settings = CertifySettings {
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let cert = certify_eigenspace(&graph, &md, a.k, kind, a.problem.cluster_tol, settings)?;
    let mut outputs = certification_value(&cert);
    outputs["four_lambda"] = to_value(&four_lambda_test(&graph, &md, cert.lambda, a.window)?);
    let inputs = json!({
        "problem": problem,
        "flags": {"k": a.k, "kind": to_value(&kind), "max_iter": a.max_iter},
    });
    let tolerances = json!({"tol": a.tol, "cluster_tol": a.problem.cluster_tol, "four_lambda_window": a.window});
    Ok(outcome("certify", inputs, outputs, versions(Some(md.mesh()), tolerances)))
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::NonConvergence => "non_convergence",
        Status::Degenerate => "degenerate",
    }
}

fn run_optimizer(
    graph: &DiscreteGraph,
    a: &OptimizeArgs,
    settings: &OptimizerSettings,
) -> Result<OptimizeResult> {
    let direction = match a.direction {
        DirectionArg::Max => Direction::Maximize,
        DirectionArg::Min => Direction::Minimize,
    };
    match a.kind {
        KindArg::Metric => optimize_metric(graph, a.k, direction, settings),
        KindArg::Natural => optimize_pair(graph, a.k, 0.5, direction, settings),
        KindArg::Alpha => optimize_pair(graph, a.k, a.alpha, direction, settings),
    }
}

pub fn optimize(a: &OptimizeArgs) -> Result<Outcome> {
    let (graph, md, problem) = load_path(&a.problem, a.mesh_per_edge)?;
    check_positive("tol", a.tol)?;
    check_positive("certify-tol", a.certify_tol)?;
    let pair = a.kind != KindArg::Metric;
    let density: Vec<f64> = (0..md.edge_count())
        .map(|e| {
            let row = md.rho().edge(e);
            row.iter().sum::<f64>() / row.len() as f64
        })
        .collect();
    let settings = OptimizerSettings {
        max_iter: a.max_iter,
        restarts: a.restarts,
        seed: a.seed,
        tol: a.tol,
        mesh: a.search_mesh,
        report_mesh: md.mesh(),
        start: Some(md.lengths()),
        start_density: pair.then_some(density),
        ..Default::default()
    };
    let result = run_optimizer(&graph, a, &settings)?;
    let reg = check_regularity(&result.md, 1e-4);
    let final_density: Vec<f64> = (0..result.md.edge_count()).map(|e| result.md.rho().edge(e)[0]).collect();
    let certificate_verdict = if result.status == Status::Converged {
        let kind = match a.kind {
            KindArg::Metric => TargetKind::Thm1,
            KindArg::Natural => TargetKind::Thm2,
            KindArg::Alpha => TargetKind::Thm3(a.alpha),
        };
        let settings = CertifySettings {
            tol: a.certify_tol,
            ..Default::default()
        };
        match certify_eigenspace(&graph, &result.md, a.k, kind, qnet_core::spectral::DEFAULT_CLUSTER_TOL, settings) {
            Ok(cert) => {
                let v = certification_value(&cert);
                json!({"attempted": true, "feasible": v["feasible"], "residual_sup": v["residual_sup"], "rank": v["rank"]})
            }
            Err(e) => json!({"attempted": true, "feasible": false, "error": e.to_string()}),
        }
    } else {
        json!({"attempted": false, "reason": format!("optimizer status {}", status_name(result.status))})
    };
    let restarts: Vec<Value> = result
        .restarts
        .iter()
        .map(|r| {
            json!({
                "restart": r.restart,
                "status": status_name(r.status),
                "objective": r.objective,
                "iterations": r.iterations,
                "max_norm_drift": r.max_norm_drift,
                "lengths": r.lengths,
                "density": r.density,
            })
        })
        .collect();
    let outputs = json!({
        "final_metric": result.md.g(),
        "final_lengths": result.md.lengths(),
        "final_density": final_density,
        "objective": result.objective,
        "status": status_name(result.status),
        "best_restart": result.best_restart,
        "trace": to_value(&result.trace()),
        "restarts": restarts,
        "regularity": {
            "regular": reg.regular,
            "max_rel_spread": reg.max_rel_spread,
            "rho_constant": reg.rho_constant,
            "rho_spread": reg.rho_spread,
            "parallel_spread": parallel_spread(&graph, &result.md),
            "tol": 1e-4,
        },
        "certificate_verdict": certificate_verdict,
    });
    let inputs = json!({
        "problem": problem,
        "flags": {
            "k": a.k,
            "direction": match a.direction { DirectionArg::Max => "max", DirectionArg::Min => "min" },
            "kind": kind_name(a.kind),
            "alpha": a.alpha,
            "restarts": a.restarts,
            "seed": a.seed,
            "max_iter": a.max_iter,
            "search_mesh": a.search_mesh,
        },
    });
    let tolerances = json!({
        "tol": settings.tol,
        "step_tol": settings.step_tol,
        "initial_step": settings.initial_step,
        "step_floor": settings.step_floor,
        "g_min": settings.g_min,
        "cluster_eps": settings.cluster_eps,
        "cluster_eps_min": settings.cluster_eps_min,
        "certify_tol": a.certify_tol,
        "regularity_tol": 1e-4,
    });
    let mut out = outcome("optimize", inputs, outputs, versions(Some(md.mesh()), tolerances));
    let rows = result.trace().iter().map(|t| {
        vec![
            t.iteration.to_string(),
            fmt(t.objective),
            fmt(t.step),
            t.cluster_size.to_string(),
            fmt(t.stationarity),
        ]
    });
    out.artifacts.push(Artifact {
        name: "trace.csv".into(),
        contents: csv_table(&["iteration", "objective", "step", "cluster_size", "stationarity"], rows)?,
    });
    if result.status != Status::Converged {
        out.code = 3;
    }
    Ok(out)
}

fn net_artifact(net: &GeodesicNet) -> Artifact {
    let text = serde_json::to_string_pretty(&to_value(net)).expect("nets serialize");
    Artifact {
        name: "net.json".into(),
        contents: text + "\n",
    }
}

pub fn immerse(a: &ImmerseArgs) -> Result<Outcome> {
    let (graph, md, problem) = load(&a.problem)?;
    check_positive("tol", a.tol)?;
    check_positive("norm-tol", a.norm_tol)?;
    check_positive("net-tol", a.net_tol)?;
    if a.k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    let settings = CertifySettings {
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let cert = certify_eigenspace(&graph, &md, a.k, TargetKind::Thm1, a.problem.cluster_tol, settings)?;
    let mut outputs = json!({
        "certificate": certification_value(&cert),
        "four_lambda": to_value(&four_lambda_test(&graph, &md, cert.lambda, DEFAULT_FOUR_LAMBDA_WINDOW)?),
    });
    let inputs = json!({"problem": problem, "flags": {"k": a.k, "max_iter": a.max_iter, "samples": a.samples}});
    let tolerances = json!({
        "tol": a.tol,
        "cluster_tol": a.problem.cluster_tol,
        "norm_tol": a.norm_tol,
        "net_tol": a.net_tol,
        "four_lambda_window": DEFAULT_FOUR_LAMBDA_WINDOW,
    });
    let mut out = outcome("immerse", inputs, Value::Null, versions(Some(md.mesh()), tolerances));
    let Some(c) = cert.outcome.certificate() else {
        outputs["sphere_map"] = json!({"error": "no certificate found"});
        out.report.outputs = outputs;
        out.code = 3;
        return Ok(out);
    };
    let fs = recover_eigenfunctions(&c.coeff, &cert.basis);
    match build_sphere_map(&fs, &graph, &md, cert.lambda, a.norm_tol) {
        Ok(map) => {
            let net = map.to_net(&graph, a.samples);
            let check = verify_net(&net, a.net_tol);
            outputs["sphere_map"] = json!({
                "dimension": map.dimension(),
                "radius": map.radius,
                "lambda": map.lambda,
                "radius_deviation": map.radius_deviation,
                "speed_deviation": map.speed_deviation,
                "net": to_value(&check),
            });
            if !check.passes {
                out.code = 3;
            }
            out.artifacts.push(net_artifact(&net));
        }
        Err(e @ Error::NonConstantNorm(_)) => {
            outputs["sphere_map"] = json!({"error": e.to_string()});
            out.code = 3;
        }
        Err(e) => return Err(e),
    }
    out.report.outputs = outputs;
    Ok(out)
}

pub fn net(a: &NetArgs) -> Result<Outcome> {
    check_positive("tol", a.tol)?;
    let (net, source) = match &a.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let net: GeodesicNet = serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            (net, json!({"input": path.display().to_string()}))
        }
        None => (pumpkin_net_with(a.m, a.samples)?, json!({"pumpkin": a.m, "samples": a.samples})),
    };
    let check = verify_net(&net, a.tol);
    let outputs = json!({"net": to_value(&net), "verification": to_value(&check)});
    let mut out = outcome("net", json!({"flags": source}), outputs, versions(None, json!({"tol": a.tol})));
    out.artifacts.push(net_artifact(&net));
    if !check.passes {
        out.code = 3;
    }
    Ok(out)
}

pub fn oracle(a: &OracleArgs) -> Result<Outcome> {
    let family = OracleFamily::from_name(&a.family, &a.lengths)?;
    let obstruction = match obstruction_verdict(&family) {
        Ok(v) => to_value(&v),
        Err(Error::UnsupportedFamily(_)) => Value::Null,
        Err(e) => return Err(e),
    };
    let outputs = json!({
        "family": to_value(&family),
        "eigenvalues": oracle_spectrum(&family, a.count.saturating_sub(1)),
        "total_length": family.total_length(),
        "obstruction": obstruction,
    });
    let inputs = json!({"flags": {"family": a.family, "lengths": a.lengths, "count": a.count}});
    Ok(outcome("oracle", inputs, outputs, versions(None, json!({}))))
}

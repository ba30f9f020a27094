use std::f64::consts::PI;

use qnet_core::extremality::{certify_eigenspace, CertifySettings, TargetKind};
use qnet_core::optimizer::{
    check_regularity, optimize_metric, optimize_pair, parallel_spread, Direction, OptimizerSettings, Status,
};
use qnet_core::perturbation::{normalization, NormKind};
use qnet_core::{total_length, DiscreteGraph};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn pumpkin_maximizer_is_equilateral() {
    let graph = DiscreteGraph::pumpkin(3);
    let settings = OptimizerSettings {
        start: Some(vec![0.8, 1.0, 1.2]),
        ..Default::default()
    };
    let out = optimize_metric(&graph, 1, Direction::Maximize, &settings).unwrap();
    assert_eq!(out.status, Status::Converged);
    assert!(rel(out.objective, 9.0 * PI * PI) <= 1e-3, "{}", out.objective);
    let reg = check_regularity(&out.md, 1e-4);
    assert!(reg.regular, "{reg:?}");
    for r in &out.restarts {
        assert!(r.max_norm_drift <= 1e-10);
        for w in r.trace.windows(2) {
            assert!(w[1].objective >= w[0].objective, "{w:?}");
        }
    }
    let cert = certify_eigenspace(&graph, &out.md, 1, TargetKind::Thm1, 1e-4, CertifySettings::default()).unwrap();
    assert!(cert.outcome.is_found());
}

#[test]
fn necklace_minimizer_is_symmetric() {
    let graph = DiscreteGraph::necklace(3);
    let settings = OptimizerSettings {
        start: Some(vec![0.7, 1.3, 1.1, 0.9, 1.2, 0.6]),
        ..Default::default()
    };
    let out = optimize_metric(&graph, 1, Direction::Minimize, &settings).unwrap();
    assert_eq!(out.status, Status::Converged);
    assert!(rel(out.objective, 4.0 * PI * PI) <= 1e-3, "{}", out.objective);
    assert!(parallel_spread(&graph, &out.md) <= 1e-4, "{:?}", out.md.lengths());
    for r in &out.restarts {
        for w in r.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective, "{w:?}");
        }
    }
    let cert = certify_eigenspace(&graph, &out.md, 1, TargetKind::Thm1, 1e-4, CertifySettings::default()).unwrap();
    assert!(cert.outcome.is_found());
}

#[test]
fn two_pumpkin_objective_is_constant() {
    let graph = DiscreteGraph::pumpkin(2);
    let settings = OptimizerSettings {
        start: Some(vec![0.5, 1.5]),
        restarts: 2,
        max_iter: 20,
        ..Default::default()
    };
    let out = optimize_metric(&graph, 1, Direction::Maximize, &settings).unwrap();
    assert!(rel(out.objective, 4.0 * PI * PI) <= 1e-3);
    for r in &out.restarts {
        assert!(rel(r.objective, 4.0 * PI * PI) <= 1e-3);
        for e in &r.trace {
            assert!(rel(e.objective, 4.0 * PI * PI) <= 1e-3);
        }
    }
}

#[test]
fn seeded_runs_repeat_exactly() {
    let graph = DiscreteGraph::pumpkin(3);
    let settings = OptimizerSettings {
        restarts: 2,
        max_iter: 15,
        seed: 7,
        ..Default::default()
    };
    let a = optimize_metric(&graph, 1, Direction::Maximize, &settings).unwrap();
    let b = optimize_metric(&graph, 1, Direction::Maximize, &settings).unwrap();
    assert_eq!(a.restarts, b.restarts);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    let c = optimize_metric(&graph, 1, Direction::Maximize, &OptimizerSettings { seed: 8, ..settings }).unwrap();
    assert_ne!(a.restarts[0].lengths, c.restarts[0].lengths);
}

#[test]
fn equilateral_constant_pair_is_stationary() {
    let graph = DiscreteGraph::pumpkin(3);
    let settings = OptimizerSettings {
        start: Some(vec![1.0; 3]),
        start_density: Some(vec![1.0; 3]),
        restarts: 1,
        ..Default::default()
    };
    for alpha in [0.0, 0.5, 2.0] {
        let out = optimize_pair(&graph, 1, alpha, Direction::Maximize, &settings).unwrap();
        assert_eq!(out.status, Status::Converged, "alpha {alpha}");
        let reg = check_regularity(&out.md, 1e-4);
        assert!(reg.regular && reg.rho_constant, "alpha {alpha}: {reg:?}");
        assert!(rel(out.objective, 9.0 * PI * PI) <= 1e-3, "{}", out.objective);
        assert!((normalization(NormKind::Alpha(alpha), &out.md) - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn natural_pair_search_runs_off_to_a_heavy_short_edge() {
    // With per-edge densities the natural functional is unbounded above.
    let graph = DiscreteGraph::pumpkin(3);
    let settings = OptimizerSettings {
        start: Some(vec![0.8, 1.0, 1.2]),
        start_density: Some(vec![1.3, 0.8, 1.0]),
        restarts: 1,
        ..Default::default()
    };
    let out = optimize_pair(&graph, 1, 0.5, Direction::Maximize, &settings).unwrap();
    assert_eq!(out.status, Status::Degenerate);
    assert!(out.objective > 100.0 * PI * PI);
    let r = &out.restarts[0];
    assert!(r.max_norm_drift <= 1e-10);
    assert!((total_length(&out.md) - 1.0).abs() <= 1e-12);
    for w in r.trace.windows(2) {
        assert!(w[1].objective >= w[0].objective);
    }
}

#[test]
fn flower_pair_search_does_not_settle() {
    let graph = DiscreteGraph::flower(2);
    let settings = OptimizerSettings {
        restarts: 2,
        max_iter: 150,
        ..Default::default()
    };
    let out = optimize_pair(&graph, 1, 0.0, Direction::Maximize, &settings).unwrap();
    assert!(matches!(out.status, Status::NonConvergence | Status::Degenerate), "{:?}", out.status);
}

#[test]
fn invalid_settings_are_rejected() {
    let graph = DiscreteGraph::pumpkin(3);
    assert!(optimize_metric(&graph, 0, Direction::Maximize, &OptimizerSettings::default()).is_err());
    let bad = OptimizerSettings {
        start: Some(vec![1.0, 1.0]),
        ..Default::default()
    };
    assert!(optimize_metric(&graph, 1, Direction::Maximize, &bad).is_err());
    assert!("sideways".parse::<Direction>().is_err());
    assert_eq!("min".parse::<Direction>().unwrap(), Direction::Minimize);
}

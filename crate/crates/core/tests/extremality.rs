use std::f64::consts::PI;

use qnet_core::extremality::{
    certify, certify_eigenspace, four_lambda_test, norm_squared, realized_identities,
    recover_eigenfunctions, residual_eigenfunction_check, CertifySettings, FourLambda, TargetKind,
};
use qnet_core::perturbation::{directional_derivative, norm_grad};
use qnet_core::spectral::{effective_eigenvalue, DEFAULT_CLUSTER_TOL};
use qnet_core::{rayleigh, DiscreteGraph, EdgeSamples, GraphFunction, MetricDensity, PerturbationPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loop_md() -> (DiscreteGraph, MetricDensity) {
    let g = DiscreteGraph::single_loop();
    let md = MetricDensity::from_lengths(&g, &[2.0 * PI], 256).unwrap();
    (g, md)
}

fn pumpkin_md() -> (DiscreteGraph, MetricDensity) {
    let g = DiscreteGraph::pumpkin(3);
    let md = MetricDensity::from_lengths(&g, &[PI; 3], 256).unwrap();
    (g, md)
}

fn flower_md() -> (DiscreteGraph, MetricDensity) {
    let g = DiscreteGraph::flower(3);
    let md = MetricDensity::from_lengths(&g, &[PI; 3], 256).unwrap();
    (g, md)
}

fn sup_dev(a: &EdgeSamples, b: &EdgeSamples) -> f64 {
    a.rows()
        .iter()
        .flatten()
        .zip(b.rows().iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn loop_certificates() {
    let (g, md) = loop_md();
    for kind in [TargetKind::Thm1, TargetKind::Thm2] {
        let cert = certify_eigenspace(&g, &md, 1, kind, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
        assert_eq!(cert.cluster, (1, 3));
        let c = cert.outcome.certificate().expect("loop certificate");
        assert!(c.residual_sup <= 1e-5, "{kind:?}: {}", c.residual_sup);
        assert_eq!(c.rank, 2);
        // Proportional to the identity in an orthonormal basis.
        assert!((c.coeff[(0, 0)] - c.coeff[(1, 1)]).abs() <= 1e-6 * c.coeff[(0, 0)]);
        assert!(c.coeff[(0, 1)].abs() <= 1e-6 * c.coeff[(0, 0)]);
    }
}

#[test]
fn pumpkin_certificates_have_rank_three() {
    let (g, md) = pumpkin_md();
    for kind in [TargetKind::Thm1, TargetKind::Thm2] {
        let cert = certify_eigenspace(&g, &md, 1, kind, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
        let c = cert.outcome.certificate().expect("pumpkin certificate");
        assert!(c.residual_sup <= 1e-5);
        assert_eq!(c.rank, 3);
        assert!(c.min_eigenvalue() >= -1e-10 * c.coeff.trace());
    }
}

#[test]
fn flower_constant_norm_certificate_is_not_found() {
    let (g, md) = flower_md();
    let cert = certify_eigenspace(&g, &md, 1, TargetKind::Thm2, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
    assert_eq!(cert.cluster, (1, 3));
    assert!(!cert.outcome.is_found());
    assert!(cert.outcome.best().residual_sup > 1e-2);
}

#[test]
fn flower_thm1_certificate_has_nonconstant_norm() {
    let (g, md) = flower_md();
    let cert = certify_eigenspace(&g, &md, 1, TargetKind::Thm1, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
    assert!(!cert.constant_norm);
    let c = cert.outcome.certificate().expect("flower thm1 certificate");
    let fs = recover_eigenfunctions(&c.coeff, &cert.basis);
    let check = residual_eigenfunction_check(&fs, &g, &md, cert.lambda, 1e-6).unwrap();
    assert!(!check.constant_norm);
    let r = check.w_rayleigh.unwrap();
    assert!((r - 4.0 * cert.lambda).abs() <= 1e-3 * 4.0 * cert.lambda, "{r}");
}

#[test]
fn recovery_reproduces_targets() {
    for (g, md) in [loop_md(), pumpkin_md()] {
        for kind in [TargetKind::Thm1, TargetKind::Thm2] {
            let cert = certify_eigenspace(&g, &md, 1, kind, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
            let c = cert.outcome.certificate().unwrap();
            let fs = recover_eigenfunctions(&c.coeff, &cert.basis);
            let combined = cert.targets.is_combined();
            let (grad, val) = realized_identities(&fs, &md, cert.lambda, combined);
            let scale = 1.0f64.max(cert.targets.t_grad.max());
            assert!(sup_dev(&grad, &cert.targets.t_grad) <= 2.0 * c.residual_sup * scale + 1e-12);
            if let Some(tv) = &cert.targets.t_val {
                assert!(sup_dev(&val, tv) <= 2.0 * c.residual_sup * scale + 1e-12);
            }
            if kind == TargetKind::Thm1 {
                assert!(cert.constant_norm);
                // |F|² = 1/(2λ) for these immersions.
                let norm = norm_squared(&fs).to_samples();
                let (hi, lo, want) = (norm.max(), norm.min(), 0.5 / effective_eigenvalue(&md, cert.lambda));
                let check = residual_eigenfunction_check(&fs, &g, &md, cert.lambda, 1e-8).unwrap();
                assert!(check.constant_norm, "{check:?}");
                assert!(hi - lo <= 1e-5, "{hi} {lo} {want}");
                assert!((hi - want).abs() <= 1e-5, "{hi} {lo} {want}");
            }
        }
    }
}

#[test]
fn identity_and_rank_one_recovery() {
    let (g, md) = loop_md();
    let cert = certify_eigenspace(&g, &md, 1, TargetKind::Thm1, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
    let eye = nalgebra::DMatrix::<f64>::identity(2, 2);
    let fs = recover_eigenfunctions(&eye, &cert.basis);
    assert_eq!(fs.len(), 2);
    let v = nalgebra::DVector::from_vec(vec![0.6, 0.8]);
    let fs = recover_eigenfunctions(&(&v * v.transpose()), &cert.basis);
    assert_eq!(fs.len(), 1);
    let want = GraphFunction::linear_combination(&[0.6, 0.8], &cert.basis);
    let diff = fs[0].add(&want.scale(-1.0)).unwrap().sup_norm().min(fs[0].add(&want).unwrap().sup_norm());
    assert!(diff < 1e-12);
}

#[test]
fn certify_is_scale_consistent() {
    let (g, md) = pumpkin_md();
    let base = certify_eigenspace(&g, &md, 1, TargetKind::Thm2, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
    let c0 = base.outcome.certificate().unwrap().coeff.clone();
    for factor in [0.01, 3.0, 250.0] {
        let targets = base.targets.scaled(factor);
        let out = certify(&base.basis, &targets, &md, base.lambda, CertifySettings::default()).unwrap();
        let c = out.certificate().expect("still feasible");
        assert!((&c.coeff - &c0 * factor).amax() <= 1e-8 * factor * c0.amax());
    }
    let (g, md) = flower_md();
    let base = certify_eigenspace(&g, &md, 1, TargetKind::Thm2, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
    let out = certify(&base.basis, &base.targets.scaled(7.0), &md, base.lambda, CertifySettings::default()).unwrap();
    assert!(!out.is_found());
}

#[test]
fn four_lambda_examples() {
    let interval = DiscreteGraph::interval();
    let md = MetricDensity::from_lengths(&interval, &[PI], 256).unwrap();
    assert!(matches!(four_lambda_test(&interval, &md, 1.0, 1e-3).unwrap(), FourLambda::Present { index: 2, .. }));
    let (g, md) = loop_md();
    assert!(matches!(four_lambda_test(&g, &md, 1.0, 1e-3).unwrap(), FourLambda::Present { index: 3 | 4, .. }));
    let (g, md) = flower_md();
    assert!(four_lambda_test(&g, &md, 1.0, 1e-3).unwrap().is_present());
    // Nothing near 4λ for λ between the interval's squares.
    let v = four_lambda_test(&interval, &MetricDensity::from_lengths(&interval, &[PI], 256).unwrap(), 1.5, 1e-3).unwrap();
    assert!(matches!(v, FourLambda::Absent { .. }));
}

#[test]
fn flower_petal_eigenfunction_for_four_lambda() {
    let (g, md) = flower_md();
    let cos2 = GraphFunction::from_fn(&g, 256, |_, x| (2.0 * PI * x).cos());
    let r = rayleigh(&cos2, &g, &md).unwrap();
    assert!((r - 4.0).abs() <= 1e-3, "{r}");
    // 1 - cos(2x) satisfies the vertex conditions but is not an eigenfunction.
    let shifted = GraphFunction::from_fn(&g, 256, |_, x| 1.0 - (2.0 * PI * x).cos());
    let r = rayleigh(&shifted, &g, &md).unwrap();
    assert!((r - 4.0 / 3.0).abs() <= 1e-3, "{r}");
}

#[test]
fn residual_check_on_artificial_interval_map() {
    let g = DiscreteGraph::interval();
    let md = MetricDensity::from_lengths(&g, &[PI], 256).unwrap();
    let f = GraphFunction::from_fn(&g, 256, |_, x| (PI * x).cos());
    let check = residual_eigenfunction_check(&[f], &g, &md, 1.0, 1e-6).unwrap();
    assert!(!check.constant_norm);
    assert!((check.w_rayleigh.unwrap() - 4.0).abs() <= 1e-3);
}

#[test]
fn certificate_gives_zero_in_derivative_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (g, md, kind) in [
        (loop_md().0, loop_md().1, TargetKind::Thm2),
        (pumpkin_md().0, pumpkin_md().1, TargetKind::Thm2),
    ] {
        let cert = certify_eigenspace(&g, &md, 1, kind, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
        assert!(cert.outcome.is_found());
        let grad = norm_grad(kind.norm_kind(), &md);
        let m = g.edge_count();
        for _ in 0..20 {
            let phi: Vec<f64> = (0..m).map(|e| md.g()[e] * rng.random_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..0.5)).collect();
            let eta = EdgeSamples::from_fn(m, md.mesh(), |e, x| c[e] * (1.0 + x));
            let raw = PerturbationPair::new(phi, eta).unwrap();
            // Project onto ⟨∇N, dir⟩ = 0 along the scaling direction.
            let scaling = PerturbationPair::scaling(&md);
            let t = grad.pair(&md, &raw) / grad.pair(&md, &scaling);
            let dir = raw.axpy(-t, &scaling);
            assert!(grad.pair(&md, &dir).abs() < 1e-9 * md.g()[0]);
            let d = directional_derivative(&g, &md, 1, &dir).unwrap();
            let tol = 1e-6 * (d.hi - d.lo).abs().max(1.0);
            assert!(d.lo <= tol && d.hi >= -tol, "{d:?}");
        }
    }
}

use std::f64::consts::PI;

use proptest::prelude::*;
use qnet_core::extremality::{
    certify_eigenspace, four_lambda_test, norm_squared, recover_eigenfunctions, CertifySettings, TargetKind,
    DEFAULT_FOUR_LAMBDA_WINDOW,
};
use qnet_core::immersion::{
    align_nets, build_sphere_map, obstruction_verdict, pumpkin_net, pumpkin_net_with, verify_net, verify_takahashi,
    Point, SphereMap, Verdict, NET_SAMPLES,
};
use qnet_core::spectral::oracle::OracleFamily;
use qnet_core::spectral::DEFAULT_CLUSTER_TOL;
use qnet_core::{DiscreteGraph, Error, MetricDensity};

fn circle(radius: f64, n: usize) -> Vec<Point> {
    (0..n)
        .map(|j| {
            let s = 2.0 * PI * radius * j as f64 / (n - 1) as f64;
            vec![radius * (s / radius).cos(), radius * (s / radius).sin(), 0.0]
        })
        .collect()
}

fn sphere_map(graph: &DiscreteGraph, md: &MetricDensity) -> SphereMap {
    let cert = certify_eigenspace(graph, md, 1, TargetKind::Thm1, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
    let c = cert.outcome.certificate().expect("thm1 certificate");
    let fs = recover_eigenfunctions(&c.coeff, &cert.basis);
    build_sphere_map(&fs, graph, md, cert.lambda, 1e-6).unwrap()
}

#[test]
fn takahashi_on_circles_and_lines() {
    let great = circle(1.0, 512);
    let rep = verify_takahashi(&great, 1.0, 1e-3).unwrap();
    assert!(rep.passes && rep.residual <= 1e-3, "{rep:?}");

    let line: Vec<Point> = (0..100).map(|j| vec![1.0 + j as f64 * 0.01, 0.0, 0.0]).collect();
    let rep = verify_takahashi(&line, 1.0, 1e-3).unwrap();
    assert!(!rep.passes);
    assert!((rep.residual - 1.98).abs() < 1e-6, "{}", rep.residual);

    // Unit-speed circle of radius 2: -γ'' = γ/4 = γ/R².
    let big = circle(2.0, 1024);
    let rep = verify_takahashi(&big, 2.0, 1e-3).unwrap();
    assert!(rep.passes, "{rep:?}");
    assert!((rep.residual_r1 - 0.5).abs() < 1e-3, "{rep:?}");
}

#[test]
fn uneven_sampling_is_rejected() {
    let arc: Vec<Point> = (0..64)
        .map(|j| {
            let t = PI * (j as f64 / 63.0).powi(2);
            vec![t.cos(), t.sin()]
        })
        .collect();
    assert!(matches!(verify_takahashi(&arc, 1.0, 1e-3), Err(Error::NotUnitSpeed(_))));
}

#[test]
fn pumpkin_nets_verify() {
    for m in 2..=8 {
        let net = pumpkin_net(m).unwrap();
        let rep = verify_net(&net, 1e-3);
        assert!(rep.passes, "m={m}: {rep:?}");
        assert!(rep.balance_max <= 1e-12, "m={m}: {}", rep.balance_max);
        assert!((rep.total_length - m as f64 * PI).abs() <= 1e-6, "m={m}: {}", rep.total_length);
        assert!(rep.takahashi.iter().all(|&r| r <= 1e-3));
    }
    assert!(pumpkin_net(1).is_err());
}

#[test]
fn off_sphere_vertex_fails() {
    let mut net = pumpkin_net(3).unwrap();
    net.vertices[0][2] += 1e-2;
    let rep = verify_net(&net, 1e-3);
    assert!(!rep.passes);
    assert!((rep.sphere_residual - 1e-2).abs() < 1e-9, "{}", rep.sphere_residual);
}

#[test]
fn coarse_arcs_fail_verification() {
    let rep = verify_net(&pumpkin_net_with(3, 8).unwrap(), 1e-1);
    assert!(!rep.passes);
}

#[test]
fn loop_map_is_unit_circle() {
    let g = DiscreteGraph::single_loop();
    let md = MetricDensity::from_lengths(&g, &[2.0 * PI], 256).unwrap();
    let map = sphere_map(&g, &md);
    assert_eq!(map.dimension(), 2);
    assert!((map.radius - 1.0).abs() <= 1e-6, "{}", map.radius);
    assert!(map.radius_deviation <= 1e-6, "{}", map.radius_deviation);
    assert!(map.speed_deviation <= 1e-6, "{}", map.speed_deviation);
    let rep = verify_net(&map.to_net(&g, NET_SAMPLES), 5e-3);
    assert!(rep.passes, "{rep:?}");
}

#[test]
fn pumpkin_map_matches_reference_net() {
    let g = DiscreteGraph::pumpkin(3);
    let md = MetricDensity::from_lengths(&g, &[PI; 3], 256).unwrap();
    let map = sphere_map(&g, &md);
    assert_eq!(map.dimension(), 3);
    let net = map.to_net(&g, NET_SAMPLES);
    let rep = verify_net(&net, 5e-3);
    assert!(rep.passes, "{rep:?}");
    let alignment = align_nets(&net, &pumpkin_net(3).unwrap()).unwrap();
    assert!(alignment.sup_error <= 5e-3, "{}", alignment.sup_error);
    let q = &alignment.rotation;
    assert!((q.transpose() * q - nalgebra::DMatrix::identity(3, 3)).amax() < 1e-12);
}

#[test]
fn radius_follows_metric_scaling() {
    let g = DiscreteGraph::pumpkin(3);
    let md = MetricDensity::from_lengths(&g, &[PI; 3], 128).unwrap();
    let base = sphere_map(&g, &md).radius;
    for c in [0.25, 4.0] {
        let scaled = sphere_map(&g, &md.scaled(c, 1.0)).radius;
        assert!((scaled - c.sqrt() * base).abs() <= 1e-9 * scaled, "{scaled} vs {}", c.sqrt() * base);
    }
}

#[test]
fn non_constant_norm_is_reported() {
    let g = DiscreteGraph::flower(3);
    let md = MetricDensity::from_lengths(&g, &[PI; 3], 128).unwrap();
    let cert = certify_eigenspace(&g, &md, 1, TargetKind::Thm1, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
    let fs = recover_eigenfunctions(&cert.outcome.certificate().unwrap().coeff, &cert.basis);
    assert!(matches!(build_sphere_map(&fs, &g, &md, cert.lambda, 1e-6), Err(Error::NonConstantNorm(_))));
}

fn complete_graph(n: usize) -> DiscreteGraph {
    let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((format!("e{i}{j}"), vertices[i].clone(), vertices[j].clone()));
        }
    }
    DiscreteGraph::new(vertices, edges).unwrap()
}

fn cube() -> DiscreteGraph {
    let vertices: Vec<String> = (0..8).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..8usize {
        for bit in [1, 2, 4] {
            if i & bit == 0 {
                edges.push((format!("e{i}{}", i | bit), vertices[i].clone(), vertices[i | bit].clone()));
            }
        }
    }
    DiscreteGraph::new(vertices, edges).unwrap()
}

/// Whenever 4λ is absent, a thm1 certificate has constant norm and
/// yields a sphere map.
#[test]
fn four_lambda_dichotomy_across_families() {
    let cases: Vec<(DiscreteGraph, Vec<f64>)> = vec![
        (DiscreteGraph::interval(), vec![PI]),
        (DiscreteGraph::single_loop(), vec![2.0 * PI]),
        (DiscreteGraph::pumpkin(2), vec![1.0, 2.0]),
        (DiscreteGraph::pumpkin(3), vec![PI; 3]),
        (DiscreteGraph::pumpkin(3), vec![0.8, 1.0, 1.2]),
        (DiscreteGraph::pumpkin(4), vec![1.0; 4]),
        (DiscreteGraph::flower(2), vec![1.0; 2]),
        (DiscreteGraph::flower(3), vec![PI; 3]),
        (DiscreteGraph::necklace(2), vec![1.0; 4]),
        (DiscreteGraph::necklace(3), vec![1.0; 6]),
        (DiscreteGraph::necklace(2), vec![1.0, 1.0, 0.6, 0.6]),
        // Tetrahedral and cubical nets: λ₁ = 1 and cos(2ℓ) = -7/9 keeps 4 out of the spectrum.
        (complete_graph(4), vec![(-1.0f64 / 3.0).acos(); 6]),
        (cube(), vec![(1.0f64 / 3.0).acos(); 12]),
    ];
    let mut absent = 0;
    for (g, lengths) in cases {
        let md = MetricDensity::from_lengths(&g, &lengths, 128).unwrap();
        let cert = certify_eigenspace(&g, &md, 1, TargetKind::Thm1, DEFAULT_CLUSTER_TOL, CertifySettings::default()).unwrap();
        let Some(c) = cert.outcome.certificate() else { continue };
        let verdict = four_lambda_test(&g, &md, cert.lambda, DEFAULT_FOUR_LAMBDA_WINDOW).unwrap();
        if verdict.is_present() {
            continue;
        }
        absent += 1;
        let fs = recover_eigenfunctions(&c.coeff, &cert.basis);
        let norm = norm_squared(&fs).to_samples();
        assert!(norm.max() - norm.min() <= 10.0 * c.residual_sup.max(1e-12), "{lengths:?}");
        let map = build_sphere_map(&fs, &g, &md, cert.lambda, 1e-4).unwrap();
        assert!(verify_net(&map.to_net(&g, NET_SAMPLES), 5e-3).passes, "{lengths:?}");
    }
    assert!(absent >= 2, "only {absent} cases without 4λ");
}

#[test]
fn obstruction_chains() {
    for m in [2, 3, 5] {
        for length in [1.0, PI, 7.5] {
            let v = obstruction_verdict(&OracleFamily::EquilateralFlower { m, length }).unwrap();
            assert_eq!(v.verdict, Verdict::NoImmersion);
            assert_eq!(v.reasons.len(), 6);
            assert!(v.reasons[1].contains("ℓ = π"));
            assert!(v.reasons[2].contains("ℓ = 2nπ"));
            assert!(v.flags.no_maximising_pair && !v.flags.no_minimising_pair);
            assert!(v.flags.excludes_extremal_pair(0.0) && !v.flags.excludes_extremal_pair(0.5));
            assert!(!v.flags.excludes_extremal_pair(1.0));
        }
    }
    let v = obstruction_verdict(&OracleFamily::SymmetricNecklace { lengths: vec![1.0; 3] }).unwrap();
    assert_eq!(v.verdict, Verdict::NoImmersion);
    assert!((v.lambda1 - (PI / 3.0).powi(2)).abs() < 1e-15);
    assert!(v.reasons[1].contains("Σℓ_j = π"));
    assert!(v.reasons[2].contains("ℓ₁ = c₁π"));
    assert!(v.flags.no_minimising_pair && !v.flags.no_maximising_pair);
    assert!(v.flags.excludes_extremal_pair(2.0));

    let single = obstruction_verdict(&OracleFamily::EquilateralFlower { m: 1, length: 2.0 }).unwrap();
    assert_eq!(single.verdict, Verdict::NotApplicable);
    assert!(!single.flags.no_maximising_pair);
    assert!(matches!(
        obstruction_verdict(&OracleFamily::EquilateralPumpkin { m: 3, length: 1.0 }),
        Err(Error::UnsupportedFamily(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotated_pumpkin_nets_still_verify(m in 2usize..9, a in 0.0f64..6.3, b in 0.0f64..3.1) {
        let net = pumpkin_net(m).unwrap();
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        let rot = |p: &Point| -> Point {
            let (x, y, z) = (ca * p[0] - sa * p[1], sa * p[0] + ca * p[1], p[2]);
            vec![x, cb * y - sb * z, sb * y + cb * z]
        };
        let mut turned = net.clone();
        turned.vertices = net.vertices.iter().map(rot).collect();
        for arc in &mut turned.arcs {
            arc.samples = arc.samples.iter().map(rot).collect();
        }
        let rep = verify_net(&turned, 1e-3);
        prop_assert!(rep.passes);
        prop_assert!(rep.balance_max <= 1e-12);
        prop_assert!(align_nets(&turned, &net).unwrap().sup_error <= 1e-10);
    }
}

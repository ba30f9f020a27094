//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use qnet_core::{DiscreteGraph, MetricDensity};

/// Equilateral 3-pumpkin with ℓ = π.
pub fn pumpkin(mesh: usize) -> (DiscreteGraph, MetricDensity) {
    let graph = DiscreteGraph::pumpkin(3);
    let md = MetricDensity::from_lengths(&graph, &[PI; 3], mesh).expect("positive lengths");
    (graph, md)
}

/// 3-necklace with uneven pairs.
pub fn necklace(mesh: usize) -> (DiscreteGraph, MetricDensity) {
    let graph = DiscreteGraph::necklace(3);
    let md = MetricDensity::from_lengths(&graph, &[0.7, 1.3, 1.1, 0.9, 1.2, 0.6], mesh).expect("positive lengths");
    (graph, md)
}

//! Quantum-graph spectra, eigenvalue derivatives and extremality tools.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extremality;
pub mod graph;
pub mod immersion;
pub mod optimizer;
pub mod problem;
pub mod perturbation;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{
    grad_norm_sq, h_inner, integrate, total_length, DiscreteGraph, EdgeSamples, FieldPair, GraphFunction,
    MetricDensity, PerturbationPair, Sampled, DEFAULT_MESH_PER_EDGE,
};
pub use problem::{parse_problem_file, ProblemFile};
pub use spectral::{cluster_eigenspaces, rayleigh, solve_spectrum, Spectrum};

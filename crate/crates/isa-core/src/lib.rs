//! Inter-subject analysis: estimation and inference for the sparse
//! cross-group block of a Gaussian precision matrix when the within-group
//! blocks are dense nuisance.
//!
//! The crate provides
//!
//! - the reparametrized target `Theta = Omega - inv(Sigma_G)` and its
//!   ground-truth generator ([`model`], [`simulation`]);
//! - the penalized maximum-likelihood estimator of `Theta` solved by ADMM
//!   with a closed-form log-determinant proximal step ([`strings`]);
//! - sample-splitting de-biased inference with row-wise constrained L1
//!   programs for the correction matrices, entry-wise variances, confidence
//!   intervals, tests, and multiplicity-corrected selection ([`inference`],
//!   [`clime`]);
//! - rank-correlation covariance input for nonparanormal data
//!   ([`covariance`]);
//! - Monte-Carlo harnesses for recovery benchmarks and coverage studies
//!   ([`simulation`]), with file formats under [`io`].

pub mod clime;
pub mod covariance;
pub mod error;
pub mod inference;
pub mod io;
pub mod lp;
pub mod matrix;
pub mod model;
pub mod partition;
pub mod simulation;
pub mod stats;
pub mod strings;

pub use clime::{solve_clime, solve_clime_block_diagonal, ClimeSolution};
pub use covariance::{
    blocked_covariance, covariance_from_data, kendall_covariance, kendall_covariance_fast,
    sample_covariance, CovariancePair,
};
pub use error::{IsaError, Result};
pub use inference::{
    all_edges, bonferroni_select, debias, default_lambda_prime, edge_inference,
    run_untangle_and_chord, split_sample, variance_estimate, EdgeInference, InferenceOptions,
    InferenceResult, LambdaRule,
};
pub use matrix::{block_diagonal, SymmetricMatrix};
pub use model::{block_inverse, theta_from_omega, IsaModel};
pub use partition::{GroupPartition, InterBlockIndex};
pub use simulation::{
    generate_model, generate_model_detailed, recovery_metrics, run_benchmark,
    run_coverage_study, sample_gaussian, BenchmarkConfig, BenchmarkReport, CoverageConfig,
    CoverageReport, GeneratorSpec, RecoveryMetrics,
};
pub use stats::standard_normal_quantile;
pub use strings::{
    default_lambda_grid, empirical_loss, fit_strings, fit_strings_with_state, loss_gradient,
    select_lambda, soft_threshold, AdmmConfig, AdmmState, LambdaSelection, StringsFit,
};

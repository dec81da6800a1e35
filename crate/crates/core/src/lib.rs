//! Sparse Gaussian Markov random field kernels.
//!
//! The numerical core is a fill-reducing ordering, a symbolic analysis that
//! is computed once per sparsity pattern, a numeric Cholesky factorization
//! `P Q Pᵀ = L Lᵀ`, triangular solves, the log-determinant and selected
//! inversion (entries of `Q⁻¹` on the pattern of L). On top of these sit
//! seeded sampling, conditioning on Gaussian observations, finite element
//! assembly and the space-time precision models, plus a benchmark matrix
//! generator with a timing harness.
//!
//! Factorization and selected inversion accept a worker count; their output
//! is bit-identical for every count.

pub mod bench;
pub mod cholesky;
pub mod error;
pub mod fem;
pub mod gmrf;
pub mod mmio;
pub mod ordering;
mod parallel;
pub mod project;
pub mod rng;
pub mod selinv;
pub mod spacetime;
pub mod sparse;
pub mod symbolic;

pub use cholesky::{factorize, CholeskyFactor};
pub use error::{Error, Result};
pub use fem::{fem_1d, fem_2d, structured_mesh, FemMatrices, Mesh, Mesh1D, TemporalBoundary, TriMesh2D};
pub use gmrf::{
    posterior_mean, posterior_precision, posterior_sample, sample, ObservationModel, Posterior, SampleConfig,
};
pub use ordering::{order, OrderingScheme, Permutation};
pub use selinv::{marginal_variances, selected_inverse, SelectedInverse};
pub use spacetime::{Model, SpaceTimeHyper, SpaceTimeSetup};
pub use sparse::{DenseMatrix, ProjectionMatrix, SparsityPattern, SymmetricSparseMatrix};
pub use symbolic::{analyze, analyze_with_scheme, EliminationTree, SymbolicFactor};

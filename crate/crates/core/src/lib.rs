//! Longest common subsequences of pairs of Mallows permutations.
//!
//! The crate samples Mallows permutations exactly, computes LIS and LCS in
//! `O(n log n)`, evaluates the limit densities of the associated point
//! clouds, brackets the variational constant `J̄` whose double is the limit of
//! `LCS/√n`, and runs Monte Carlo experiments against these limits.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); permutation
//! clouds use exact [`Rational`] coordinates so that rectangle membership is
//! never decided by rounding.

pub mod coupling;
pub mod density;
pub mod experiment;
pub mod mallows;
pub mod perm;
pub mod quadrature;
pub mod scalar;
pub mod sequence_stats;
pub mod variational;

pub use coupling::{census, chain_transition_matrix, coupled_step, run_coupled, CoupledState, CouplingParams};
pub use density::{rho_diag_closed, u, DensityField};
pub use experiment::{run_experiment, run_trials, ConvergenceReport, ExperimentConfig, TrialRecord};
pub use mallows::{exact_pmf, sample, BlockSpec, MallowsParams, ScalingParams};
pub use perm::{IndexVector, InversionSet, PermError, Permutation};
pub use scalar::{Coord, Rational, Real};
pub use sequence_stats::{lcs, lds, lis, lis_in_rectangle, lis_pairs, lis_points, PointCloud, Rectangle};
pub use variational::{jbar_closed, jbar_grid, j_functional, JBracket, MonotonePath, Staircase};

pub type DensityField64 = DensityField<f64>;
pub type DensityField32 = DensityField<f32>;
pub type JBracket64 = JBracket<f64>;
pub type Path64 = MonotonePath<f64>;
/// Permutation clouds `{(p(i)/n, t(i)/n)}`.
pub type LatticeCloud = PointCloud<Rational>;
pub type LatticeRect = Rectangle<Rational>;
pub type Rect64 = Rectangle<f64>;

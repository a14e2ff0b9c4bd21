//! Canonical solutions of the truncated multidimensional moment problem.
//!
//! Given finitely many prescribed real moments `s_k` over an admissible
//! truncation `K` of `Z^n_+`, this crate builds the associated finite
//! dimensional Hilbert space, forms the symmetric multiplication operator
//! blocks, searches for commuting self-adjoint extensions (flat, index 1 and
//! index 2 cases for two-dimensional triangular truncations) and extracts the
//! resulting atomic representing measure, verifying that it reproduces the
//! prescribed moments.
//!
//! The high level pipeline is:
//!
//! 1. [`multiindex`] — admissible index sets, close extensions, borders.
//! 2. [`moments`] — moment sequences, moment (Gram) matrices, the necessary
//!    solvability conditions, and the brute-force oracle integrating an
//!    explicit atomic measure.
//! 3. [`hilbert`] — the quotient Hilbert space, its orthonormal basis, the
//!    index of nonself-adjointness and the operator blocks `A_k`, `B_k`.
//! 4. [`solver`] — the algebraic search for Hermitian corner blocks `C_1`,
//!    `C_2` making the extended operator matrices commute.
//! 5. [`spectral`] — joint diagonalization of the commuting tuple and
//!    extraction of atoms and masses.
//! 6. [`extension`] — the constructive correspondence between canonical
//!    solutions and dimensionally stable close extensions of the moments.
//! 7. [`problem`] — the text document format consumed by the CLI.

pub mod error;
pub mod extension;
pub mod hilbert;
pub(crate) mod linalg;
pub mod moments;
pub mod multiindex;
pub mod oracle;
pub mod problem;
pub mod solver;
pub mod spectral;

pub use error::Error;
pub use linalg::{CMat, CVec, RMat, RVec};
pub use extension::ExtendedMoments;
pub use hilbert::{AssociatedSpace, OperatorBlocks};
pub use moments::{AtomicMeasure, MomentSequence};
pub use multiindex::{AdmissibleSet, MultiIndex};
pub use problem::ProblemDocument;
pub use solver::{SolveOutcome, SolveStatus};
pub use spectral::JointSpectrum;

/// Relative tolerance for rank decisions (Gram-Schmidt skips, numerical rank
/// of Gram matrices, kernel detection).
pub const RANK_TOL: f64 = 1e-9;

/// Relative tolerance for the algebraic solve: consistency of linear systems,
/// commutation residuals of assembled extensions, moment verification.
pub const SOLVE_TOL: f64 = 1e-8;

/// Absolute/relative threshold below which an extracted atom mass is pruned,
/// relative to the total mass `s_0`.
pub const MASS_TOL: f64 = 1e-12;

/// Tolerance for clustering eigenvalues of one operator into joint
/// eigenspaces, relative to the operator norm.
pub const EIG_CLUSTER_TOL: f64 = 1e-7;

/// Distance below which two extracted atoms are considered the same point.
pub const ATOM_TOL: f64 = 1e-8;

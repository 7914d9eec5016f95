//! Numerical thresholds shared across the crate.
//!
//! Every cutoff used by the library lives here so that a change is made in
//! exactly one place.

/// Maximum deviation from Hermiticity accepted by [`crate::linalg::eigh`],
/// relative to `max(1, max|h_ij|)`.
pub const HERMITIAN: f64 = 1e-12;

/// Singular values below `RANK * s_max` are treated as zero when determining
/// minimal bond dimensions.
pub const RANK: f64 = 1e-12;

/// Residual allowed in the isometry condition `sum_i A^i† A^i = 1` before a
/// site is considered non-canonical.
pub const ISOMETRY: f64 = 1e-10;

/// Accepted deviation of a single-system state from unit norm.
pub const STATE_NORM: f64 = 1e-12;

/// Iteration cap handed to the SVD and eigensolver kernels.
pub const KERNEL_MAX_ITER: usize = 10_000;

/// Largest qubit count for which dense state vectors are materialized.
pub const MAX_DENSE_QUBITS: usize = 20;

/// Largest chain length for exact diagonalization of the XXZ chain.
pub const MAX_XXZ_SITES: usize = 14;

/// Absolute floor on the compression error below which the variational
/// sweep is considered exact.
pub const EXACT_ERROR: f64 = 1e-14;

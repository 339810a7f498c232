//! Complex linear-algebra substrate: labeled tensor factors, pure states,
//! density matrices, spectral decomposition and partial traces.
//!
//! Composite indices are row-major over the factor list, so a single photon
//! with factors `(pseudospin, mode)` uses the index `σ·M + x` and its density
//! matrix has the block structure `[HH, HV; VH, VV]`.

mod density;
mod factor;
mod grid;
pub mod io;
mod linalg;
mod trace;

pub use density::{
    tensor_product, validate_density, DensityMatrix, PureState, Storage, ValidationReport,
};
pub use factor::{single_photon_factors, two_photon_factors, Factor, FactorKind};
pub use grid::ModeGrid;
pub use linalg::{
    kron_vec, max_abs_diff, normalize_phase, spectral_decompose, SpectralDecomposition,
};
pub use trace::{partial_trace, permute_dense};

/// Tolerance on Hermiticity, trace and the minimum eigenvalue of a density matrix.
pub const DENSITY_TOL: f64 = 1e-10;

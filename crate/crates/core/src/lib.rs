//! Skyrmion textures encoded in density matrices of partially coherent and
//! mixed quantum light.
//!
//! The crate is organised bottom-up:
//!
//! - [`qstate`]: labeled tensor-factor states, density matrices, spectral
//!   decomposition, partial traces and the `.qdm` file format.
//! - [`texture`]: coherence-Stokes fields, lattice skyrmion numbers and
//!   Néel/Bloch/Bubble classification.
//! - [`synth`]: single-photon skyrmion density matrices (auxiliary matrix and
//!   spectral truncation, analytic `|Q| = 1` eigenmodes).
//! - [`bipartite`]: two-photon states, their four reduced subspaces and the
//!   nested-topology report.
//! - [`noise`]: dephasing, Wishart mixing, depolarization and reproducible
//!   parameter sweeps.
//! - [`multiphoton`]: the `N`-photon biseparable mixture and its pair
//!   reduction.
//! - [`mesh`]: rectangular interferometer meshes and the relative-phase scan.
//! - [`render`]: static SVG rendering of textures.

pub mod bipartite;
pub mod error;
pub mod mesh;
pub mod multiphoton;
pub mod noise;
pub mod qstate;
pub mod render;
pub mod synth;
pub mod texture;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Version string recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

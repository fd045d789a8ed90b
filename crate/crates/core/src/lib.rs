//! Exact diagonalization engine for interacting non-reciprocal two-leg ladders.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerical
//! code: Fock-space enumeration, Hamiltonian assembly, a dense eigensolver for
//! real non-symmetric matrices, per-eigenstate diagnostics, the second-order
//! bound-pair model, and the sweep/threshold machinery. File formats, the CLI
//! and thread pools live in the `nhse` companion crate.
//!
//! Conventions used throughout:
//!
//!  - Sites are numbered by the combined coordinate: cell `x` of leg A is site
//!    `x - 1`, cell `x` of leg B is site `L + x - 1` (cells are 1-based).
//!  - Hopping terms carry the explicit minus sign, `-J_L a†_x a_{x+1}` and
//!    `-J_R a†_{x+1} a_x`; the inter-leg term enters as `+J_p`.
//!  - Boundaries are open.

#![no_std]

extern crate alloc;

pub mod eig;
pub mod fock;
pub mod model;
pub mod observables;
pub mod perturb;
pub mod sweep;

mod math;

pub use num_complex::Complex64;

pub use eig::{
    default_eps_im, eigendecompose, eigenvalues, is_spectrum_real, max_imag, EigError, EigOptions, Eigensystem,
    SpectrumResult,
};
pub use fock::{combined_site, Basis, BasisError, FockState, Leg, SiteIndex, Statistics};
pub use model::{build_hamiltonian, build_single_particle_matrix, onsite_energy, ModelError, ModelParams, SparseOperator};
pub use observables::{Cluster, ClusterLabel, StateObservables};

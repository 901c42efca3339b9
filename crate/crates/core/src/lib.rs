//! Simulation and analysis of quantum state transfer through spin-1 (qutrit)
//! chains.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: Hermitian eigensolvers, propagators, Kronecker products.
//! * [`spin_ops`]: single-site spin-1 operators and their embedding into
//!   `3^n`-dimensional chain operators.
//! * [`hamiltonians`]: declarative [`ChainSpec`] descriptions, the two-site
//!   interactions, the engineered two-band Hamiltonian and its projection on
//!   the single-excitation subspace.
//! * [`dynamics`]: exact time evolution, transfer amplitudes, fidelities and
//!   mirror checks.
//! * [`parity`]: parity-resolved spectra and mirroring feasibility.
//! * [`tomography`]: harmonic retrieval from first-site records and Jacobi
//!   matrix reconstruction.

pub mod cli;
pub mod dynamics;
pub mod hamiltonians;
pub mod linalg;
pub mod numfmt;
pub mod parity;
pub mod spin_ops;
pub mod tomography;

pub use hamiltonians::{ChainSpec, InteractionKind, PresetVariant, TimeSign};
pub use linalg::C64;
pub use spin_ops::{ChainOperator, Level, ProductState, SiteLabel, SiteOperator};

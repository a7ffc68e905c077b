//! Variational ground-state energies from the two-electron reduced density
//! matrix.
//!
//! The energy of an N-electron system is a linear functional of the 2-RDM.
//! Minimizing it subject to the 2-positivity conditions (the two-particle
//! `D`, two-hole `Q` and particle-hole `G` metric matrices are all positive
//! semidefinite) is a semidefinite program. This crate assembles that program,
//! solves it with a low-rank factorization `M = R Rᵀ` inside an augmented
//! Lagrangian loop, and can cap the rank of the singlet particle-hole block at
//! the value attained by an antisymmetrized geminal power wavefunction.
//!
//! A brute-force configuration-interaction oracle ([`fock`]) and exactly
//! solvable model Hamiltonians ([`integrals::hubbard`],
//! [`integrals::pairing_hamiltonian`]) are included for verification.

pub mod basis;
pub mod error;
pub mod fock;
pub mod integrals;
pub mod linalg;
pub mod rdm;
pub mod sdp;
pub mod vrdm;

pub use error::{Error, Result};

//! Quantum walks on periodic 1D and 2D lattices, their antisymmetric
//! multiparticle extension, fermionic operators over energy modes, the
//! occupation-number cellular automaton, and the long-wavelength Dirac limit.

pub mod dirac;
pub mod error;
pub mod fock;
pub mod lattice;
pub mod linalg;
pub mod multiparticle;
pub mod qca;
pub mod verify;
pub mod walk;
pub mod walk1d;
pub mod walk2d;

pub use error::{QcaError, Result};
pub use lattice::{
    energy_labels, mode_ordering_key, momentum_grid, Branch, Dimension, EnergyModeLabel,
    LatticeSpec, MomentumMode, HBAR,
};
pub use walk::{BlockDecomposition, Coin, WalkBasisLabel, WalkUnitary};

//! Numerics for the Morse–Bott geometry of the unitary group viewed as the
//! manifold of hermitian lagrangians: subset combinatorics, the Cayley and
//! Arnold correspondences, gradient flow and its strata, the cohomology ring
//! on the stratum basis, and spectral flow of unitary loops.

pub mod combinatorics;
pub mod error;
pub mod lagrangian;
pub mod matrix;
pub mod morse;
pub mod par;
pub mod ring;
pub mod sampling;
pub mod spectral;
pub mod verify;

pub use combinatorics::SubsetIndex;
pub use error::{Error, Result};
pub use lagrangian::LagrangianFrame;
pub use matrix::{CMatrix, HermitianMatrix, Tolerances, UnitaryMatrix};

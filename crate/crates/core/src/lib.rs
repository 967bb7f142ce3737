//! Scattering states, bound states and self-energies of a two-level emitter
//! coupled to a one-dimensional single-band non-Hermitian lattice bath, with an
//! exact-diagonalization oracle for verification.

pub mod bath;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod selfenergy;
pub mod solver;
pub mod wavefn;

pub use num_complex::Complex64 as C64;

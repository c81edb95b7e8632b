//! Electromagnetic coupling kernels for light-matter Hamiltonians in
//! arbitrary linear media.

pub mod cli;
pub mod couplings;
pub mod curl;
pub mod error;
pub mod greens;
pub mod hamiltonian;
pub mod mode_sum;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod tensor;
pub mod units;

pub use error::{Error, Result};
pub use tensor::{CVec3, Dyadic, Vec3};

//! Spin-chain state transfer toolkit.
//!
//! Builds single-excitation Hamiltonians of linear chains, evolves them,
//! searches uniformly coupled chains for near-perfect transfer with a
//! genetic algorithm, and reconstructs exactly persymmetric chains from
//! prescribed spectra.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analogue;
pub mod chain;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod ga;
pub mod inverse;
pub mod spectra;
pub mod sweep;
pub mod tridiag;

pub use chain::{build_hamiltonian, ChainSpec, MirrorOperator, SignConvention};
pub use error::{Error, Result};
pub use exec::Execution;
pub use spectra::{PinchSpec, Spectrum};
pub use tridiag::{eigendecompose, EigenSystem, SymTridiagonal};

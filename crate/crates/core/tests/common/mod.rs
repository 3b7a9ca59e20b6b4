//! Shared fixtures and an independent dense propagator for integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use pst_core::{build_hamiltonian, ChainSpec, SignConvention};

/// The five-site quasi-PST chain with hand-rounded entries.
pub fn qpst5() -> ChainSpec {
    ChainSpec::new(vec![3.40, 2.60, 2.33, 2.60, 3.40], vec![0.91; 4], SignConvention::Negative).unwrap()
}

pub fn pst5_target() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0, 13.0 / 3.0]
}

/// `exp(−iHt)` via nalgebra's dense matrix exponential, with no use of the
/// eigensolver under test.
pub fn expm_propagator(spec: &ChainSpec, t: f64) -> DMatrix<Complex64> {
    let h = build_hamiltonian(spec).to_dense();
    let a = h.map(|x| Complex64::new(0.0, -x * t));
    a.exp()
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

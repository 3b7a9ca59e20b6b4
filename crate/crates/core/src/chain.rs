//! Chain data model: on-site energies, nearest-neighbour couplings, the
//! single-excitation Hamiltonian and the mirror operator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::{EigenSystem, SymTridiagonal};

/// Default absolute tolerance for palindromic checks on file input.
pub const MIRROR_TOL: f64 = 1e-9;

/// How stored couplings enter the Hamiltonian's co-diagonal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    /// Co-diagonal entry is `-J`.
    #[default]
    Negative,
    /// Co-diagonal entry is `+J`.
    Positive,
}

impl SignConvention {
    pub fn factor(self) -> f64 {
        match self {
            SignConvention::Negative => -1.0,
            SignConvention::Positive => 1.0,
        }
    }
}

#[derive(Deserialize)]
struct RawChainSpec {
    n: usize,
    onsite: Vec<f64>,
    couplings: Vec<f64>,
    #[serde(default)]
    sign_convention: SignConvention,
}

/// A linear chain of `n` sites in the single-excitation subspace.
///
/// Couplings are stored as given; the sign convention decides whether they
/// appear as `-J` or `+J` in the matrix. Units have ħ = 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChainSpec")]
pub struct ChainSpec {
    n: usize,
    onsite: Vec<f64>,
    couplings: Vec<f64>,
    sign_convention: SignConvention,
}

impl TryFrom<RawChainSpec> for ChainSpec {
    type Error = Error;

    fn try_from(raw: RawChainSpec) -> Result<Self> {
        let spec = ChainSpec::new(raw.onsite, raw.couplings, raw.sign_convention)?;
        if spec.n != raw.n {
            return Err(Error::Structural(format!("declared n = {} but {} on-site energies given", raw.n, spec.n)));
        }
        Ok(spec)
    }
}

impl ChainSpec {
    pub fn new(onsite: Vec<f64>, couplings: Vec<f64>, sign_convention: SignConvention) -> Result<Self> {
        let n = onsite.len();
        if n < 2 {
            return Err(Error::Structural(format!("a chain needs at least 2 sites, got {n}")));
        }
        if couplings.len() != n - 1 {
            return Err(Error::Structural(format!("{n} sites need {} couplings, got {}", n - 1, couplings.len())));
        }
        if onsite.iter().chain(&couplings).any(|x| !x.is_finite()) {
            return Err(Error::Structural("non-finite chain parameter".into()));
        }
        if let Some(i) = couplings.iter().position(|&j| j == 0.0) {
            return Err(Error::Structural(format!(
                "coupling between sites {} and {} is zero (chain disconnected)",
                i + 1,
                i + 2
            )));
        }
        Ok(Self { n, onsite, couplings, sign_convention })
    }

    /// Uniform chain with on-site energy `e` and coupling `j` everywhere.
    pub fn uniform(n: usize, e: f64, j: f64, sign_convention: SignConvention) -> Result<Self> {
        Self::new(vec![e; n], vec![j; n.saturating_sub(1)], sign_convention)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn sign_convention(&self) -> SignConvention {
        self.sign_convention
    }

    pub fn with_sign_convention(&self, sign_convention: SignConvention) -> Self {
        Self { sign_convention, ..self.clone() }
    }

    /// Largest coupling magnitude; the unit for dimensionless time `t·J_max`.
    pub fn j_max(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, j| m.max(j.abs()))
    }
}

/// The tridiagonal single-excitation Hamiltonian of `spec`.
pub fn build_hamiltonian(spec: &ChainSpec) -> SymTridiagonal {
    let s = spec.sign_convention.factor();
    let off = spec.couplings.iter().map(|j| s * j).collect();
    SymTridiagonal::new(spec.onsite.clone(), off).expect("ChainSpec invariants guarantee shape")
}

/// Result of a palindrome test on a chain's parameter profiles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorCheck {
    pub symmetric: bool,
    pub max_violation: f64,
}

pub fn check_mirror_symmetry(spec: &ChainSpec, tol: f64) -> MirrorCheck {
    let worst = |v: &[f64]| v.iter().zip(v.iter().rev()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let max_violation = worst(&spec.onsite).max(worst(&spec.couplings));
    MirrorCheck { symmetric: max_violation <= tol, max_violation }
}

/// The anti-diagonal permutation `M_ij = δ_{i, N+1-j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MirrorOperator {
    n: usize,
}

impl MirrorOperator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "vector length must match mirror dimension");
        x.iter().rev().copied().collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| if i + j + 1 == self.n { 1.0 } else { 0.0 })
    }

    /// `⟨φ_j|M|φ_k⟩` for the eigenvectors in `es`.
    pub fn in_eigenbasis(&self, es: &EigenSystem) -> DMatrix<f64> {
        let v = es.vectors();
        v.transpose() * self.to_dense() * v
    }
}

/// Parity `⟨φ_k|M|φ_k⟩ = ±1` of each eigenvector under the mirror.
///
/// Fails with a contract error if some eigenvector is not an eigenvector of
/// `M`, which happens exactly when the chain is not mirror-symmetric.
pub fn eigenstate_parity(es: &EigenSystem, mirror: &MirrorOperator) -> Result<Vec<i8>> {
    if mirror.dim() != es.dim() {
        return Err(Error::Structural("mirror and eigensystem dimensions differ".into()));
    }
    (0..es.dim())
        .map(|k| {
            let v: Vec<f64> = es.vectors().column(k).iter().copied().collect();
            let mv = mirror.apply(&v);
            let overlap: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
            if (overlap.abs() - 1.0).abs() > 1e-8 {
                return Err(Error::Contract(format!(
                    "eigenvector {k} has mirror overlap {overlap:.3e}; chain is not mirror-symmetric"
                )));
            }
            Ok(if overlap > 0.0 { 1 } else { -1 })
        })
        .collect()
}

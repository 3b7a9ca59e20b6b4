//! Persymmetric Jacobi matrix reconstruction from a prescribed spectrum.
//!
//! For a mirror-symmetric chain the squared first components of the
//! eigenvectors are fixed by the spectrum alone, `w_k ∝ Π_{j≠k} 1/|λ_k−λ_j|`.
//! Running the three-term (Stieltjes) recurrence for polynomials orthogonal
//! under that discrete measure yields on-site energies and couplings:
//!
//! ```text
//! ε_i   = ⟨λ P_{i−1}, P_{i−1}⟩ / ‖P_{i−1}‖²
//! J_i²  = ‖P_i‖² / ‖P_{i−1}‖²
//! P_i   = (λ − ε_i) P_{i−1} − J_{i−1}² P_{i−2}
//! ```
//!
//! The recurrence is carried on normalized vectors `v_j(k) = √ŵ_k p̂_j(λ_k)`
//! with full reorthogonalization; monic values and norms are rebuilt from
//! the normalized ones for the [`PolynomialTable`].

use serde::Serialize;

use crate::chain::{build_hamiltonian, ChainSpec, SignConvention};
use crate::error::{Error, Result};
use crate::spectra::Spectrum;
use crate::tridiag::eigendecompose;

/// Spectra whose minimal gap is below this fraction of the range count as
/// degenerate.
pub const SIMPLE_GAP_REL: f64 = 1e-12;
/// Agreement required between mirrored half-chain and the full forward pass.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

/// Discrete measure attached to each eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSet(pub Vec<f64>);

impl WeightSet {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// `w_k = Π_{j≠k} 1/|λ_k − λ_j|`, evaluated in log space.
pub fn compute_weights(s: &Spectrum) -> Result<WeightSet> {
    let v = s.values();
    let n = v.len();
    if n >= 2 {
        let min_gap = s.gaps().into_iter().fold(f64::INFINITY, f64::min);
        if min_gap <= SIMPLE_GAP_REL * s.range() {
            return Err(Error::Contract(format!(
                "spectrum is not simple (minimal gap {min_gap:.3e}); reconstruction undefined"
            )));
        }
    }
    let w = (0..n)
        .map(|k| {
            let log: f64 = (0..n).filter(|&j| j != k).map(|j| (v[k] - v[j]).abs().ln()).sum();
            (-log).exp()
        })
        .collect();
    Ok(WeightSet(w))
}

/// Orthogonal polynomial values at the eigenvalues, one row per degree.
#[derive(Clone, Debug)]
pub struct PolynomialTable {
    /// `p̂_j(λ_k)`: orthonormal under the weights scaled to unit total.
    normalized: Vec<Vec<f64>>,
    /// `ln ‖P_j‖²` for the monic polynomials under the raw weights.
    log_norms_sq: Vec<f64>,
}

impl PolynomialTable {
    pub fn degrees(&self) -> usize {
        self.normalized.len()
    }

    /// Monic `P_j(λ_k)` for every `k`.
    pub fn monic(&self, j: usize) -> Vec<f64> {
        let scale = (0.5 * (self.log_norms_sq[j] - self.log_norms_sq[0])).exp();
        self.normalized[j].iter().map(|q| q * scale).collect()
    }

    /// `‖P_j‖² = Σ_k P_j(λ_k)² w_k`.
    pub fn norm_sq(&self, j: usize) -> f64 {
        self.log_norms_sq[j].exp()
    }

    pub fn normalized(&self, j: usize) -> &[f64] {
        &self.normalized[j]
    }

    /// Strict sign changes of `P_j` across ascending eigenvalues; values
    /// that vanish to rounding are skipped.
    pub fn sign_changes(&self, j: usize) -> usize {
        let row = &self.normalized[j];
        let floor = 1e-10 * row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut last = 0.0f64;
        let mut changes = 0;
        for &x in row.iter().filter(|x| x.abs() > floor) {
            if last != 0.0 && x.signum() != last {
                changes += 1;
            }
            last = x.signum();
        }
        changes
    }

    /// `P_j` changes sign exactly `j` times for every stored degree.
    pub fn interlacing_holds(&self) -> bool {
        (0..self.degrees()).all(|j| self.sign_changes(j) == j)
    }
}

/// Output of a full reconstruction.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub chain: ChainSpec,
    pub weights: WeightSet,
    pub table: PolynomialTable,
    /// Largest difference between the mirrored half and the forward pass.
    pub cross_check: f64,
}

struct ForwardPass {
    onsite: Vec<f64>,
    couplings_sq: Vec<f64>,
    table: PolynomialTable,
}

fn forward_pass(s: &Spectrum, w: &WeightSet) -> Result<ForwardPass> {
    let lam = s.values();
    let n = lam.len();
    let total = w.total();
    let sqrt_w: Vec<f64> = w.as_slice().iter().map(|x| (x / total).sqrt()).collect();
    let scale = lam.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(s.range());

    let mut basis: Vec<Vec<f64>> = vec![sqrt_w.clone()];
    let mut onsite = Vec::with_capacity(n);
    let mut couplings_sq: Vec<f64> = Vec::with_capacity(n.saturating_sub(1));
    let mut log_norms_sq = vec![total.ln()];

    for i in 0..n {
        let v = &basis[i];
        let eps: f64 = v.iter().zip(lam).map(|(x, l)| l * x * x).sum();
        onsite.push(eps);
        if i + 1 == n {
            break;
        }
        let mut r: Vec<f64> = v.iter().zip(lam).map(|(x, l)| (l - eps) * x).collect();
        if i > 0 {
            let b = couplings_sq[i - 1].sqrt();
            for (rk, pk) in r.iter_mut().zip(&basis[i - 1]) {
                *rk -= b * pk;
            }
        }
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                for (rk, qk) in r.iter_mut().zip(q) {
                    *rk -= dot * qk;
                }
            }
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-13 * scale) {
            return Err(Error::Numerical(format!(
                "recurrence broke down at stage {}: nonpositive norm ratio {norm:.3e}",
                i + 1
            )));
        }
        couplings_sq.push(norm * norm);
        log_norms_sq.push(log_norms_sq[i] + 2.0 * norm.ln());
        basis.push(r.into_iter().map(|x| x / norm).collect());
    }

    let normalized = basis.iter().map(|v| v.iter().zip(&sqrt_w).map(|(x, sw)| x / sw).collect()).collect();
    Ok(ForwardPass { onsite, couplings_sq, table: PolynomialTable { normalized, log_norms_sq } })
}

/// Mirror the first half of `v` onto the second.
fn mirror_half(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| if i < n.div_ceil(2) { v[i] } else { v[n - 1 - i] }).collect()
}

/// Rebuild the unique persymmetric chain with spectrum `s`.
pub fn reconstruct_full(s: &Spectrum, convention: SignConvention) -> Result<Reconstruction> {
    if s.len() < 2 {
        return Err(Error::Contract("reconstruction needs at least 2 eigenvalues".into()));
    }
    let weights = compute_weights(s)?;
    let pass = forward_pass(s, &weights)?;
    let couplings_full: Vec<f64> = pass.couplings_sq.iter().map(|x| x.sqrt()).collect();

    let onsite = mirror_half(&pass.onsite);
    let couplings = mirror_half(&couplings_full);
    let scale = s.range().max(1.0);
    let cross_check = onsite
        .iter()
        .zip(&pass.onsite)
        .chain(couplings.iter().zip(&couplings_full))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if cross_check > CROSS_CHECK_TOL * scale {
        return Err(Error::Numerical(format!("half-chain and forward pass disagree by {cross_check:.3e}")));
    }
    let chain = ChainSpec::new(onsite, couplings, convention)?;
    Ok(Reconstruction { chain, weights, table: pass.table, cross_check })
}

pub fn reconstruct_with(s: &Spectrum, convention: SignConvention) -> Result<ChainSpec> {
    Ok(reconstruct_full(s, convention)?.chain)
}

/// Reconstruction with the default negative co-diagonal convention.
pub fn reconstruct(s: &Spectrum) -> Result<ChainSpec> {
    reconstruct_with(s, SignConvention::Negative)
}

/// Reconstruct, rediagonalize, and report `max |λ_in − λ_out|`.
pub fn roundtrip_error(s: &Spectrum) -> Result<f64> {
    let chain = reconstruct(s)?;
    let es = eigendecompose(&build_hamiltonian(&chain))?;
    Ok(s.values().iter().zip(es.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

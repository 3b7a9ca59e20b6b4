//! Particle-in-a-discrete-potential diagnostics: the discrete Schrödinger
//! identity, node counting, custom ladder operators for pinched spectra,
//! and the position operator with its pairing under the mirror.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::chain::{build_hamiltonian, ChainSpec, MirrorOperator, SignConvention};
use crate::error::{Error, Result};
use crate::tridiag::{eigendecompose, EigenSystem, SymTridiagonal};

/// Couplings count as uniform when they agree to this tolerance.
pub const UNIFORM_TOL: f64 = 1e-9;
/// Eigenvector components at or below this are treated as nodes.
pub const NODE_ZERO: f64 = 1e-12;
/// Tolerance for recognizing a shifted pinched spectrum.
pub const PINCH_TOL: f64 = 1e-6;

/// Residual of `−J·φ″ + (ε_i − 2J)φ = λφ` (lattice spacing 1) at every
/// interior site, one row per eigenstate. Chains with two sites have no
/// interior and produce empty rows.
pub fn schrodinger_residual(spec: &ChainSpec, es: &EigenSystem) -> Result<Vec<Vec<f64>>> {
    if spec.sign_convention() != SignConvention::Negative {
        return Err(Error::Contract("the potential analogue assumes negative couplings".into()));
    }
    if es.dim() != spec.n() {
        return Err(Error::Structural("eigensystem does not match chain".into()));
    }
    let j = spec.couplings()[0];
    if spec.couplings().iter().any(|c| (c - j).abs() > UNIFORM_TOL) {
        return Err(Error::Contract("couplings are not uniform".into()));
    }
    let n = spec.n();
    Ok((0..n)
        .map(|k| {
            let phi = |i: usize| es.component(i, k);
            (1..n.saturating_sub(1))
                .map(|i| {
                    let second = phi(i + 1) + phi(i - 1) - 2.0 * phi(i);
                    -j * second + (spec.onsite()[i] - 2.0 * j) * phi(i) - es.values()[k] * phi(i)
                })
                .collect()
        })
        .collect())
}

/// Sign changes along each eigenvector, ascending in energy. A component
/// with `|φ| <= 1e-12` inherits the previous nonzero sign.
pub fn node_count(es: &EigenSystem) -> Vec<usize> {
    (0..es.dim())
        .map(|k| {
            let mut last = 0.0f64;
            let mut nodes = 0;
            for i in 0..es.dim() {
                let x = es.component(i, k);
                if x.abs() <= NODE_ZERO {
                    continue;
                }
                if last != 0.0 && x.signum() != last {
                    nodes += 1;
                }
                last = x.signum();
            }
            nodes
        })
        .collect()
}

/// Raising and lowering operators in the energy eigenbasis.
#[derive(Clone, Debug)]
pub struct LadderPair {
    pub raising: DMatrix<f64>,
    pub lowering: DMatrix<f64>,
    pub gamma: f64,
    pub p: u32,
}

/// Dimensionless level index of the shifted pinched spectrum: `k` below the
/// top, `N − 2 + 1/p` for the top level.
fn pinched_levels(n: usize, p: u32) -> Vec<f64> {
    (0..n).map(|k| if k + 1 < n { k as f64 } else { (n - 2) as f64 + 1.0 / p as f64 }).collect()
}

/// Build `a†` so that it raises `|φ_k⟩ → √(γ(k+1)) |φ_{k+1}⟩` and reaches
/// the top level with amplitude `√(γ(N−2+1/p))`; `a = (a†)ᵀ`.
///
/// The spectrum in `es`, shifted so its ground state is zero, must equal
/// `γ·{0, 1, …, N−2, N−2+1/p}` to within `1e-6·γ`.
pub fn build_ladder(es: &EigenSystem, p: u32, gamma: f64) -> Result<LadderPair> {
    let n = es.dim();
    if n < 2 {
        return Err(Error::Contract("ladder operators need at least 2 levels".into()));
    }
    if p == 0 || p.is_multiple_of(2) || !(gamma > 0.0) {
        return Err(Error::Contract(format!("need odd p and positive γ, got p = {p}, γ = {gamma}")));
    }
    let ground = es.values()[0];
    let levels = pinched_levels(n, p);
    let worst = es.values().iter().zip(&levels).map(|(l, x)| (l - ground - gamma * x).abs()).fold(0.0, f64::max);
    if worst > PINCH_TOL * gamma {
        return Err(Error::Contract(format!(
            "spectrum is not pinched with p = {p}, γ = {gamma} (deviation {worst:.3e})"
        )));
    }
    let mut raising = DMatrix::zeros(n, n);
    for k in 0..n - 1 {
        raising[(k + 1, k)] = (gamma * levels[k + 1]).sqrt();
    }
    let lowering = raising.transpose();
    Ok(LadderPair { raising, lowering, gamma, p })
}

impl LadderPair {
    pub fn dim(&self) -> usize {
        self.raising.nrows()
    }

    /// `a†a`, diagonal in the eigenbasis with entries `γ·level_k`.
    pub fn number_form(&self) -> DMatrix<f64> {
        &self.raising * &self.lowering
    }

    pub fn commutator(&self) -> DMatrix<f64> {
        &self.lowering * &self.raising - &self.raising * &self.lowering
    }

    /// `γ(I − (1−1/p)|φ_{N−2}⟩⟨φ_{N−2}| − (N−1+1/p)|φ_{N−1}⟩⟨φ_{N−1}|)`.
    pub fn expected_commutator(&self) -> DMatrix<f64> {
        let n = self.dim();
        let inv_p = 1.0 / self.p as f64;
        let mut c = DMatrix::identity(n, n) * self.gamma;
        c[(n - 2, n - 2)] -= self.gamma * (1.0 - inv_p);
        c[(n - 1, n - 1)] -= self.gamma * ((n - 1) as f64 + inv_p);
        c
    }

    pub fn commutator_residual(&self) -> f64 {
        (self.commutator() - self.expected_commutator()).amax()
    }

    /// `max |(H − λ₀) − V (a†a) Vᵀ|` in the site basis.
    pub fn hamiltonian_residual(&self, h: &SymTridiagonal, es: &EigenSystem) -> f64 {
        let n = self.dim();
        let shifted = h.to_dense() - DMatrix::identity(n, n) * es.values()[0];
        let v = es.vectors();
        (shifted - v * self.number_form() * v.transpose()).amax()
    }

    /// Norm of `a†` applied to the top eigenstate (zero by construction).
    pub fn top_annihilation(&self) -> f64 {
        self.raising.column(self.dim() - 1).norm()
    }

    /// Norm of `a` applied to the ground state.
    pub fn ground_annihilation(&self) -> f64 {
        self.lowering.column(0).norm()
    }

    pub fn position(&self) -> PositionOperator {
        let x = (&self.raising + &self.lowering) * 0.5;
        // a = X + iP, a† = X − iP  =>  P = (a − a†)/(2i)
        let diff = &self.lowering - &self.raising;
        let momentum = diff.map(|d| Complex64::new(0.0, -0.5 * d));
        PositionOperator { x, momentum }
    }
}

/// Discrete position `X = (a† + a)/2` and momentum in the energy eigenbasis.
#[derive(Clone, Debug)]
pub struct PositionOperator {
    pub x: DMatrix<f64>,
    pub momentum: DMatrix<Complex64>,
}

/// Closed-form `⟨φ_j|X|φ_k⟩` with the end correction at `k = N−2`.
pub fn position_closed_form(n: usize, p: u32, gamma: f64) -> DMatrix<f64> {
    let inv_p = 1.0 / p as f64;
    let elem = |k: usize| {
        let corr = if k + 2 == n { 1.0 - inv_p } else { 0.0 };
        0.5 * gamma.sqrt() * ((k + 1) as f64 - corr).sqrt()
    };
    DMatrix::from_fn(n, n, |j, k| {
        if j == k + 1 {
            elem(k)
        } else if j + 1 == k {
            elem(j)
        } else {
            0.0
        }
    })
}

impl PositionOperator {
    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Largest entry of `X` off the first co-diagonals.
    pub fn max_beyond_tridiagonal(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                if j.abs_diff(k) != 1 {
                    worst = worst.max(self.x[(j, k)].abs());
                }
            }
        }
        worst
    }

    /// Eigenvalues of `X`, ascending, via the tridiagonal solver.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let diag = (0..n).map(|i| self.x[(i, i)]).collect();
        let off = (0..n - 1).map(|i| self.x[(i, i + 1)]).collect();
        Ok(eigendecompose(&SymTridiagonal::new(diag, off)?)?.values().to_vec())
    }
}

/// Outcome of the anticommutation and spectral pairing test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairingReport {
    pub anticommutator: f64,
    pub anticommutes: bool,
    /// `(x₊, x₋)` pairs with `x₊ > 0`, largest first.
    pub pairs: Vec<(f64, f64)>,
    pub pair_residual: f64,
    pub zero_mode: bool,
}

/// Check `{X, M} = 0` and that `X`'s eigenvalues come in `±x` pairs, with an
/// extra zero eigenvalue exactly when the dimension is odd.
pub fn pairing_check(x: &PositionOperator, mirror_eig: &DMatrix<f64>) -> Result<PairingReport> {
    let anti = (&x.x * mirror_eig + mirror_eig * &x.x).amax();
    let vals = x.eigenvalues()?;
    let n = vals.len();
    let pairs: Vec<(f64, f64)> = (0..n / 2).map(|i| (vals[n - 1 - i], vals[i])).collect();
    let pair_residual = pairs.iter().map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    let zero_mode = n % 2 == 1 && vals[n / 2].abs() <= 1e-9;
    Ok(PairingReport { anticommutator: anti, anticommutes: anti <= 1e-10, pairs, pair_residual, zero_mode })
}

/// Everything `analyze` reports for one chain.
#[derive(Clone, Debug, Serialize)]
pub struct AnalogueReport {
    pub nodes: Vec<usize>,
    pub ladder_residual: Option<f64>,
    pub commutator_residual: Option<f64>,
    pub x_pairs: Vec<(f64, f64)>,
    pub zero_mode: Option<bool>,
    pub anticommutator: Option<f64>,
    pub schrodinger_residual: Option<f64>,
    pub p: Option<u32>,
    pub gamma: Option<f64>,
    pub notes: Vec<String>,
}

/// Infer `(p, γ)` from a spectrum assumed to be pinched: `γ` from the
/// lowest gap, `p` from the ratio to the top gap.
pub fn infer_pinch(values: &[f64]) -> Option<(u32, f64)> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let gamma = values[1] - values[0];
    let top = values[n - 1] - values[n - 2];
    let ratio = gamma / top;
    if !(ratio.is_finite() && ratio >= 0.5) {
        return None;
    }
    let p = ratio.round() as u32;
    (p % 2 == 1).then_some((p, gamma))
}

/// Run every diagnostic that applies to `spec`. Steps whose preconditions
/// fail are skipped with a note instead of aborting the report.
pub fn analyze(spec: &ChainSpec, pinch: Option<(u32, f64)>) -> Result<AnalogueReport> {
    let h = build_hamiltonian(spec);
    let es = eigendecompose(&h)?;
    let mut notes = Vec::new();

    let schrodinger_residual = match schrodinger_residual(spec, &es) {
        Ok(rows) => Some(rows.iter().flatten().fold(0.0f64, |m, r| m.max(r.abs()))),
        Err(e) => {
            notes.push(format!("schrodinger: {e}"));
            None
        }
    };

    let mut report = AnalogueReport {
        nodes: node_count(&es),
        ladder_residual: None,
        commutator_residual: None,
        x_pairs: vec![],
        zero_mode: None,
        anticommutator: None,
        schrodinger_residual,
        p: None,
        gamma: None,
        notes,
    };

    let Some((p, gamma)) = pinch.or_else(|| infer_pinch(es.values())) else {
        report.notes.push("ladder: spectrum is not of pinched form".into());
        return Ok(report);
    };
    report.p = Some(p);
    report.gamma = Some(gamma);
    let ladder = match build_ladder(&es, p, gamma) {
        Ok(l) => l,
        Err(e) => {
            report.notes.push(format!("ladder: {e}"));
            return Ok(report);
        }
    };
    report.ladder_residual = Some(ladder.hamiltonian_residual(&h, &es));
    report.commutator_residual = Some(ladder.commutator_residual());

    let mirror = MirrorOperator::new(spec.n()).in_eigenbasis(&es);
    let pairing = pairing_check(&ladder.position(), &mirror)?;
    report.x_pairs = pairing.pairs;
    report.zero_mode = Some(pairing.zero_mode);
    report.anticommutator = Some(pairing.anticommutator);
    Ok(report)
}

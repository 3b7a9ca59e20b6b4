//! Pinched spectra, the odd-integer gap condition for perfect transfer, and
//! snapping near-miss spectra onto the pinched family.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default PST tolerance, relative to the mean gap.
pub const PST_TOL: f64 = 1e-9;
/// Looser tolerance used to classify quasi-perfect spectra.
pub const DIAGNOSTIC_TOL: f64 = 1e-3;
/// Odd divisors `2m - 1` of the minimal gap tried by the detector.
pub const MAX_DIVISOR_INDEX: u64 = 31;

#[derive(Deserialize)]
struct RawSpectrum {
    values: Vec<f64>,
    #[serde(default)]
    p: Option<u32>,
    #[serde(default)]
    t_m: Option<f64>,
}

/// Strictly ascending eigenvalue list with optional pinch metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum")]
pub struct Spectrum {
    values: Vec<f64>,
    p: Option<u32>,
    t_m: Option<f64>,
}

impl TryFrom<RawSpectrum> for Spectrum {
    type Error = Error;

    fn try_from(raw: RawSpectrum) -> Result<Self> {
        let mut s = Spectrum::new(raw.values)?;
        s.p = raw.p;
        s.t_m = raw.t_m;
        Ok(s)
    }
}

impl Spectrum {
    /// Sorts `values` ascending and rejects repeats.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Structural("spectrum is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Structural("non-finite eigenvalue".into()));
        }
        values.sort_by(f64::total_cmp);
        if let Some(w) = values.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Contract(format!("repeated eigenvalue {}", w[0])));
        }
        Ok(Self { values, p: None, t_m: None })
    }

    pub fn with_metadata(mut self, p: u32, t_m: f64) -> Self {
        self.p = Some(p);
        self.t_m = Some(t_m);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn p(&self) -> Option<u32> {
        self.p
    }

    pub fn t_m(&self) -> Option<f64> {
        self.t_m
    }

    /// Equal spacing `2α` of a pinched spectrum, recovered from `p` and `t_m`.
    pub fn base_spacing(&self) -> Option<f64> {
        Some(self.p? as f64 * PI / self.t_m?)
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn range(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }

    /// Every eigenvalue moved by `c`; metadata is shift-invariant.
    pub fn shifted(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v + c).collect(), ..self.clone() }
    }
}

/// Parameters of a pinched spectrum: `n` levels spaced `2α`, the top gap
/// compressed to `2α/p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchSpec {
    pub n: usize,
    pub p: u32,
    pub alpha: f64,
}

fn require_odd(p: u32) -> Result<()> {
    if p == 0 || p.is_multiple_of(2) {
        return Err(Error::Contract(format!("pinch p must be an odd positive integer, got {p}")));
    }
    Ok(())
}

/// Centered equidistant levels with a pinched top gap; `t_m = pπ/(2α)`.
pub fn pinched_spectrum(ps: PinchSpec) -> Result<Spectrum> {
    require_odd(ps.p)?;
    if ps.n < 2 {
        return Err(Error::Contract(format!("pinched spectrum needs n >= 2, got {}", ps.n)));
    }
    if !(ps.alpha > 0.0 && ps.alpha.is_finite()) {
        return Err(Error::Contract(format!("alpha must be positive, got {}", ps.alpha)));
    }
    let n = ps.n as f64;
    let mut values: Vec<f64> = (1..ps.n).map(|k| ps.alpha * ((1.0 - n) + 2.0 * (k as f64 - 1.0))).collect();
    let top = values[ps.n - 2] + 2.0 * ps.alpha / ps.p as f64;
    values.push(top);
    let t_m = ps.p as f64 * PI / (2.0 * ps.alpha);
    Ok(Spectrum::new(values)?.with_metadata(ps.p, t_m))
}

/// Outcome of the odd-integer gap test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PstCheck {
    pub valid: bool,
    /// Common gap unit `Δ = π / t_m`.
    pub delta: f64,
    pub t_m: f64,
    /// Odd multiplier for each consecutive gap.
    pub odd_integers: Vec<u64>,
    /// `max |gap − QΔ|` divided by the mean gap.
    pub residual: f64,
}

fn nearest_odd(x: f64) -> u64 {
    let k = ((x - 1.0) / 2.0).round().max(0.0);
    2 * k as u64 + 1
}

/// Search for the largest `Δ = g/(2m−1)`, `g` the minimal gap, that makes
/// every gap an odd multiple of `Δ` within `tol` (relative to the mean gap).
///
/// When nothing passes, the best-scoring candidate is reported as invalid.
pub fn check_pst_condition(s: &Spectrum, tol: f64) -> PstCheck {
    let gaps = s.gaps();
    if gaps.is_empty() {
        return PstCheck {
            valid: false,
            delta: f64::NAN,
            t_m: f64::NAN,
            odd_integers: vec![],
            residual: f64::INFINITY,
        };
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let g = gaps.iter().copied().fold(f64::INFINITY, f64::min);

    let score = |delta: f64| -> (Vec<u64>, f64) {
        let qs: Vec<u64> = gaps.iter().map(|x| nearest_odd(x / delta)).collect();
        let r = gaps.iter().zip(&qs).map(|(x, &q)| (x - q as f64 * delta).abs()).fold(0.0, f64::max) / mean;
        (qs, r)
    };

    let mut best: Option<(f64, Vec<u64>, f64)> = None;
    for m in 1..=MAX_DIVISOR_INDEX {
        let delta = g / (2 * m - 1) as f64;
        let (qs, r) = score(delta);
        if r <= tol {
            return PstCheck { valid: true, delta, t_m: PI / delta, odd_integers: qs, residual: r };
        }
        if best.as_ref().is_none_or(|b| r < b.2) {
            best = Some((delta, qs, r));
        }
    }
    let (delta, odd_integers, residual) = best.expect("at least one candidate scored");
    PstCheck { valid: false, delta, t_m: PI / delta, odd_integers, residual }
}

/// Least-squares projection onto `{λ₀ + γk (k < N−1), λ₀ + γ(N−2) + γ/p}`.
pub fn snap_to_pst(s: &Spectrum, p: u32) -> Result<Spectrum> {
    require_odd(p)?;
    let n = s.len();
    if n < 3 {
        return Err(Error::Contract(format!("snapping needs at least 3 levels, got {n}")));
    }
    let pinch = 1.0 / p as f64;
    let x: Vec<f64> = (0..n).map(|k| if k + 1 < n { k as f64 } else { (n - 2) as f64 + pinch }).collect();
    let y = s.values();
    let nf = n as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = nf * sxx - sx * sx;
    let gamma = (nf * sxy - sx * sy) / det;
    let base = (sy - gamma * sx) / nf;
    if !(gamma > 0.0) {
        return Err(Error::Contract(format!("degenerate pinched fit (spacing {gamma:.3e})")));
    }
    let values = x.iter().map(|xk| base + gamma * xk).collect();
    let t_m = p as f64 * PI / gamma;
    Ok(Spectrum::new(values)?.with_metadata(p, t_m))
}

/// True when `λ_k + λ_{N−1−k}` is the same for every `k` within `tol`.
pub fn spectral_symmetry_check(s: &Spectrum, tol: f64) -> bool {
    let v = s.values();
    let n = v.len();
    let centre = v[0] + v[n - 1];
    (0..n).all(|k| (v[k] + v[n - 1 - k] - centre).abs() <= tol)
}

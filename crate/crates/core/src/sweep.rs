//! Coupling-spread statistics of reconstructed PST chains across chain
//! length and pinch, and the engineered `√(i(N−i))` coupling model used as
//! a reference.

use serde::Serialize;

use crate::chain::{build_hamiltonian, ChainSpec, SignConvention};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::inverse::reconstruct;
use crate::spectra::{pinched_spectrum, PinchSpec};
use crate::tridiag::eigendecompose;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingStats {
    pub mean: f64,
    /// Population standard deviation of the coupling magnitudes.
    pub std_dev: f64,
    /// `(J_max − J_min) / J_max`.
    pub max_rel_spread: f64,
}

fn population_std(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn coupling_statistics(spec: &ChainSpec) -> CouplingStats {
    let mags: Vec<f64> = spec.couplings().iter().map(|j| j.abs()).collect();
    let mean = mags.iter().sum::<f64>() / mags.len() as f64;
    let max = mags.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    CouplingStats { mean, std_dev: population_std(&mags), max_rel_spread: (max - min) / max }
}

/// `J_{i,i+1} = J₀ √((N−i)·i)` with zero on-site energies.
pub fn christandl_chain(n: usize, j0: f64) -> Result<ChainSpec> {
    if n < 2 {
        return Err(Error::Contract(format!("need n >= 2, got {n}")));
    }
    if !(j0 > 0.0 && j0.is_finite()) {
        return Err(Error::Contract(format!("J0 must be positive, got {j0}")));
    }
    let couplings = (1..n).map(|i| j0 * (((n - i) * i) as f64).sqrt()).collect();
    ChainSpec::new(vec![0.0; n], couplings, SignConvention::Negative)
}

/// One `(N, p)` cell of a deviation sweep. Failed reconstructions keep
/// `NaN` statistics and carry the error text.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub p: u32,
    pub std_j: f64,
    pub max_rel_spread_j: f64,
    pub std_eps: f64,
    pub roundtrip_err: f64,
    pub error: Option<String>,
}

fn sweep_point(n: usize, p: u32, alpha: f64) -> SweepPoint {
    let run = || -> Result<SweepPoint> {
        let s = pinched_spectrum(PinchSpec { n, p, alpha })?;
        let chain = reconstruct(&s)?;
        let stats = coupling_statistics(&chain);
        let es = eigendecompose(&build_hamiltonian(&chain))?;
        let roundtrip_err = s.values().iter().zip(es.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(SweepPoint {
            n,
            p,
            std_j: stats.std_dev,
            max_rel_spread_j: stats.max_rel_spread,
            std_eps: population_std(chain.onsite()),
            roundtrip_err,
            error: None,
        })
    };
    run().unwrap_or_else(|e| SweepPoint {
        n,
        p,
        std_j: f64::NAN,
        max_rel_spread_j: f64::NAN,
        std_eps: f64::NAN,
        roundtrip_err: f64::NAN,
        error: Some(e.to_string()),
    })
}

/// Reconstruct the pinched chain for every `(N, p)` and collect statistics,
/// ordered by `N` then `p`.
pub fn deviation_sweep(
    n_range: std::ops::RangeInclusive<usize>,
    p_set: &[u32],
    alpha: f64,
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    if let Some(p) = p_set.iter().find(|&&p| p == 0 || p % 2 == 0) {
        return Err(Error::Contract(format!("pinch values must be odd, got {p}")));
    }
    if *n_range.start() < 2 {
        return Err(Error::Contract("sweep needs N >= 2".into()));
    }
    let mut p_sorted = p_set.to_vec();
    p_sorted.sort_unstable();
    p_sorted.dedup();
    let cells: Vec<(usize, u32)> = n_range.flat_map(|n| p_sorted.iter().map(move |&p| (n, p))).collect();
    Ok(map_slice(&cells, exec, |&(n, p)| sweep_point(n, p, alpha)))
}

/// `N,p,std_J,max_rel_spread_J,std_eps,roundtrip_err` rows.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("N,p,std_J,max_rel_spread_J,std_eps,roundtrip_err\n");
    for pt in points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            pt.n, pt.p, pt.std_j, pt.max_rel_spread_j, pt.std_eps, pt.roundtrip_err
        ));
    }
    out
}

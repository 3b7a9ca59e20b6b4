//! Single-excitation time evolution by spectral decomposition, transfer and
//! average fidelities, and peak bookkeeping over long windows.
//!
//! Time arguments of [`propagate`] and friends are raw times `t` (ħ = 1).
//! Traces and peak records use the dimensionless axis `τ = t·J_max`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::EigenSystem;

/// Local maxima below this transfer fidelity are not recorded as peaks.
pub const PEAK_FLOOR: f64 = 0.5;
/// Grid density: samples per 50 dimensionless time units.
pub const SAMPLES_PER_50: usize = 10_000;
/// Golden-section refinement stops once the bracket is this narrow (in τ).
pub const REFINE_TOL: f64 = 1e-6;

/// Recompute phasors exactly after this many incremental rotations.
const RESYNC_EVERY: usize = 512;

/// The site-1 to site-N transition amplitude `a_{1,N}(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionAmplitude(pub Complex64);

impl TransitionAmplitude {
    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    /// The phase `ν = arg(a)` that an optimal global field would cancel.
    pub fn phase(&self) -> f64 {
        self.0.arg()
    }

    pub fn fidelity(&self) -> f64 {
        self.0.norm_sqr()
    }
}

/// Amplitudes `c_j(t) = Σ_k φ_k(j) e^{−iλ_k t} φ_k(initial)` over all sites.
pub fn propagate(es: &EigenSystem, initial_site: usize, t: f64) -> Vec<Complex64> {
    let n = es.dim();
    assert!(initial_site < n, "initial site {initial_site} out of range for {n} sites");
    let phases: Vec<Complex64> = es
        .values()
        .iter()
        .zip(es.vectors().row(initial_site).iter())
        .map(|(&lam, &c0)| Complex64::from_polar(c0, -lam * t))
        .collect();
    (0..n).map(|j| es.vectors().row(j).iter().zip(&phases).map(|(&v, &ph)| ph * v).sum()).collect()
}

/// Endpoint overlap weights `φ_k(1)·φ_k(N)`.
fn endpoint_weights(es: &EigenSystem) -> Vec<f64> {
    let last = es.dim() - 1;
    (0..es.dim()).map(|k| es.component(0, k) * es.component(last, k)).collect()
}

pub fn transition_amplitude(es: &EigenSystem, t: f64) -> TransitionAmplitude {
    let w = endpoint_weights(es);
    TransitionAmplitude(es.values().iter().zip(&w).map(|(&lam, &wk)| Complex64::from_polar(wk, -lam * t)).sum())
}

/// `F(t) = |⟨N|e^{−iHt}|1⟩|²`.
pub fn transfer_fidelity(es: &EigenSystem, t: f64) -> f64 {
    transition_amplitude(es, t).fidelity()
}

/// Bloch-sphere average fidelity with the phase optimally cancelled:
/// `|a|/3 + |a|²/6 + 1/2` where `|a|² = F`.
pub fn average_fidelity(transfer: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&transfer) {
        return Err(Error::Contract(format!("transfer fidelity {transfer} outside [0, 1]")));
    }
    let f = transfer.clamp(0.0, 1.0);
    let a = f.sqrt();
    Ok(a / 3.0 + f / 6.0 + 0.5)
}

/// A transfer-fidelity maximum at dimensionless time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub t: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

/// Uniformly sampled fidelities over `[0, window]` in units of `t·J_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityTrace {
    pub j_max: f64,
    pub times: Vec<f64>,
    pub transfer: Vec<f64>,
    pub average: Vec<f64>,
    pub peaks: Vec<Peak>,
}

/// Grid size giving [`SAMPLES_PER_50`] samples per 50 time units.
pub fn default_samples(window: f64) -> usize {
    ((window / 50.0) * SAMPLES_PER_50 as f64).ceil().max(2.0) as usize + 1
}

/// Transfer fidelity on a uniform grid of `samples` points over
/// `[0, t_end]` (raw time), using incrementally rotated phasors.
fn sample_transfer(es: &EigenSystem, t_end: f64, samples: usize) -> Vec<f64> {
    let w = endpoint_weights(es);
    let dt = t_end / (samples - 1) as f64;
    let steps: Vec<Complex64> = es.values().iter().map(|&l| Complex64::from_polar(1.0, -l * dt)).collect();
    let mut z: Vec<Complex64> = w.iter().map(|&wk| Complex64::new(wk, 0.0)).collect();
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        if i > 0 {
            if i % RESYNC_EVERY == 0 {
                let t = i as f64 * dt;
                for ((zk, &wk), &lam) in z.iter_mut().zip(&w).zip(es.values()) {
                    *zk = Complex64::from_polar(wk, -lam * t);
                }
            } else {
                for (zk, s) in z.iter_mut().zip(&steps) {
                    *zk *= s;
                }
            }
        }
        out.push(z.iter().sum::<Complex64>().norm_sqr());
    }
    out
}

/// Golden-section maximization of `F(τ/j_max)` on `[lo, hi]`.
fn refine_peak(es: &EigenSystem, j_max: f64, mut lo: f64, mut hi: f64) -> Peak {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |tau: f64| transfer_fidelity(es, tau / j_max);
    let mut c = hi - invphi * (hi - lo);
    let mut d = lo + invphi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > REFINE_TOL {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
    }
    let t = 0.5 * (lo + hi);
    Peak { t, f: f(t) }
}

fn check_trace_args(es: &EigenSystem, j_max: f64, window: f64, samples: usize) -> Result<()> {
    if es.dim() < 2 {
        return Err(Error::Contract("fidelity traces need at least 2 sites".into()));
    }
    if samples < 2 {
        return Err(Error::Contract(format!("need at least 2 samples, got {samples}")));
    }
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Contract(format!("window must be positive, got {window}")));
    }
    if !(j_max > 0.0 && j_max.is_finite()) {
        return Err(Error::Contract(format!("J_max must be positive, got {j_max}")));
    }
    Ok(())
}

/// Refine grid index `i` into a peak, clamping brackets to the window.
fn refined_at(es: &EigenSystem, j_max: f64, times: &[f64], values: &[f64], i: usize) -> Peak {
    let last = times.len() - 1;
    if i == 0 || i == last {
        return Peak { t: times[i], f: values[i] };
    }
    let p = refine_peak(es, j_max, times[i - 1], times[i + 1]);
    // Never report worse than the grid sample it came from.
    if p.f >= values[i] {
        p
    } else {
        Peak { t: times[i], f: values[i] }
    }
}

/// Sample `F` and `⟨F_av⟩` over `[0, window]` (units of `t·J_max`) and
/// collect refined local maxima above [`PEAK_FLOOR`].
pub fn trace(es: &EigenSystem, j_max: f64, window: f64, samples: usize) -> Result<FidelityTrace> {
    check_trace_args(es, j_max, window, samples)?;
    let transfer = sample_transfer(es, window / j_max, samples);
    let times: Vec<f64> = (0..samples).map(|i| window * i as f64 / (samples - 1) as f64).collect();
    let average = transfer.iter().map(|&f| average_fidelity(f.min(1.0))).collect::<Result<Vec<_>>>()?;
    let peaks = (1..samples - 1)
        .filter(|&i| transfer[i] >= PEAK_FLOOR && transfer[i] > transfer[i - 1] && transfer[i] >= transfer[i + 1])
        .map(|i| refined_at(es, j_max, &times, &transfer, i))
        .collect();
    Ok(FidelityTrace { j_max, times, transfer, average, peaks })
}

/// Ties closer than this are resolved in favour of the earlier time.
const TIE_TOL: f64 = 1e-12;

/// Index of the first value that no later value exceeds by more than
/// [`TIE_TOL`].
fn earliest_max(values: impl Iterator<Item = f64>) -> usize {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv + TIE_TOL { (i, v) } else { (bi, bv) })
        .0
}

/// Best transfer fidelity over `[0, window]` (units of `t·J_max`), refined.
pub fn max_fidelity(es: &EigenSystem, j_max: f64, window: f64, samples: usize) -> Result<Peak> {
    check_trace_args(es, j_max, window, samples)?;
    let values = sample_transfer(es, window / j_max, samples);
    let i = earliest_max(values.iter().copied());
    let times: Vec<f64> = (0..samples).map(|k| window * k as f64 / (samples - 1) as f64).collect();
    Ok(refined_at(es, j_max, &times, &values, i))
}

/// Largest peak inside each bin `[2m·period, (2m+2)·period)` that lies
/// completely inside `window`.
///
/// With `period` equal to the (quasi-)mirror time, each bin is centred on
/// one mirroring event, so the result is the revival envelope.
pub fn revival_envelope(peaks: &[Peak], period: f64, window: f64) -> Vec<Peak> {
    let bins = (window / (2.0 * period)).floor() as usize;
    (0..bins)
        .filter_map(|m| {
            let lo = 2.0 * m as f64 * period;
            let hi = lo + 2.0 * period;
            peaks.iter().filter(|p| p.t >= lo && p.t < hi).copied().max_by(|a, b| a.f.total_cmp(&b.f))
        })
        .collect()
}

impl FidelityTrace {
    /// Highest peak; the earliest one wins among (numerically) equal peaks.
    pub fn max_peak(&self) -> Option<Peak> {
        if self.peaks.is_empty() {
            return None;
        }
        Some(self.peaks[earliest_max(self.peaks.iter().map(|p| p.f))])
    }

    /// CSV with header `t_Jmax,F,Fav`, or `t,F,Fav` when `raw_time` is set.
    pub fn to_csv(&self, raw_time: bool) -> String {
        let mut out = String::with_capacity(self.times.len() * 48);
        out.push_str(if raw_time { "t,F,Fav\n" } else { "t_Jmax,F,Fav\n" });
        for ((t, f), a) in self.times.iter().zip(&self.transfer).zip(&self.average) {
            let t = if raw_time { t / self.j_max } else { *t };
            out.push_str(&format!("{t},{f},{a}\n"));
        }
        out
    }

    /// `{"peaks": [{"t": .., "F": ..}]}`.
    pub fn peaks_json(&self, raw_time: bool) -> serde_json::Value {
        let scale = if raw_time { 1.0 / self.j_max } else { 1.0 };
        let peaks: Vec<Peak> = self.peaks.iter().map(|p| Peak { t: p.t * scale, f: p.f }).collect();
        serde_json::json!({ "peaks": peaks })
    }
}

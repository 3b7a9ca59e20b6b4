//! Real symmetric tridiagonal matrices and their eigendecomposition.
//!
//! The solver is the implicit QL iteration with a Wilkinson-type shift,
//! accumulating the plane rotations into the eigenvector matrix. It is
//! exact enough for the chain sizes this crate cares about (a few hundred
//! sites) and has no dependency on LAPACK.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sweep budget per dimension before the QL iteration gives up.
pub const ITERATIONS_PER_DIM: usize = 30;

/// Components below this magnitude are treated as zero when fixing
/// eigenvector signs.
const SIGN_FLOOR: f64 = 1e-14;

/// Diagonal plus first co-diagonal of a real symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Structural("tridiagonal matrix must be at least 1x1".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::Structural(format!(
                "co-diagonal has {} entries, expected {}",
                off.len(),
                diag.len() - 1
            )));
        }
        if diag.iter().chain(off.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Structural("non-finite matrix entry".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &b) in self.off.iter().enumerate() {
            m[(i, i + 1)] = b;
            m[(i + 1, i)] = b;
        }
        m
    }

    /// Matrix-vector product without densifying.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "vector length must match matrix dimension");
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for (i, &b) in self.off.iter().enumerate() {
            y[i] += b * x[i + 1];
            y[i + 1] += b * x[i];
        }
        y
    }

    /// Largest absolute row sum (the induced infinity norm).
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EigenSystem {
    /// Assemble from raw parts. Columns of `vectors` are the eigenvectors.
    pub fn from_parts(values: Vec<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != values.len() || vectors.ncols() != values.len() {
            return Err(Error::Structural("eigenvector matrix shape does not match values".into()));
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Eigenvector `k` as an owned vector over sites.
    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    /// Amplitude of eigenvector `k` on `site` (both 0-based).
    pub fn component(&self, site: usize, k: usize) -> f64 {
        self.vectors[(site, k)]
    }

    /// `max |V Vᵀ - I|` over all entries.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        let g = &self.vectors * self.vectors.transpose();
        (g - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// Largest eigenpair residual `‖H φ_k − λ_k φ_k‖₂` against `h`.
    pub fn max_residual(&self, h: &SymTridiagonal) -> f64 {
        (0..self.dim())
            .map(|k| {
                let v: Vec<f64> = self.vectors.column(k).iter().copied().collect();
                let hv = h.apply(&v);
                hv.iter().zip(&v).map(|(a, b)| (a - self.values[k] * b).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Diagonalize a symmetric tridiagonal matrix.
///
/// Eigenvectors are normalized and signed so their first component with
/// magnitude above `1e-14` is positive.
pub fn eigendecompose(h: &SymTridiagonal) -> Result<EigenSystem> {
    let n = h.dim();
    let mut d = h.diag.clone();
    let mut e = h.off.clone();
    e.push(0.0);
    let mut z = DMatrix::<f64>::identity(n, n);

    let cap = ITERATIONS_PER_DIM * n.max(1);
    let mut total = 0usize;

    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            total += 1;
            if total > cap {
                return Err(Error::Numerical(format!(
                    "QL iteration did not converge within {cap} sweeps; diag = {:?}, off = {:?}",
                    h.diag, h.off
                )));
            }

            // Shift from the leading 2x2 block, chosen toward d[l].
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zf = z[(k, i + 1)];
                    let zi = z[(k, i)];
                    z[(k, i + 1)] = s * zi + c * zf;
                    z[(k, i)] = c * zi - s * zf;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = z.column(k).into_owned();
        let norm = v.norm();
        v /= norm;
        if let Some(first) = v.iter().find(|x| x.abs() > SIGN_FLOOR) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(col, &v);
    }
    Ok(EigenSystem { values, vectors })
}

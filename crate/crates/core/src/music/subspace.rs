use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sample covariance `(1/K) sum x x^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub values: DMatrix<Complex64>,
    pub snapshot_count: usize,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.values[(i, i)].re).sum()
    }

    /// Largest `|R - R^H|` entry.
    pub fn hermitian_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `R + eps * trace(R) * I`.
    pub fn regularized(&self, eps: f64) -> Self {
        let load = eps * self.trace();
        let mut values = self.values.clone();
        for i in 0..self.dim() {
            values[(i, i)] += load;
        }
        Self { values, snapshot_count: self.snapshot_count }
    }
}

pub fn covariance(snapshots: &[Vec<Complex64>]) -> Result<CovarianceMatrix> {
    let Some(first) = snapshots.first() else {
        return Err(Error::input("covariance needs at least one snapshot"));
    };
    let n = first.len();
    if n == 0 || snapshots.iter().any(|s| s.len() != n) {
        return Err(Error::input("snapshots must be non-empty and of equal length"));
    }
    let flat: Vec<Complex64> = snapshots.iter().flatten().copied().collect();
    Ok(covariance_flat(&flat, n))
}

/// Covariance of snapshots stored back to back, `n` values each. Only the
/// lower triangle is accumulated; the upper is its mirror, so the result
/// is Hermitian exactly.
pub(crate) fn covariance_flat(flat: &[Complex64], n: usize) -> CovarianceMatrix {
    let k = flat.len() / n;
    let mut acc = vec![Complex64::default(); n * n];
    for x in flat.chunks_exact(n) {
        for i in 0..n {
            let xi = x[i];
            let row = &mut acc[i * n..i * n + i + 1];
            for (r, xj) in row.iter_mut().zip(&x[..=i]) {
                *r += xi * xj.conj();
            }
        }
    }
    let scale = 1.0 / k.max(1) as f64;
    let values =
        DMatrix::from_fn(n, n, |i, j| if j <= i { acc[i * n + j] * scale } else { (acc[j * n + i] * scale).conj() });
    // The diagonal of x x^H is real; drop rounding residue in the imaginary part.
    let mut values = values;
    for i in 0..n {
        values[(i, i)].im = 0.0;
    }
    CovarianceMatrix { values, snapshot_count: k }
}

/// Orthonormal basis of the `n - n_sources` eigenvectors with the smallest
/// eigenvalues, from a dense Hermitian eigendecomposition.
pub fn noise_subspace(cov: &CovarianceMatrix, n_sources: usize) -> Result<DMatrix<Complex64>> {
    let n = cov.dim();
    if n_sources == 0 || n_sources >= n {
        return Err(Error::input(format!("n_sources must lie in 1..{n}, got {n_sources}")));
    }
    let eig = SymmetricEigen::new(cov.values.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let q = n - n_sources;
    Ok(DMatrix::from_fn(n, q, |i, j| eig.eigenvectors[(i, order[j])]))
}

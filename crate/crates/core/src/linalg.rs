//! Small dense linear-algebra helpers shared by the geometry and PSS code.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::rng;

/// `max |BᵀB - I|` over all entries.
pub fn orthogonality_deviation(b: &DMatrix<f64>) -> f64 {
    let gram = b.transpose() * b;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Same as [`orthogonality_deviation`] for a list of vectors.
pub fn gram_deviation(vectors: &[DVector<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.dot(b) - target).abs());
        }
    }
    worst
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `diag(R)` folded into `Q`.
pub fn haar_orthogonal<R: Rng>(rng: &mut R, m: usize) -> DMatrix<f64> {
    loop {
        let g = rng::gaussian_matrix(rng, m, m);
        let qr = g.qr();
        let r = qr.r();
        if (0..m).any(|i| r[(i, i)].abs() < 1e-12) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..m {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        return q;
    }
}

/// Removes the components of `v` along the orthonormal vectors `basis`,
/// twice for stability.
pub fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// A unit vector orthogonal to the orthonormal set `basis` in `R^dim`
/// (requires `basis.len() < dim`). Picks the coordinate axis with the largest
/// residual so the result is deterministic.
pub fn complement_vector(basis: &[DVector<f64>], dim: usize) -> DVector<f64> {
    let mut best: Option<DVector<f64>> = None;
    let mut best_norm = -1.0;
    for j in 0..dim {
        let mut r = DVector::zeros(dim);
        r[j] = 1.0;
        orthogonalize(&mut r, basis);
        let norm = r.norm();
        if norm > best_norm + 1e-12 {
            best_norm = norm;
            best = Some(r);
        }
    }
    let r = best.expect("dim >= 1");
    let norm = r.norm();
    r / norm
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_matrices_are_orthogonal() {
        let mut r = rng::stream(5);
        for m in 1..8 {
            let q = haar_orthogonal(&mut r, m);
            assert!(orthogonality_deviation(&q) < 1e-12);
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let q1 = DVector::from_vec(vec![1.0, 1.0, 0.0]) / 2f64.sqrt();
        let q2 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let c = complement_vector(&[q1.clone(), q2.clone()], 3);
        assert!(c.dot(&q1).abs() < 1e-15);
        assert!(c.dot(&q2).abs() < 1e-15);
        assert!((c.norm() - 1.0).abs() < 1e-15);
    }
}

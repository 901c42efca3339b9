//! Inverse eigenvalue problem for Jacobi matrices.

use nalgebra::DVector;

use super::{SpectralData, TomographyError};
use crate::linalg::SymTridiagonal;

/// Smallest eigenvalue gap for which the reconstruction is unique.
pub const MIN_EIGENVALUE_GAP: f64 = 1e-10;

/// Spectral data `(E_j, w_j)` of a Jacobi matrix, with `w_j` the squared
/// first components of its eigenvectors.
pub fn spectral_data(band: &SymTridiagonal) -> SpectralData {
    let (eigenvalues, vectors) = band.eigen();
    let weights = vectors.row(0).iter().map(|x| x * x).collect();
    SpectralData {
        eigenvalues,
        weights,
    }
}

/// The unique Jacobi matrix (positive off-diagonals) with spectral data
/// `sd`.
///
/// Runs Lanczos on `diag(E)` from the start vector `(√w_j)`, with full
/// reorthogonalisation so the recurrence stays accurate when weights are
/// small.
pub fn jacobi_reconstruct(sd: &SpectralData) -> Result<SymTridiagonal, TomographyError> {
    let n = sd.eigenvalues.len();
    if n == 0 || sd.weights.len() != n {
        return Err(TomographyError::InvalidSpectralData(format!(
            "{} eigenvalues and {} weights",
            n,
            sd.weights.len()
        )));
    }
    let mut sorted = sd.eigenvalues.clone();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[1] - w[0] < MIN_EIGENVALUE_GAP) {
        return Err(TomographyError::RepeatedEigenvalue { value: w[0] });
    }
    if let Some(j) = sd.weights.iter().position(|&w| w.is_nan() || w <= 0.0) {
        return Err(TomographyError::ZeroWeight {
            index: j,
            weight: sd.weights[j],
        });
    }

    let e = DVector::from_column_slice(&sd.eigenvalues);
    let total: f64 = sd.weights.iter().sum();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut q = DVector::from_iterator(n, sd.weights.iter().map(|w| (w / total).sqrt()));
    let mut diagonal = Vec::with_capacity(n);
    let mut off_diagonal = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let aq = e.component_mul(&q);
        let alpha = q.dot(&aq);
        diagonal.push(alpha);
        basis.push(q.clone());
        if k + 1 == n {
            break;
        }
        let mut r = aq;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
        }
        let beta = r.norm();
        if beta <= f64::EPSILON * e.amax().max(1.0) {
            return Err(TomographyError::Numerical(format!(
                "Lanczos breakdown at step {}",
                k + 1
            )));
        }
        off_diagonal.push(beta);
        q = r / beta;
    }
    Ok(SymTridiagonal::new(diagonal, off_diagonal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_inverse() {
        let sd = SpectralData {
            eigenvalues: vec![0.5, 1.5],
            weights: vec![0.5, 0.5],
        };
        let j = jacobi_reconstruct(&sd).unwrap();
        assert!((j.diagonal[0] - 1.0).abs() < 1e-14 && (j.diagonal[1] - 1.0).abs() < 1e-14);
        assert!((j.off_diagonal[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn single_site() {
        let j = jacobi_reconstruct(&SpectralData {
            eigenvalues: vec![2.5],
            weights: vec![1.0],
        })
        .unwrap();
        assert_eq!(j.diagonal, vec![2.5]);
        assert!(j.off_diagonal.is_empty());
    }

    #[test]
    fn rejects_degenerate_data() {
        let repeated = SpectralData {
            eigenvalues: vec![1.0, 1.0 + 1e-12],
            weights: vec![0.5, 0.5],
        };
        assert!(matches!(
            jacobi_reconstruct(&repeated),
            Err(TomographyError::RepeatedEigenvalue { .. })
        ));
        let zero = SpectralData {
            eigenvalues: vec![1.0, 2.0],
            weights: vec![1.0, 0.0],
        };
        assert!(matches!(
            jacobi_reconstruct(&zero),
            Err(TomographyError::ZeroWeight { index: 1, .. })
        ));
    }

    #[test]
    fn forward_then_inverse() {
        let band = SymTridiagonal::new(vec![0.3, -1.2, 1.7, 0.0], vec![0.4, 1.9, 0.25]);
        let back = jacobi_reconstruct(&spectral_data(&band)).unwrap();
        for (a, b) in back.diagonal.iter().zip(&band.diagonal) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in back.off_diagonal.iter().zip(&band.off_diagonal) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

//! Dense numerical backbone: Hermitian eigendecomposition, propagation by
//! `exp(i·sign·H·t)`, Kronecker products and real symmetric tridiagonal
//! matrices.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Largest number of entries a Kronecker product may allocate.
pub const KRON_ENTRY_LIMIT: usize = 1 << 26;

/// Components below this magnitude are skipped when fixing eigenvector phases.
const PHASE_FIX_THRESHOLD: f64 = 1e-12;

/// Relative Hermiticity defect accepted by [`eig_hermitian`].
const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |H - H^dagger| = {defect:e}")]
    NotHermitian { defect: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Kronecker product {rows}x{cols} exceeds the {limit}-entry limit")]
    TooLarge {
        rows: usize,
        cols: usize,
        limit: usize,
    },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max |H - H^dagger|`.
pub fn hermiticity_defect(h: &DMatrix<C64>) -> f64 {
    let (rows, cols) = h.shape();
    if rows != cols {
        return f64::INFINITY;
    }
    let mut defect: f64 = 0.0;
    for i in 0..rows {
        for j in i..cols {
            defect = defect.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    defect
}

/// `max |U^dagger U - I|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let gram = u.adjoint() * u;
    max_abs_diff(&gram, &DMatrix::identity(u.nrows(), u.ncols()))
}

/// Standard Kronecker product with an allocation guard.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<DMatrix<C64>, LinalgError> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r.checked_mul(c).is_some_and(|e| e <= KRON_ENTRY_LIMIT) => {
            Ok(a.kronecker(b))
        }
        _ => Err(LinalgError::TooLarge {
            rows: a.nrows().saturating_mul(b.nrows()),
            cols: a.ncols().saturating_mul(b.ncols()),
            limit: KRON_ENTRY_LIMIT,
        }),
    }
}

/// Full spectral decomposition `H = V diag(λ) V†` of a Hermitian matrix.
///
/// Eigenvalues are ascending. Each eigenvector is normalised and its first
/// component with modulus above `1e-12` is made real and positive, so that
/// outputs are reproducible across runs.
#[derive(Debug, Clone)]
pub struct HermitianEigenSystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<C64>,
}

/// Diagonalises a Hermitian matrix.
pub fn eig_hermitian(h: &DMatrix<C64>) -> Result<HermitianEigenSystem, LinalgError> {
    let (rows, cols) = h.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    let defect = hermiticity_defect(h);
    if defect > HERMITIAN_TOLERANCE * max_abs(h).max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(LinalgError::NotHermitian { defect });
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(LinalgError::NoConvergence)?;

    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let eigenvalues = DVector::from_iterator(rows, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(rows, rows);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::from(norm);
        }
        if let Some(pivot) = col.iter().find(|z| z.norm() > PHASE_FIX_THRESHOLD) {
            let phase = pivot.conj() / pivot.norm();
            col *= phase;
        }
        eigenvectors.set_column(dst, &col);
    }
    Ok(HermitianEigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

impl HermitianEigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let mut scaled = self.eigenvectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from(self.eigenvalues[k]);
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// `max |V diag(λ) V† - H|`.
    pub fn residual(&self, h: &DMatrix<C64>) -> f64 {
        max_abs_diff(&self.reconstruct(), h)
    }

    /// `max |V†V - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        unitarity_defect(&self.eigenvectors)
    }

    /// Phases `exp(i·sign·λ_k·t)`.
    pub fn phases(&self, t: f64, sign: f64) -> DVector<C64> {
        self.eigenvalues
            .map(|lambda| C64::from_polar(1.0, sign * lambda * t))
    }

    /// `V exp(i·sign·Λ·t) V† ψ`.
    pub fn apply_exp(
        &self,
        psi: &DVector<C64>,
        t: f64,
        sign: f64,
    ) -> Result<DVector<C64>, LinalgError> {
        if psi.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        let coeffs = self.eigenvectors.ad_mul(psi);
        let evolved = coeffs.component_mul(&self.phases(t, sign));
        Ok(&self.eigenvectors * evolved)
    }

    /// The full propagator `exp(i·sign·H·t)`.
    pub fn propagator(&self, t: f64, sign: f64) -> DMatrix<C64> {
        let phases = self.phases(t, sign);
        let mut scaled = self.eigenvectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[k];
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// Eigenvalues of a general complex square matrix from its complex Schur form.
pub fn eigenvalues_general(m: &DMatrix<C64>) -> Result<Vec<C64>, LinalgError> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Ok(Vec::new());
    }
    let schur =
        Schur::try_new(m.clone(), f64::EPSILON, 100_000).ok_or(LinalgError::NoConvergence)?;
    let (_, t) = schur.unpack();
    Ok((0..rows).map(|i| t[(i, i)]).collect())
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl SymTridiagonal {
    /// Panics when `off_diagonal.len() + 1 != diagonal.len()` for a non-empty diagonal.
    pub fn new(diagonal: Vec<f64>, off_diagonal: Vec<f64>) -> Self {
        assert!(
            diagonal.is_empty() && off_diagonal.is_empty()
                || off_diagonal.len() + 1 == diagonal.len(),
            "tridiagonal needs n diagonal and n-1 off-diagonal entries"
        );
        Self {
            diagonal,
            off_diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diagonal[i]
            } else if i + 1 == j {
                self.off_diagonal[i]
            } else if j + 1 == i {
                self.off_diagonal[j]
            } else {
                0.0
            }
        })
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        self.to_dense().map(C64::from)
    }

    /// Ascending eigenvalues and orthonormal eigenvectors (columns) with the
    /// first significant component of each made positive.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.dim();
        if n == 0 {
            return (Vec::new(), DMatrix::zeros(0, 0));
        }
        let eig = self.to_dense().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            if let Some(pivot) = col.iter().find(|x| x.abs() > PHASE_FIX_THRESHOLD) {
                if *pivot < 0.0 {
                    col.neg_mut();
                }
            }
            vectors.set_column(dst, &col);
        }
        (values, vectors)
    }
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use rand::Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn diagonal_eigenvalues_ascend() {
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(0.0), c(-1.0)]));
        let es = eig_hermitian(&h).unwrap();
        assert_eq!(es.eigenvalues.as_slice(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn spin_one_sx_spectrum() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sx = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0),
                c(s),
                c(0.0),
                c(s),
                c(0.0),
                c(s),
                c(0.0),
                c(s),
                c(0.0),
            ],
        );
        let es = eig_hermitian(&sx).unwrap();
        for (got, want) in es.eigenvalues.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(
            eig_hermitian(&m),
            Err(LinalgError::NotHermitian { .. })
        ));
        let r = DMatrix::<C64>::zeros(2, 3);
        assert!(matches!(
            eig_hermitian(&r),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn eigen_residual_and_orthonormality_random() {
        let mut rng = rng(11);
        for trial in 0..100 {
            let n = 2 + trial % 12;
            let h = random_hermitian(&mut rng, n);
            let es = eig_hermitian(&h).unwrap();
            let scale = max_abs(&h);
            assert!(es.residual(&h) <= 1e-11 * scale, "trial {trial}");
            assert!(es.orthonormality_defect() <= 1e-12, "trial {trial}");
            assert!(es.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn phase_convention_first_component_positive() {
        let mut rng = rng(5);
        let h = random_hermitian(&mut rng, 6);
        let es = eig_hermitian(&h).unwrap();
        for col in es.eigenvectors.column_iter() {
            let pivot = col.iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
        }
    }

    #[test]
    fn apply_exp_identities() {
        let mut rng = rng(3);
        let h = random_hermitian(&mut rng, 7);
        let es = eig_hermitian(&h).unwrap();
        let psi = random_state(&mut rng, 7);
        let same = es.apply_exp(&psi, 0.0, 1.0).unwrap();
        assert!((same - &psi).norm() < 1e-13);

        let v2 = es.eigenvectors.column(2).into_owned();
        let out = es.apply_exp(&v2, 0.7, -1.0).unwrap();
        let expect = &v2 * C64::from_polar(1.0, -es.eigenvalues[2] * 0.7);
        assert!((out - expect).norm() < 1e-13);

        let far = es.apply_exp(&psi, 123.4, 1.0).unwrap();
        assert!((far.norm() - 1.0).abs() < 1e-12);
        assert!(es.apply_exp(&DVector::zeros(3), 1.0, 1.0).is_err());
    }

    #[test]
    fn propagator_unitarity_and_group_law() {
        let mut rng = rng(17);
        for _ in 0..100 {
            let n = rng.random_range(2..10);
            let h = random_hermitian(&mut rng, n);
            let es = eig_hermitian(&h).unwrap();
            let (t1, t2) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let u1 = es.propagator(t1, 1.0);
            assert!(unitarity_defect(&u1) <= 1e-11);
            let psi = random_state(&mut rng, n);
            let lhs = &u1 * (es.propagator(t2, 1.0) * &psi);
            let rhs = es.propagator(t1 + t2, 1.0) * &psi;
            assert!((lhs - rhs).norm() <= 1e-10);
        }
    }

    #[test]
    fn kron_basics() {
        let i3 = DMatrix::<C64>::identity(3, 3);
        assert_eq!(kron(&i3, &i3).unwrap(), DMatrix::<C64>::identity(9, 9));

        let z = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(0.0), c(-1.0)]));
        let zz = kron(&z, &z).unwrap();
        let diag: Vec<f64> = (0..9).map(|k| zz[(k, k)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0]);

        let mut rng = rng(23);
        let a =
            random_hermitian(&mut rng, 3) + DMatrix::from_fn(3, 3, |i, j| c((i * 3 + j) as f64));
        let b = random_hermitian(&mut rng, 3);
        let lhs = kron(&a, &b).unwrap().trace();
        assert!((lhs - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn kron_guard() {
        let big = DMatrix::<C64>::zeros(1 << 7, 1 << 7);
        assert!(matches!(
            kron(&big, &big),
            Err(LinalgError::TooLarge { .. })
        ));
    }

    #[test]
    fn general_eigenvalues_of_similar_diagonal() {
        let z: Vec<C64> = (0..5)
            .map(|k| C64::from_polar(1.0, 0.3 + 0.7 * k as f64))
            .collect();
        let t = DMatrix::from_fn(5, 5, |i, j| {
            C64::new(
                ((i * 7 + j * 3) % 5) as f64 + if i == j { 3.0 } else { 0.0 },
                ((i + 2 * j) % 3) as f64,
            )
        });
        let d = DMatrix::from_diagonal(&DVector::from_vec(z.clone()));
        let m = &t * d * t.clone().try_inverse().unwrap();
        let mut got = eigenvalues_general(&m).unwrap();
        got.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        let mut want = z;
        want.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10);
        }
    }

    #[test]
    fn tridiagonal_eigen() {
        let t = SymTridiagonal::new(vec![1.0, 1.0], vec![0.5]);
        let (vals, vecs) = t.eigen();
        assert!((vals[0] - 0.5).abs() < 1e-15 && (vals[1] - 1.5).abs() < 1e-15);
        assert!(vecs[(0, 0)] > 0.0 && vecs[(0, 1)] > 0.0);
    }
}

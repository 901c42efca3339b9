use nalgebra::{DMatrix, DVector};

use super::basis::{power_of_three, ProductState};
use super::SpinOpsError;
use crate::linalg::C64;

/// Permutation of basis vectors: `M e_k = e_{image[k]}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    /// Panics if `image` is not a permutation of `0..len`.
    pub fn new(image: Vec<usize>) -> Self {
        let mut seen = vec![false; image.len()];
        for &k in &image {
            assert!(k < image.len() && !seen[k], "not a permutation");
            seen[k] = true;
        }
        Self { image }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self, k: usize) -> usize {
        self.image[k]
    }

    pub fn is_involution(&self) -> bool {
        self.image
            .iter()
            .enumerate()
            .all(|(k, &m)| self.image[m] == k)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(v.len());
        for (k, &m) in self.image.iter().enumerate() {
            out[m] = v[k];
        }
        out
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.len(), self.len());
        for (k, &img) in self.image.iter().enumerate() {
            m[(img, k)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// `max |[H, M]|` computed as `max |H[M r, M c] − H[r, c]|`.
    pub fn commutator_defect(&self, h: &DMatrix<C64>) -> f64 {
        assert_eq!(h.nrows(), self.len(), "dimension mismatch");
        let mut defect: f64 = 0.0;
        for r in 0..self.len() {
            for c in 0..self.len() {
                defect = defect.max((h[(self.image[r], self.image[c])] - h[(r, c)]).norm());
            }
        }
        defect
    }
}

/// Site inversion `i ↔ n + 1 − i` on the full `3^n` space.
pub fn site_inversion(n: usize) -> Result<Permutation, SpinOpsError> {
    let dim = power_of_three(n).ok_or(SpinOpsError::Overflow(n))?;
    Ok(Permutation::new(
        (0..dim)
            .map(|k| ProductState::from_index(k, n).mirrored().index())
            .collect(),
    ))
}

/// Exchange of sites `i` and `j` on the full `3^n` space.
pub fn site_exchange(i: usize, j: usize, n: usize) -> Result<Permutation, SpinOpsError> {
    for site in [i, j] {
        if site == 0 || site > n {
            return Err(SpinOpsError::SiteOutOfRange { site, n });
        }
    }
    let dim = power_of_three(n).ok_or(SpinOpsError::Overflow(n))?;
    Ok(Permutation::new(
        (0..dim)
            .map(|k| {
                let s = ProductState::from_index(k, n);
                let mut levels = s.levels().to_vec();
                levels.swap(i - 1, j - 1);
                ProductState::new(levels).index()
            })
            .collect(),
    ))
}

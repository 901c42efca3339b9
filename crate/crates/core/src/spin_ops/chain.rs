use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::basis::power_of_three;
use super::{Matrix3c, Matrix9c, SpinOpsError};
use crate::linalg::{self, C64};

/// Longest chain stored as a dense `3^n × 3^n` matrix.
pub const DENSE_SITE_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Dense,
    Sparse,
}

impl Representation {
    /// Dense up to [`DENSE_SITE_CAP`] sites, sparse beyond.
    pub fn for_sites(n: usize) -> Self {
        if n <= DENSE_SITE_CAP {
            Representation::Dense
        } else {
            Representation::Sparse
        }
    }
}

/// Square complex matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from unsorted `(row, col, value)` triplets; duplicates are
    /// summed and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != C64::new(0.0, 0.0));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Nonzeros of `row` as `(col, value)`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[span.clone()].binary_search(&col) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, v: &DVector<C64>) -> DVector<C64> {
        DVector::from_fn(self.dim, |r, _| self.row(r).map(|(c, x)| x * v[c]).sum())
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                defect = defect.max((v - self.get(c, r).conj()).norm());
            }
        }
        defect
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix),
}

/// Operator on the `3^n`-dimensional product space of an `n`-site chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOperator {
    n_sites: usize,
    storage: Storage,
}

impl ChainOperator {
    pub fn from_dense(n_sites: usize, matrix: DMatrix<C64>) -> Result<Self, SpinOpsError> {
        let dim = checked_dim(n_sites)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(SpinOpsError::DimensionMismatch {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            n_sites,
            storage: Storage::Dense(matrix),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(m) => m.dim(),
        }
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn representation(&self) -> Representation {
        match self.storage {
            Storage::Dense(_) => Representation::Dense,
            Storage::Sparse(_) => Representation::Sparse,
        }
    }

    /// Borrowed dense matrix, if stored densely.
    pub fn as_dense(&self) -> Option<&DMatrix<C64>> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            Storage::Sparse(_) => None,
        }
    }

    /// Dense copy; refused above [`DENSE_SITE_CAP`] sites.
    pub fn to_dense(&self) -> Result<DMatrix<C64>, SpinOpsError> {
        match &self.storage {
            Storage::Dense(m) => Ok(m.clone()),
            Storage::Sparse(m) => {
                if self.n_sites > DENSE_SITE_CAP {
                    return Err(SpinOpsError::DenseCapExceeded {
                        n: self.n_sites,
                        cap: DENSE_SITE_CAP,
                    });
                }
                Ok(m.to_dense())
            }
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(row, col)],
            Storage::Sparse(m) => m.get(row, col),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|k| self.entry(k, k)).sum()
    }

    pub fn matvec(&self, v: &DVector<C64>) -> Result<DVector<C64>, SpinOpsError> {
        if v.len() != self.dim() {
            return Err(SpinOpsError::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(match &self.storage {
            Storage::Dense(m) => m * v,
            Storage::Sparse(m) => m.matvec(v),
        })
    }

    /// Column `col` of the operator, i.e. the image of a basis vector.
    pub fn column(&self, col: usize) -> DVector<C64> {
        match &self.storage {
            Storage::Dense(m) => m.column(col).into_owned(),
            Storage::Sparse(m) => {
                let mut e = DVector::zeros(m.dim());
                e[col] = C64::new(1.0, 0.0);
                m.matvec(&e)
            }
        }
    }

    /// `max |H - H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => linalg::hermiticity_defect(m),
            Storage::Sparse(m) => m.hermiticity_defect(),
        }
    }
}

fn checked_dim(n: usize) -> Result<usize, SpinOpsError> {
    if n == 0 {
        return Err(SpinOpsError::EmptyChain);
    }
    power_of_three(n).ok_or(SpinOpsError::Overflow(n))
}

fn check_site(site: usize, n: usize) -> Result<(), SpinOpsError> {
    if site == 0 || site > n {
        Err(SpinOpsError::SiteOutOfRange { site, n })
    } else {
        Ok(())
    }
}

/// Sums site-local and two-site terms into a chain operator.
#[derive(Debug, Clone)]
pub struct TermAccumulator {
    n_sites: usize,
    dim: usize,
    entries: HashMap<(usize, usize), C64>,
}

impl TermAccumulator {
    pub fn new(n_sites: usize) -> Result<Self, SpinOpsError> {
        Ok(Self {
            n_sites,
            dim: checked_dim(n_sites)?,
            entries: HashMap::new(),
        })
    }

    fn stride(&self, site: usize) -> usize {
        power_of_three(self.n_sites - site).expect("fits: smaller than dim")
    }

    /// Adds `coeff · op` acting on `site` (1-based).
    pub fn add_site(&mut self, op: &Matrix3c, site: usize, coeff: C64) -> Result<(), SpinOpsError> {
        check_site(site, self.n_sites)?;
        if coeff == C64::new(0.0, 0.0) {
            return Ok(());
        }
        let stride = self.stride(site);
        for col in 0..self.dim {
            let d = (col / stride) % 3;
            for x in 0..3 {
                let v = op[(x, d)];
                if v != C64::new(0.0, 0.0) {
                    let row = col - d * stride + x * stride;
                    *self.entries.entry((row, col)).or_default() += coeff * v;
                }
            }
        }
        Ok(())
    }

    /// Adds `coeff · op` where `op` is a 9×9 operator on sites `(i, j)`,
    /// `i`'s level being the more significant factor of `op`'s index.
    pub fn add_pair(
        &mut self,
        op: &Matrix9c,
        i: usize,
        j: usize,
        coeff: C64,
    ) -> Result<(), SpinOpsError> {
        check_site(i, self.n_sites)?;
        check_site(j, self.n_sites)?;
        if i == j {
            return Err(SpinOpsError::SameSite(i));
        }
        if coeff == C64::new(0.0, 0.0) {
            return Ok(());
        }
        let (si, sj) = (self.stride(i), self.stride(j));
        for col in 0..self.dim {
            let (di, dj) = ((col / si) % 3, (col / sj) % 3);
            let base = col - di * si - dj * sj;
            let local_col = di * 3 + dj;
            for local_row in 0..9 {
                let v = op[(local_row, local_col)];
                if v != C64::new(0.0, 0.0) {
                    let row = base + (local_row / 3) * si + (local_row % 3) * sj;
                    *self.entries.entry((row, col)).or_default() += coeff * v;
                }
            }
        }
        Ok(())
    }

    pub fn finish(self, repr: Representation) -> Result<ChainOperator, SpinOpsError> {
        let storage = match repr {
            Representation::Dense => {
                if self.n_sites > DENSE_SITE_CAP {
                    return Err(SpinOpsError::DenseCapExceeded {
                        n: self.n_sites,
                        cap: DENSE_SITE_CAP,
                    });
                }
                let mut m = DMatrix::zeros(self.dim, self.dim);
                for ((r, c), v) in self.entries {
                    m[(r, c)] = v;
                }
                Storage::Dense(m)
            }
            Representation::Sparse => Storage::Sparse(CsrMatrix::from_triplets(
                self.dim,
                self.entries
                    .into_iter()
                    .map(|((r, c), v)| (r, c, v))
                    .collect(),
            )),
        };
        Ok(ChainOperator {
            n_sites: self.n_sites,
            storage,
        })
    }
}

/// `op` on `site`, identity elsewhere.
pub fn embed(op: &Matrix3c, site: usize, n: usize) -> Result<ChainOperator, SpinOpsError> {
    let mut acc = TermAccumulator::new(n)?;
    acc.add_site(op, site, C64::new(1.0, 0.0))?;
    acc.finish(Representation::for_sites(n))
}

/// 9×9 operator on sites `(i, j)`, identity elsewhere.
pub fn embed_pair(
    op: &Matrix9c,
    i: usize,
    j: usize,
    n: usize,
) -> Result<ChainOperator, SpinOpsError> {
    let mut acc = TermAccumulator::new(n)?;
    acc.add_pair(op, i, j, C64::new(1.0, 0.0))?;
    acc.finish(Representation::for_sites(n))
}

/// `embed(a, i) · embed(b, j)` for `i ≠ j`.
pub fn two_site(
    a: &Matrix3c,
    b: &Matrix3c,
    i: usize,
    j: usize,
    n: usize,
) -> Result<ChainOperator, SpinOpsError> {
    embed_pair(&super::pair_kron(a, b), i, j, n)
}

#[cfg(test)]
mod tests {
    use super::super::{site_matrix, Level, ProductState, SiteLabel};
    use super::*;
    use crate::linalg::kron;

    fn basis_vector(state: &str) -> DVector<C64> {
        let s: ProductState = state.parse().unwrap();
        let mut v = DVector::zeros(power_of_three(s.n_sites()).unwrap());
        v[s.index()] = C64::new(1.0, 0.0);
        v
    }

    fn dense3(m: &Matrix3c) -> DMatrix<C64> {
        DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
    }

    #[test]
    fn embed_sz_eigenvalues() {
        let sz = site_matrix(SiteLabel::Sz);
        let v = basis_vector("10");
        let h1 = embed(&sz, 1, 2).unwrap();
        assert_eq!(h1.matvec(&v).unwrap(), &v * C64::new(1.0, 0.0));
        let h2 = embed(&sz, 2, 2).unwrap();
        assert_eq!(h2.matvec(&v).unwrap().norm(), 0.0);
    }

    #[test]
    fn embed_trace_of_sz_squared() {
        let sz2 = site_matrix(SiteLabel::SzSquared);
        for n in 1..5 {
            for k in 1..=n {
                let op = embed(&sz2, k, n).unwrap();
                assert_eq!(op.trace().re, 2.0 * power_of_three(n - 1).unwrap() as f64);
            }
        }
    }

    #[test]
    fn embed_matches_kron() {
        let sx = site_matrix(SiteLabel::Sx);
        let id = DMatrix::<C64>::identity(3, 3);
        let expected = kron(&kron(&id, &dense3(&sx)).unwrap(), &id).unwrap();
        let got = embed(&sx, 2, 3).unwrap();
        assert_eq!(got.to_dense().unwrap(), expected);
    }

    #[test]
    fn embed_rejects_bad_sites() {
        let sz = site_matrix(SiteLabel::Sz);
        assert!(matches!(
            embed(&sz, 0, 2),
            Err(SpinOpsError::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            embed(&sz, 3, 2),
            Err(SpinOpsError::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            two_site(&sz, &sz, 2, 2, 3),
            Err(SpinOpsError::SameSite(2))
        ));
    }

    #[test]
    fn two_site_zz() {
        let sz = site_matrix(SiteLabel::Sz);
        let zz = two_site(&sz, &sz, 1, 2, 2).unwrap();
        let v = basis_vector("1m");
        assert_eq!(zz.matvec(&v).unwrap(), &v * C64::new(-1.0, 0.0));
        let w = basis_vector("01");
        assert_eq!(zz.matvec(&w).unwrap().norm(), 0.0);
    }

    #[test]
    fn two_site_xx_hermitian_traceless() {
        let sx = site_matrix(SiteLabel::Sx);
        let xx = two_site(&sx, &sx, 1, 2, 2).unwrap();
        assert!(xx.hermiticity_defect() <= 1e-14);
        assert!(xx.trace().norm() <= 1e-14);
    }

    #[test]
    fn reversed_pair_order() {
        let a1 = site_matrix(SiteLabel::A1);
        let sz = site_matrix(SiteLabel::Sz);
        let fwd = two_site(&a1, &sz, 1, 3, 3).unwrap().to_dense().unwrap();
        let rev = two_site(&sz, &a1, 3, 1, 3).unwrap().to_dense().unwrap();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn locality_commutes() {
        let labels = [SiteLabel::Sx, SiteLabel::Sy, SiteLabel::A1, SiteLabel::Su];
        for a in labels {
            for b in labels {
                let x = embed(&site_matrix(a), 1, 3).unwrap().to_dense().unwrap();
                let y = embed(&site_matrix(b), 3, 3).unwrap().to_dense().unwrap();
                let comm = &x * &y - &y * &x;
                assert!(linalg::max_abs(&comm) <= 1e-14);
            }
        }
    }

    #[test]
    fn sparse_and_dense_agree() {
        let a1 = site_matrix(SiteLabel::A1);
        let hop = super::super::pair_kron(&a1, &a1.adjoint());
        let mut acc = TermAccumulator::new(3).unwrap();
        acc.add_pair(&hop, 1, 2, C64::new(0.5, 0.0)).unwrap();
        acc.add_site(&site_matrix(SiteLabel::Sz), 3, C64::new(2.0, 0.0))
            .unwrap();
        let dense = acc.clone().finish(Representation::Dense).unwrap();
        let sparse = acc.finish(Representation::Sparse).unwrap();
        assert_eq!(sparse.to_dense().unwrap(), dense.to_dense().unwrap());
        let v = basis_vector("01m");
        assert_eq!(sparse.matvec(&v).unwrap(), dense.matvec(&v).unwrap());
        assert_eq!(
            sparse.entry(basis_vector_index("10m"), basis_vector_index("01m")),
            C64::new(0.5, 0.0)
        );
    }

    fn basis_vector_index(state: &str) -> usize {
        state.parse::<ProductState>().unwrap().index()
    }

    #[test]
    fn dense_cap_enforced() {
        let acc = TermAccumulator::new(DENSE_SITE_CAP + 1).unwrap();
        assert!(matches!(
            acc.finish(Representation::Dense),
            Err(SpinOpsError::DenseCapExceeded { .. })
        ));
        assert_eq!(Level::Zero.index(), 1);
    }

    #[test]
    fn csr_merges_duplicates_and_drops_zeros() {
        let one = C64::new(1.0, 0.0);
        let m =
            CsrMatrix::from_triplets(3, vec![(0, 1, one), (0, 1, one), (2, 2, one), (2, 2, -one)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), C64::new(2.0, 0.0));
        assert_eq!(m.get(2, 2), C64::new(0.0, 0.0));
    }
}

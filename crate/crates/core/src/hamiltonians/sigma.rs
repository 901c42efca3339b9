use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{ChainSpec, HamiltonianError, InteractionKind, SIGMA_LEAKAGE_TOLERANCE};
use crate::linalg::{SymTridiagonal, C64};
use crate::spin_ops::{
    power_of_three, ChainOperator, Level, Permutation, ProductState, SpinOpsError, DENSE_SITE_CAP,
};

/// Ordered basis of the single-excitation subspace: `n` single-up states,
/// the vacuum, then `n` single-down states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigmaBasis {
    n: usize,
}

impl SigmaBasis {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "chain needs at least one site");
        Self { n }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        2 * self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the vacuum, `n`.
    pub fn vacuum(&self) -> usize {
        self.n
    }

    /// Index of the up excitation on `site` (1-based).
    pub fn up(&self, site: usize) -> usize {
        assert!((1..=self.n).contains(&site), "site out of range");
        site - 1
    }

    /// Index of the down excitation on `site` (1-based).
    pub fn down(&self, site: usize) -> usize {
        assert!((1..=self.n).contains(&site), "site out of range");
        self.n + site
    }

    pub fn state(&self, k: usize) -> ProductState {
        let n = self.n;
        match k {
            k if k < n => ProductState::single_excitation(n, k + 1, Level::Up).expect("in range"),
            k if k == n => ProductState::vacuum(n),
            k => ProductState::single_excitation(n, k - n, Level::Down).expect("in range"),
        }
    }

    pub fn position(&self, state: &ProductState) -> Option<usize> {
        if state.n_sites() != self.n {
            return None;
        }
        let excited: Vec<(usize, Level)> = state
            .levels()
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != Level::Zero)
            .map(|(i, l)| (i + 1, *l))
            .collect();
        match excited.as_slice() {
            [] => Some(self.vacuum()),
            [(site, Level::Up)] => Some(self.up(*site)),
            [(site, Level::Down)] => Some(self.down(*site)),
            _ => None,
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|k| self.state(k).to_string()).collect()
    }

    /// Site inversion restricted to the subspace.
    pub fn inversion(&self) -> Permutation {
        let n = self.n;
        Permutation::new(
            (0..self.len())
                .map(|k| match k {
                    k if k < n => n - 1 - k,
                    k if k == n => n,
                    k => n + 1 + (2 * n - k),
                })
                .collect(),
        )
    }
}

/// Isometry from the full `3^n` space onto the single-excitation subspace.
#[derive(Debug, Clone)]
pub struct SigmaProjector {
    basis: SigmaBasis,
    full_dim: usize,
    full_indices: Vec<usize>,
    lookup: HashMap<usize, usize>,
}

pub fn sigma_projector(n: usize) -> Result<SigmaProjector, SpinOpsError> {
    if n == 0 {
        return Err(SpinOpsError::EmptyChain);
    }
    let full_dim = power_of_three(n).ok_or(SpinOpsError::Overflow(n))?;
    let basis = SigmaBasis::new(n);
    let full_indices: Vec<usize> = (0..basis.len()).map(|k| basis.state(k).index()).collect();
    let lookup = full_indices
        .iter()
        .enumerate()
        .map(|(k, &f)| (f, k))
        .collect();
    Ok(SigmaProjector {
        basis,
        full_dim,
        full_indices,
        lookup,
    })
}

impl SigmaProjector {
    pub fn basis(&self) -> SigmaBasis {
        self.basis
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn full_index(&self, k: usize) -> usize {
        self.full_indices[k]
    }

    pub fn position_of_full(&self, full: usize) -> Option<usize> {
        self.lookup.get(&full).copied()
    }

    /// The `(2n+1) × 3^n` matrix `Π_σ`.
    pub fn isometry(&self) -> Result<DMatrix<C64>, SpinOpsError> {
        if self.basis.n_sites() > DENSE_SITE_CAP {
            return Err(SpinOpsError::DenseCapExceeded {
                n: self.basis.n_sites(),
                cap: DENSE_SITE_CAP,
            });
        }
        let mut p = DMatrix::zeros(self.basis.len(), self.full_dim);
        for (k, &f) in self.full_indices.iter().enumerate() {
            p[(k, f)] = C64::new(1.0, 0.0);
        }
        Ok(p)
    }

    /// `Π_σ v`.
    pub fn restrict(&self, v: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(self.basis.len(), self.full_indices.iter().map(|&f| v[f]))
    }

    /// `Π_σ† w`.
    pub fn lift(&self, w: &DVector<C64>) -> DVector<C64> {
        let mut v = DVector::zeros(self.full_dim);
        for (k, &f) in self.full_indices.iter().enumerate() {
            v[f] = w[k];
        }
        v
    }

    /// Squared norm of the components of `v` outside the subspace.
    pub fn outside_norm_sqr(&self, v: &DVector<C64>) -> f64 {
        v.iter()
            .enumerate()
            .filter(|(f, _)| !self.lookup.contains_key(f))
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }
}

/// Hamiltonian restricted to the single-excitation subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaBlock {
    basis: SigmaBasis,
    pub matrix: DMatrix<C64>,
    /// Frobenius norm of `(I − Π†Π) H Π†`; zero for blocks built from a spec.
    pub leakage: f64,
}

impl SigmaBlock {
    pub fn basis(&self) -> SigmaBasis {
        self.basis
    }

    pub fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    pub fn up_block(&self) -> DMatrix<C64> {
        let n = self.n_sites();
        self.matrix.view((0, 0), (n, n)).into_owned()
    }

    pub fn down_block(&self) -> DMatrix<C64> {
        let n = self.n_sites();
        self.matrix.view((n + 1, n + 1), (n, n)).into_owned()
    }

    pub fn vacuum_energy(&self) -> f64 {
        let v = self.basis.vacuum();
        self.matrix[(v, v)].re
    }

    fn tridiagonal_at(&self, offset: usize) -> SymTridiagonal {
        let n = self.n_sites();
        let diagonal = (0..n)
            .map(|i| self.matrix[(offset + i, offset + i)].re)
            .collect();
        let off_diagonal = (0..n - 1)
            .map(|i| self.matrix[(offset + i, offset + i + 1)].re)
            .collect();
        SymTridiagonal::new(diagonal, off_diagonal)
    }

    /// Up block as a tridiagonal matrix (diagonal `C_i + B_i`, off-diagonal `a_i`).
    pub fn up_tridiagonal(&self) -> SymTridiagonal {
        self.tridiagonal_at(0)
    }

    /// Down block as a tridiagonal matrix (diagonal `C_i − B_i`, off-diagonal `b_i`).
    pub fn down_tridiagonal(&self) -> SymTridiagonal {
        self.tridiagonal_at(self.n_sites() + 1)
    }

    /// `max |[H_σ, M_σ]|` for the site inversion `M_σ`.
    pub fn mirror_commutator(&self) -> f64 {
        self.basis.inversion().commutator_defect(&self.matrix)
    }
}

/// Projects a full-space Hamiltonian on the single-excitation subspace,
/// refusing operators that leak out of it by more than `1e-12`.
pub fn project_to_sigma(h: &ChainOperator) -> Result<SigmaBlock, HamiltonianError> {
    let projector = sigma_projector(h.n_sites())?;
    let basis = projector.basis();
    let mut matrix = DMatrix::zeros(basis.len(), basis.len());
    let mut leak_sqr = 0.0;
    for k in 0..basis.len() {
        let col = h.column(projector.full_index(k));
        leak_sqr += projector.outside_norm_sqr(&col);
        matrix.set_column(k, &projector.restrict(&col));
    }
    let leakage = leak_sqr.sqrt();
    if leakage > SIGMA_LEAKAGE_TOLERANCE {
        return Err(HamiltonianError::SigmaLeakage { leakage });
    }
    Ok(SigmaBlock {
        basis,
        matrix,
        leakage,
    })
}

/// Builds the single-excitation block of an engineered chain directly from
/// its parameters, without touching the `3^n` space.
pub fn sigma_block(spec: &ChainSpec) -> Result<SigmaBlock, HamiltonianError> {
    spec.validate()?;
    if spec.kind != InteractionKind::Engineered {
        return Err(HamiltonianError::NotEngineered(spec.kind));
    }
    let n = spec.n;
    let basis = SigmaBasis::new(n);
    let mut matrix = DMatrix::zeros(basis.len(), basis.len());
    for site in 1..=n {
        let (b, c) = (spec.field_linear[site - 1], spec.field_quadratic[site - 1]);
        matrix[(basis.up(site), basis.up(site))] = C64::from(c + b);
        matrix[(basis.down(site), basis.down(site))] = C64::from(c - b);
    }
    for site in 1..n {
        let (a, b) = (C64::from(spec.a[site - 1]), C64::from(spec.b[site - 1]));
        let (u0, u1) = (basis.up(site), basis.up(site + 1));
        matrix[(u0, u1)] = a;
        matrix[(u1, u0)] = a;
        let (d0, d1) = (basis.down(site), basis.down(site + 1));
        matrix[(d0, d1)] = b;
        matrix[(d1, d0)] = b;
    }
    Ok(SigmaBlock {
        basis,
        matrix,
        leakage: 0.0,
    })
}

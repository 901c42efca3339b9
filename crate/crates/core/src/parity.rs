//! Parity-resolved spectra under site permutations and the mirroring
//! feasibility test built on them.
//!
//! A site permutation `M` that commutes with an operator splits its spectrum
//! into an even (`Mv = v`) and an odd (`Mv = −v`) part. Perfect mirroring at
//! some time `t` requires every even eigenvalue to sit on one parity class
//! of a common integer lattice and every odd eigenvalue on the other.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonians::{table1_operator, Table1Op};
use crate::linalg::{eig_hermitian, LinalgError, C64};
use crate::spin_ops::{site_exchange, site_inversion, ChainOperator, Permutation, SpinOpsError};

/// Largest `|[op, M]|` entry accepted by [`parity_spectrum`].
pub const COMMUTATOR_TOLERANCE: f64 = 1e-12;
/// Relative spacing below which two eigenvalues count as the same level.
pub const CLUSTER_TOLERANCE: f64 = 1e-9;
/// Largest `‖Mv ∓ v‖` accepted for a parity label.
pub const LABEL_TOLERANCE: f64 = 1e-10;
/// Agreement required between computed and tabulated spectra.
pub const TABLE_TOLERANCE: f64 = 1e-10;
/// Tolerance of the integer-relation search.
pub const RATIONAL_TOLERANCE: f64 = 1e-9;
/// Largest denominator tried by the integer-relation search.
pub const MAX_DENOMINATOR: i64 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParityError {
    #[error("operator does not commute with the parity operator: max |[op, M]| = {residual:e}")]
    NotCommuting { residual: f64 },
    #[error("parity operator is not an involution")]
    NotInvolution,
    #[error("parity label unstable: max |Mv - pv| = {deviation:e}")]
    UnstableLabel { deviation: f64 },
    #[error(transparent)]
    Spin(#[from] SpinOpsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityKind {
    /// Exchange of sites 1 and 2.
    TwoSiteExchange,
    /// Reflection `i ↔ n + 1 − i` about the chain centre.
    ChainMirror,
}

impl ParityKind {
    pub fn name(self) -> &'static str {
        match self {
            ParityKind::TwoSiteExchange => "two_site_exchange",
            ParityKind::ChainMirror => "chain_mirror",
        }
    }

    /// The basis permutation on `n` sites.
    pub fn permutation(self, n: usize) -> Result<Permutation, ParityError> {
        Ok(match self {
            ParityKind::TwoSiteExchange => site_exchange(1, 2, n)?,
            ParityKind::ChainMirror => site_inversion(n)?,
        })
    }
}

impl fmt::Display for ParityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "two_site_exchange" | "exchange" => Ok(ParityKind::TwoSiteExchange),
            "chain_mirror" | "mirror" => Ok(ParityKind::ChainMirror),
            _ => Err(format!("unknown parity operator `{s}`")),
        }
    }
}

/// `(P_even, P_odd) = ((I + M)/2, (I − M)/2)`.
pub fn parity_projectors(
    kind: ParityKind,
    n: usize,
) -> Result<(DMatrix<C64>, DMatrix<C64>), ParityError> {
    let m = kind.permutation(n)?.to_matrix();
    let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    let half = C64::new(0.5, 0.0);
    Ok(((&id + &m) * half, (&id - &m) * half))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

/// Eigenvector that is simultaneously an eigenvector of the parity operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityEigenpair {
    pub value: f64,
    pub parity: Parity,
    pub vector: DVector<C64>,
}

/// Orthonormal bases of the `+1` and `−1` eigenspaces of an involutive
/// permutation, as columns: `e_k` for fixed points and `(e_k ± e_{M k})/√2`
/// for swapped pairs.
fn symmetry_adapted_bases(m: &Permutation) -> (DMatrix<C64>, DMatrix<C64>) {
    let dim = m.len();
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    for k in 0..dim {
        let j = m.image(k);
        if j == k {
            let mut v = DVector::<C64>::zeros(dim);
            v[k] = C64::new(1.0, 0.0);
            even.push(v);
        } else if k < j {
            let (mut plus, mut minus) = (DVector::<C64>::zeros(dim), DVector::<C64>::zeros(dim));
            plus[k] = r;
            plus[j] = r;
            minus[k] = r;
            minus[j] = -r;
            even.push(plus);
            odd.push(minus);
        }
    }
    let columns = |vs: Vec<DVector<C64>>| {
        if vs.is_empty() {
            DMatrix::zeros(dim, 0)
        } else {
            DMatrix::from_columns(&vs)
        }
    };
    (columns(even), columns(odd))
}

/// Joint eigenbasis of a Hermitian `h` and a parity permutation `m`.
///
/// `h` is diagonalised separately inside the even and the odd eigenspace of
/// `m`, so every eigenvector carries an exact parity even when eigenvalues
/// of opposite parity are degenerate or nearly so.
pub fn parity_resolved_eigenbasis(
    h: &DMatrix<C64>,
    m: &Permutation,
) -> Result<Vec<ParityEigenpair>, ParityError> {
    if !m.is_involution() {
        return Err(ParityError::NotInvolution);
    }
    let residual = m.commutator_defect(h);
    if residual > COMMUTATOR_TOLERANCE {
        return Err(ParityError::NotCommuting { residual });
    }
    let (even_basis, odd_basis) = symmetry_adapted_bases(m);
    let mut pairs = Vec::with_capacity(h.nrows());
    let mut worst: f64 = 0.0;
    for (basis, parity, sign) in [
        (even_basis, Parity::Even, 1.0),
        (odd_basis, Parity::Odd, -1.0),
    ] {
        if basis.ncols() == 0 {
            continue;
        }
        let sector = basis.adjoint() * h * &basis;
        let sector = (&sector + sector.adjoint()) * C64::new(0.5, 0.0);
        let eig = eig_hermitian(&sector)?;
        let vectors = &basis * &eig.eigenvectors;
        for (k, v) in vectors.column_iter().enumerate() {
            let v = v.into_owned();
            let deviation = (m.apply(&v) - &v * C64::new(sign, 0.0)).camax();
            worst = worst.max(deviation);
            pairs.push(ParityEigenpair {
                value: eig.eigenvalues[k],
                parity,
                vector: v,
            });
        }
    }
    if worst > LABEL_TOLERANCE {
        return Err(ParityError::UnstableLabel { deviation: worst });
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(pairs)
}

/// Spectrum of an operator split by parity, each list sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParitySplit {
    pub even_eigenvalues: Vec<f64>,
    pub odd_eigenvalues: Vec<f64>,
    pub parity_operator: ParityKind,
    /// `max |[op, M]|`.
    pub commutator_residual: f64,
}

impl ParitySplit {
    pub fn dim(&self) -> usize {
        self.even_eigenvalues.len() + self.odd_eigenvalues.len()
    }

    /// All eigenvalues, sorted descending.
    pub fn union(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .even_eigenvalues
            .iter()
            .chain(&self.odd_eigenvalues)
            .copied()
            .collect();
        sort_descending(&mut all);
        all
    }
}

fn sort_descending(v: &mut [f64]) {
    v.sort_by(|a, b| b.total_cmp(a));
}

/// Parity-resolved spectrum of a Hermitian chain operator.
pub fn parity_spectrum(op: &ChainOperator, kind: ParityKind) -> Result<ParitySplit, ParityError> {
    let h = op.to_dense()?;
    let m = kind.permutation(op.n_sites())?;
    let commutator_residual = m.commutator_defect(&h);
    let pairs = parity_resolved_eigenbasis(&h, &m)?;
    let (mut even, mut odd) = (Vec::new(), Vec::new());
    for p in pairs {
        match p.parity {
            Parity::Even => even.push(p.value),
            Parity::Odd => odd.push(p.value),
        }
    }
    sort_descending(&mut even);
    sort_descending(&mut odd);
    Ok(ParitySplit {
        even_eigenvalues: even,
        odd_eigenvalues: odd,
        parity_operator: kind,
        commutator_residual,
    })
}

/// Published even/odd spectra of the tabulated two-site interactions,
/// transcribed as printed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub op: Table1Op,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

pub fn reference_row(op: Table1Op) -> ReferenceRow {
    let (s2, s6) = (2f64.sqrt(), 6f64.sqrt());
    let (even, odd) = match op {
        Table1Op::O1 => (vec![s2, 1.0, 1.0, 0.0, 0.0, -s2], vec![0.0, -1.0, -1.0]),
        Table1Op::O2 => (vec![1.0, 0.0, 0.0, 0.0, 0.0, -1.0], vec![0.0, 0.0, -1.0]),
        Table1Op::O3 => (vec![2.0, 1.0, 1.0, 1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]),
        Table1Op::O4 => (vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]),
        Table1Op::O5 => (vec![s6, s2, 0.0, 0.0, -s2, -s6], vec![0.0, 0.0, 0.0]),
    };
    ReferenceRow { op, even, odd }
}

fn max_sorted_deviation(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    sort_descending(&mut a);
    sort_descending(&mut b);
    Some(
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max),
    )
}

/// Computed spectrum of one tabulated interaction against its reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowComparison {
    pub op: Table1Op,
    pub form: &'static str,
    pub computed: ParitySplit,
    pub reference: ReferenceRow,
    /// Largest deviation over both parities; `None` on a length mismatch.
    pub max_deviation: Option<f64>,
    pub matches: bool,
    /// Whether the reference even ∪ odd reproduces the full spectrum of the
    /// operator. A `false` here means the reference row cannot be right.
    pub reference_consistent: bool,
}

impl RowComparison {
    /// A row is settled when it either matches, or mismatches with a
    /// reference that is provably inconsistent with the operator.
    pub fn is_settled(&self) -> bool {
        self.matches || !self.reference_consistent
    }
}

pub fn compare_row(op: Table1Op) -> Result<RowComparison, ParityError> {
    let computed = parity_spectrum(&table1_operator(op), ParityKind::TwoSiteExchange)?;
    let reference = reference_row(op);
    let max_deviation = match (
        max_sorted_deviation(&computed.even_eigenvalues, &reference.even),
        max_sorted_deviation(&computed.odd_eigenvalues, &reference.odd),
    ) {
        (Some(e), Some(o)) => Some(e.max(o)),
        _ => None,
    };
    let reference_union: Vec<f64> = reference
        .even
        .iter()
        .chain(&reference.odd)
        .copied()
        .collect();
    let reference_consistent = max_sorted_deviation(&computed.union(), &reference_union)
        .is_some_and(|d| d <= TABLE_TOLERANCE);
    Ok(RowComparison {
        op,
        form: op.form(),
        matches: max_deviation.is_some_and(|d| d <= TABLE_TOLERANCE),
        max_deviation,
        reference_consistent,
        computed,
        reference,
    })
}

/// Comparison of every tabulated row.
pub fn compare_all_rows() -> Result<Vec<RowComparison>, ParityError> {
    Table1Op::ALL.into_iter().map(compare_row).collect()
}

/// Best rational approximation `p/q` with `q ≤ max_den` from the continued
/// fraction convergents of `x`, if one lies within `tol`.
pub fn rational_approximation(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut h_prev, mut h) = (1i64, x.floor() as i64);
    let (mut k_prev, mut k) = (0i64, 1i64);
    let mut frac = x - x.floor();
    loop {
        if (x - h as f64 / k as f64).abs() <= tol {
            return Some((h, k));
        }
        if frac.abs() < f64::EPSILON {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor() as i64;
        frac = inv - inv.floor();
        let (h_next, k_next) = (
            a.checked_mul(h)?.checked_add(h_prev)?,
            a.checked_mul(k)?.checked_add(k_prev)?,
        );
        if k_next > max_den {
            return None;
        }
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Outcome of [`mirroring_feasibility_report`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirroringFeasibility {
    /// All eigenvalue differences are rational multiples of one unit.
    pub rational: bool,
    /// Lattice spacing; eigenvalues are `offset + unit · position`.
    pub unit: Option<f64>,
    pub even_positions: Option<Vec<i64>>,
    pub odd_positions: Option<Vec<i64>>,
    /// Some parity class contains both even and odd eigenvalues.
    pub parity_overlap: Option<bool>,
    pub feasible: bool,
    pub reason: String,
}

/// Decides whether some time evolution under the split operator acts as
/// `e^{iφ} M`.
///
/// Eigenvalues are placed on the coarsest integer lattice containing them
/// all (positions with unit gcd, smallest at zero). Mirroring needs every
/// even position to share one parity and every odd position the other.
/// The rational test is a bounded-denominator heuristic.
pub fn mirroring_feasibility_report(split: &ParitySplit) -> MirroringFeasibility {
    let all = split.union();
    let Some(&min) = all.last() else {
        return MirroringFeasibility {
            rational: true,
            unit: None,
            even_positions: Some(vec![]),
            odd_positions: Some(vec![]),
            parity_overlap: Some(false),
            feasible: true,
            reason: "empty spectrum".into(),
        };
    };
    let scale = all.iter().map(|x| x.abs()).fold(1.0, f64::max);
    let diffs: Vec<f64> = all.iter().map(|e| e - min).collect();
    let smallest = diffs
        .iter()
        .copied()
        .filter(|&d| d > CLUSTER_TOLERANCE * scale)
        .fold(f64::INFINITY, f64::min);

    let unit = if smallest.is_finite() {
        let mut lcm_den = 1i64;
        for &d in &diffs {
            match rational_approximation(d / smallest, MAX_DENOMINATOR, RATIONAL_TOLERANCE * (d / smallest).max(1.0)) {
                Some((_, q)) => lcm_den = lcm_den / gcd(lcm_den, q) * q,
                None => {
                    return MirroringFeasibility {
                        rational: false,
                        unit: None,
                        even_positions: None,
                        odd_positions: None,
                        parity_overlap: None,
                        feasible: false,
                        reason: format!(
                            "eigenvalue gaps {d} and {smallest} have no rational ratio with denominator <= {MAX_DENOMINATOR}"
                        ),
                    }
                }
            }
        }
        Some(smallest / lcm_den as f64)
    } else {
        None
    };

    let position = |e: f64| unit.map_or(0, |u| ((e - min) / u).round() as i64);
    let mut even: Vec<i64> = split
        .even_eigenvalues
        .iter()
        .map(|&e| position(e))
        .collect();
    let mut odd: Vec<i64> = split.odd_eigenvalues.iter().map(|&e| position(e)).collect();
    let g = even.iter().chain(&odd).fold(0, |acc, &p| gcd(acc, p));
    let (unit, g) = if g > 1 {
        (unit.map(|u| u * g as f64), g)
    } else {
        (unit, 1)
    };
    even.iter_mut().chain(odd.iter_mut()).for_each(|p| *p /= g);

    let classes = |ps: &[i64]| -> (bool, bool) {
        (ps.iter().any(|p| p % 2 == 0), ps.iter().any(|p| p % 2 != 0))
    };
    let (even_has_even, even_has_odd) = classes(&even);
    let (odd_has_even, odd_has_odd) = classes(&odd);
    let overlap = (even_has_even && odd_has_even) || (even_has_odd && odd_has_odd);
    let mixed_even = even_has_even && even_has_odd;
    let mixed_odd = odd_has_even && odd_has_odd;
    let feasible = !overlap && !mixed_even && !mixed_odd;
    let reason = if feasible {
        "even and odd eigenvalues occupy opposite parity classes".to_string()
    } else if overlap {
        "eigenvalues of the same parity class occur in both subspaces".to_string()
    } else {
        "one subspace holds eigenvalues of both parity classes".to_string()
    };
    MirroringFeasibility {
        rational: true,
        unit,
        even_positions: Some(even),
        odd_positions: Some(odd),
        parity_overlap: Some(overlap),
        feasible,
        reason,
    }
}

//! Hamiltonian construction from [`ChainSpec`]s, SWAP verification, the
//! tabulated two-site interactions and the single-excitation subspace.

mod preset;
mod sigma;
mod spec;

pub use preset::{christandl_couplings, phase_exact_offset, pst_preset, PresetVariant};
pub use sigma::{
    project_to_sigma, sigma_block, sigma_projector, SigmaBasis, SigmaBlock, SigmaProjector,
};
pub use spec::{ChainSpec, InteractionKind, TimeSign};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, C64};
use crate::spin_ops::{
    pair_kron, site_matrix, ChainOperator, Matrix9c, Representation, SiteLabel, SpinOpsError,
    TermAccumulator,
};

/// Leakage out of the single-excitation subspace tolerated by
/// [`project_to_sigma`].
pub const SIGMA_LEAKAGE_TOLERANCE: f64 = 1e-12;

/// `‖U†U − I‖` accepted by [`swap_check`].
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid field `{field}`: {message}")]
    InvalidSpec { field: String, message: String },
    #[error("unknown interaction kind `{0}`")]
    UnknownKind(String),
    #[error("operation needs an engineered chain, got `{0}`")]
    NotEngineered(InteractionKind),
    #[error("single-excitation subspace is not invariant: leakage {leakage:e}")]
    SigmaLeakage { leakage: f64 },
    #[error("input is not unitary: max |U†U - I| = {defect:e}")]
    NotUnitary { defect: f64 },
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    BadShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error(transparent)]
    Spin(#[from] SpinOpsError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `S_1 · S_2` on two sites.
pub fn heisenberg_pair() -> Matrix9c {
    [SiteLabel::Sx, SiteLabel::Sy, SiteLabel::Sz]
        .into_iter()
        .map(|l| {
            let s = site_matrix(l);
            pair_kron(&s, &s)
        })
        .fold(Matrix9c::zeros(), |acc, m| acc + m)
}

/// `(S_1·S_2 + (S_1·S_2)²) / 2`.
pub fn squared_mix_pair() -> Matrix9c {
    let h = heisenberg_pair();
    (h + h * h).scale(0.5)
}

/// `A1 A1† + A1† A1` hopping across a bond (up band).
pub fn up_hopping_pair() -> Matrix9c {
    let a = site_matrix(SiteLabel::A1);
    pair_kron(&a, &a.adjoint()) + pair_kron(&a.adjoint(), &a)
}

/// `A2 A2† + A2† A2` hopping across a bond (down band).
pub fn down_hopping_pair() -> Matrix9c {
    let a = site_matrix(SiteLabel::A2);
    pair_kron(&a, &a.adjoint()) + pair_kron(&a.adjoint(), &a)
}

/// The SWAP of two qutrits, `|xy⟩ → |yx⟩`.
pub fn swap_matrix() -> DMatrix<C64> {
    DMatrix::from_fn(9, 9, |r, c| {
        let (x, y) = (c / 3, c % 3);
        if r == y * 3 + x {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn pair_to_dense(m: &Matrix9c) -> DMatrix<C64> {
    DMatrix::from_fn(9, 9, |r, c| m[(r, c)])
}

fn pair_operator(m: &Matrix9c) -> ChainOperator {
    ChainOperator::from_dense(2, pair_to_dense(m)).expect("9x9 matches two sites")
}

/// Two-site Heisenberg interaction `S_1·S_2`.
pub fn heisenberg_two_site() -> ChainOperator {
    pair_operator(&heisenberg_pair())
}

/// Two-site squared mix `h_{1,2} = (S_1·S_2 + (S_1·S_2)²)/2`.
pub fn h12() -> ChainOperator {
    pair_operator(&squared_mix_pair())
}

/// Outcome of [`swap_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwapCheck {
    pub is_swap_up_to_phase: bool,
    /// `e^{iφ}` with `U ≈ e^{iφ}·SWAP`.
    pub phase: C64,
    /// `max |U − e^{iφ}·SWAP|`.
    pub residual: f64,
}

fn swap_residual(u: &DMatrix<C64>, swap: &DMatrix<C64>, angle: f64) -> f64 {
    let p = C64::from_polar(1.0, angle);
    u.iter()
        .zip(swap.iter())
        .map(|(x, s)| (x - p * s).norm())
        .fold(0.0, f64::max)
}

/// Tests whether a 9×9 unitary equals SWAP up to a global phase.
///
/// The phase starts from the Frobenius projection `tr(SWAP† U)` and is then
/// polished by golden-section search on the max-entry residual.
pub fn swap_check(u: &DMatrix<C64>, tol: f64) -> Result<SwapCheck, HamiltonianError> {
    if u.shape() != (9, 9) {
        return Err(HamiltonianError::BadShape {
            expected: 9,
            rows: u.nrows(),
            cols: u.ncols(),
        });
    }
    let defect = linalg::unitarity_defect(u);
    if defect > UNITARITY_TOLERANCE {
        return Err(HamiltonianError::NotUnitary { defect });
    }
    let swap = swap_matrix();
    let overlap = (swap.adjoint() * u).trace();
    let start = if overlap.norm() > 0.0 {
        overlap.arg()
    } else {
        0.0
    };

    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (start - 0.5, start + 0.5);
    for _ in 0..100 {
        let m1 = hi - golden * (hi - lo);
        let m2 = lo + golden * (hi - lo);
        if swap_residual(u, &swap, m1) <= swap_residual(u, &swap, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let polished = 0.5 * (lo + hi);
    let angle = if swap_residual(u, &swap, polished) < swap_residual(u, &swap, start) {
        polished
    } else {
        start
    };
    let residual = swap_residual(u, &swap, angle);
    Ok(SwapCheck {
        is_swap_up_to_phase: residual <= tol,
        phase: C64::from_polar(1.0, angle),
        residual,
    })
}

/// Two-site interactions whose parity-resolved spectra are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Table1Op {
    O1,
    O2,
    O3,
    O4,
    O5,
}

impl Table1Op {
    pub const ALL: [Table1Op; 5] = [
        Table1Op::O1,
        Table1Op::O2,
        Table1Op::O3,
        Table1Op::O4,
        Table1Op::O5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Table1Op::O1 => "O1",
            Table1Op::O2 => "O2",
            Table1Op::O3 => "O3",
            Table1Op::O4 => "O4",
            Table1Op::O5 => "O5",
        }
    }

    /// Operator form as implemented.
    pub fn form(self) -> &'static str {
        match self {
            Table1Op::O1 => "S1x S2x + S1y S2y",
            Table1Op::O2 => "S1z S2z",
            Table1Op::O3 => "S1x^2 S2x^2 + S1y^2 S2y^2",
            Table1Op::O4 => "S1z^2 S2z^2",
            Table1Op::O5 => "S1x^2 S2x + S1y^2 S2y + S1x S2x^2 + S1y S2y^2",
        }
    }

    pub fn pair_matrix(self) -> Matrix9c {
        let x = site_matrix(SiteLabel::Sx);
        let y = site_matrix(SiteLabel::Sy);
        let z = site_matrix(SiteLabel::Sz);
        let (x2, y2, z2) = (x * x, y * y, z * z);
        match self {
            Table1Op::O1 => pair_kron(&x, &x) + pair_kron(&y, &y),
            Table1Op::O2 => pair_kron(&z, &z),
            Table1Op::O3 => pair_kron(&x2, &x2) + pair_kron(&y2, &y2),
            Table1Op::O4 => pair_kron(&z2, &z2),
            // Symmetrised under site exchange.
            Table1Op::O5 => {
                pair_kron(&x2, &x) + pair_kron(&y2, &y) + pair_kron(&x, &x2) + pair_kron(&y, &y2)
            }
        }
    }
}

impl fmt::Display for Table1Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Table1Op {
    type Err = HamiltonianError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Table1Op::ALL
            .into_iter()
            .find(|op| op.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| HamiltonianError::UnknownKind(s.to_string()))
    }
}

/// Two-site operator of a tabulated interaction.
pub fn table1_operator(op: Table1Op) -> ChainOperator {
    pair_operator(&op.pair_matrix())
}

fn bond_pair(kind: InteractionKind) -> Option<Matrix9c> {
    match kind {
        InteractionKind::Heisenberg => Some(heisenberg_pair()),
        InteractionKind::HeisenbergSquaredMix => Some(squared_mix_pair()),
        InteractionKind::Engineered => None,
        other => other.table1().map(Table1Op::pair_matrix),
    }
}

/// Full-space Hamiltonian of `spec`.
///
/// Uniform kinds sum the bond interaction over nearest neighbours. The
/// engineered kind is
/// `Σ a_i (A1_i A1_{i+1}† + h.c.) + b_i (A2_i A2_{i+1}† + h.c.) + Σ B_i Sz_i + C_i Sz_i²`.
pub fn chain_hamiltonian(
    spec: &ChainSpec,
    repr: Representation,
) -> Result<ChainOperator, HamiltonianError> {
    spec.validate()?;
    let n = spec.n;
    if repr == Representation::Dense && n > crate::spin_ops::DENSE_SITE_CAP {
        return Err(SpinOpsError::DenseCapExceeded {
            n,
            cap: crate::spin_ops::DENSE_SITE_CAP,
        }
        .into());
    }
    let mut acc = TermAccumulator::new(n)?;
    let one = C64::new(1.0, 0.0);
    match bond_pair(spec.kind) {
        Some(bond) => {
            for i in 1..n {
                acc.add_pair(&bond, i, i + 1, one)?;
            }
        }
        None => {
            let (up, down) = (up_hopping_pair(), down_hopping_pair());
            let (sz, sz2) = (
                site_matrix(SiteLabel::Sz),
                site_matrix(SiteLabel::SzSquared),
            );
            for i in 1..n {
                acc.add_pair(&up, i, i + 1, C64::from(spec.a[i - 1]))?;
                acc.add_pair(&down, i, i + 1, C64::from(spec.b[i - 1]))?;
            }
            for i in 1..=n {
                acc.add_site(&sz, i, C64::from(spec.field_linear[i - 1]))?;
                acc.add_site(&sz2, i, C64::from(spec.field_quadratic[i - 1]))?;
            }
        }
    }
    Ok(acc.finish(repr)?)
}

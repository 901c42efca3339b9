//! Spin-1 site operators in the `(|1⟩, |0⟩, |1̄⟩)` basis and their embedding
//! into chain operators.

mod basis;
mod chain;
mod permutation;

pub use basis::{power_of_three, Level, ProductState};
pub use chain::{
    embed, embed_pair, two_site, ChainOperator, CsrMatrix, Representation, Storage,
    TermAccumulator, DENSE_SITE_CAP,
};
pub use permutation::{site_exchange, site_inversion, Permutation};

use std::fmt;
use std::str::FromStr;

use nalgebra::SMatrix;
use thiserror::Error;

use crate::linalg::C64;

pub type Matrix3c = SMatrix<C64, 3, 3>;
pub type Matrix9c = SMatrix<C64, 9, 9>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinOpsError {
    #[error("unknown site operator label `{0}`")]
    UnknownLabel(String),
    #[error("site {site} out of range for a chain of {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("two-site operator needs distinct sites, got {0} twice")]
    SameSite(usize),
    #[error("chain of {n} sites exceeds the dense cap of {cap} sites")]
    DenseCapExceeded { n: usize, cap: usize },
    #[error("chain length must be at least 1")]
    EmptyChain,
    #[error("chain of {0} sites overflows the index type")]
    Overflow(usize),
    #[error("invalid product state `{0}`: use one character per site from 1, 0, m")]
    InvalidState(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteLabel {
    Sx,
    Sy,
    Sz,
    /// `Sz·Sx + Sx·Sz`
    Su,
    /// `Sz·Sy + Sy·Sz`
    Sv,
    /// `|1⟩⟨0|`
    A1,
    /// `|1̄⟩⟨0|`
    A2,
    SzSquared,
    Identity,
    Projector(Level),
}

impl SiteLabel {
    pub const ALL: [SiteLabel; 12] = [
        SiteLabel::Sx,
        SiteLabel::Sy,
        SiteLabel::Sz,
        SiteLabel::Su,
        SiteLabel::Sv,
        SiteLabel::A1,
        SiteLabel::A2,
        SiteLabel::SzSquared,
        SiteLabel::Identity,
        SiteLabel::Projector(Level::Up),
        SiteLabel::Projector(Level::Zero),
        SiteLabel::Projector(Level::Down),
    ];

    pub fn is_hermitian(self) -> bool {
        !matches!(self, SiteLabel::A1 | SiteLabel::A2)
    }
}

impl fmt::Display for SiteLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteLabel::Sx => f.write_str("Sx"),
            SiteLabel::Sy => f.write_str("Sy"),
            SiteLabel::Sz => f.write_str("Sz"),
            SiteLabel::Su => f.write_str("Su"),
            SiteLabel::Sv => f.write_str("Sv"),
            SiteLabel::A1 => f.write_str("A1"),
            SiteLabel::A2 => f.write_str("A2"),
            SiteLabel::SzSquared => f.write_str("Sz2"),
            SiteLabel::Identity => f.write_str("I"),
            SiteLabel::Projector(level) => write!(f, "P{}", level.symbol()),
        }
    }
}

impl FromStr for SiteLabel {
    type Err = SpinOpsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let label = match s {
            "Sx" => SiteLabel::Sx,
            "Sy" => SiteLabel::Sy,
            "Sz" => SiteLabel::Sz,
            "Su" => SiteLabel::Su,
            "Sv" => SiteLabel::Sv,
            "A1" => SiteLabel::A1,
            "A2" => SiteLabel::A2,
            "Sz2" | "Sz^2" | "Sz²" => SiteLabel::SzSquared,
            "I" | "Id" | "identity" => SiteLabel::Identity,
            _ => {
                let level = s
                    .strip_prefix('P')
                    .and_then(|rest| {
                        let mut chars = rest.chars();
                        let first = chars.next()?;
                        if chars.next().is_some() {
                            return None;
                        }
                        Level::from_symbol(first)
                    })
                    .ok_or_else(|| SpinOpsError::UnknownLabel(s.to_string()))?;
                SiteLabel::Projector(level)
            }
        };
        Ok(label)
    }
}

/// A 3×3 single-site operator together with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteOperator {
    label: SiteLabel,
    entries: Matrix3c,
}

impl SiteOperator {
    pub fn label(&self) -> SiteLabel {
        self.label
    }

    pub fn matrix(&self) -> &Matrix3c {
        &self.entries
    }

    pub fn adjoint(&self) -> Matrix3c {
        self.entries.adjoint()
    }
}

fn real3(rows: [[f64; 3]; 3]) -> Matrix3c {
    Matrix3c::from_fn(|i, j| C64::new(rows[i][j], 0.0))
}

fn spin_x() -> Matrix3c {
    real3([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
        .scale(std::f64::consts::FRAC_1_SQRT_2)
}

fn spin_y() -> Matrix3c {
    let i = C64::i();
    let z = C64::new(0.0, 0.0);
    Matrix3c::new(z, -i, z, i, z, -i, z, i, z).scale(std::f64::consts::FRAC_1_SQRT_2)
}

fn spin_z() -> Matrix3c {
    real3([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
}

pub fn anticommutator(a: &Matrix3c, b: &Matrix3c) -> Matrix3c {
    a * b + b * a
}

pub fn commutator(a: &Matrix3c, b: &Matrix3c) -> Matrix3c {
    a * b - b * a
}

fn level_transition(to: Level, from: Level) -> Matrix3c {
    let mut m = Matrix3c::zeros();
    m[(to.index(), from.index())] = C64::new(1.0, 0.0);
    m
}

/// Returns the 3×3 matrix of `label` in the `(|1⟩, |0⟩, |1̄⟩)` basis.
pub fn site_operator(label: SiteLabel) -> SiteOperator {
    let entries = match label {
        SiteLabel::Sx => spin_x(),
        SiteLabel::Sy => spin_y(),
        SiteLabel::Sz => spin_z(),
        SiteLabel::Su => anticommutator(&spin_z(), &spin_x()),
        SiteLabel::Sv => anticommutator(&spin_z(), &spin_y()),
        SiteLabel::A1 => level_transition(Level::Up, Level::Zero),
        SiteLabel::A2 => level_transition(Level::Down, Level::Zero),
        SiteLabel::SzSquared => spin_z() * spin_z(),
        SiteLabel::Identity => Matrix3c::identity(),
        SiteLabel::Projector(level) => level_transition(level, level),
    };
    SiteOperator { label, entries }
}

/// Convenience accessor for the bare matrix.
pub fn site_matrix(label: SiteLabel) -> Matrix3c {
    site_operator(label).entries
}

/// Kronecker product of two site matrices, first factor on the more
/// significant site.
pub fn pair_kron(a: &Matrix3c, b: &Matrix3c) -> Matrix9c {
    Matrix9c::from_fn(|r, c| a[(r / 3, c / 3)] * b[(r % 3, c % 3)])
}

/// Deviations of the ladder-operator identities built from `Sx, Sy, Su, Sv`.
///
/// `(Su + iSv + Sx + iSy)/(2√2)` evaluates to `|1⟩⟨0|` exactly, while
/// `(-Su - iSv + Sx + iSy)/(2√2)` evaluates to `|0⟩⟨1̄|`, the adjoint of
/// `A2 = |1̄⟩⟨0|`. Both comparisons are reported for the second identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderIdentityReport {
    /// `max |A1 - (Su + iSv + Sx + iSy)/(2√2)|`
    pub a1_deviation: f64,
    /// `max |A2 - (-Su - iSv + Sx + iSy)/(2√2)|`
    pub a2_deviation: f64,
    /// `max |A2† - (-Su - iSv + Sx + iSy)/(2√2)|`
    pub a2_adjoint_deviation: f64,
}

impl LadderIdentityReport {
    pub const TOLERANCE: f64 = 1e-14;

    pub fn a1_holds(&self) -> bool {
        self.a1_deviation <= Self::TOLERANCE
    }

    pub fn a2_holds(&self) -> bool {
        self.a2_deviation <= Self::TOLERANCE
    }

    pub fn a2_adjoint_holds(&self) -> bool {
        self.a2_adjoint_deviation <= Self::TOLERANCE
    }
}

fn max_entry_diff(a: &Matrix3c, b: &Matrix3c) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn ladder_identity_check() -> LadderIdentityReport {
    let i = C64::i();
    let sx = site_matrix(SiteLabel::Sx);
    let sy = site_matrix(SiteLabel::Sy);
    let su = site_matrix(SiteLabel::Su);
    let sv = site_matrix(SiteLabel::Sv);
    let norm = C64::from(1.0 / (2.0 * std::f64::consts::SQRT_2));

    let raising = sx + sy * i;
    let quadrupole = su + sv * i;
    let up_formula = (quadrupole + raising) * norm;
    let down_formula = (raising - quadrupole) * norm;

    let a1 = site_matrix(SiteLabel::A1);
    let a2 = site_matrix(SiteLabel::A2);
    LadderIdentityReport {
        a1_deviation: max_entry_diff(&a1, &up_formula),
        a2_deviation: max_entry_diff(&a2, &down_formula),
        a2_adjoint_deviation: max_entry_diff(&a2.adjoint(), &down_formula),
    }
}

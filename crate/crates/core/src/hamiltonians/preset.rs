use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ChainSpec, HamiltonianError};
use crate::linalg::SymTridiagonal;

/// Perfect-transfer presets. Both use the couplings `√(i(n−i))/2` in both
/// bands and `B_i = 0`; they differ in the quadratic field `C_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PresetVariant {
    /// `C_i = n/2`. Mirrors each band up to a band phase at `t = π`.
    #[serde(rename = "paper", alias = "half_length")]
    HalfLength,
    /// `C_i = c*` from [`phase_exact_offset`]; mirrors without any phase.
    #[serde(rename = "phase_exact")]
    PhaseExact,
}

impl PresetVariant {
    pub fn name(self) -> &'static str {
        match self {
            PresetVariant::HalfLength => "paper",
            PresetVariant::PhaseExact => "phase_exact",
        }
    }
}

impl fmt::Display for PresetVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetVariant {
    type Err = HamiltonianError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "paper" | "half_length" => Ok(PresetVariant::HalfLength),
            "phase_exact" => Ok(PresetVariant::PhaseExact),
            _ => Err(HamiltonianError::InvalidSpec {
                field: "variant".into(),
                message: format!("unknown preset variant `{s}`"),
            }),
        }
    }
}

/// `√(i(n−i))/2` for `i = 1..n−1`.
pub fn christandl_couplings(n: usize) -> Vec<f64> {
    (1..n)
        .map(|i| ((i * (n - i)) as f64).sqrt() / 2.0)
        .collect()
}

const INTEGER_TOLERANCE: f64 = 1e-9;

/// Mirror parity of a real eigenvector: `true` when symmetric.
fn is_symmetric(v: &[f64]) -> bool {
    let overlap: f64 = v.iter().zip(v.iter().rev()).map(|(x, y)| x * y).sum();
    overlap > 0.0
}

/// Checks that every eigenvalue of the band is an integer whose parity
/// matches the mirror parity of its eigenvector (even ↔ symmetric).
fn band_is_parity_exact(band: &SymTridiagonal) -> bool {
    let (values, vectors) = band.eigen();
    values.iter().enumerate().all(|(k, &e)| {
        let nearest = e.round();
        if (e - nearest).abs() > INTEGER_TOLERANCE {
            return false;
        }
        let even_value = (nearest as i64).rem_euclid(2) == 0;
        let col: Vec<f64> = vectors.column(k).iter().copied().collect();
        even_value == is_symmetric(&col)
    })
}

/// Smallest `c ∈ {0, 1/2, 1, …, 2n}` for which the Christandl band with
/// uniform diagonal `c` has integer eigenvalues of matching mirror parity.
pub fn phase_exact_offset(n: usize) -> Option<f64> {
    let off = christandl_couplings(n);
    (0..=4 * n).map(|k| k as f64 / 2.0).find(|&c| {
        let band = SymTridiagonal::new(vec![c; n], off.clone());
        band_is_parity_exact(&band)
    })
}

/// Perfect-transfer chain of length `n`.
pub fn pst_preset(n: usize, variant: PresetVariant) -> Result<ChainSpec, HamiltonianError> {
    if n < 2 {
        return Err(HamiltonianError::InvalidSpec {
            field: "n".into(),
            message: format!("chain length must be at least 2, got {n}"),
        });
    }
    let couplings = christandl_couplings(n);
    let c = match variant {
        PresetVariant::HalfLength => n as f64 / 2.0,
        PresetVariant::PhaseExact => {
            phase_exact_offset(n).ok_or_else(|| HamiltonianError::InvalidSpec {
                field: "C".into(),
                message: format!("no parity-exact offset found for n = {n}"),
            })?
        }
    };
    ChainSpec::engineered(couplings.clone(), couplings, vec![0.0; n], vec![c; n])
}

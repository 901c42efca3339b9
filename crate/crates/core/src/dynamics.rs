//! Exact time evolution, transfer amplitudes, qutrit transfer fidelity and
//! mirror checks.
//!
//! Propagators follow `U(t) = exp(i·sign·H·t)` with the sign taken from
//! [`TimeSign`]; the default sign is `+1`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hamiltonians::{sigma_block, ChainSpec, HamiltonianError, SigmaBlock, TimeSign};
use crate::linalg::{eig_hermitian, HermitianEigenSystem, LinalgError, C64};
use crate::numfmt::sig17;
use crate::spin_ops::{power_of_three, Permutation, ProductState, SpinOpsError};

/// Allowed deviation of `‖ψ‖` from one.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Grid points whose modulus is within this relative distance of the scan
/// maximum count as ties; the earliest one is reported.
pub const ARGMAX_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state is not normalised: norm = {norm}")]
    NotNormalized { norm: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("time grid must be strictly increasing (violated at index {index})")]
    NonMonotoneGrid { index: usize },
    #[error("time grid is empty")]
    EmptyGrid,
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spin(#[from] SpinOpsError),
}

/// Which basis a [`StateVector`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StateBasis {
    /// Product basis of `3^n` states.
    Full { n: usize },
    /// Single-excitation subspace of `2n+1` states.
    Sigma { n: usize },
}

impl StateBasis {
    pub fn dim(&self) -> usize {
        match *self {
            StateBasis::Full { n } => power_of_three(n).expect("dimension fits"),
            StateBasis::Sigma { n } => 2 * n + 1,
        }
    }
}

/// Normalised amplitude vector with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    basis: StateBasis,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>, basis: StateBasis) -> Result<Self, DynamicsError> {
        if amplitudes.len() != basis.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(DynamicsError::NotNormalized { norm });
        }
        Ok(Self { amplitudes, basis })
    }

    pub fn basis_state(basis: StateBasis, index: usize) -> Result<Self, DynamicsError> {
        let dim = basis.dim();
        if index >= dim {
            return Err(DynamicsError::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, basis })
    }

    pub fn product(state: &ProductState) -> Self {
        Self::basis_state(StateBasis::Full { n: state.n_sites() }, state.index())
            .expect("index in range")
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn basis(&self) -> StateBasis {
        self.basis
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Eigendecomposition of a Hamiltonian reused across time points.
#[derive(Debug, Clone)]
pub struct EvolutionCache {
    eigen: HermitianEigenSystem,
    sign: f64,
    fingerprint: u64,
}

fn fingerprint(h: &DMatrix<C64>) -> u64 {
    let mut hasher = DefaultHasher::new();
    h.nrows().hash(&mut hasher);
    for z in h.iter() {
        z.re.to_bits().hash(&mut hasher);
        z.im.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}

impl EvolutionCache {
    pub fn new(h: &DMatrix<C64>, sign: TimeSign) -> Result<Self, DynamicsError> {
        Ok(Self {
            eigen: eig_hermitian(h)?,
            sign: sign.value(),
            fingerprint: fingerprint(h),
        })
    }

    pub fn for_block(block: &SigmaBlock, sign: TimeSign) -> Result<Self, DynamicsError> {
        Self::new(&block.matrix, sign)
    }

    pub fn eigen(&self) -> &HermitianEigenSystem {
        &self.eigen
    }

    /// Hash of the source matrix bits.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector, DynamicsError> {
        if psi.amplitudes.len() != self.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: self.dim(),
                found: psi.amplitudes.len(),
            });
        }
        Ok(StateVector {
            amplitudes: self.eigen.apply_exp(&psi.amplitudes, t, self.sign)?,
            basis: psi.basis,
        })
    }

    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        self.eigen.propagator(t, self.sign)
    }

    /// Spectral weights `(λ_k, ⟨target|v_k⟩⟨v_k|source⟩)` so that
    /// `⟨target|U(t)|source⟩ = Σ_k w_k exp(i·sign·λ_k·t)`.
    pub fn amplitude_kernel(
        &self,
        source: usize,
        target: usize,
    ) -> Result<Vec<(f64, C64)>, DynamicsError> {
        let dim = self.dim();
        for index in [source, target] {
            if index >= dim {
                return Err(DynamicsError::IndexOutOfRange { index, dim });
            }
        }
        let v = &self.eigen.eigenvectors;
        Ok((0..dim)
            .map(|k| {
                (
                    self.eigen.eigenvalues[k],
                    v[(target, k)] * v[(source, k)].conj(),
                )
            })
            .filter(|(_, w)| w.norm() > 0.0)
            .collect())
    }

    /// `⟨target|U(t)|source⟩`.
    pub fn amplitude(&self, source: usize, target: usize, t: f64) -> Result<C64, DynamicsError> {
        Ok(evaluate_kernel(
            &self.amplitude_kernel(source, target)?,
            t,
            self.sign,
        ))
    }
}

fn evaluate_kernel(kernel: &[(f64, C64)], t: f64, sign: f64) -> C64 {
    kernel
        .iter()
        .map(|(lambda, w)| w * C64::from_polar(1.0, sign * lambda * t))
        .sum()
}

/// `exp(i·sign·H·t) ψ`.
pub fn evolve(
    h: &DMatrix<C64>,
    psi: &StateVector,
    t: f64,
    sign: TimeSign,
) -> Result<StateVector, DynamicsError> {
    EvolutionCache::new(h, sign)?.evolve(psi, t)
}

/// `⟨target|exp(i·sign·H·t)|source⟩` for basis indices.
pub fn transfer_amplitude(
    h: &DMatrix<C64>,
    source: usize,
    target: usize,
    t: f64,
    sign: TimeSign,
) -> Result<C64, DynamicsError> {
    EvolutionCache::new(h, sign)?.amplitude(source, target, t)
}

/// `start, start + step, …` up to and including `stop` (within `1e-9` steps).
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0, "step must be positive");
    if stop < start {
        return Vec::new();
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start + k as f64 * step).collect()
}

fn check_grid(grid: &[f64]) -> Result<(), DynamicsError> {
    if grid.is_empty() {
        return Err(DynamicsError::EmptyGrid);
    }
    match grid
        .windows(2)
        .position(|w| w[1] <= w[0] || !w[1].is_finite())
    {
        Some(index) => Err(DynamicsError::NonMonotoneGrid { index: index + 1 }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub t: f64,
    pub abs: f64,
    pub arg: f64,
}

/// Time series of a transfer amplitude with its maximum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeScan {
    pub points: Vec<ScanPoint>,
    pub max_abs: f64,
    /// Earliest grid time whose modulus ties the maximum.
    pub argmax_time: f64,
}

impl AmplitudeScan {
    /// CSV with header `t,abs,arg`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,abs,arg")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", sig17(p.t), sig17(p.abs), sig17(p.arg))?;
        }
        Ok(())
    }
}

/// Evaluates `⟨target|U(t)|source⟩` on a strictly increasing grid.
pub fn amplitude_scan(
    cache: &EvolutionCache,
    source: usize,
    target: usize,
    grid: &[f64],
) -> Result<AmplitudeScan, DynamicsError> {
    check_grid(grid)?;
    let kernel = cache.amplitude_kernel(source, target)?;
    let sign = cache.sign;
    let points: Vec<ScanPoint> = grid
        .par_iter()
        .map(|&t| {
            let z = evaluate_kernel(&kernel, t, sign);
            ScanPoint {
                t,
                abs: z.norm(),
                arg: z.arg(),
            }
        })
        .collect();
    let max_abs = points.iter().map(|p| p.abs).fold(0.0, f64::max);
    let argmax_time = points
        .iter()
        .find(|p| p.abs >= max_abs * (1.0 - ARGMAX_TIE_TOLERANCE))
        .map(|p| p.t)
        .expect("grid is non-empty");
    Ok(AmplitudeScan {
        points,
        max_abs,
        argmax_time,
    })
}

/// Qutrit `α|0⟩ + β|1⟩ + γ|1̄⟩` to be encoded on the first site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Qutrit {
    pub vacuum: C64,
    pub up: C64,
    pub down: C64,
}

impl Qutrit {
    pub fn new(vacuum: C64, up: C64, down: C64) -> Result<Self, DynamicsError> {
        let norm = (vacuum.norm_sqr() + up.norm_sqr() + down.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(DynamicsError::NotNormalized { norm });
        }
        Ok(Self { vacuum, up, down })
    }

    /// Normalises arbitrary nonzero components.
    pub fn normalized(vacuum: C64, up: C64, down: C64) -> Self {
        let norm = (vacuum.norm_sqr() + up.norm_sqr() + down.norm_sqr()).sqrt();
        assert!(norm > 0.0, "zero qutrit");
        let s = C64::from(1.0 / norm);
        Self {
            vacuum: vacuum * s,
            up: up * s,
            down: down * s,
        }
    }

    /// `(|0⟩ + |1⟩ + |1̄⟩)/√3`.
    pub fn balanced() -> Self {
        Self::normalized(C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    fn encode(&self, basis: crate::hamiltonians::SigmaBasis, site: usize) -> DVector<C64> {
        let mut v = DVector::zeros(basis.len());
        v[basis.vacuum()] = self.vacuum;
        v[basis.up(site)] = self.up;
        v[basis.down(site)] = self.down;
        v
    }
}

/// Ten qutrit inputs used by the transfer checks: the three basis states,
/// the balanced superposition, the three two-level superpositions and
/// three states with relative phases.
pub fn qutrit_test_set() -> Vec<Qutrit> {
    let (zero, one) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    vec![
        Qutrit::normalized(one, zero, zero),
        Qutrit::normalized(zero, one, zero),
        Qutrit::normalized(zero, zero, one),
        Qutrit::balanced(),
        Qutrit::normalized(one, one, zero),
        Qutrit::normalized(one, zero, one),
        Qutrit::normalized(zero, one, one),
        Qutrit::normalized(one, C64::new(0.0, 1.0), zero),
        Qutrit::normalized(one, w, w * w),
        Qutrit::normalized(C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(-0.4, 0.3)),
    ]
}

/// End-to-end coefficients of the three encoding components at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferCoefficients {
    /// `⟨0…0|U|0…0⟩`
    pub vacuum: C64,
    /// `⟨0…01|U|10…0⟩`
    pub up: C64,
    /// `⟨0…01̄|U|1̄0…0⟩`
    pub down: C64,
}

impl TransferCoefficients {
    /// Phases `(θ_up, θ_down)` aligning both bands with the vacuum.
    pub fn optimal_phase_correction(&self) -> (f64, f64) {
        let reference = self.vacuum.arg();
        let align = |z: C64| {
            if z.norm() > 0.0 {
                reference - z.arg()
            } else {
                0.0
            }
        };
        (align(self.up), align(self.down))
    }
}

/// Single-excitation block and its propagator for an engineered chain.
#[derive(Debug, Clone)]
pub struct SigmaPropagator {
    block: SigmaBlock,
    cache: EvolutionCache,
}

impl SigmaPropagator {
    pub fn new(spec: &ChainSpec) -> Result<Self, DynamicsError> {
        let block = sigma_block(spec)?;
        let cache = EvolutionCache::for_block(&block, spec.time_sign)?;
        Ok(Self { block, cache })
    }

    pub fn block(&self) -> &SigmaBlock {
        &self.block
    }

    pub fn cache(&self) -> &EvolutionCache {
        &self.cache
    }

    pub fn coefficients(&self, t: f64) -> Result<TransferCoefficients, DynamicsError> {
        let basis = self.block.basis();
        let n = basis.n_sites();
        Ok(TransferCoefficients {
            vacuum: self.cache.amplitude(basis.vacuum(), basis.vacuum(), t)?,
            up: self.cache.amplitude(basis.up(1), basis.up(n), t)?,
            down: self.cache.amplitude(basis.down(1), basis.down(n), t)?,
        })
    }

    /// Fidelity `|⟨target|ψ(t)⟩|²` of moving `qutrit` from site 1 to site n,
    /// optionally after the optimal band phase correction.
    pub fn fidelity(
        &self,
        qutrit: &Qutrit,
        t: f64,
        phase_correct: bool,
    ) -> Result<f64, DynamicsError> {
        let basis = self.block.basis();
        let n = basis.n_sites();
        let start = StateVector::new(qutrit.encode(basis, 1), StateBasis::Sigma { n })?;
        let mut evolved = self.cache.evolve(&start, t)?.amplitudes;
        if phase_correct {
            let (theta_up, theta_down) = self.coefficients(t)?.optimal_phase_correction();
            let (pu, pd) = (
                C64::from_polar(1.0, theta_up),
                C64::from_polar(1.0, theta_down),
            );
            for site in 1..=n {
                evolved[basis.up(site)] *= pu;
                evolved[basis.down(site)] *= pd;
            }
        }
        let target = qutrit.encode(basis, n);
        Ok(target.dotc(&evolved).norm_sqr())
    }
}

/// Qutrit transfer fidelity through an engineered chain (see
/// [`SigmaPropagator::fidelity`]).
pub fn qutrit_transfer_fidelity(
    spec: &ChainSpec,
    qutrit: &Qutrit,
    t: f64,
    phase_correct: bool,
) -> Result<f64, DynamicsError> {
    SigmaPropagator::new(spec)?.fidelity(qutrit, t, phase_correct)
}

/// Fidelity on a time grid.
pub fn fidelity_series(
    spec: &ChainSpec,
    qutrit: &Qutrit,
    grid: &[f64],
    phase_correct: bool,
) -> Result<Vec<(f64, f64)>, DynamicsError> {
    check_grid(grid)?;
    let prop = SigmaPropagator::new(spec)?;
    grid.par_iter()
        .map(|&t| prop.fidelity(qutrit, t, phase_correct).map(|f| (t, f)))
        .collect()
}

/// CSV with header `t,fidelity`.
pub fn write_fidelity_csv<W: Write>(series: &[(f64, f64)], mut out: W) -> io::Result<()> {
    writeln!(out, "t,fidelity")?;
    for (t, f) in series {
        writeln!(out, "{},{}", sig17(*t), sig17(*f))?;
    }
    Ok(())
}

/// Outcome of [`mirror_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MirrorReport {
    pub is_mirror: bool,
    /// `φ` in `U(t) ≈ e^{iφ} M`.
    pub phase: f64,
    /// `arg tr(P_even U)`.
    pub even_phase: f64,
    /// `arg tr(P_odd U)`; differs from `even_phase` by `π` for a mirror.
    pub odd_phase: f64,
    /// `max |U(t) − e^{iφ} M|`.
    pub residual: f64,
}

/// Tests whether `U(t) = e^{iφ} M`, i.e. whether even (mirror-symmetric)
/// eigenvectors acquire phase `e^{iφ}` and odd ones `−e^{iφ}`.
pub fn mirror_check(
    h: &DMatrix<C64>,
    mirror: &Permutation,
    t: f64,
    sign: TimeSign,
    tol: f64,
) -> Result<MirrorReport, DynamicsError> {
    if h.nrows() != mirror.len() {
        return Err(DynamicsError::DimensionMismatch {
            expected: mirror.len(),
            found: h.nrows(),
        });
    }
    let u = EvolutionCache::new(h, sign)?.unitary(t);
    let dim = mirror.len();
    // tr(M† U) = Σ_k U[M k, k]; tr(U) gives the even/odd split with it.
    let mirrored_trace: C64 = (0..dim).map(|k| u[(mirror.image(k), k)]).sum();
    let trace = u.trace();
    let even = (trace + mirrored_trace) * 0.5;
    let odd = (trace - mirrored_trace) * 0.5;
    let phase = mirrored_trace.arg();
    let p = C64::from_polar(1.0, phase);
    let mut residual: f64 = 0.0;
    for c in 0..dim {
        for r in 0..dim {
            let m = if mirror.image(c) == r {
                p
            } else {
                C64::new(0.0, 0.0)
            };
            residual = residual.max((u[(r, c)] - m).norm());
        }
    }
    Ok(MirrorReport {
        is_mirror: residual <= tol,
        phase,
        even_phase: even.arg(),
        odd_phase: odd.arg(),
        residual,
    })
}

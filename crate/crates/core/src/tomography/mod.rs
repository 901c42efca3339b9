//! Parameter estimation for engineered chains from first-site records.
//!
//! The chain is initialised with one excitation on site 1 and only that
//! site is measured. Each band of the single-excitation block is a Jacobi
//! matrix, so its survival amplitude
//! `f(t) = Σ_j w_j exp(i·sign·E_j·t)` fixes the band completely:
//! harmonic retrieval gives `(E_j, w_j)` and a Lanczos run rebuilds the
//! band. Doing this for both excitation types separates `B_i` from `C_i`.
//!
//! Recurrence probabilities `|f|²` only reveal eigenvalue gaps;
//! [`probability_mode_analysis`] reports those without attempting an
//! assignment.

mod jacobi;
mod pencil;
mod record;

pub use jacobi::{jacobi_reconstruct, spectral_data, MIN_EIGENVALUE_GAP};
pub use pencil::{
    fit_amplitudes, hankel_singular_values, matrix_pencil, model_residual, numerical_rank,
    HarmonicFit,
};
pub use record::{
    channel_band, survival_amplitudes, synthesize_record, Channel, MeasurementRecord, RecordMode,
    RecordValues, GRID_UNIFORMITY_TOLERANCE,
};

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::hamiltonians::{ChainSpec, HamiltonianError};
use crate::linalg::{LinalgError, SymTridiagonal, C64};

/// `σ_n / σ_1` below which the pencil is flagged as ill-conditioned.
pub const CONDITIONING_THRESHOLD: f64 = 1e-8;
/// Recovered weights below `−NEGATIVE_WEIGHT_TOLERANCE` are flagged.
pub const NEGATIVE_WEIGHT_TOLERANCE: f64 = 1e-9;
/// Relative singular-value cutoff used to estimate the number of distinct
/// frequencies in a probability record.
pub const RANK_TOLERANCE: f64 = 1e-9;
/// Frequencies closer than this (relative to `max(1, |ω|)`) are merged when
/// folding `±ω` pairs.
pub const FOLD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("time grid is not uniform (first deviation at index {index})")]
    NonUniformGrid { index: usize },
    #[error("too few samples: need at least {needed}, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("sampling violates the Nyquist bound: {bound} * {step} >= pi")]
    NyquistViolation { bound: f64, step: f64 },
    #[error("expected a {expected} record, got {found}")]
    WrongMode {
        expected: RecordMode,
        found: RecordMode,
    },
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("eigenvalue {value} is repeated; the Jacobi matrix is not unique")]
    RepeatedEigenvalue { value: f64 },
    #[error("weight {index} is {weight}; the chain decouples from the first site and cannot be reconstructed")]
    ZeroWeight { index: usize, weight: f64 },
    #[error("invalid spectral data: {0}")]
    InvalidSpectralData(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{stage} failed on the {channel} channel: {source}")]
    Stage {
        stage: &'static str,
        channel: Channel,
        #[source]
        source: Box<TomographyError>,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<csv::Error> for TomographyError {
    fn from(e: csv::Error) -> Self {
        TomographyError::Io(e.to_string())
    }
}

impl From<std::io::Error> for TomographyError {
    fn from(e: std::io::Error) -> Self {
        TomographyError::Io(e.to_string())
    }
}

/// Eigenvalues of a band (ascending) and the weights of the first site on
/// the corresponding eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Checks ascending order, non-negative weights (to
    /// [`NEGATIVE_WEIGHT_TOLERANCE`]) and unit total weight.
    pub fn validate(&self) -> Result<(), TomographyError> {
        if self.eigenvalues.len() != self.weights.len() {
            return Err(TomographyError::InvalidSpectralData(
                "length mismatch".into(),
            ));
        }
        if self.eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(TomographyError::InvalidSpectralData(
                "eigenvalues not ascending".into(),
            ));
        }
        if let Some(w) = self
            .weights
            .iter()
            .find(|&&w| w < -NEGATIVE_WEIGHT_TOLERANCE)
        {
            return Err(TomographyError::InvalidSpectralData(format!(
                "negative weight {w}"
            )));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(TomographyError::InvalidSpectralData(format!(
                "weights sum to {total}"
            )));
        }
        Ok(())
    }
}

/// Quality report of one harmonic retrieval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionDiagnostics {
    pub order: usize,
    pub samples: usize,
    pub step: f64,
    pub singular_values: Vec<f64>,
    /// `σ_order / σ_1`.
    pub conditioning: f64,
    pub ill_conditioned: bool,
    pub min_weight: f64,
    pub negative_weight: bool,
    /// Largest imaginary part of a fitted weight before it was discarded.
    pub max_imaginary_weight: f64,
    /// Weight sum before renormalisation; one for a faithful record.
    pub raw_weight_sum: f64,
    /// Largest deviation between the record and the refitted model.
    pub fit_residual: f64,
    pub pole_damping: f64,
    /// `bound · Δt`, when a frequency bound was supplied.
    pub nyquist_product: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction {
    pub spectral: SpectralData,
    pub diagnostics: ExtractionDiagnostics,
}

fn check_nyquist(bound: Option<f64>, step: f64) -> Result<Option<f64>, TomographyError> {
    match bound {
        Some(b) if b * step >= PI => Err(TomographyError::NyquistViolation { bound: b, step }),
        Some(b) => Ok(Some(b * step)),
        None => Ok(None),
    }
}

/// Recovers `(E_j, w_j)` from an amplitude record with a pencil of the
/// given model order (the band dimension).
///
/// `frequency_bound`, if known, must satisfy `bound · Δt < π`; it bounds
/// `|E_j|`.
pub fn extract_spectrum(
    record: &MeasurementRecord,
    order: usize,
    frequency_bound: Option<f64>,
) -> Result<Extraction, TomographyError> {
    let samples = match &record.values {
        RecordValues::Amplitude(v) => v,
        RecordValues::Probability(_) => {
            return Err(TomographyError::WrongMode {
                expected: RecordMode::Amplitude,
                found: RecordMode::Probability,
            })
        }
    };
    if record.len() < 4 * order {
        return Err(TomographyError::TooFewSamples {
            needed: 4 * order,
            found: record.len(),
        });
    }
    let step = record.uniform_step()?;
    let nyquist_product = check_nyquist(frequency_bound, step)?;
    let fit = matrix_pencil(&record.times, samples, order)?;
    let sign = record.time_sign.value();

    let mut pairs: Vec<(f64, C64)> = fit
        .frequencies
        .iter()
        .map(|w| w / sign)
        .zip(fit.amplitudes.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let raw_weight_sum: f64 = pairs.iter().map(|(_, c)| c.re).sum();
    let max_imaginary_weight = pairs.iter().map(|(_, c)| c.im.abs()).fold(0.0, f64::max);
    let eigenvalues: Vec<f64> = pairs.iter().map(|(e, _)| *e).collect();
    let weights: Vec<f64> = pairs.iter().map(|(_, c)| c.re / raw_weight_sum).collect();
    let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Extraction {
        spectral: SpectralData {
            eigenvalues,
            weights,
        },
        diagnostics: ExtractionDiagnostics {
            order,
            samples: record.len(),
            step,
            conditioning: fit.conditioning,
            ill_conditioned: fit.conditioning < CONDITIONING_THRESHOLD,
            singular_values: fit.singular_values,
            min_weight,
            negative_weight: min_weight < -NEGATIVE_WEIGHT_TOLERANCE,
            max_imaginary_weight,
            raw_weight_sum,
            fit_residual: fit.fit_residual,
            pole_damping: fit.pole_damping,
            nyquist_product,
        },
    })
}

/// One distinct eigenvalue gap seen in a probability record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapComponent {
    pub gap: f64,
    /// `Σ w_j w_k` over the pairs sharing this gap.
    pub weight_product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    /// Distinct nonzero gaps, ascending.
    pub gaps: Vec<GapComponent>,
    /// `Σ_j w_j²`, the constant part of the record.
    pub zero_gap_weight: f64,
    /// Exponentials used in the fit, `≤ n(n−1) + 1`.
    pub model_order: usize,
    /// `n(n−1)/2` pairs for an `n`-level band.
    pub expected_pairs: usize,
    /// Fewer distinct gaps than pairs: some gaps coincide and their
    /// multiplicities are not recoverable from this record.
    pub unresolved_multiplicity: bool,
    pub fit_residual: f64,
    pub conditioning: f64,
}

/// Gaps `|E_j − E_k|` and weight products from a probability record of an
/// `n`-level band.
///
/// `|f(t)|² = Σ_{j,k} w_j w_k exp(i(E_j − E_k)t)` is a real signal with
/// tones at `±gap`; the fit order is the numerical rank of the data capped
/// at `n(n−1) + 1`, and the two tones of each gap are folded together.
pub fn probability_mode_analysis(
    record: &MeasurementRecord,
    n: usize,
    gap_bound: Option<f64>,
) -> Result<GapReport, TomographyError> {
    let samples: Vec<C64> = match &record.values {
        RecordValues::Probability(v) => v.iter().map(|&p| C64::new(p, 0.0)).collect(),
        RecordValues::Amplitude(_) => {
            return Err(TomographyError::WrongMode {
                expected: RecordMode::Probability,
                found: RecordMode::Amplitude,
            })
        }
    };
    if n == 0 {
        return Err(TomographyError::InvalidRecord(
            "band dimension must be positive".into(),
        ));
    }
    let step = record.uniform_step()?;
    check_nyquist(gap_bound, step)?;
    let max_order = n * (n - 1) + 1;
    let order = numerical_rank(&samples, RANK_TOLERANCE).clamp(1, max_order);
    let fit = matrix_pencil(&record.times, &samples, order)?;

    let mut tones: Vec<(f64, f64)> = fit
        .frequencies
        .iter()
        .map(|w| w.abs())
        .zip(fit.amplitudes.iter().map(|c| c.re))
        .collect();
    tones.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut clusters: Vec<(Vec<f64>, f64)> = Vec::new();
    for (w, c) in tones {
        match clusters.last_mut() {
            Some((ws, sum)) if (w - ws[0]).abs() <= FOLD_TOLERANCE * w.max(1.0) => {
                ws.push(w);
                *sum += c;
            }
            _ => clusters.push((vec![w], c)),
        }
    }
    let mut zero_gap_weight = 0.0;
    let mut gaps = Vec::new();
    for (ws, sum) in clusters {
        let mean = ws.iter().sum::<f64>() / ws.len() as f64;
        if mean <= FOLD_TOLERANCE {
            zero_gap_weight += sum;
        } else {
            gaps.push(GapComponent {
                gap: mean,
                weight_product: sum / 2.0,
            });
        }
    }
    let expected_pairs = n * (n - 1) / 2;
    Ok(GapReport {
        unresolved_multiplicity: gaps.len() < expected_pairs,
        gaps,
        zero_gap_weight,
        model_order: order,
        expected_pairs,
        fit_residual: fit.fit_residual,
        conditioning: fit.conditioning,
    })
}

/// Per-channel outcome of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub channel: Channel,
    pub spectral: SpectralData,
    pub diagnostics: ExtractionDiagnostics,
    /// Reconstructed band diagonal (`C_i ± B_i`).
    pub diagonal: Vec<f64>,
    /// Reconstructed band couplings (magnitudes).
    pub off_diagonal: Vec<f64>,
}

/// Deviation of the estimates from a known truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    pub a_abs: Vec<f64>,
    pub b_abs: Vec<f64>,
    #[serde(rename = "B")]
    pub field_linear: Vec<f64>,
    #[serde(rename = "C")]
    pub field_quadratic: Vec<f64>,
    pub max_abs_error: f64,
    /// Largest `|estimate − truth| / |truth|`, using the absolute error
    /// where the truth is zero.
    pub max_relative_error: f64,
    /// Largest eigenvalue error per band.
    pub up_eigenvalue_error: f64,
    pub down_eigenvalue_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyDiagnostics {
    pub up: ChannelReport,
    pub down: ChannelReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyResult {
    pub n: usize,
    pub mode: RecordMode,
    pub a_abs: Vec<f64>,
    pub b_abs: Vec<f64>,
    #[serde(rename = "B")]
    pub field_linear: Vec<f64>,
    #[serde(rename = "C")]
    pub field_quadratic: Vec<f64>,
    pub residuals: Option<Residuals>,
    pub diagnostics: TomographyDiagnostics,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TomographyOptions {
    pub shots: Option<u64>,
    pub seed: u64,
    /// A priori bound on `|E_j|`; see [`extract_spectrum`].
    pub frequency_bound: Option<f64>,
}

fn staged<T>(
    stage: &'static str,
    channel: Channel,
    r: Result<T, TomographyError>,
) -> Result<T, TomographyError> {
    r.map_err(|e| TomographyError::Stage {
        stage,
        channel,
        source: Box::new(e),
    })
}

fn analyse_channel(
    record: &MeasurementRecord,
    n: usize,
    bound: Option<f64>,
) -> Result<ChannelReport, TomographyError> {
    let channel = record.channel;
    let extraction = staged(
        "spectrum extraction",
        channel,
        extract_spectrum(record, n, bound),
    )?;
    let band = staged(
        "Jacobi reconstruction",
        channel,
        jacobi_reconstruct(&extraction.spectral),
    )?;
    Ok(ChannelReport {
        channel,
        spectral: extraction.spectral,
        diagnostics: extraction.diagnostics,
        diagonal: band.diagonal,
        off_diagonal: band.off_diagonal,
    })
}

/// Estimates `|a|`, `|b|`, `B`, `C` of an `n`-site chain from one amplitude
/// record per channel. `B_i = (d↑_i − d↓_i)/2`, `C_i = (d↑_i + d↓_i)/2`.
pub fn tomography_from_records(
    up: &MeasurementRecord,
    down: &MeasurementRecord,
    n: usize,
    frequency_bound: Option<f64>,
) -> Result<TomographyResult, TomographyError> {
    if up.channel != Channel::Up || down.channel != Channel::Down {
        return Err(TomographyError::InvalidRecord(
            "records must be (up, down)".into(),
        ));
    }
    for r in [up, down] {
        if r.mode() != RecordMode::Amplitude {
            return Err(TomographyError::UnsupportedMode(
                "parameter estimation needs amplitude records; use probability_mode_analysis for probability records".into(),
            ));
        }
    }
    let (up_report, down_report) = rayon::join(
        || analyse_channel(up, n, frequency_bound),
        || analyse_channel(down, n, frequency_bound),
    );
    let (up_report, down_report) = (up_report?, down_report?);
    let field_linear = up_report
        .diagonal
        .iter()
        .zip(&down_report.diagonal)
        .map(|(u, d)| (u - d) / 2.0)
        .collect();
    let field_quadratic = up_report
        .diagonal
        .iter()
        .zip(&down_report.diagonal)
        .map(|(u, d)| (u + d) / 2.0)
        .collect();
    Ok(TomographyResult {
        n,
        mode: RecordMode::Amplitude,
        a_abs: up_report.off_diagonal.clone(),
        b_abs: down_report.off_diagonal.clone(),
        field_linear,
        field_quadratic,
        residuals: None,
        diagnostics: TomographyDiagnostics {
            up: up_report,
            down: down_report,
        },
        shots: up.shots,
        seed: up.seed,
    })
}

/// Largest Gershgorin radius of a band, which bounds `|E_j|`.
pub fn gershgorin_bound(band: &SymTridiagonal) -> f64 {
    let n = band.dim();
    (0..n)
        .map(|i| {
            let left = if i > 0 {
                band.off_diagonal[i - 1].abs()
            } else {
                0.0
            };
            let right = if i + 1 < n {
                band.off_diagonal[i].abs()
            } else {
                0.0
            };
            band.diagonal[i].abs() + left + right
        })
        .fold(0.0, f64::max)
}

fn deviations(estimate: &[f64], truth: &[f64]) -> (Vec<f64>, f64) {
    let abs: Vec<f64> = estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).abs())
        .collect();
    let rel = abs
        .iter()
        .zip(truth)
        .map(|(d, t)| if *t != 0.0 { d / t.abs() } else { *d })
        .fold(0.0, f64::max);
    (abs, rel)
}

fn eigenvalue_error(estimate: &[f64], band: &SymTridiagonal) -> f64 {
    let (truth, _) = band.eigen();
    if truth.len() != estimate.len() {
        return f64::INFINITY;
    }
    estimate
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// A priori bound on `|E_j|` for both bands of `spec` (Gershgorin).
pub fn band_frequency_bound(spec: &ChainSpec) -> Result<f64, TomographyError> {
    Ok(gershgorin_bound(&channel_band(spec, Channel::Up)?)
        .max(gershgorin_bound(&channel_band(spec, Channel::Down)?)))
}

/// The `(up, down)` records an experiment on `hidden` would produce.
pub fn synthesize_channels(
    hidden: &ChainSpec,
    times: &[f64],
    mode: RecordMode,
    options: TomographyOptions,
) -> Result<(MeasurementRecord, MeasurementRecord), TomographyError> {
    let record = |channel| {
        staged(
            "record synthesis",
            channel,
            synthesize_record(
                hidden,
                channel,
                mode,
                times,
                options.shots,
                options.seed ^ channel_salt(channel),
            ),
        )
    };
    Ok((record(Channel::Up)?, record(Channel::Down)?))
}

/// Fills `result.residuals` with the deviations from `hidden`.
pub fn score_against(
    result: &mut TomographyResult,
    hidden: &ChainSpec,
) -> Result<(), TomographyError> {
    let up_band = channel_band(hidden, Channel::Up)?;
    let down_band = channel_band(hidden, Channel::Down)?;
    let truth_a: Vec<f64> = hidden.a.iter().map(|x| x.abs()).collect();
    let truth_b: Vec<f64> = hidden.b.iter().map(|x| x.abs()).collect();
    let (a_abs, ra) = deviations(&result.a_abs, &truth_a);
    let (b_abs, rb) = deviations(&result.b_abs, &truth_b);
    let (field_linear, rl) = deviations(&result.field_linear, &hidden.field_linear);
    let (field_quadratic, rq) = deviations(&result.field_quadratic, &hidden.field_quadratic);
    let max_abs_error = a_abs
        .iter()
        .chain(&b_abs)
        .chain(&field_linear)
        .chain(&field_quadratic)
        .copied()
        .fold(0.0, f64::max);
    result.residuals = Some(Residuals {
        up_eigenvalue_error: eigenvalue_error(
            &result.diagnostics.up.spectral.eigenvalues,
            &up_band,
        ),
        down_eigenvalue_error: eigenvalue_error(
            &result.diagnostics.down.spectral.eigenvalues,
            &down_band,
        ),
        a_abs,
        b_abs,
        field_linear,
        field_quadratic,
        max_abs_error,
        max_relative_error: ra.max(rb).max(rl).max(rq),
    });
    Ok(())
}

/// Synthesises both records of `hidden` on `times`, runs the pipeline on
/// them alone and scores the estimates against `hidden`.
///
/// Without an explicit `frequency_bound` the Gershgorin bound of the hidden
/// bands stands in for the experimenter's a priori energy scale.
pub fn full_tomography(
    hidden: &ChainSpec,
    times: &[f64],
    mode: RecordMode,
    options: TomographyOptions,
) -> Result<TomographyResult, TomographyError> {
    if mode == RecordMode::Probability {
        return Err(TomographyError::UnsupportedMode(
            "probability records determine eigenvalue gaps only; parameter estimation runs in amplitude mode".into(),
        ));
    }
    let bound = match options.frequency_bound {
        Some(b) => b,
        None => band_frequency_bound(hidden)?,
    };
    let (up, down) = synthesize_channels(hidden, times, mode, options)?;
    let mut result = tomography_from_records(&up, &down, hidden.n, Some(bound))?;
    result.shots = options.shots;
    result.seed = options.shots.map(|_| options.seed);
    score_against(&mut result, hidden)?;
    Ok(result)
}

/// Keeps the two channels' noise streams independent under one seed.
fn channel_salt(channel: Channel) -> u64 {
    match channel {
        Channel::Up => 0,
        Channel::Down => 0x9E37_79B9_7F4A_7C15,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::uniform_grid;
    use crate::hamiltonians::{pst_preset, PresetVariant};
    use crate::linalg::testing::rng;
    use rand::Rng;

    fn grid(count: usize, step: f64) -> Vec<f64> {
        (0..count).map(|k| k as f64 * step).collect()
    }

    #[test]
    fn two_level_record() {
        let spec = pst_preset(2, PresetVariant::HalfLength).unwrap();
        let times = grid(40, 0.3);
        let rec =
            synthesize_record(&spec, Channel::Up, RecordMode::Amplitude, &times, None, 0).unwrap();
        let RecordValues::Amplitude(v) = &rec.values else {
            panic!()
        };
        assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        // Up block [[1, 1/2], [1/2, 1]]: f(t) = e^{it} cos(t/2).
        for (t, f) in times.iter().zip(v) {
            assert!((f - C64::from_polar((t / 2.0).cos(), *t)).norm() < 1e-13);
        }
        let ex = extract_spectrum(&rec, 2, Some(2.0)).unwrap();
        assert!((ex.spectral.eigenvalues[0] - 0.5).abs() < 1e-10);
        assert!((ex.spectral.eigenvalues[1] - 1.5).abs() < 1e-10);
        for w in &ex.spectral.weights {
            assert!((w - 0.5).abs() < 1e-10);
        }
        ex.spectral.validate().unwrap();
        assert!(!ex.diagnostics.ill_conditioned && !ex.diagnostics.negative_weight);
    }

    #[test]
    fn negative_time_sign_record() {
        let spec = pst_preset(3, PresetVariant::PhaseExact)
            .unwrap()
            .with_time_sign(crate::hamiltonians::TimeSign::Negative);
        let rec = synthesize_record(
            &spec,
            Channel::Down,
            RecordMode::Amplitude,
            &grid(60, 0.25),
            None,
            0,
        )
        .unwrap();
        let ex = extract_spectrum(&rec, 3, None).unwrap();
        let (truth, _) = channel_band(&spec, Channel::Down).unwrap().eigen();
        for (a, b) in ex.spectral.eigenvalues.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn single_site_record() {
        let d = 1.7;
        let times = grid(8, 0.5);
        let values = times.iter().map(|t| C64::from_polar(1.0, d * t)).collect();
        let rec =
            MeasurementRecord::new(times, RecordValues::Amplitude(values), Channel::Up).unwrap();
        let ex = extract_spectrum(&rec, 1, None).unwrap();
        assert!((ex.spectral.eigenvalues[0] - d).abs() < 1e-12);
        assert!((ex.spectral.weights[0] - 1.0).abs() < 1e-12);
        let band = jacobi_reconstruct(&ex.spectral).unwrap();
        assert!((band.diagonal[0] - d).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        let spec = pst_preset(4, PresetVariant::HalfLength).unwrap();
        let rec = synthesize_record(
            &spec,
            Channel::Up,
            RecordMode::Amplitude,
            &grid(12, 0.3),
            None,
            0,
        )
        .unwrap();
        assert!(matches!(
            extract_spectrum(&rec, 4, None),
            Err(TomographyError::TooFewSamples { .. })
        ));
        let rec = synthesize_record(
            &spec,
            Channel::Up,
            RecordMode::Amplitude,
            &grid(40, 1.0),
            None,
            0,
        )
        .unwrap();
        assert!(matches!(
            extract_spectrum(&rec, 4, Some(4.0)),
            Err(TomographyError::NyquistViolation { .. })
        ));
        let prob = synthesize_record(
            &spec,
            Channel::Up,
            RecordMode::Probability,
            &grid(40, 0.3),
            None,
            0,
        )
        .unwrap();
        assert!(matches!(
            extract_spectrum(&prob, 4, None),
            Err(TomographyError::WrongMode { .. })
        ));
        assert!(matches!(
            full_tomography(
                &spec,
                &grid(40, 0.3),
                RecordMode::Probability,
                TomographyOptions::default()
            ),
            Err(TomographyError::UnsupportedMode(_))
        ));
        let bad = MeasurementRecord::new(
            vec![0.0, 1.0],
            RecordValues::Probability(vec![0.5, 1.2]),
            Channel::Up,
        );
        assert!(bad.is_err());
        let bad = MeasurementRecord::new(
            vec![0.0, 0.0],
            RecordValues::Probability(vec![0.5, 0.2]),
            Channel::Up,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn preset_round_trip() {
        let spec = pst_preset(4, PresetVariant::HalfLength).unwrap();
        let result = full_tomography(
            &spec,
            &uniform_grid(0.0, 60.0, 0.3),
            RecordMode::Amplitude,
            TomographyOptions::default(),
        )
        .unwrap();
        let res = result.residuals.as_ref().unwrap();
        assert!(res.max_abs_error <= 1e-8, "{res:?}");
        let s3 = 3f64.sqrt() / 2.0;
        for (a, t) in result.a_abs.iter().zip([s3, 1.0, s3]) {
            assert!((a - t).abs() <= 1e-8);
        }
    }

    #[test]
    fn negative_couplings_give_magnitudes() {
        let spec = ChainSpec::engineered(
            vec![-0.8, 1.1, -0.6],
            vec![0.9, -0.7, 1.3],
            vec![0.3, -0.4, 0.5, 0.2],
            vec![1.0, 1.5, 0.7, 1.2],
        )
        .unwrap();
        let result = full_tomography(
            &spec,
            &grid(200, 0.4),
            RecordMode::Amplitude,
            TomographyOptions::default(),
        )
        .unwrap();
        for (got, want) in result.a_abs.iter().zip(&spec.a) {
            assert!((got - want.abs()).abs() < 1e-8);
        }
        for (got, want) in result.b_abs.iter().zip(&spec.b) {
            assert!((got - want.abs()).abs() < 1e-8);
        }
    }

    #[test]
    fn b_c_disentanglement_is_exact() {
        let spec = ChainSpec::engineered(
            vec![0.8, 1.1],
            vec![0.9, 0.7],
            vec![0.3, -0.4, 0.5],
            vec![1.0, 1.5, 0.7],
        )
        .unwrap();
        let r = full_tomography(
            &spec,
            &grid(100, 0.4),
            RecordMode::Amplitude,
            TomographyOptions::default(),
        )
        .unwrap();
        for i in 0..3 {
            assert!(
                (r.field_quadratic[i] + r.field_linear[i] - r.diagnostics.up.diagonal[i]).abs()
                    <= 4.0 * f64::EPSILON * r.diagnostics.up.diagonal[i].abs().max(1.0)
            );
            assert!(
                (r.field_quadratic[i] - r.field_linear[i] - r.diagnostics.down.diagonal[i]).abs()
                    <= 4.0 * f64::EPSILON * r.diagnostics.down.diagonal[i].abs().max(1.0)
            );
        }
    }

    #[test]
    fn probability_mode_gaps() {
        let two = pst_preset(2, PresetVariant::HalfLength).unwrap();
        let rec = synthesize_record(
            &two,
            Channel::Up,
            RecordMode::Probability,
            &grid(60, 0.3),
            None,
            0,
        )
        .unwrap();
        let report = probability_mode_analysis(&rec, 2, Some(3.0)).unwrap();
        assert_eq!(report.gaps.len(), 1);
        assert!((report.gaps[0].gap - 1.0).abs() < 1e-9);
        assert!((report.gaps[0].weight_product - 0.25).abs() < 1e-9);
        assert!((report.zero_gap_weight - 0.5).abs() < 1e-9);
        assert!(!report.unresolved_multiplicity);

        let three = pst_preset(3, PresetVariant::HalfLength).unwrap();
        let rec = synthesize_record(
            &three,
            Channel::Up,
            RecordMode::Probability,
            &grid(80, 0.3),
            None,
            0,
        )
        .unwrap();
        let report = probability_mode_analysis(&rec, 3, None).unwrap();
        let gaps: Vec<f64> = report.gaps.iter().map(|g| g.gap).collect();
        assert_eq!(gaps.len(), 2);
        assert!((gaps[0] - 1.0).abs() < 1e-8 && (gaps[1] - 2.0).abs() < 1e-8);
        assert!(report.unresolved_multiplicity);
        // weights (1/4, 1/2, 1/4): gap 1 pairs sum to 1/8 + 1/8, gap 2 to 1/16
        assert!((report.gaps[0].weight_product - 0.25).abs() < 1e-8);
        assert!((report.gaps[1].weight_product - 0.0625).abs() < 1e-8);

        let constant = MeasurementRecord::new(
            grid(10, 0.5),
            RecordValues::Probability(vec![1.0; 10]),
            Channel::Up,
        )
        .unwrap();
        let report = probability_mode_analysis(&constant, 1, None).unwrap();
        assert!(report.gaps.is_empty());
        assert!((report.zero_gap_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shot_noise_is_seeded_and_bounded() {
        let spec = pst_preset(3, PresetVariant::HalfLength).unwrap();
        let times = grid(200, 0.4);
        let a = synthesize_record(
            &spec,
            Channel::Up,
            RecordMode::Probability,
            &times,
            Some(1000),
            7,
        )
        .unwrap();
        let b = synthesize_record(
            &spec,
            Channel::Up,
            RecordMode::Probability,
            &times,
            Some(1000),
            7,
        )
        .unwrap();
        let c = synthesize_record(
            &spec,
            Channel::Up,
            RecordMode::Probability,
            &times,
            Some(1000),
            8,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.seed, Some(7));
        let RecordValues::Probability(p) = &a.values else {
            panic!()
        };
        assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        let opts = TomographyOptions {
            shots: Some(1_000_000),
            seed: 11,
            frequency_bound: None,
        };
        let r = full_tomography(&spec, &times, RecordMode::Amplitude, opts).unwrap();
        let res = r.residuals.unwrap();
        assert!(
            res.up_eigenvalue_error <= 1e-2 && res.down_eigenvalue_error <= 1e-2,
            "{res:?}"
        );
        assert_eq!(r.seed, Some(11));
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = rng(5);
        let spec = ChainSpec::engineered(
            vec![rng.random_range(0.5..1.5), rng.random_range(0.5..1.5)],
            vec![0.7, 1.2],
            vec![0.1, 0.2, 0.3],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        for mode in [RecordMode::Amplitude, RecordMode::Probability] {
            let rec =
                synthesize_record(&spec, Channel::Down, mode, &grid(20, 0.2), None, 0).unwrap();
            let mut buf = Vec::new();
            rec.write_csv(&mut buf).unwrap();
            let back = MeasurementRecord::read_csv(buf.as_slice(), Channel::Down).unwrap();
            assert_eq!(back, rec);
        }
        assert!(MeasurementRecord::read_csv("x,y\n1,2\n".as_bytes(), Channel::Up).is_err());
    }
}

//! Matrix-pencil harmonic retrieval.

use nalgebra::DMatrix;
use serde::Serialize;

use super::record::uniform_step;
use super::TomographyError;
use crate::linalg::{eigenvalues_general, C64};

/// Sum of complex exponentials `y(t) = Σ_j c_j exp(i ω_j t)` fitted to
/// uniform samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicFit {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<C64>,
    /// Singular values of the Hankel data matrix, descending.
    pub singular_values: Vec<f64>,
    /// `σ_order / σ_1`.
    pub conditioning: f64,
    /// Largest `|1 − |z_j||` over the signal poles; zero for undamped data.
    pub pole_damping: f64,
    /// `max_k |y(t_k) − model(t_k)|`.
    pub fit_residual: f64,
}

/// Hankel matrix `Y[r, c] = y[r + c]` of shape `(N − L) × (L + 1)`.
fn hankel(samples: &[C64], pencil: usize) -> DMatrix<C64> {
    let rows = samples.len() - pencil;
    DMatrix::from_fn(rows, pencil + 1, |r, c| samples[r + c])
}

/// Pencil parameter `L = N/2`, which balances the noise sensitivity of the
/// two pencil factors.
fn pencil_parameter(n_samples: usize) -> usize {
    n_samples / 2
}

/// Singular values of the Hankel data matrix, descending.
pub fn hankel_singular_values(samples: &[C64]) -> Vec<f64> {
    let y = hankel(samples, pencil_parameter(samples.len()));
    let mut s: Vec<f64> = y.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol · σ_1`.
pub fn numerical_rank(samples: &[C64], rel_tol: f64) -> usize {
    let s = hankel_singular_values(samples);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

/// Fits `order` exponentials to samples on a uniform grid.
pub fn matrix_pencil(
    times: &[f64],
    samples: &[C64],
    order: usize,
) -> Result<HarmonicFit, TomographyError> {
    let n = samples.len();
    if times.len() != n {
        return Err(TomographyError::InvalidRecord(format!(
            "{} times but {} samples",
            times.len(),
            n
        )));
    }
    if order == 0 || n < 2 * order + 1 {
        return Err(TomographyError::TooFewSamples {
            needed: 2 * order + 1,
            found: n,
        });
    }
    let dt = uniform_step(times)?;
    let pencil = pencil_parameter(n);
    let y = hankel(samples, pencil);
    let svd = y.clone().svd(true, true);
    let recomposed = svd
        .clone()
        .recompose()
        .map_err(|e| TomographyError::Numerical(e.to_string()))?;
    if (&recomposed - &y).norm() > SVD_TOLERANCE * y.norm().max(f64::MIN_POSITIVE) {
        return Err(TomographyError::Numerical(
            "SVD of the Hankel matrix did not converge".into(),
        ));
    }
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = idx.iter().map(|&k| svd.singular_values[k]).collect();

    // Rows of Y lie in the span of the conjugated leading right singular
    // vectors; those columns are shift-invariant up to diag(z).
    let q = DMatrix::from_fn(pencil + 1, order, |r, c| v_t[(idx[c], r)]);
    let q_top = q.rows(0, pencil).into_owned();
    let q_bot = q.rows(1, pencil).into_owned();
    let x = least_squares(q_top, &q_bot)?;
    let poles = eigenvalues_general(&x)?;

    let frequencies: Vec<f64> = poles.iter().map(|z| z.arg() / dt).collect();
    let pole_damping = poles
        .iter()
        .map(|z| (1.0 - z.norm()).abs())
        .fold(0.0, f64::max);
    let amplitudes = fit_amplitudes(times, samples, &frequencies)?;
    let fit_residual = model_residual(times, samples, &frequencies, &amplitudes);
    let top = singular_values.first().copied().unwrap_or(0.0);
    let conditioning = if top > 0.0 {
        singular_values.get(order - 1).copied().unwrap_or(0.0) / top
    } else {
        0.0
    };
    Ok(HarmonicFit {
        frequencies,
        amplitudes,
        singular_values,
        conditioning,
        pole_damping,
        fit_residual,
    })
}

/// Least-squares amplitudes for fixed frequencies on arbitrary times.
pub fn fit_amplitudes(
    times: &[f64],
    samples: &[C64],
    frequencies: &[f64],
) -> Result<Vec<C64>, TomographyError> {
    let v = DMatrix::from_fn(times.len(), frequencies.len(), |k, j| {
        C64::from_polar(1.0, frequencies[j] * times[k])
    });
    let rhs = DMatrix::from_column_slice(samples.len(), 1, samples);
    let c = least_squares(v, &rhs)?;
    Ok(c.iter().copied().collect())
}

/// Relative recomposition error above which an SVD is rejected.
const SVD_TOLERANCE: f64 = 1e-10;

/// Least-squares solution of `a x = b` for a tall `a` of full column rank,
/// by Householder QR. nalgebra's SVD can return an inaccurate factorisation
/// when many singular values coincide, which is exactly the situation of
/// the shift-invariance equation, so it is not used here.
fn least_squares(a: DMatrix<C64>, b: &DMatrix<C64>) -> Result<DMatrix<C64>, TomographyError> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(TomographyError::Numerical(format!(
            "underdetermined {rows}x{cols} least-squares system"
        )));
    }
    let qr = a.qr();
    let r = qr.r();
    let scale = r.diagonal().iter().map(|d| d.norm()).fold(0.0, f64::max);
    if r.diagonal()
        .iter()
        .any(|d| d.norm() <= f64::EPSILON * rows as f64 * scale)
    {
        return Err(TomographyError::Numerical(
            "rank-deficient least-squares system".into(),
        ));
    }
    let rhs = qr.q().adjoint() * b;
    r.solve_upper_triangular(&rhs)
        .ok_or_else(|| TomographyError::Numerical("singular triangular factor".into()))
}

/// `max_k |y_k − Σ_j c_j exp(i ω_j t_k)|`.
pub fn model_residual(
    times: &[f64],
    samples: &[C64],
    frequencies: &[f64],
    amplitudes: &[C64],
) -> f64 {
    times
        .iter()
        .zip(samples)
        .map(|(&t, y)| {
            let model: C64 = frequencies
                .iter()
                .zip(amplitudes)
                .map(|(w, c)| c * C64::from_polar(1.0, w * t))
                .sum();
            (y - model).norm()
        })
        .fold(0.0, f64::max)
}

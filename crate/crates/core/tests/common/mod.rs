//! Helpers shared by the integration tests, including an exponential that
//! does not go through any eigendecomposition.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qutrit_chain::{ChainSpec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `exp(A)` by scaling and squaring with a truncated Taylor series.
pub fn expm_taylor(a: &DMatrix<C64>) -> DMatrix<C64> {
    let norm1 = (0..a.ncols())
        .map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    while norm1 / 2f64.powi(squarings) > 0.25 {
        squarings += 1;
    }
    let scaled = a / C64::new(2f64.powi(squarings), 0.0);
    let dim = a.nrows();
    let mut sum = DMatrix::<C64>::identity(dim, dim);
    let mut term = DMatrix::<C64>::identity(dim, dim);
    for k in 1..=24 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(i·sign·H·t)` through [`expm_taylor`].
pub fn propagator_oracle(h: &DMatrix<C64>, t: f64, sign: f64) -> DMatrix<C64> {
    expm_taylor(&(h * C64::new(0.0, sign * t)))
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> DMatrix<C64> {
    let m = DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> DVector<C64> {
    let v = DVector::from_fn(n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// `(e^{it} − 3e^{3it} + 2e^{4it})/6`, the closed form quoted for the
/// three-site end-to-end amplitude.
pub fn three_site_closed_form(t: f64) -> C64 {
    let e = |k: f64| C64::from_polar(1.0, k * t);
    (e(1.0) - e(3.0) * 3.0 + e(4.0) * 2.0) / 6.0
}

fn signed_magnitude(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Random engineered chain: couplings `|a|, |b| ∈ [0.5, 1.5]` with random
/// sign, `B ∈ ±[0.2, 1]`, `C ∈ [0.5, 2]`.
pub fn random_engineered_chain(rng: &mut impl Rng, n: usize) -> ChainSpec {
    let a = (0..n - 1)
        .map(|_| signed_magnitude(rng, 0.5, 1.5))
        .collect();
    let b = (0..n - 1)
        .map(|_| signed_magnitude(rng, 0.5, 1.5))
        .collect();
    let field_linear = (0..n).map(|_| signed_magnitude(rng, 0.2, 1.0)).collect();
    let field_quadratic = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    ChainSpec::engineered(a, b, field_linear, field_quadratic).expect("valid random chain")
}

/// Sampling grid used by the tomography checks: 200 points at spacing 0.4.
pub fn tomography_times() -> Vec<f64> {
    (0..200).map(|k| k as f64 * 0.4).collect()
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Largest modulus among the entries.
pub fn max_modulus<'a>(entries: impl IntoIterator<Item = &'a C64>) -> f64 {
    entries.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

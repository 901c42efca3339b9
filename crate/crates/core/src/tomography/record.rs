use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::TomographyError;
use crate::hamiltonians::{sigma_block, ChainSpec, TimeSign};
use crate::linalg::{SymTridiagonal, C64};
use crate::numfmt::sig17;

/// Relative spread of time steps tolerated on a "uniform" grid.
pub const GRID_UNIFORMITY_TOLERANCE: f64 = 1e-9;

/// Which excitation is injected at the first site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// `|1⟩`
    Up,
    /// `|1̄⟩`
    Down,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Up => "up",
            Channel::Down => "down",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordMode {
    /// Survival amplitude `f(t)`.
    Amplitude,
    /// Recurrence probability `|f(t)|²`.
    Probability,
}

impl RecordMode {
    pub fn name(self) -> &'static str {
        match self {
            RecordMode::Amplitude => "amplitude",
            RecordMode::Probability => "probability",
        }
    }
}

impl fmt::Display for RecordMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecordMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "amplitude" => Ok(RecordMode::Amplitude),
            "probability" => Ok(RecordMode::Probability),
            _ => Err(format!("unknown record mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", content = "values", rename_all = "lowercase")]
pub enum RecordValues {
    Amplitude(Vec<C64>),
    Probability(Vec<f64>),
}

impl RecordValues {
    pub fn len(&self) -> usize {
        match self {
            RecordValues::Amplitude(v) => v.len(),
            RecordValues::Probability(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> RecordMode {
        match self {
            RecordValues::Amplitude(_) => RecordMode::Amplitude,
            RecordValues::Probability(_) => RecordMode::Probability,
        }
    }
}

/// First-site measurement record after initialising `|10…0⟩` or `|1̄0…0⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub times: Vec<f64>,
    pub values: RecordValues,
    pub channel: Channel,
    /// Trials per time point when the values are sampled estimates.
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub time_sign: TimeSign,
}

impl MeasurementRecord {
    /// Validates strictly increasing times, probabilities in `[0, 1]` and
    /// amplitudes in the closed unit disc.
    pub fn new(
        times: Vec<f64>,
        values: RecordValues,
        channel: Channel,
    ) -> Result<Self, TomographyError> {
        if times.len() != values.len() {
            return Err(TomographyError::InvalidRecord(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(k) = times.windows(2).position(|w| w[1].is_nan() || w[1] <= w[0]) {
            return Err(TomographyError::InvalidRecord(format!(
                "times not strictly increasing at index {}",
                k + 1
            )));
        }
        const SLACK: f64 = 1e-12;
        let bad = match &values {
            RecordValues::Amplitude(v) => v
                .iter()
                .position(|z| z.norm().is_nan() || z.norm() > 1.0 + SLACK),
            RecordValues::Probability(v) => {
                v.iter().position(|p| !(-SLACK..=1.0 + SLACK).contains(p))
            }
        };
        if let Some(k) = bad {
            return Err(TomographyError::InvalidRecord(format!(
                "value at index {k} is out of range"
            )));
        }
        Ok(Self {
            times,
            values,
            channel,
            shots: None,
            seed: None,
            time_sign: TimeSign::Positive,
        })
    }

    pub fn with_time_sign(mut self, sign: TimeSign) -> Self {
        self.time_sign = sign;
        self
    }

    pub fn mode(&self) -> RecordMode {
        self.values.mode()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Common step of a uniform grid.
    pub fn uniform_step(&self) -> Result<f64, TomographyError> {
        uniform_step(&self.times)
    }

    /// Writes `t,re,im` or `t,p`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TomographyError> {
        let mut w = csv::Writer::from_writer(out);
        match &self.values {
            RecordValues::Amplitude(v) => {
                w.write_record(["t", "re", "im"])?;
                for (t, z) in self.times.iter().zip(v) {
                    w.write_record([sig17(*t), sig17(z.re), sig17(z.im)])?;
                }
            }
            RecordValues::Probability(v) => {
                w.write_record(["t", "p"])?;
                for (t, p) in self.times.iter().zip(v) {
                    w.write_record([sig17(*t), sig17(*p)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file written by [`MeasurementRecord::write_csv`]; the header
    /// decides the mode.
    pub fn read_csv<R: Read>(input: R, channel: Channel) -> Result<Self, TomographyError> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mode = match header.as_slice() {
            ["t", "re", "im"] => RecordMode::Amplitude,
            ["t", "p"] => RecordMode::Probability,
            other => {
                return Err(TomographyError::InvalidRecord(format!(
                    "unexpected header {other:?}"
                )))
            }
        };
        let mut times = Vec::new();
        let mut amps = Vec::new();
        let mut probs = Vec::new();
        for (line, row) in r.records().enumerate() {
            let row = row?;
            let field = |k: usize| -> Result<f64, TomographyError> {
                row.get(k)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| {
                        TomographyError::InvalidRecord(format!("row {}: bad column {k}", line + 1))
                    })
            };
            times.push(field(0)?);
            match mode {
                RecordMode::Amplitude => amps.push(C64::new(field(1)?, field(2)?)),
                RecordMode::Probability => probs.push(field(1)?),
            }
        }
        let values = match mode {
            RecordMode::Amplitude => RecordValues::Amplitude(amps),
            RecordMode::Probability => RecordValues::Probability(probs),
        };
        Self::new(times, values, channel)
    }
}

pub(crate) fn uniform_step(times: &[f64]) -> Result<f64, TomographyError> {
    if times.len() < 2 {
        return Err(TomographyError::InvalidRecord(
            "need at least two time points".into(),
        ));
    }
    let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > GRID_UNIFORMITY_TOLERANCE * step.abs().max(1.0) {
            return Err(TomographyError::NonUniformGrid { index: k + 1 });
        }
    }
    Ok(step)
}

/// Band of the single-excitation block seen by `channel`.
pub fn channel_band(spec: &ChainSpec, channel: Channel) -> Result<SymTridiagonal, TomographyError> {
    let block = sigma_block(spec)?;
    Ok(match channel {
        Channel::Up => block.up_tridiagonal(),
        Channel::Down => block.down_tridiagonal(),
    })
}

/// `f(t) = ⟨e₁|exp(i·sign·J·t)|e₁⟩` for a Jacobi band `J`.
pub fn survival_amplitudes(band: &SymTridiagonal, times: &[f64], sign: TimeSign) -> Vec<C64> {
    let (values, vectors) = band.eigen();
    let weights: Vec<f64> = vectors.row(0).iter().map(|x| x * x).collect();
    let s = sign.value();
    times
        .iter()
        .map(|&t| {
            values
                .iter()
                .zip(&weights)
                .map(|(e, w)| C64::from_polar(*w, s * e * t))
                .sum()
        })
        .collect()
}

/// Builds the record an experiment on `spec` would produce.
///
/// With `shots`, probability records are binomial estimates of `|f|²`.
/// Amplitude records are then estimated interferometrically: the two
/// quadratures `(1 + Re f)/2` and `(1 + Im f)/2` are sampled independently
/// and the estimate is pulled back into the unit disc if noise pushed it out.
pub fn synthesize_record(
    spec: &ChainSpec,
    channel: Channel,
    mode: RecordMode,
    times: &[f64],
    shots: Option<u64>,
    seed: u64,
) -> Result<MeasurementRecord, TomographyError> {
    let band = channel_band(spec, channel)?;
    let f = survival_amplitudes(&band, times, spec.time_sign);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimate = |p: f64, n: u64| -> f64 {
        let dist = Binomial::new(n, p.clamp(0.0, 1.0)).expect("valid binomial");
        dist.sample(&mut rng) as f64 / n as f64
    };
    let values = match (mode, shots) {
        (RecordMode::Amplitude, None) => RecordValues::Amplitude(f),
        (RecordMode::Probability, None) => {
            RecordValues::Probability(f.iter().map(|z| z.norm_sqr().min(1.0)).collect())
        }
        (_, Some(0)) => {
            return Err(TomographyError::InvalidRecord(
                "shots must be positive".into(),
            ))
        }
        (RecordMode::Probability, Some(n)) => {
            RecordValues::Probability(f.iter().map(|z| estimate(z.norm_sqr(), n)).collect())
        }
        (RecordMode::Amplitude, Some(n)) => RecordValues::Amplitude(
            f.iter()
                .map(|z| {
                    let re = 2.0 * estimate((1.0 + z.re) / 2.0, n) - 1.0;
                    let im = 2.0 * estimate((1.0 + z.im) / 2.0, n) - 1.0;
                    let w = C64::new(re, im);
                    if w.norm() > 1.0 {
                        w / w.norm()
                    } else {
                        w
                    }
                })
                .collect(),
        ),
    };
    let mut record =
        MeasurementRecord::new(times.to_vec(), values, channel)?.with_time_sign(spec.time_sign);
    if shots.is_some() {
        record.shots = shots;
        record.seed = Some(seed);
    }
    Ok(record)
}

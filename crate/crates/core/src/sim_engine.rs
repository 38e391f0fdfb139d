//! Testbench for a summing filter bank: a DDS sine source, floating and
//! integer bank runs, per-band energies, and bank-to-bank comparison.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::fir_design::{frequency_response, FirFilter};
use crate::quant_coe::{output_bit_width, signed_width, QuantizedFilter};
use crate::{Error, Result};

/// Largest accumulator supported by [`PhaseAccumulator`]; keeps the tuning
/// word exactly representable in an `f64`.
pub const MAX_ACCUMULATOR_BITS: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdsConfig {
    pub clock_hz: f64,
    pub target_hz: f64,
    pub accumulator_bits: u32,
    pub amplitude: f64,
}

impl DdsConfig {
    /// A full-scale generator with a 32-bit accumulator.
    pub fn new(clock_hz: f64, target_hz: f64) -> Self {
        DdsConfig {
            clock_hz,
            target_hz,
            accumulator_bits: 32,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::domain(format!(
                "clock must be positive, got {} Hz",
                self.clock_hz
            )));
        }
        if !(1..=MAX_ACCUMULATOR_BITS).contains(&self.accumulator_bits) {
            return Err(Error::domain(format!(
                "accumulator bits must be in [1, {MAX_ACCUMULATOR_BITS}], got {}",
                self.accumulator_bits
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(Error::domain(format!(
                "amplitude must be in (0, 1], got {}",
                self.amplitude
            )));
        }
        if !(self.target_hz.is_finite()
            && self.target_hz > 0.0
            && self.target_hz < self.clock_hz / 2.0)
        {
            return Err(Error::domain(format!(
                "target {} Hz must lie strictly between 0 and Nyquist {} Hz",
                self.target_hz,
                self.clock_hz / 2.0
            )));
        }
        if self.raw_tuning_word() < 1 {
            return Err(Error::domain(format!(
                "target {} Hz rounds to a zero tuning word at {} accumulator bits",
                self.target_hz, self.accumulator_bits
            )));
        }
        Ok(())
    }

    fn raw_tuning_word(&self) -> u64 {
        (self.target_hz / self.clock_hz * (1u64 << self.accumulator_bits) as f64).round() as u64
    }

    /// `round(target / clock * 2^bits)`.
    pub fn tuning_word(&self) -> Result<u64> {
        self.validate()?;
        Ok(self.raw_tuning_word())
    }

    /// The frequency the accumulator actually produces.
    pub fn actual_hz(&self) -> Result<f64> {
        let word = self.tuning_word()?;
        Ok(word as f64 / (1u64 << self.accumulator_bits) as f64 * self.clock_hz)
    }
}

/// Wrapping phase accumulator: each clock adds the tuning word modulo
/// `2^bits`. The first phase produced is 0.
#[derive(Debug, Clone)]
pub struct PhaseAccumulator {
    bits: u32,
    tuning_word: u64,
    phase: u64,
}

impl PhaseAccumulator {
    pub fn new(bits: u32, tuning_word: u64) -> Result<Self> {
        if !(1..=MAX_ACCUMULATOR_BITS).contains(&bits) {
            return Err(Error::domain(format!(
                "accumulator bits must be in [1, {MAX_ACCUMULATOR_BITS}]"
            )));
        }
        let modulus = 1u64 << bits;
        if tuning_word == 0 || tuning_word >= modulus {
            return Err(Error::domain(format!(
                "tuning word must be in [1, 2^{bits})"
            )));
        }
        Ok(PhaseAccumulator {
            bits,
            tuning_word,
            phase: 0,
        })
    }

    /// The next `n_samples` values of `amplitude * sin(2 pi phase / 2^bits)`.
    pub fn sine(&mut self, amplitude: f64, n_samples: usize) -> Vec<f64> {
        let turn = (1u64 << self.bits) as f64;
        self.take(n_samples)
            .map(|acc| amplitude * (2.0 * PI * acc as f64 / turn).sin())
            .collect()
    }
}

impl Iterator for PhaseAccumulator {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let current = self.phase;
        self.phase = (self.phase + self.tuning_word) & ((1u64 << self.bits) - 1);
        Some(current)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::domain(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::domain("samples must be finite"));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Rounds samples in `[-1, 1]` to signed `input_bits` codes, full scale
    /// mapping to `2^(input_bits - 1) - 1`. Out-of-range samples saturate.
    pub fn to_codes(&self, input_bits: u32) -> Result<Vec<i64>> {
        if !(2..=32).contains(&input_bits) {
            return Err(Error::domain(format!(
                "input bits must be in [2, 32], got {input_bits}"
            )));
        }
        let full = ((1i64 << (input_bits - 1)) - 1) as f64;
        Ok(self
            .samples
            .iter()
            .map(|s| (s * full).round().clamp(-full - 1.0, full) as i64)
            .collect())
    }
}

/// Sine from a phase-accumulator DDS, sampled once per clock.
pub fn dds_sine(config: &DdsConfig, n_samples: usize) -> Result<Signal> {
    let word = config.tuning_word()?;
    let samples =
        PhaseAccumulator::new(config.accumulator_bits, word)?.sine(config.amplitude, n_samples);
    Signal::new(samples, config.clock_hz)
}

/// Direct-form convolution with zero initial state, truncated to the input
/// length so `y[n]` lines up with `x[n]`.
pub fn convolve_truncated(taps: &[f64], input: &[f64]) -> Vec<f64> {
    (0..input.len())
        .map(|n| {
            let span = taps.len().min(n + 1);
            (0..span).map(|k| taps[k] * input[n - k]).sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankRunResult {
    pub per_filter_outputs: Vec<Signal>,
    pub summed_output: Signal,
    /// Sum of squared output samples, one per filter.
    pub band_energies: Vec<f64>,
}

impl BankRunResult {
    /// Index of the filter with the largest energy (first one on ties).
    pub fn argmax_band(&self) -> usize {
        argmax(&self.band_energies)
    }
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

fn rates_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Runs `input` through every filter and adds the outputs sample by sample.
/// Filters are convolved in parallel; each output is computed exactly as in
/// a sequential run.
pub fn run_bank(filters: &[FirFilter], input: &Signal) -> Result<BankRunResult> {
    if filters.is_empty() {
        return Err(Error::domain("bank has no filters"));
    }
    if input.is_empty() {
        return Err(Error::domain("input signal is empty"));
    }
    if let Some((k, f)) = filters
        .iter()
        .enumerate()
        .find(|(_, f)| !rates_match(f.sample_rate, input.sample_rate))
    {
        return Err(Error::domain(format!(
            "filter {k} runs at {} Hz but the input is sampled at {} Hz",
            f.sample_rate, input.sample_rate
        )));
    }

    let outputs: Vec<Vec<f64>> = filters
        .par_iter()
        .map(|f| convolve_truncated(&f.coefficients, &input.samples))
        .collect();

    let mut summed = vec![0.0; input.len()];
    for out in &outputs {
        for (acc, y) in summed.iter_mut().zip(out) {
            *acc += y;
        }
    }
    let band_energies = outputs
        .iter()
        .map(|o| o.iter().map(|y| y * y).sum())
        .collect();
    let per_filter_outputs = outputs
        .into_iter()
        .map(|samples| Signal {
            samples,
            sample_rate: input.sample_rate,
        })
        .collect();

    Ok(BankRunResult {
        per_filter_outputs,
        summed_output: Signal {
            samples: summed,
            sample_rate: input.sample_rate,
        },
        band_energies,
    })
}

/// Integer counterpart of [`BankRunResult`]. Output codes carry the
/// coefficient fraction bits: divide by `2^fraction_bits` to get values in
/// input-code units.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedBankRunResult {
    pub per_filter_outputs: Vec<Vec<i64>>,
    pub summed_output: Vec<i64>,
    pub band_energies: Vec<u128>,
    /// Widest two's-complement value seen in each filter's accumulator,
    /// partial sums included.
    pub accumulator_bits: Vec<u32>,
    /// `output_bit_width` of each filter.
    pub accumulator_limit_bits: Vec<u32>,
}

impl FixedBankRunResult {
    pub fn argmax_band(&self) -> usize {
        self.band_energies
            .iter()
            .enumerate()
            .fold(
                (0, 0u128),
                |best, (i, &e)| if e > best.1 { (i, e) } else { best },
            )
            .0
    }

    /// Per-filter outputs scaled back by `2^-fraction_bits`.
    pub fn dequantized_outputs(&self, quantized: &[QuantizedFilter]) -> Vec<Vec<f64>> {
        self.per_filter_outputs
            .iter()
            .zip(quantized)
            .map(|(out, q)| {
                let scale = q.format.scale();
                out.iter().map(|&v| v as f64 / scale).collect()
            })
            .collect()
    }
}

struct MacTrace {
    output: Vec<i64>,
    lowest: i64,
    highest: i64,
}

fn convolve_codes(taps: &[i64], input: &[i64]) -> MacTrace {
    let (mut lowest, mut highest) = (0i64, 0i64);
    let output = (0..input.len())
        .map(|n| {
            let span = taps.len().min(n + 1);
            let mut acc = 0i64;
            for k in 0..span {
                acc += taps[k] * input[n - k];
                lowest = lowest.min(acc);
                highest = highest.max(acc);
            }
            acc
        })
        .collect();
    MacTrace {
        output,
        lowest,
        highest,
    }
}

/// Exact integer multiply-accumulate run of a quantized bank over signed
/// `input_bits` samples.
pub fn run_bank_fixed_point(
    quantized: &[QuantizedFilter],
    input_codes: &[i64],
    input_bits: u32,
) -> Result<FixedBankRunResult> {
    if quantized.is_empty() {
        return Err(Error::domain("bank has no filters"));
    }
    if input_codes.is_empty() {
        return Err(Error::domain("input is empty"));
    }
    if !(1..=32).contains(&input_bits) {
        return Err(Error::domain(format!(
            "input bits must be in [1, 32], got {input_bits}"
        )));
    }
    let (lo, hi) = (-(1i64 << (input_bits - 1)), (1i64 << (input_bits - 1)) - 1);
    if let Some((n, x)) = input_codes
        .iter()
        .enumerate()
        .find(|(_, x)| !(lo..=hi).contains(*x))
    {
        return Err(Error::domain(format!(
            "input code {x} at sample {n} does not fit {input_bits} bits"
        )));
    }

    let limits = quantized
        .iter()
        .map(|q| output_bit_width(input_bits, q.format.total_bits(), q.n_taps()))
        .collect::<Result<Vec<_>>>()?;
    if let Some(w) = limits.iter().find(|&&w| w > 64) {
        return Err(Error::domain(format!(
            "a {w}-bit accumulator does not fit 64 bits"
        )));
    }

    let traces: Vec<MacTrace> = quantized
        .par_iter()
        .map(|q| convolve_codes(&q.codes, input_codes))
        .collect();

    let mut summed = vec![0i64; input_codes.len()];
    for t in &traces {
        for (acc, y) in summed.iter_mut().zip(&t.output) {
            *acc += y;
        }
    }
    let band_energies = traces
        .iter()
        .map(|t| {
            t.output
                .iter()
                .map(|&y| (y as i128 * y as i128) as u128)
                .sum()
        })
        .collect();
    let accumulator_bits = traces
        .iter()
        .map(|t| signed_width(t.lowest as i128).max(signed_width(t.highest as i128)))
        .collect();

    Ok(FixedBankRunResult {
        per_filter_outputs: traces.into_iter().map(|t| t.output).collect(),
        summed_output: summed,
        band_energies,
        accumulator_bits,
        accumulator_limit_bits: limits,
    })
}

/// Per-band similarity between two banks of equal shape.
#[derive(Debug, Clone, PartialEq)]
pub struct BankComparison {
    pub per_band_cosine: Vec<f64>,
    /// RMS of the coefficient differences.
    pub per_band_rms_diff: Vec<f64>,
    /// RMS difference of the dB magnitude responses.
    pub response_rms_diff_db: Vec<f64>,
}

impl BankComparison {
    pub fn mean_cosine(&self) -> f64 {
        mean(&self.per_band_cosine)
    }

    pub fn mean_response_rms_diff_db(&self) -> f64 {
        mean(&self.response_rms_diff_db)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Cosine similarity; two zero vectors count as identical, a zero vector
/// against a nonzero one as orthogonal.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (dot / (na * nb)).clamp(-1.0, 1.0),
    }
}

fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn compare_banks(
    bank_a: &[FirFilter],
    bank_b: &[FirFilter],
    n_response_points: usize,
) -> Result<BankComparison> {
    if bank_a.len() != bank_b.len() {
        return Err(Error::Mismatch(format!(
            "banks have {} and {} filters",
            bank_a.len(),
            bank_b.len()
        )));
    }
    if bank_a.is_empty() {
        return Err(Error::domain("banks are empty"));
    }
    for (k, (a, b)) in bank_a.iter().zip(bank_b).enumerate() {
        if a.n_taps() != b.n_taps() {
            return Err(Error::Mismatch(format!(
                "band {}: {} taps against {} taps",
                k + 1,
                a.n_taps(),
                b.n_taps()
            )));
        }
        if !rates_match(a.sample_rate, b.sample_rate) {
            return Err(Error::Mismatch(format!(
                "band {}: {} Hz against {} Hz",
                k + 1,
                a.sample_rate,
                b.sample_rate
            )));
        }
    }

    let rows = bank_a
        .par_iter()
        .zip(bank_b)
        .map(|(a, b)| {
            let ra = frequency_response(a, n_response_points)?;
            let rb = frequency_response(b, n_response_points)?;
            Ok((
                cosine_similarity(&a.coefficients, &b.coefficients),
                rms_diff(&a.coefficients, &b.coefficients),
                rms_diff(&ra.magnitude_db, &rb.magnitude_db),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BankComparison {
        per_band_cosine: rows.iter().map(|r| r.0).collect(),
        per_band_rms_diff: rows.iter().map(|r| r.1).collect(),
        response_rms_diff_db: rows.iter().map(|r| r.2).collect(),
    })
}

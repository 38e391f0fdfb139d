//! Windowed-sinc bandpass FIR design and frequency-response evaluation.
//!
//! Every designed filter is odd-length and symmetric (Type-I linear phase).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bank_layout::{BandSpec, BankPreset};
use crate::{Error, Result};

pub const DEFAULT_TAPS: usize = 63;

/// Sample rate used when designing the built-in banks, matching a 50 MHz
/// system clock.
pub const DEFAULT_SAMPLE_RATE: f64 = 50e6;

/// Magnitude assigned to exact zeros, and the lowest value ever reported.
pub const DEFAULT_DB_FLOOR: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Bartlett,
    Hamming,
}

impl WindowKind {
    /// Transition-width factor: a band narrower than `factor * fs / n_taps`
    /// cannot be resolved by the window's main lobe.
    pub fn transition_factor(self) -> f64 {
        match self {
            WindowKind::Bartlett => 6.1,
            WindowKind::Hamming => 3.3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Bartlett => "bartlett",
            WindowKind::Hamming => "hamming",
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The band is narrower than the window can resolve at this tap count.
/// The filter is still produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityWarning {
    pub bandwidth_hz: f64,
    pub min_bandwidth_hz: f64,
}

impl fmt::Display for FeasibilityWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bandwidth {} Hz is below the window transition width {:.1} Hz",
            self.bandwidth_hz, self.min_bandwidth_hz
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    pub coefficients: Vec<f64>,
    pub sample_rate: f64,
    /// `None` for filters built from raw taps.
    pub band: Option<BandSpec>,
    pub window: Option<WindowKind>,
    pub warning: Option<FeasibilityWarning>,
}

impl FirFilter {
    /// Wraps raw taps. The taps must be odd in number and symmetric.
    pub fn from_coefficients(coefficients: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if coefficients.len().is_multiple_of(2) {
            return Err(Error::domain(format!(
                "filter length must be odd, got {}",
                coefficients.len()
            )));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::domain(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        let n = coefficients.len();
        if (0..n / 2).any(|i| coefficients[i] != coefficients[n - 1 - i]) {
            return Err(Error::domain("coefficients must be symmetric"));
        }
        Ok(FirFilter {
            coefficients,
            sample_rate,
            band: None,
            window: None,
            warning: None,
        })
    }

    pub fn n_taps(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.coefficients.len();
        (0..n / 2).all(|i| self.coefficients[i] == self.coefficients[n - 1 - i])
    }

    /// Group delay in samples, `(n_taps - 1) / 2`.
    pub fn delay(&self) -> f64 {
        (self.n_taps() as f64 - 1.0) / 2.0
    }

    /// `H(f)` at a single frequency in Hz.
    pub fn response_at(&self, hz: f64) -> Complex64 {
        dtft(&self.coefficients, 2.0 * PI * hz / self.sample_rate)
    }

    pub fn negated(&self) -> FirFilter {
        FirFilter {
            coefficients: self.coefficients.iter().map(|c| -c).collect(),
            ..self.clone()
        }
    }
}

fn check_odd_taps(n_taps: usize, min: usize) -> Result<()> {
    if n_taps < min || n_taps.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "tap count must be odd and at least {min}, got {n_taps}"
        )));
    }
    Ok(())
}

/// Symmetric window of odd length `n_taps >= 3`, peak 1 at the center.
pub fn window_weights(kind: WindowKind, n_taps: usize) -> Result<Vec<f64>> {
    check_odd_taps(n_taps, 3)?;
    let half = (n_taps - 1) as f64 / 2.0;
    let span = (n_taps - 1) as f64;
    let mut w: Vec<f64> = (0..n_taps)
        .map(|n| match kind {
            WindowKind::Bartlett => 1.0 - (n as f64 - half).abs() / half,
            WindowKind::Hamming => 0.54 - 0.46 * (2.0 * PI * n as f64 / span).cos(),
        })
        .collect();
    // mirror so the taper is bit-exactly symmetric
    for i in 0..n_taps / 2 {
        w[n_taps - 1 - i] = w[i];
    }
    Ok(w)
}

/// Unwindowed bandpass impulse response, the difference of two ideal
/// lowpass sincs, centred on tap `(n_taps - 1) / 2`.
pub fn ideal_bandpass(lower: f64, upper: f64, sample_rate: f64, n_taps: usize) -> Result<Vec<f64>> {
    check_odd_taps(n_taps, 1)?;
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::domain(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    let nyquist = sample_rate / 2.0;
    if !(lower.is_finite() && upper.is_finite()) || lower <= 0.0 || lower >= upper {
        return Err(Error::Design(format!(
            "band edges must satisfy 0 < lower < upper, got {lower}..{upper} Hz"
        )));
    }
    if upper >= nyquist {
        return Err(Error::Design(format!(
            "upper edge {upper} Hz is not below Nyquist {nyquist} Hz"
        )));
    }

    let w_lo = 2.0 * PI * lower / sample_rate;
    let w_hi = 2.0 * PI * upper / sample_rate;
    let mid = (n_taps - 1) / 2;
    let mut h = vec![0.0; n_taps];
    h[mid] = (w_hi - w_lo) / PI;
    for k in 1..=mid {
        let x = k as f64;
        let v = ((w_hi * x).sin() - (w_lo * x).sin()) / (PI * x);
        h[mid + k] = v;
        h[mid - k] = v;
    }
    Ok(h)
}

fn feasibility(
    band: &BandSpec,
    window: WindowKind,
    n_taps: usize,
    sample_rate: f64,
) -> Option<FeasibilityWarning> {
    let min_bandwidth_hz = window.transition_factor() * sample_rate / n_taps as f64;
    let bandwidth_hz = band.bandwidth();
    (bandwidth_hz < min_bandwidth_hz).then_some(FeasibilityWarning {
        bandwidth_hz,
        min_bandwidth_hz,
    })
}

pub(crate) fn apply_window(ideal: &[f64], weights: &[f64]) -> Vec<f64> {
    ideal.iter().zip(weights).map(|(h, w)| h * w).collect()
}

/// Windowed-sinc bandpass for one band. A band too narrow for the window
/// and tap count still designs, with [`FirFilter::warning`] set.
pub fn design_bandpass(
    band: &BandSpec,
    window: WindowKind,
    n_taps: usize,
    sample_rate: f64,
) -> Result<FirFilter> {
    check_odd_taps(n_taps, 3)?;
    let ideal = ideal_bandpass(band.lower_cutoff, band.upper_cutoff, sample_rate, n_taps)?;
    let weights = window_weights(window, n_taps)?;
    Ok(FirFilter {
        coefficients: apply_window(&ideal, &weights),
        sample_rate,
        band: Some(*band),
        window: Some(window),
        warning: feasibility(band, window, n_taps, sample_rate),
    })
}

/// Designs all bands of a preset with its window. The filters are designed
/// in parallel; the order matches the preset.
pub fn design_bank(preset: &BankPreset, n_taps: usize, sample_rate: f64) -> Result<Vec<FirFilter>> {
    design_bands(&preset.bands, preset.window, n_taps, sample_rate)
}

pub fn design_bands(
    bands: &[BandSpec],
    window: WindowKind,
    n_taps: usize,
    sample_rate: f64,
) -> Result<Vec<FirFilter>> {
    check_odd_taps(n_taps, 3)?;
    let nyquist = sample_rate / 2.0;
    let offending: Vec<(usize, f64)> = bands
        .iter()
        .enumerate()
        .filter(|(_, b)| b.upper_cutoff >= nyquist)
        .map(|(k, b)| (k + 1, b.upper_cutoff))
        .collect();
    if !offending.is_empty() {
        return Err(Error::BandsAboveNyquist {
            bands: offending,
            nyquist_hz: nyquist,
        });
    }
    bands
        .par_iter()
        .map(|band| design_bandpass(band, window, n_taps, sample_rate))
        .collect()
}

/// Scales the taps so the largest magnitude on an `n_points` grid is 1.
pub fn peak_normalize(filter: &FirFilter, n_points: usize) -> Result<FirFilter> {
    if n_points < 2 {
        return Err(Error::domain(format!(
            "need at least 2 response points, got {n_points}"
        )));
    }
    let step = PI / (n_points - 1) as f64;
    let peak = (0..n_points)
        .map(|k| dtft(&filter.coefficients, step * k as f64).norm())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::domain("cannot normalize an all-zero filter"));
    }
    Ok(FirFilter {
        coefficients: filter.coefficients.iter().map(|c| c / peak).collect(),
        ..filter.clone()
    })
}

/// `sum_n h[n] e^{-i w n}`.
pub fn dtft(coefficients: &[f64], omega: f64) -> Complex64 {
    coefficients
        .iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (n, &h)| {
            let phase = omega * n as f64;
            acc + Complex64::new(h * phase.cos(), -h * phase.sin())
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub frequencies: Vec<f64>,
    pub magnitude_db: Vec<f64>,
    /// Wrapped phase in radians, `(-pi, pi]`.
    pub phase: Vec<f64>,
}

impl FrequencyResponse {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn peak_db(&self) -> f64 {
        self.magnitude_db
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Frequency of the largest magnitude.
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) =
            self.magnitude_db
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &m)| {
                    if m > best.1 {
                        (i, m)
                    } else {
                        best
                    }
                });
        self.frequencies[i]
    }

    /// Phase with `2 pi` jumps between neighbouring points removed.
    pub fn unwrapped_phase(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.phase.len());
        let mut offset = 0.0;
        for (i, &p) in self.phase.iter().enumerate() {
            if i > 0 {
                let d = p - self.phase[i - 1];
                if d > PI {
                    offset -= 2.0 * PI;
                } else if d < -PI {
                    offset += 2.0 * PI;
                }
            }
            out.push(p + offset);
        }
        out
    }
}

/// Response on `n_points` frequencies evenly spaced from DC to Nyquist,
/// with magnitudes floored at [`DEFAULT_DB_FLOOR`].
pub fn frequency_response(filter: &FirFilter, n_points: usize) -> Result<FrequencyResponse> {
    frequency_response_with_floor(filter, n_points, DEFAULT_DB_FLOOR)
}

pub fn frequency_response_with_floor(
    filter: &FirFilter,
    n_points: usize,
    floor_db: f64,
) -> Result<FrequencyResponse> {
    if n_points < 2 {
        return Err(Error::domain(format!(
            "need at least 2 response points, got {n_points}"
        )));
    }
    let step = PI / (n_points - 1) as f64;
    let mut frequencies = Vec::with_capacity(n_points);
    let mut magnitude_db = Vec::with_capacity(n_points);
    let mut phase = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let omega = if k == n_points - 1 {
            PI
        } else {
            step * k as f64
        };
        let h = dtft(&filter.coefficients, omega);
        let mag = h.norm();
        frequencies.push(omega / (2.0 * PI) * filter.sample_rate);
        magnitude_db.push(if mag > 0.0 {
            (20.0 * mag.log10()).max(floor_db)
        } else {
            floor_db
        });
        phase.push(h.arg());
    }
    Ok(FrequencyResponse {
        frequencies,
        magnitude_db,
        phase,
    })
}

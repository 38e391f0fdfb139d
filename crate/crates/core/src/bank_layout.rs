//! Band tables for the thirteen-band Mel and Bark banks, a consistency
//! validator for them, and triangular perceptual filter banks.

use std::fmt;

use crate::fir_design::WindowKind;
use crate::{Error, Result};

pub use crate::scales::ScaleKind;

/// Number of bands in every built-in bank.
pub const BANK_SIZE: usize = 13;

/// One bandpass band. `nominal_bandwidth` is the bandwidth column of the
/// source table, kept verbatim; filter design only uses the cutoffs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub lower_cutoff: f64,
    pub upper_cutoff: f64,
    pub nominal_bandwidth: f64,
}

impl BandSpec {
    pub fn new(lower_cutoff: f64, upper_cutoff: f64, nominal_bandwidth: f64) -> Result<Self> {
        if !(lower_cutoff.is_finite() && upper_cutoff.is_finite() && nominal_bandwidth.is_finite())
        {
            return Err(Error::domain("band edges must be finite"));
        }
        if lower_cutoff < 0.0 || lower_cutoff >= upper_cutoff {
            return Err(Error::domain(format!(
                "band needs 0 <= lower < upper, got {lower_cutoff}..{upper_cutoff} Hz"
            )));
        }
        Ok(BandSpec {
            lower_cutoff,
            upper_cutoff,
            nominal_bandwidth,
        })
    }

    /// A band whose nominal bandwidth is exactly `upper - lower`.
    pub fn from_edges(lower_cutoff: f64, upper_cutoff: f64) -> Result<Self> {
        Self::new(lower_cutoff, upper_cutoff, upper_cutoff - lower_cutoff)
    }

    pub fn bandwidth(&self) -> f64 {
        self.upper_cutoff - self.lower_cutoff
    }

    /// Geometric mean of the cutoffs (arithmetic mean when the lower edge is 0).
    pub fn geometric_center(&self) -> f64 {
        if self.lower_cutoff > 0.0 {
            (self.lower_cutoff * self.upper_cutoff).sqrt()
        } else {
            0.5 * self.upper_cutoff
        }
    }
}

/// An ordered set of thirteen bands with the window its filters are designed
/// with. Mel banks use Bartlett windows and Bark banks use Hamming windows.
#[derive(Debug, Clone, PartialEq)]
pub struct BankPreset {
    pub scale: ScaleKind,
    pub variant: u8,
    pub window: WindowKind,
    pub bands: Vec<BandSpec>,
}

impl BankPreset {
    /// Checks the band count and ordering; the window follows the scale.
    pub fn new(scale: ScaleKind, variant: u8, bands: Vec<BandSpec>) -> Result<Self> {
        if bands.len() != BANK_SIZE {
            return Err(Error::domain(format!(
                "a bank has exactly {BANK_SIZE} bands, got {}",
                bands.len()
            )));
        }
        for (k, pair) in bands.windows(2).enumerate() {
            if pair[1].lower_cutoff <= pair[0].lower_cutoff {
                return Err(Error::domain(format!(
                    "band lower cutoffs must increase: band {} starts at {} Hz, band {} at {} Hz",
                    k + 1,
                    pair[0].lower_cutoff,
                    k + 2,
                    pair[1].lower_cutoff
                )));
            }
        }
        Ok(BankPreset {
            scale,
            variant,
            window: window_for(scale),
            bands,
        })
    }

    /// Serializes the bands as a small CSV document.
    ///
    /// Two `#` comment lines carry the scale and variant, followed by the
    /// header `index,lower_hz,upper_hz,nominal_bw_hz` and one row per band
    /// (1-based index). Newlines are LF.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# scale={}\n", self.scale));
        out.push_str(&format!("# variant={}\n", self.variant));
        out.push_str("index,lower_hz,upper_hz,nominal_bw_hz\n");
        for (k, band) in self.bands.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                k + 1,
                band.lower_cutoff,
                band.upper_cutoff,
                band.nominal_bandwidth
            ));
        }
        out
    }

    /// Parses a document written by [`BankPreset::to_document`]. Missing
    /// `scale`/`variant` comments fall back to `default_scale` and variant 0.
    pub fn from_document(text: &str, default_scale: ScaleKind) -> Result<Self> {
        let mut scale = default_scale;
        let mut variant = 0u8;
        let mut bands = Vec::new();
        let mut seen_header = false;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.trim().split_once('=') {
                    match key.trim() {
                        "scale" => {
                            scale = value
                                .trim()
                                .parse()
                                .map_err(|e: Error| Error::parse(line_no, e.to_string()))?
                        }
                        "variant" => {
                            variant = value.trim().parse().map_err(|_| {
                                Error::parse(line_no, format!("bad variant `{}`", value.trim()))
                            })?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !seen_header {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["index", "lower_hz", "upper_hz", "nominal_bw_hz"] {
                    return Err(Error::parse(
                        line_no,
                        "expected header index,lower_hz,upper_hz,nominal_bw_hz",
                    ));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 4 fields, got {}", fields.len()),
                ));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad index `{}`", fields[0])))?;
            if index != bands.len() + 1 {
                return Err(Error::parse(
                    line_no,
                    format!("expected band {}, got {index}", bands.len() + 1),
                ));
            }
            let mut values = [0.0f64; 3];
            for (slot, field) in values.iter_mut().zip(&fields[1..]) {
                *slot = field
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad number `{field}`")))?;
            }
            let band = BandSpec::new(values[0], values[1], values[2])
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            bands.push(band);
        }
        if !seen_header {
            return Err(Error::parse(1, "missing header"));
        }
        BankPreset::new(scale, variant, bands)
    }
}

pub fn window_for(scale: ScaleKind) -> WindowKind {
    match scale {
        ScaleKind::Mel => WindowKind::Bartlett,
        ScaleKind::Bark => WindowKind::Hamming,
    }
}

// (lower, upper, bandwidth) in kHz, transcribed row for row.
type Table = [(u32, u32, u32); BANK_SIZE];

const MEL_1: Table = [
    (50, 250, 200),
    (250, 450, 200),
    (450, 650, 200),
    (650, 850, 200),
    (850, 1062, 212),
    (1058, 1358, 300),
    (1350, 1750, 400),
    (1742, 2262, 520),
    (2256, 2956, 700),
    (2948, 3758, 810),
    (3750, 4700, 950),
    (4692, 5962, 1270),
    (5960, 7625, 1675),
];

const MEL_2: Table = [
    (150, 250, 100),
    (250, 350, 100),
    (350, 450, 100),
    (450, 550, 100),
    (550, 670, 120),
    (665, 825, 160),
    (820, 1060, 240),
    (1055, 1415, 360),
    (1410, 1910, 500),
    (1906, 2606, 700),
    (2600, 3550, 950),
    (3545, 3845, 1250),
    (3840, 5490, 1650),
];

const MEL_3: Table = [
    (10, 60, 50),
    (60, 110, 50),
    (110, 160, 50),
    (160, 210, 50),
    (210, 360, 150),
    (340, 690, 350),
    (670, 1320, 650),
    (1310, 2360, 1050),
    (2300, 3850, 1550),
    (3840, 5990, 2150),
    (5980, 6830, 2850),
    (6810, 7460, 3650),
    (7440, 11990, 4550),
];

const BARK_1: Table = [
    (50, 200, 150),
    (200, 350, 150),
    (350, 500, 150),
    (500, 650, 150),
    (650, 900, 250),
    (900, 1300, 400),
    (1300, 1900, 600),
    (1900, 2750, 850),
    (2750, 3900, 1150),
    (3900, 5400, 1600),
    (5400, 7400, 2000),
    (7400, 9900, 2500),
    (9900, 12900, 3000),
];

const BARK_2: Table = [
    (150, 250, 100),
    (250, 350, 100),
    (350, 450, 100),
    (450, 550, 100),
    (550, 700, 150),
    (700, 900, 200),
    (900, 1200, 300),
    (1200, 1650, 450),
    (1650, 2300, 650),
    (2300, 3100, 800),
    (3100, 4200, 1100),
    (4200, 5650, 1450),
    (5650, 7500, 1850),
];

const BARK_3: Table = [
    (10, 60, 50),
    (60, 110, 50),
    (110, 160, 50),
    (160, 210, 50),
    (210, 360, 150),
    (360, 710, 350),
    (710, 1360, 650),
    (1360, 2410, 1050),
    (2410, 3960, 1550),
    (3960, 6110, 2150),
    (6110, 8960, 2850),
    (8960, 12610, 3650),
    (12610, 16010, 4000),
];

/// Loads one of the six built-in banks (variants 1 to 3 per scale).
/// Table values are in kHz and are converted to Hz.
pub fn load_preset(scale: ScaleKind, variant: u8) -> Result<BankPreset> {
    let table = match (scale, variant) {
        (ScaleKind::Mel, 1) => &MEL_1,
        (ScaleKind::Mel, 2) => &MEL_2,
        (ScaleKind::Mel, 3) => &MEL_3,
        (ScaleKind::Bark, 1) => &BARK_1,
        (ScaleKind::Bark, 2) => &BARK_2,
        (ScaleKind::Bark, 3) => &BARK_3,
        _ => {
            return Err(Error::UnknownPreset {
                scale: scale.to_string(),
                variant,
            })
        }
    };
    let bands = table
        .iter()
        .map(|&(lo, hi, bw)| BandSpec {
            lower_cutoff: f64::from(lo) * 1000.0,
            upper_cutoff: f64::from(hi) * 1000.0,
            nominal_bandwidth: f64::from(bw) * 1000.0,
        })
        .collect();
    BankPreset::new(scale, variant, bands)
}

/// All six built-in banks, Mel first.
pub fn all_presets() -> Vec<BankPreset> {
    ScaleKind::ALL
        .iter()
        .flat_map(|&scale| (1..=3).map(move |v| load_preset(scale, v).expect("built-in preset")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FindingKind {
    /// `upper - lower` differs from the stated bandwidth.
    BandwidthMismatch,
    /// The next band starts below this band's upper cutoff.
    Overlap,
    /// The next band starts above this band's upper cutoff.
    Gap,
}

/// One validator finding. `band` is the 1-based band number; for
/// `Overlap`/`Gap` it names the first band of the adjacent pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub band: usize,
    pub kind: FindingKind,
    /// Signed difference in Hz: computed minus nominal bandwidth for a
    /// mismatch, next lower minus this upper for overlaps and gaps.
    pub delta_hz: f64,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FindingKind::BandwidthMismatch => write!(
                f,
                "band {}: BandwidthMismatch (computed - nominal = {} kHz)",
                self.band,
                self.delta_hz / 1000.0
            ),
            FindingKind::Overlap => write!(
                f,
                "bands {}-{}: Overlap of {} kHz",
                self.band,
                self.band + 1,
                -self.delta_hz / 1000.0
            ),
            FindingKind::Gap => write!(
                f,
                "bands {}-{}: Gap of {} kHz",
                self.band,
                self.band + 1,
                self.delta_hz / 1000.0
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn of_kind(&self, kind: FindingKind) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.kind == kind)
    }
}

/// Reports internal inconsistencies of a bank without changing it.
pub fn validate_preset(preset: &BankPreset) -> ValidationReport {
    let mut findings = Vec::new();
    for (k, band) in preset.bands.iter().enumerate() {
        let delta = band.bandwidth() - band.nominal_bandwidth;
        if delta != 0.0 {
            findings.push(Finding {
                band: k + 1,
                kind: FindingKind::BandwidthMismatch,
                delta_hz: delta,
            });
        }
    }
    for (k, pair) in preset.bands.windows(2).enumerate() {
        let delta = pair[1].lower_cutoff - pair[0].upper_cutoff;
        if delta != 0.0 {
            findings.push(Finding {
                band: k + 1,
                kind: if delta < 0.0 {
                    FindingKind::Overlap
                } else {
                    FindingKind::Gap
                },
                delta_hz: delta,
            });
        }
    }
    ValidationReport { findings }
}

/// Triangular weights over the non-negative FFT bins, one row per band.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularBank {
    pub scale: ScaleKind,
    pub sample_rate: f64,
    pub fft_size: usize,
    /// `n_bands + 2` edge points, equally spaced on the perceptual scale.
    pub edges_scale: Vec<f64>,
    /// The edge points in Hz, before bin snapping.
    pub edges_hz: Vec<f64>,
    pub edge_bins: Vec<usize>,
    /// `n_bands` rows of `fft_size / 2 + 1` weights.
    pub weights: Vec<Vec<f64>>,
}

impl TriangularBank {
    pub fn n_bands(&self) -> usize {
        self.weights.len()
    }

    /// Frequency of each weight column.
    pub fn bin_frequencies(&self) -> Vec<f64> {
        let n = self.fft_size / 2 + 1;
        (0..n)
            .map(|j| j as f64 * self.sample_rate / self.fft_size as f64)
            .collect()
    }

    /// Peak (center) frequency of each triangle in Hz, before snapping.
    pub fn centers_hz(&self) -> Vec<f64> {
        self.edges_hz[1..self.edges_hz.len() - 1].to_vec()
    }

    /// Non-overlapping bandpass bands matching the triangles.
    ///
    /// Band `k` spans the half-height points of triangle `k`, taken on the
    /// perceptual scale: from the midpoint of edges `k` and `k + 1` to the
    /// midpoint of edges `k + 1` and `k + 2`. Adjacent bands share a cutoff
    /// and every band lies strictly inside `(f_min, f_max)`.
    pub fn band_specs(&self) -> Result<Vec<BandSpec>> {
        let mids: Vec<f64> = self
            .edges_scale
            .windows(2)
            .map(|w| self.scale.unwarp(0.5 * (w[0] + w[1])))
            .collect::<Result<_>>()?;
        mids.windows(2)
            .map(|w| BandSpec::from_edges(w[0], w[1]))
            .collect()
    }
}

/// FFT bin nearest to `hz`; exact half-bin ties go to the lower bin.
pub fn snap_to_bin(hz: f64, sample_rate: f64, fft_size: usize) -> usize {
    let x = hz / sample_rate * fft_size as f64;
    (x - 0.5).ceil().max(0.0) as usize
}

/// Builds `n_bands` unit-peak triangles with 50% overlap.
///
/// `n_bands + 2` edges are spaced evenly on `scale` between `f_min` and
/// `f_max`; triangle `k` rises from edge `k` to a peak of 1 at edge `k + 1`
/// and falls back to 0 at edge `k + 2`. Consecutive edges must land at least
/// two bins apart so every triangle has a nonzero rise and fall and
/// neighbours share a nonzero bin.
pub fn triangular_bank(
    scale: ScaleKind,
    f_min: f64,
    f_max: f64,
    n_bands: usize,
    fft_size: usize,
    sample_rate: f64,
) -> Result<TriangularBank> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::domain(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    let nyquist = sample_rate / 2.0;
    if !(f_min.is_finite() && f_max.is_finite()) || f_min < 0.0 || f_min >= f_max {
        return Err(Error::domain(format!(
            "need 0 <= f_min < f_max, got {f_min}..{f_max} Hz"
        )));
    }
    if f_max > nyquist {
        return Err(Error::domain(format!(
            "f_max {f_max} Hz exceeds Nyquist {nyquist} Hz"
        )));
    }
    if n_bands == 0 {
        return Err(Error::domain("need at least one band"));
    }
    if fft_size < 2 * (n_bands + 1) {
        return Err(Error::domain(format!(
            "fft size {fft_size} is below 2 * (n_bands + 1) = {}",
            2 * (n_bands + 1)
        )));
    }

    let lo = scale.warp(f_min)?;
    let hi = scale.warp(f_max)?;
    let n_edges = n_bands + 2;
    let step = (hi - lo) / (n_edges - 1) as f64;
    let edges_scale: Vec<f64> = (0..n_edges)
        .map(|i| {
            if i == n_edges - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect();
    let edges_hz: Vec<f64> = edges_scale
        .iter()
        .enumerate()
        .map(|(i, &v)| match i {
            0 => Ok(f_min),
            i if i == n_edges - 1 => Ok(f_max),
            _ => scale.unwarp(v),
        })
        .collect::<Result<_>>()?;
    let edge_bins: Vec<usize> = edges_hz
        .iter()
        .map(|&f| snap_to_bin(f, sample_rate, fft_size))
        .collect();

    for (i, w) in edge_bins.windows(2).enumerate() {
        if w[1] < w[0] + 2 {
            return Err(Error::Design(format!(
                "edges {i} and {} snap to bins {} and {}; need at least two bins between \
                 consecutive edges (increase fft size or widen the range)",
                i + 1,
                w[0],
                w[1]
            )));
        }
    }

    let n_bins = fft_size / 2 + 1;
    let weights = (0..n_bands)
        .map(|k| {
            let (left, peak, right) = (edge_bins[k], edge_bins[k + 1], edge_bins[k + 2]);
            (0..n_bins)
                .map(|j| {
                    if j > left && j <= peak {
                        (j - left) as f64 / (peak - left) as f64
                    } else if j > peak && j < right {
                        (right - j) as f64 / (right - peak) as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    Ok(TriangularBank {
        scale,
        sample_rate,
        fft_size,
        edges_scale,
        edges_hz,
        edge_bins,
        weights,
    })
}

//! Frequency warping between Hz and the Mel / Bark perceptual scales.
//!
//! Mel uses the 700 Hz corner form, `2595 * log10(1 + f / 700)`, which maps
//! 1000 Hz to roughly 1000 Mel. Bark uses Schroeder's arctangent
//! approximation, `13 * atan(0.76 f / 1000) + 3.5 * atan((f / 7500)^2)`.
//! The Mel inverse is closed form; the Bark inverse is found by bisection.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::{Error, Result};

/// Supremum of [`hz_to_bark`]: both arctangent terms saturate at pi/2.
pub const BARK_SUPREMUM: f64 = (13.0 + 3.5) * FRAC_PI_2;

/// Upper end of the bracket searched by [`bark_to_hz`].
pub const BARK_SEARCH_MAX_HZ: f64 = 1e9;

/// Perceptual scale a bank is laid out on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScaleKind {
    Mel,
    Bark,
}

impl ScaleKind {
    pub const ALL: [ScaleKind; 2] = [ScaleKind::Mel, ScaleKind::Bark];

    /// Hz to this scale.
    pub fn warp(self, hz: f64) -> Result<f64> {
        match self {
            ScaleKind::Mel => hz_to_mel(hz),
            ScaleKind::Bark => hz_to_bark(hz),
        }
    }

    /// This scale back to Hz.
    pub fn unwarp(self, value: f64) -> Result<f64> {
        match self {
            ScaleKind::Mel => mel_to_hz(value),
            ScaleKind::Bark => bark_to_hz(value),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScaleKind::Mel => "mel",
            ScaleKind::Bark => "bark",
        }
    }
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScaleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mel" => Ok(ScaleKind::Mel),
            "bark" => Ok(ScaleKind::Bark),
            other => Err(Error::domain(format!("unknown scale `{other}`"))),
        }
    }
}

fn check_non_negative(value: f64, what: &str) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::domain(format!(
            "{what} must be finite and non-negative, got {value}"
        )));
    }
    Ok(())
}

pub fn hz_to_mel(hz: f64) -> Result<f64> {
    check_non_negative(hz, "frequency")?;
    Ok(2595.0 * (1.0 + hz / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> Result<f64> {
    check_non_negative(mel, "mel value")?;
    Ok(700.0 * (10f64.powf(mel / 2595.0) - 1.0))
}

pub fn hz_to_bark(hz: f64) -> Result<f64> {
    check_non_negative(hz, "frequency")?;
    Ok(bark_unchecked(hz))
}

#[inline]
fn bark_unchecked(hz: f64) -> f64 {
    let ratio = hz / 7500.0;
    13.0 * (0.76 * hz / 1000.0).atan() + 3.5 * (ratio * ratio).atan()
}

/// Inverse of [`hz_to_bark`] by bisection over `[0, 1e9]` Hz.
///
/// The search halves the bracket until it can no longer shrink in double
/// precision, so the result is as close to the true inverse as the forward
/// function can resolve. Values at or above `hz_to_bark(1e9)` are outside the
/// bracket and rejected.
pub fn bark_to_hz(bark: f64) -> Result<f64> {
    check_non_negative(bark, "bark value")?;
    let ceiling = bark_unchecked(BARK_SEARCH_MAX_HZ);
    if bark >= ceiling {
        return Err(Error::domain(format!(
            "bark value {bark} is outside the invertible range [0, {ceiling})"
        )));
    }
    if bark == 0.0 {
        return Ok(0.0);
    }

    let (mut lo, mut hi) = (0.0_f64, BARK_SEARCH_MAX_HZ);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bark_unchecked(mid) < bark {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // both ends bracket the root; return whichever evaluates closer
    if (bark_unchecked(lo) - bark).abs() <= (bark_unchecked(hi) - bark).abs() {
        Ok(lo)
    } else {
        Ok(hi)
    }
}

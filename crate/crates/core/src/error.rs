use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no built-in {scale} preset with variant {variant} (expected 1, 2 or 3)")]
    UnknownPreset { scale: String, variant: u8 },

    /// Every offending band as `(band number, upper cutoff in Hz)`; band
    /// numbers are 1-based, as in the band tables.
    #[error("{} not below Nyquist {nyquist_hz} Hz", describe_bands(.bands))]
    BandsAboveNyquist {
        bands: Vec<(usize, f64)>,
        nyquist_hz: f64,
    },

    #[error("design error: {0}")]
    Design(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Two inputs that must agree (sample rates, tap counts, bank sizes) do not.
    #[error("mismatch: {0}")]
    Mismatch(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

fn describe_bands(bands: &[(usize, f64)]) -> String {
    let parts: Vec<String> = bands
        .iter()
        .map(|(band, upper)| format!("band {band} (upper cutoff {upper} Hz)"))
        .collect();
    let verb = if bands.len() == 1 { "is" } else { "are" };
    format!("{} {verb}", parts.join(", "))
}

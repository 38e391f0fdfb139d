//! Fixed-point coefficient quantization, `.coe` coefficient files and
//! multiply-accumulate bit growth.
//!
//! A `.coe` file as written here looks like:
//!
//! ```text
//! radix=16;
//! coefdata=
//! 0003,
//! ffff;
//! ```
//!
//! Radix 10 codes are signed decimals. Radix 2 and 16 codes are the
//! two's-complement bit pattern of the format width, zero padded, with
//! lowercase hex digits.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Signed fixed-point format: `total_bits` wide with `fraction_bits` of them
/// after the binary point. `Q1.15` is `total_bits = 16, fraction_bits = 15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedPointFormat {
    total_bits: u32,
    fraction_bits: u32,
}

impl FixedPointFormat {
    pub const Q1_15: FixedPointFormat = FixedPointFormat {
        total_bits: 16,
        fraction_bits: 15,
    };

    pub fn new(total_bits: u32, fraction_bits: u32) -> Result<Self> {
        if !(2..=32).contains(&total_bits) {
            return Err(Error::domain(format!(
                "total bits must be in [2, 32], got {total_bits}"
            )));
        }
        if fraction_bits >= total_bits {
            return Err(Error::domain(format!(
                "fraction bits must be below total bits ({total_bits}), got {fraction_bits}"
            )));
        }
        Ok(FixedPointFormat {
            total_bits,
            fraction_bits,
        })
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn fraction_bits(&self) -> u32 {
        self.fraction_bits
    }

    pub fn min_code(&self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    pub fn max_code(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    pub fn scale(&self) -> f64 {
        (1u64 << self.fraction_bits) as f64
    }

    /// Half an LSB: the worst rounding error for an in-range value.
    pub fn half_lsb(&self) -> f64 {
        0.5 / self.scale()
    }

    pub fn contains(&self, code: i64) -> bool {
        (self.min_code()..=self.max_code()).contains(&code)
    }
}

impl Default for FixedPointFormat {
    fn default() -> Self {
        FixedPointFormat::Q1_15
    }
}

impl fmt::Display for FixedPointFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Q{}.{}",
            self.total_bits - self.fraction_bits,
            self.fraction_bits
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedFilter {
    pub codes: Vec<i64>,
    pub format: FixedPointFormat,
    /// Hex SHA-256 of the little-endian bytes of the source coefficients.
    pub source_hash: String,
}

impl QuantizedFilter {
    /// Wraps existing codes, checking each against the format range.
    pub fn from_codes(codes: Vec<i64>, format: FixedPointFormat) -> Result<Self> {
        if let Some((i, c)) = codes
            .iter()
            .enumerate()
            .find(|(_, c)| !format.contains(**c))
        {
            return Err(Error::domain(format!(
                "code {c} at tap {i} does not fit {format}"
            )));
        }
        let source_hash = coefficient_hash(
            &codes
                .iter()
                .map(|&c| c as f64 / format.scale())
                .collect::<Vec<_>>(),
        );
        Ok(QuantizedFilter {
            codes,
            format,
            source_hash,
        })
    }

    pub fn n_taps(&self) -> usize {
        self.codes.len()
    }
}

pub fn coefficient_hash(coefficients: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for c in coefficients {
        hasher.update(c.to_le_bytes());
    }
    format!("{:x}", hasher.finalize())
}

/// Rounds `value * 2^fraction_bits` half away from zero and saturates at the
/// format limits.
pub fn quantize_value(value: f64, format: FixedPointFormat) -> Result<i64> {
    if !value.is_finite() {
        return Err(Error::domain(format!(
            "cannot quantize non-finite value {value}"
        )));
    }
    let scaled = (value * format.scale()).round();
    Ok(scaled.clamp(format.min_code() as f64, format.max_code() as f64) as i64)
}

pub fn quantize(coefficients: &[f64], format: FixedPointFormat) -> Result<QuantizedFilter> {
    let codes = coefficients
        .iter()
        .map(|&c| quantize_value(c, format))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantizedFilter {
        codes,
        format,
        source_hash: coefficient_hash(coefficients),
    })
}

pub fn dequantize(q: &QuantizedFilter) -> Vec<f64> {
    let scale = q.format.scale();
    q.codes.iter().map(|&c| c as f64 / scale).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Radix {
    Binary,
    Decimal,
    Hex,
}

impl Radix {
    pub fn value(self) -> u32 {
        match self {
            Radix::Binary => 2,
            Radix::Decimal => 10,
            Radix::Hex => 16,
        }
    }

    pub fn from_value(value: u32) -> Result<Self> {
        match value {
            2 => Ok(Radix::Binary),
            10 => Ok(Radix::Decimal),
            16 => Ok(Radix::Hex),
            other => Err(Error::domain(format!(
                "radix must be 2, 10 or 16, got {other}"
            ))),
        }
    }
}

impl fmt::Display for Radix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeDocument {
    pub radix: Radix,
    pub codes: Vec<i64>,
}

fn format_code(code: i64, radix: Radix, bits: u32) -> String {
    let pattern = (code as u64) & ((1u64 << bits) - 1);
    match radix {
        Radix::Decimal => code.to_string(),
        Radix::Binary => format!("{:0width$b}", pattern, width = bits as usize),
        Radix::Hex => format!("{:0width$x}", pattern, width = bits.div_ceil(4) as usize),
    }
}

/// Renders a `.coe` document. There is no trailing newline after the final
/// `;`.
pub fn write_coe(q: &QuantizedFilter, radix: Radix) -> Result<String> {
    let bits = q.format.total_bits();
    if let Some(c) = q.codes.iter().find(|&&c| !q.format.contains(c)) {
        return Err(Error::domain(format!("code {c} does not fit {}", q.format)));
    }
    if q.codes.is_empty() {
        return Err(Error::domain("a coefficient file needs at least one code"));
    }
    let mut out = format!("radix={};\ncoefdata=\n", radix.value());
    let last = q.codes.len() - 1;
    for (i, &code) in q.codes.iter().enumerate() {
        out.push_str(&format_code(code, radix, bits));
        out.push_str(if i == last { ";" } else { ",\n" });
    }
    Ok(out)
}

fn parse_code(token: &str, radix: Radix, format: FixedPointFormat, line: usize) -> Result<i64> {
    let bits = format.total_bits();
    match radix {
        Radix::Decimal => {
            let v: i64 = token
                .parse()
                .map_err(|_| Error::parse(line, format!("invalid decimal code `{token}`")))?;
            if !format.contains(v) {
                return Err(Error::parse(
                    line,
                    format!("code {v} exceeds the {bits}-bit range"),
                ));
            }
            Ok(v)
        }
        Radix::Binary | Radix::Hex => {
            let base = radix.value();
            if token.starts_with(['+', '-']) {
                return Err(Error::parse(
                    line,
                    format!("signed literal `{token}` in radix {base}"),
                ));
            }
            let raw = u64::from_str_radix(token, base)
                .map_err(|_| Error::parse(line, format!("invalid radix-{base} code `{token}`")))?;
            if raw >> bits != 0 {
                return Err(Error::parse(
                    line,
                    format!("code `{token}` is wider than {bits} bits"),
                ));
            }
            // sign-extend the two's-complement pattern
            let shift = 64 - bits;
            Ok(((raw << shift) as i64) >> shift)
        }
    }
}

/// Parses a `.coe` document against `format`.
///
/// Keywords are case-insensitive and may carry spaces around `=`. Blank
/// lines and lines starting with `;` are ignored, as is anything after the
/// `;` ending the radix directive or the coefficient list. Codes may be split
/// over lines and separated by commas or whitespace. CRLF is accepted.
pub fn read_coe(text: &str, format: FixedPointFormat) -> Result<CoeDocument> {
    let mut radix: Option<Radix> = None;
    let mut in_data = false;
    let mut done = false;
    let mut codes = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || done {
            continue;
        }
        if line.starts_with(';') && !in_data {
            continue;
        }

        let mut rest = line;
        if !in_data {
            let (key, value) = rest.split_once('=').ok_or_else(|| {
                Error::parse(line_no, format!("expected a directive, found `{line}`"))
            })?;
            let key = key.trim().to_ascii_lowercase();
            match key.as_str() {
                "radix" => {
                    if radix.is_some() {
                        return Err(Error::parse(line_no, "duplicate radix directive"));
                    }
                    let value = value.split(';').next().unwrap_or("").trim();
                    let r: u32 = value
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("bad radix `{value}`")))?;
                    radix = Some(
                        Radix::from_value(r).map_err(|e| Error::parse(line_no, e.to_string()))?,
                    );
                    continue;
                }
                "coefdata" => {
                    if radix.is_none() {
                        return Err(Error::parse(line_no, "coefdata before the radix directive"));
                    }
                    in_data = true;
                    rest = value;
                }
                _ => return Err(Error::parse(line_no, format!("unknown directive `{key}`"))),
            }
        }

        let radix = radix.expect("radix checked before coefdata");
        let (data, terminated) = match rest.split_once(';') {
            Some((data, _comment)) => (data, true),
            None => (rest, false),
        };
        for token in data
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            codes.push(parse_code(
                &token.to_ascii_lowercase(),
                radix,
                format,
                line_no,
            )?);
        }
        if terminated {
            done = true;
        }
    }

    let radix = radix.ok_or_else(|| Error::parse(1, "missing radix directive"))?;
    if !in_data {
        return Err(Error::parse(
            text.lines().count().max(1),
            "missing coefdata directive",
        ));
    }
    if !done {
        return Err(Error::parse(
            text.lines().count().max(1),
            "coefficient list is not terminated by `;`",
        ));
    }
    if codes.is_empty() {
        return Err(Error::parse(
            text.lines().count().max(1),
            "coefficient list is empty",
        ));
    }
    Ok(CoeDocument { radix, codes })
}

pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Full-precision accumulator width of an `n_taps` multiply-accumulate:
/// `input_bits + coeff_bits + ceil(log2(n_taps))`.
pub fn output_bit_width(input_bits: u32, coeff_bits: u32, n_taps: usize) -> Result<u32> {
    if input_bits == 0 || coeff_bits == 0 || n_taps == 0 {
        return Err(Error::domain("bit widths and tap count must be at least 1"));
    }
    Ok(input_bits + coeff_bits + ceil_log2(n_taps as u64))
}

/// Smallest two's-complement width holding `value`.
pub fn signed_width(value: i128) -> u32 {
    if value >= 0 {
        129 - value.leading_zeros()
    } else {
        129 - (!value).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q15() -> FixedPointFormat {
        FixedPointFormat::Q1_15
    }

    #[test]
    fn format_bounds() {
        assert!(FixedPointFormat::new(1, 0).is_err());
        assert!(FixedPointFormat::new(33, 0).is_err());
        assert!(FixedPointFormat::new(16, 16).is_err());
        let f = FixedPointFormat::new(32, 31).unwrap();
        assert_eq!(f.min_code(), i32::MIN as i64);
        assert_eq!(f.max_code(), i32::MAX as i64);
        assert_eq!(q15().to_string(), "Q1.15");
    }

    #[test]
    fn quantize_examples() {
        let q = quantize(&[0.5, 1.0, -0.000015, -0.00002, -1.0, -2.0], q15()).unwrap();
        assert_eq!(q.codes, vec![16384, 32767, 0, -1, -32768, -32768]);
        assert!(quantize(&[f64::NAN], q15()).is_err());
        assert!(quantize(&[f64::INFINITY], q15()).is_err());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let f = FixedPointFormat::new(8, 1).unwrap();
        assert_eq!(quantize_value(0.25, f).unwrap(), 1);
        assert_eq!(quantize_value(-0.25, f).unwrap(), -1);
        assert_eq!(quantize_value(0.75, f).unwrap(), 2);
        assert_eq!(quantize_value(-0.75, f).unwrap(), -2);
    }

    #[test]
    fn dequantize_examples() {
        let q = QuantizedFilter::from_codes(vec![16384, -32768], q15()).unwrap();
        assert_eq!(dequantize(&q), vec![0.5, -1.0]);
        assert!(QuantizedFilter::from_codes(vec![32768], q15()).is_err());
    }

    #[test]
    fn source_hash_tracks_coefficients() {
        let a = quantize(&[0.1, 0.2], q15()).unwrap();
        let b = quantize(&[0.1, 0.2], q15()).unwrap();
        let c = quantize(&[0.1, 0.2000001], q15()).unwrap();
        assert_eq!(a.source_hash, b.source_hash);
        assert_ne!(a.source_hash, c.source_hash);
        assert_eq!(a.codes, c.codes);
        assert_eq!(a.source_hash.len(), 64);
    }

    #[test]
    fn coe_layout() {
        let q = QuantizedFilter::from_codes(vec![3, -1], q15()).unwrap();
        assert_eq!(
            write_coe(&q, Radix::Decimal).unwrap(),
            "radix=10;\ncoefdata=\n3,\n-1;"
        );
        assert_eq!(
            write_coe(&q, Radix::Hex).unwrap(),
            "radix=16;\ncoefdata=\n0003,\nffff;"
        );
        let q = QuantizedFilter::from_codes(vec![-32768], q15()).unwrap();
        assert_eq!(
            write_coe(&q, Radix::Binary).unwrap(),
            "radix=2;\ncoefdata=\n1000000000000000;"
        );
        let q =
            QuantizedFilter::from_codes(vec![-1], FixedPointFormat::new(10, 9).unwrap()).unwrap();
        assert_eq!(
            write_coe(&q, Radix::Hex).unwrap(),
            "radix=16;\ncoefdata=\n3ff;"
        );
    }

    #[test]
    fn read_examples() {
        let doc = read_coe("radix=10;\ncoefdata=\n0;", q15()).unwrap();
        assert_eq!(
            doc,
            CoeDocument {
                radix: Radix::Decimal,
                codes: vec![0]
            }
        );
        let doc = read_coe("radix=16;\ncoefdata=\nffff;", q15()).unwrap();
        assert_eq!(doc.codes, vec![-1]);
    }

    #[test]
    fn reader_is_tolerant() {
        let text = "; generated\r\n\r\nRadix = 16; hex codes\r\nCOEFDATA = 7FFF, 8000,\r\n  0001\r\n\r\n, 00ff; trailing\r\nignored\r\n";
        let doc = read_coe(text, q15()).unwrap();
        assert_eq!(doc.codes, vec![32767, -32768, 1, 255]);
    }

    #[test]
    fn reader_errors_carry_line_numbers() {
        let cases: [(&str, usize); 7] = [
            ("coefdata=\n1;", 1),
            ("radix=10;\n1,2;", 2),
            ("radix=8;\ncoefdata=\n1;", 1),
            ("radix=2;\ncoefdata=\n0,\n2;", 4),
            ("radix=16;\ncoefdata=\n1ffff;", 3),
            ("radix=10;\ncoefdata=\n\n40000;", 4),
            ("radix=10;\n", 1),
        ];
        for (text, line) in cases {
            match read_coe(text, q15()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(read_coe("radix=10;\ncoefdata=\n1,2", q15()).is_err());
    }

    #[test]
    fn bit_growth_examples() {
        assert_eq!(output_bit_width(8, 16, 63).unwrap(), 30);
        assert_eq!(output_bit_width(8, 16, 1).unwrap(), 24);
        assert_eq!(output_bit_width(1, 1, 2).unwrap(), 3);
        assert_eq!(output_bit_width(8, 16, 64).unwrap(), 30);
        assert_eq!(output_bit_width(8, 16, 65).unwrap(), 31);
        assert!(output_bit_width(0, 16, 63).is_err());
    }

    #[test]
    fn signed_width_values() {
        assert_eq!(signed_width(0), 1);
        assert_eq!(signed_width(-1), 1);
        assert_eq!(signed_width(1), 2);
        assert_eq!(signed_width(2), 3);
        assert_eq!(signed_width(3), 3);
        assert_eq!(signed_width(-4), 3);
        assert_eq!(signed_width(-5), 4);
        assert_eq!(signed_width(127), 8);
        assert_eq!(signed_width(-128), 8);
    }

    /// Every sum of `taps` products of `a`-bit and `b`-bit signed values.
    fn exhaustive_max_width(a: u32, b: u32, taps: u32) -> u32 {
        let xs: Vec<i128> = (-(1i128 << (a - 1))..(1i128 << (a - 1))).collect();
        let cs: Vec<i128> = (-(1i128 << (b - 1))..(1i128 << (b - 1))).collect();
        let products: Vec<i128> = xs
            .iter()
            .flat_map(|x| cs.iter().map(move |c| x * c))
            .collect();
        let mut sums = vec![0i128];
        for _ in 0..taps {
            let mut next: Vec<i128> = sums
                .iter()
                .flat_map(|s| products.iter().map(move |p| s + p))
                .collect();
            next.sort_unstable();
            next.dedup();
            sums = next;
        }
        sums.into_iter().map(signed_width).max().unwrap()
    }

    #[test]
    fn bit_growth_bound_exhaustive() {
        for a in 1..=3 {
            for b in 1..=3 {
                for taps in 1..=4 {
                    let needed = exhaustive_max_width(a, b, taps);
                    let bound = output_bit_width(a, b, taps as usize).unwrap();
                    assert!(
                        needed <= bound,
                        "a={a} b={b} taps={taps}: {needed} > {bound}"
                    );
                }
            }
        }
        assert_eq!(exhaustive_max_width(1, 1, 2), 3);
    }

    fn radix_strategy() -> impl Strategy<Value = Radix> {
        prop_oneof![Just(Radix::Binary), Just(Radix::Decimal), Just(Radix::Hex)]
    }

    proptest! {
        #[test]
        fn quantization_error_is_half_lsb(c in -1.0f64..(32767.0 / 32768.0)) {
            let q = quantize(&[c], q15()).unwrap();
            let back = dequantize(&q)[0];
            prop_assert!((back - c).abs() <= q15().half_lsb());
        }

        #[test]
        fn quantize_is_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantize_value(lo, q15()).unwrap() <= quantize_value(hi, q15()).unwrap());
        }

        #[test]
        fn coe_roundtrip(total in 2u32..=32, seed in any::<u64>(), len in 1usize..80, radix in radix_strategy()) {
            use rand::{Rng, SeedableRng};
            let format = FixedPointFormat::new(total, total - 1).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let codes: Vec<i64> = (0..len).map(|_| rng.gen_range(format.min_code()..=format.max_code())).collect();
            let q = QuantizedFilter::from_codes(codes, format).unwrap();
            let text = write_coe(&q, radix).unwrap();
            let doc = read_coe(&text, format).unwrap();
            prop_assert_eq!(doc.radix, radix);
            prop_assert_eq!(doc.codes, q.codes);
        }
    }
}

//! `fbank`: design, export, simulate and compare thirteen-band Mel/Bark FIR banks.
//!
//! Exit codes: 0 success, 1 usage error, 2 design or I/O error. Machine-readable
//! results go to files; warnings go to standard error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perceptual_fbank::bank_layout::{all_presets, load_preset, validate_preset};
use perceptual_fbank::fir_design::{
    design_bank, frequency_response, peak_normalize, DEFAULT_SAMPLE_RATE, DEFAULT_TAPS,
};
use perceptual_fbank::quant_coe::{dequantize, quantize, write_coe};
use perceptual_fbank::sim_engine::{compare_banks, dds_sine, run_bank};
use perceptual_fbank::{
    BankPreset, DdsConfig, Error, FirFilter, FixedPointFormat, Radix, ScaleKind,
};

/// Simulations longer than this need `--allow-large`.
const LARGE_SIMULATION_SAMPLES: u64 = 10_000_000;

/// Stimulus length used when neither `--samples` nor `--duration` is given.
const DEFAULT_DURATION: &str = "1200us";

#[derive(Debug, Parser)]
#[command(
    name = "fbank",
    version,
    about = "Perceptual (Mel/Bark) FIR filter bank toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the built-in band tables with validator findings.
    Presets(PresetsArgs),
    /// Design a bank and write coefficient CSV, COE files and a report.
    Design(DesignArgs),
    /// Drive a bank with a DDS sine and write output traces and band energies.
    Simulate(SimulateArgs),
    /// Write per-band and combined frequency responses as CSV.
    Response(ResponseArgs),
    /// Compare two banks band by band.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct PresetsArgs {
    #[arg(long)]
    scale: Option<ScaleKind>,
    #[arg(long)]
    variant: Option<u8>,
    /// Write the selected preset as a band document (needs --scale and --variant).
    #[arg(long, value_name = "PATH")]
    export: Option<PathBuf>,
    /// Read a band document and show it instead of the built-in tables.
    #[arg(long, value_name = "PATH", conflicts_with = "export")]
    import: Option<PathBuf>,
}

/// Which bank to build and at what rate.
#[derive(Debug, Args)]
struct BankArgs {
    #[arg(long, default_value = "mel")]
    scale: ScaleKind,
    #[arg(long, default_value_t = 1)]
    variant: u8,
    /// Band document to use instead of a built-in preset.
    #[arg(long, value_name = "PATH")]
    bands: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TAPS)]
    taps: usize,
    #[arg(long, visible_alias = "clock", default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: f64,
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    bank: BankArgs,
    #[arg(long, default_value_t = 16)]
    total_bits: u32,
    #[arg(long, default_value_t = 15)]
    fraction_bits: u32,
    /// COE radix: 2, 10 or 16.
    #[arg(long, default_value_t = 16)]
    radix: u32,
    /// Scale each filter to unit peak gain before quantizing.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value = "fbank-design")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    bank: BankArgs,
    #[arg(long)]
    target_hz: f64,
    #[arg(long, conflicts_with = "duration")]
    samples: Option<u64>,
    /// Stimulus length such as `1200us`, `2.5ms` or `0.001s`.
    #[arg(long)]
    duration: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 32)]
    accumulator_bits: u32,
    /// Permit runs longer than ten million samples.
    #[arg(long)]
    allow_large: bool,
    #[arg(long, default_value = "fbank-simulate")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ResponseArgs {
    #[command(flatten)]
    bank: BankArgs,
    #[arg(long, default_value_t = 1024)]
    points: usize,
    #[arg(long, default_value = "fbank-response")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, default_value = "mel")]
    a_scale: ScaleKind,
    #[arg(long, default_value_t = 2)]
    a_variant: u8,
    #[arg(long, default_value = "bark")]
    b_scale: ScaleKind,
    #[arg(long, default_value_t = 2)]
    b_variant: u8,
    #[arg(long, default_value_t = DEFAULT_TAPS)]
    taps: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: f64,
    /// Tap count of bank B; must equal --taps.
    #[arg(long)]
    taps_b: Option<usize>,
    /// Sample rate of bank B; must equal --sample-rate.
    #[arg(long)]
    sample_rate_b: Option<f64>,
    #[arg(long, default_value_t = 1024)]
    points: usize,
    #[arg(long, default_value = "fbank-compare")]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failure(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::UnknownPreset { .. } | Error::Mismatch(_) => {
                CliError::Usage(e.to_string())
            }
            Error::BandsAboveNyquist { .. } | Error::Design(_) | Error::Parse { .. } => {
                CliError::Failure(e.to_string())
            }
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Presets(args) => cmd_presets(&args),
        Command::Design(args) => cmd_design(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Response(args) => cmd_response(&args),
        Command::Compare(args) => cmd_compare(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Failure(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print_preset(preset: &BankPreset) {
    for (k, band) in preset.bands.iter().enumerate() {
        println!(
            "{}-{},{},{},{},{},{}",
            preset.scale,
            preset.variant,
            k + 1,
            band.lower_cutoff,
            band.upper_cutoff,
            band.nominal_bandwidth,
            band.bandwidth()
        );
    }
    for finding in &validate_preset(preset).findings {
        println!("# {}-{} {finding}", preset.scale, preset.variant);
    }
}

fn cmd_presets(args: &PresetsArgs) -> CliResult<()> {
    let presets = if let Some(path) = &args.import {
        vec![BankPreset::from_document(
            &read_file(path)?,
            args.scale.unwrap_or(ScaleKind::Mel),
        )?]
    } else {
        match (args.scale, args.variant) {
            (Some(scale), Some(variant)) => vec![load_preset(scale, variant)?],
            (scale, variant) => {
                if let Some(v) = variant {
                    if !(1..=3).contains(&v) {
                        return Err(usage(format!("unknown variant {v} (expected 1, 2 or 3)")));
                    }
                }
                all_presets()
                    .into_iter()
                    .filter(|p| {
                        scale.is_none_or(|s| p.scale == s) && variant.is_none_or(|v| p.variant == v)
                    })
                    .collect()
            }
        }
    };

    if let Some(path) = &args.export {
        let [preset] = presets.as_slice() else {
            return Err(usage(
                "--export needs a single preset: pass both --scale and --variant",
            ));
        };
        write_file(path, &preset.to_document())?;
    }

    println!("preset,band,lower_hz,upper_hz,nominal_bw_hz,computed_bw_hz");
    for preset in &presets {
        print_preset(preset);
    }
    Ok(())
}

fn load_bank(args: &BankArgs) -> CliResult<BankPreset> {
    match &args.bands {
        Some(path) => Ok(BankPreset::from_document(&read_file(path)?, args.scale)?),
        None => Ok(load_preset(args.scale, args.variant)?),
    }
}

fn preset_label(preset: &BankPreset) -> String {
    format!(
        "{}-{} ({} window)",
        preset.scale,
        preset.variant,
        preset.window.name()
    )
}

/// Designs the bank and reports feasibility warnings on standard error.
fn design_filters(args: &BankArgs) -> CliResult<(BankPreset, Vec<FirFilter>)> {
    if !(args.sample_rate.is_finite() && args.sample_rate > 0.0) {
        return Err(usage(format!(
            "sample rate must be positive, got {}",
            args.sample_rate
        )));
    }
    let preset = load_bank(args)?;
    let filters = design_bank(&preset, args.taps, args.sample_rate)?;
    for (k, f) in filters.iter().enumerate() {
        if let Some(w) = &f.warning {
            eprintln!("warning: band {}: {w}", k + 1);
        }
    }
    Ok((preset, filters))
}

fn cmd_design(args: &DesignArgs) -> CliResult<()> {
    let format = FixedPointFormat::new(args.total_bits, args.fraction_bits)?;
    let radix = Radix::from_value(args.radix)?;
    let (preset, mut filters) = design_filters(&args.bank)?;
    if args.normalize {
        filters = filters
            .iter()
            .map(|f| peak_normalize(f, 1024))
            .collect::<Result<_, _>>()?;
    }
    create_dir(&args.out)?;

    let mut report = String::new();
    let _ = writeln!(report, "bank: {}", preset_label(&preset));
    let _ = writeln!(report, "taps: {}", args.bank.taps);
    let _ = writeln!(report, "sample_rate_hz: {}", args.bank.sample_rate);
    let _ = writeln!(
        report,
        "format: {format} ({} total bits, {} fraction bits)",
        args.total_bits, args.fraction_bits
    );
    let _ = writeln!(report, "radix: {}", radix.value());
    let _ = writeln!(report, "normalize: {}", args.normalize);
    let _ = writeln!(
        report,
        "band,lower_hz,upper_hz,max_quant_error,sha256,warning"
    );

    for (k, filter) in filters.iter().enumerate() {
        let q = quantize(&filter.coefficients, format)?;
        let max_err = dequantize(&q)
            .iter()
            .zip(&filter.coefficients)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        let mut csv = String::from("tap_index,coefficient\n");
        for (i, c) in filter.coefficients.iter().enumerate() {
            let _ = writeln!(csv, "{i},{c}");
        }
        write_file(&args.out.join(format!("band_{k:02}.csv")), &csv)?;
        write_file(
            &args.out.join(format!("band_{k:02}.coe")),
            &write_coe(&q, radix)?,
        )?;

        let band = &preset.bands[k];
        let warning = filter.warning.map(|w| w.to_string()).unwrap_or_default();
        let _ = writeln!(
            report,
            "{},{},{},{max_err:e},{},{warning}",
            k + 1,
            band.lower_cutoff,
            band.upper_cutoff,
            q.source_hash
        );
    }
    write_file(&args.out.join("report.txt"), &report)?;
    println!("wrote {} filters to {}", filters.len(), args.out.display());
    Ok(())
}

/// Parses `1200us`, `1.2ms`, `0.0012s` or a bare number of seconds.
fn parse_duration(text: &str) -> CliResult<f64> {
    let t = text.trim();
    let (number, scale) = if let Some(n) = t.strip_suffix("us") {
        (n, 1e-6)
    } else if let Some(n) = t.strip_suffix("µs") {
        (n, 1e-6)
    } else if let Some(n) = t.strip_suffix("ns") {
        (n, 1e-9)
    } else if let Some(n) = t.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = t.strip_suffix('s') {
        (n, 1.0)
    } else {
        (t, 1.0)
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| usage(format!("cannot parse duration `{text}`")))?;
    if !(value.is_finite() && value > 0.0) {
        return Err(usage(format!("duration must be positive, got `{text}`")));
    }
    Ok(value * scale)
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let clock = args.bank.sample_rate;
    let n_samples = match (args.samples, &args.duration) {
        (Some(n), _) => n,
        (None, duration) => {
            let seconds = parse_duration(duration.as_deref().unwrap_or(DEFAULT_DURATION))?;
            (seconds * clock).round() as u64
        }
    };
    if n_samples == 0 {
        return Err(usage("simulation needs at least one sample"));
    }
    if n_samples > LARGE_SIMULATION_SAMPLES && !args.allow_large {
        return Err(usage(format!(
            "{n_samples} samples requested; pass --allow-large to run more than {LARGE_SIMULATION_SAMPLES}"
        )));
    }
    let n_samples =
        usize::try_from(n_samples).map_err(|_| usage("sample count does not fit in memory"))?;

    let dds = DdsConfig {
        accumulator_bits: args.accumulator_bits,
        amplitude: args.amplitude,
        ..DdsConfig::new(clock, args.target_hz)
    };
    dds.validate()?;
    let (preset, filters) = design_filters(&args.bank)?;
    let stimulus = dds_sine(&dds, n_samples)?;
    let run = run_bank(&filters, &stimulus)?;

    create_dir(&args.out)?;
    let mut csv = String::from("sample_index");
    for k in 0..filters.len() {
        let _ = write!(csv, ",filter_{k:02}");
    }
    csv.push_str(",summed\n");
    for i in 0..n_samples {
        let _ = write!(csv, "{i}");
        for out in &run.per_filter_outputs {
            let _ = write!(csv, ",{}", out.samples[i]);
        }
        let _ = writeln!(csv, ",{}", run.summed_output.samples[i]);
    }
    write_file(&args.out.join("outputs.csv"), &csv)?;

    let mut energies = String::from("band_index,energy\n");
    for (k, e) in run.band_energies.iter().enumerate() {
        let _ = writeln!(energies, "{},{e}", k + 1);
    }
    write_file(&args.out.join("energies.csv"), &energies)?;

    println!("bank: {}", preset_label(&preset));
    println!("samples: {n_samples} at {clock} Hz");
    println!(
        "stimulus: {} Hz requested, {} Hz generated",
        args.target_hz,
        dds.actual_hz()?
    );
    println!("argmax band: {}", run.argmax_band() + 1);
    Ok(())
}

fn cmd_response(args: &ResponseArgs) -> CliResult<()> {
    let (_, filters) = design_filters(&args.bank)?;
    let responses = filters
        .iter()
        .map(|f| frequency_response(f, args.points))
        .collect::<Result<Vec<_>, _>>()?;
    create_dir(&args.out)?;

    for (k, r) in responses.iter().enumerate() {
        let mut csv = String::from("frequency_hz,magnitude_db,phase_rad\n");
        for i in 0..r.len() {
            let _ = writeln!(
                csv,
                "{},{},{}",
                r.frequencies[i], r.magnitude_db[i], r.phase[i]
            );
        }
        write_file(&args.out.join(format!("band_{k:02}_response.csv")), &csv)?;
    }

    let mut combined = String::from("frequency_hz");
    for k in 0..responses.len() {
        let _ = write!(combined, ",band_{k:02}_db");
    }
    combined.push('\n');
    for i in 0..args.points {
        let _ = write!(combined, "{}", responses[0].frequencies[i]);
        for r in &responses {
            let _ = write!(combined, ",{}", r.magnitude_db[i]);
        }
        combined.push('\n');
    }
    write_file(&args.out.join("combined_response.csv"), &combined)?;
    println!(
        "wrote {} responses of {} points to {}",
        responses.len(),
        args.points,
        args.out.display()
    );
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    if let Some(taps_b) = args.taps_b {
        if taps_b != args.taps {
            return Err(usage(format!(
                "banks must share a tap count: {} vs {taps_b}",
                args.taps
            )));
        }
    }
    if let Some(fs_b) = args.sample_rate_b {
        if fs_b != args.sample_rate {
            return Err(usage(format!(
                "banks must share a sample rate: {} vs {fs_b}",
                args.sample_rate
            )));
        }
    }
    let bank = |scale, variant| BankArgs {
        scale,
        variant,
        bands: None,
        taps: args.taps,
        sample_rate: args.sample_rate,
    };
    let (preset_a, a) = design_filters(&bank(args.a_scale, args.a_variant))?;
    let (preset_b, b) = design_filters(&bank(args.b_scale, args.b_variant))?;
    let cmp = compare_banks(&a, &b, args.points)?;

    create_dir(&args.out)?;
    let mut csv = String::from("band,cosine,coef_rms_diff,response_rms_diff_db\n");
    for k in 0..cmp.per_band_cosine.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            k + 1,
            cmp.per_band_cosine[k],
            cmp.per_band_rms_diff[k],
            cmp.response_rms_diff_db[k]
        );
    }
    write_file(&args.out.join("comparison.csv"), &csv)?;

    println!("a: {}", preset_label(&preset_a));
    println!("b: {}", preset_label(&preset_b));
    println!("mean cosine: {}", cmp.mean_cosine());
    println!(
        "mean response rms diff (dB): {}",
        cmp.mean_response_rms_diff_db()
    );
    Ok(())
}

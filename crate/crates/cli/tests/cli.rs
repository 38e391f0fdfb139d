use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use perceptual_fbank::quant_coe::read_coe;
use perceptual_fbank::{FixedPointFormat, Radix};
use tempfile::TempDir;

fn fbank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbank"))
        .args(args)
        .output()
        .expect("run fbank")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn presets_lists_all_tables() {
    let out = fbank(&["presets"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 78);
}

#[test]
fn presets_single_table_and_findings() {
    let out = fbank(&["presets", "--scale", "mel", "--variant", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "mel-1,1,50000,250000,200000,200000"
    );

    let text = stdout(&fbank(&["presets", "--scale", "mel", "--variant", "2"]));
    assert!(
        text.contains("# mel-2 band 12: BandwidthMismatch"),
        "{text}"
    );
}

#[test]
fn presets_rejects_unknown_scale_and_variant() {
    assert_eq!(fbank(&["presets", "--scale", "erb"]).status.code(), Some(1));
    assert_eq!(
        fbank(&["presets", "--scale", "bark", "--variant", "4"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(fbank(&["presets", "--variant", "9"]).status.code(), Some(1));
}

#[test]
fn presets_export_import_roundtrip() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bark3.csv");
    let p = path.to_str().unwrap();
    let exported = fbank(&[
        "presets",
        "--scale",
        "bark",
        "--variant",
        "3",
        "--export",
        p,
    ]);
    assert!(exported.status.success());
    let imported = fbank(&["presets", "--import", p]);
    assert!(imported.status.success());
    assert_eq!(stdout(&exported), stdout(&imported));

    // an exported document drives design through --bands
    let out = dir.path().join("d");
    let run = fbank(&["design", "--bands", p, "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(fs::read_to_string(out.join("report.txt"))
        .unwrap()
        .starts_with("bank: bark-3 (hamming window)"));
}

#[test]
fn design_writes_parseable_coe_files() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("mel1");
    let run = fbank(&[
        "design",
        "--scale",
        "mel",
        "--variant",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    // 63 taps cannot resolve these bands at 50 MHz; warnings only
    assert_eq!(
        stderr(&run)
            .lines()
            .filter(|l| l.starts_with("warning: band"))
            .count(),
        13
    );

    for k in 0..13 {
        let text = fs::read_to_string(out.join(format!("band_{k:02}.coe"))).unwrap();
        let doc = read_coe(&text, FixedPointFormat::Q1_15).unwrap();
        assert_eq!(doc.radix, Radix::Hex);
        assert_eq!(doc.codes.len(), 63);

        let (header, rows) = read_csv(&out.join(format!("band_{k:02}.csv")));
        assert_eq!(header, ["tap_index", "coefficient"]);
        assert_eq!(rows.len(), 63);
    }
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    for line in [
        "taps: 63",
        "sample_rate_hz: 50000000",
        "format: Q1.15",
        "radix: 16",
        "normalize: false",
    ] {
        assert!(report.contains(line), "{line} missing from report");
    }
}

#[test]
fn design_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let args = [
            "design",
            "--scale",
            "bark",
            "--variant",
            "2",
            "--radix",
            "2",
            "--normalize",
            "--out",
        ];
        let mut args = args.to_vec();
        args.push(out.to_str().unwrap());
        assert!(fbank(&args).status.success());
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 27);
    for name in names {
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn design_above_nyquist_names_band_13() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x");
    let run = fbank(&[
        "design",
        "--scale",
        "bark",
        "--variant",
        "3",
        "--sample-rate",
        "16e6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(stderr(&run).contains("band 13"), "{}", stderr(&run));
    assert!(!out.exists());
}

#[test]
fn design_rejects_bad_format() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x");
    let o = out.to_str().unwrap();
    assert_eq!(
        fbank(&["design", "--radix", "8", "--out", o]).status.code(),
        Some(1)
    );
    assert_eq!(
        fbank(&["design", "--fraction-bits", "16", "--out", o])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        fbank(&["design", "--taps", "64", "--out", o]).status.code(),
        Some(1)
    );
}

#[test]
fn simulate_selects_band_one_for_150_khz() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let run = fbank(&[
        "simulate",
        "--scale",
        "mel",
        "--variant",
        "1",
        "--taps",
        "2001",
        "--target-hz",
        "150e3",
        "--samples",
        "20000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(stdout(&run).contains("argmax band: 1"), "{}", stdout(&run));

    let (header, rows) = read_csv(&out.join("outputs.csv"));
    assert_eq!(header.len(), 15);
    assert_eq!(
        (header[0].as_str(), header[1].as_str(), header[14].as_str()),
        ("sample_index", "filter_00", "summed")
    );
    assert_eq!(rows.len(), 20000);
    let row = &rows[12345];
    let sum: f64 = row[1..14].iter().sum();
    assert!((sum - row[14]).abs() <= 1e-9 * sum.abs().max(1.0));

    let (header, rows) = read_csv(&out.join("energies.csv"));
    assert_eq!(header, ["band_index", "energy"]);
    assert_eq!(rows.len(), 13);
    assert!(rows[1..].iter().all(|r| r[1] < rows[0][1]));
}

#[test]
fn simulate_duration_matches_clock() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let run = fbank(&[
        "simulate",
        "--target-hz",
        "1e6",
        "--duration",
        "1200us",
        "--clock",
        "50e6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(stdout(&run).contains("samples: 60000 at 50000000 Hz"));
}

#[test]
fn simulate_rejects_bad_stimulus() {
    let dir = TempDir::new().unwrap();
    let o = dir.path().join("sim");
    let o = o.to_str().unwrap();
    let zero_amp = fbank(&[
        "simulate",
        "--target-hz",
        "150e3",
        "--amplitude",
        "0",
        "--samples",
        "100",
        "--out",
        o,
    ]);
    assert_eq!(zero_amp.status.code(), Some(1));
    let above_nyquist = fbank(&[
        "simulate",
        "--target-hz",
        "30e6",
        "--samples",
        "100",
        "--out",
        o,
    ]);
    assert_eq!(above_nyquist.status.code(), Some(1));
    let bad_duration = fbank(&[
        "simulate",
        "--target-hz",
        "1e6",
        "--duration",
        "soon",
        "--out",
        o,
    ]);
    assert_eq!(bad_duration.status.code(), Some(1));
}

#[test]
fn simulate_guards_large_runs() {
    let dir = TempDir::new().unwrap();
    let o = dir.path().join("sim");
    let o = o.to_str().unwrap();
    for length in [["--samples", "20000000"], ["--duration", "1s"]] {
        let run = fbank(&[
            "simulate",
            "--target-hz",
            "1e6",
            length[0],
            length[1],
            "--out",
            o,
        ]);
        assert_eq!(run.status.code(), Some(1));
        assert!(stderr(&run).contains("--allow-large"));
    }
}

#[test]
fn response_schema_and_band_one_peak() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("resp");
    let run = fbank(&[
        "response",
        "--scale",
        "bark",
        "--variant",
        "2",
        "--taps",
        "2001",
        "--points",
        "512",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", stderr(&run));

    let (header, rows) = read_csv(&out.join("combined_response.csv"));
    assert_eq!(header.len(), 14);
    assert_eq!(header[0], "frequency_hz");
    assert_eq!(rows.len(), 512);

    let (header, rows) = read_csv(&out.join("band_00_response.csv"));
    assert_eq!(header, ["frequency_hz", "magnitude_db", "phase_rad"]);
    let peak = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    assert!(
        (150e3..=250e3).contains(&peak[0]),
        "band 1 peaks at {} Hz",
        peak[0]
    );
}

#[test]
fn compare_schema_and_symmetry() {
    let dir = TempDir::new().unwrap();
    let (ab, ba) = (dir.path().join("ab"), dir.path().join("ba"));
    let run_ab = fbank(&[
        "compare",
        "--a-scale",
        "mel",
        "--b-scale",
        "bark",
        "--out",
        ab.to_str().unwrap(),
    ]);
    let run_ba = fbank(&[
        "compare",
        "--a-scale",
        "bark",
        "--b-scale",
        "mel",
        "--out",
        ba.to_str().unwrap(),
    ]);
    assert!(run_ab.status.success() && run_ba.status.success());

    let (header, rows) = read_csv(&ab.join("comparison.csv"));
    assert_eq!(
        header,
        ["band", "cosine", "coef_rms_diff", "response_rms_diff_db"]
    );
    assert_eq!(rows.len(), 13);
    assert_eq!(
        fs::read(ab.join("comparison.csv")).unwrap(),
        fs::read(ba.join("comparison.csv")).unwrap()
    );

    let summary = |out: &Output| {
        stdout(out)
            .lines()
            .filter(|l| l.starts_with("mean"))
            .map(str::to_string)
            .collect::<Vec<_>>()
    };
    assert_eq!(summary(&run_ab), summary(&run_ba));
    assert_eq!(summary(&run_ab).len(), 2);
}

#[test]
fn compare_same_preset_is_identity() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("same");
    let run = fbank(&[
        "compare",
        "--a-scale",
        "mel",
        "--b-scale",
        "mel",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let (_, rows) = read_csv(&out.join("comparison.csv"));
    assert!(rows
        .iter()
        .all(|r| (r[1] - 1.0).abs() < 1e-12 && r[2] == 0.0 && r[3] == 0.0));
}

#[test]
fn compare_rejects_mismatched_configs() {
    assert_eq!(fbank(&["compare", "--taps-b", "65"]).status.code(), Some(1));
    assert_eq!(
        fbank(&["compare", "--sample-rate-b", "16e6"]).status.code(),
        Some(1)
    );
}

#[test]
fn help_exits_zero_and_bad_flags_exit_one() {
    assert!(fbank(&["--help"]).status.success());
    assert_eq!(fbank(&["design", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(fbank(&[]).status.code(), Some(1));
}

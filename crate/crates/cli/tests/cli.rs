//! End-to-end tests of the command-line surface: exit codes, file formats,
//! manifest digests and config round-trips.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cumulus");

const SMALL_1D: &str = r#"
[model]
c = 5.0
a1 = 1.0
a2 = 1.0
gamma = 1.0
beta_c = 2.0
beta_r = 2.0
zeta = 1.0
d = 0.1

[diffusion]
d1 = 1000.0
d2 = 0.1

[grid]
dims = 1
n = 32

[time]
h = 0.01
t_end = 1.0
snapshots = [0.5, 1.0]
"#;

const SMALL_2D: &str = r#"
[model]
c = 5.0
a1 = 1.0
a2 = 1.0
gamma = 1.0
beta_c = 2.0
beta_r = 2.0
zeta = 1.0
d = 0.13

[diffusion]
d1 = 100.0
d2 = 0.025

[grid]
dims = 2
n = 16

[time]
h = 0.01
t_end = 0.5
snapshots = [0.5]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

#[test]
fn analyze_reference_config() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), SMALL_1D);
    let out = run(&["analyze", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(json["stability"]["turing_possible"], true);
    let band = json["stability"]["band"].as_array().unwrap();
    assert!((band[0].as_f64().unwrap() - 0.0208646540045821).abs() < 1e-9);
    assert!((band[1].as_f64().unwrap() - 0.575135345995418).abs() < 1e-9);
    assert!((json["b1"].as_f64().unwrap() - 1.35f64.cbrt()).abs() < 1e-12);

    let text = fs::read_to_string(out_dir.join("analysis.txt")).unwrap();
    assert!(text.contains("turing_possible=true"));
    assert!(text.contains("B2 candidates"));

    // Manifest lists every output with a correct digest.
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for entry in outputs {
        let bytes = fs::read(out_dir.join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        assert_eq!(entry["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
}

#[test]
fn unknown_config_key_exits_2_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &SMALL_1D.replace("d = 0.1", "d = 0.1\nrain_rate = 1.0"),
    );
    let out = run(&["analyze", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rain_rate"), "{err}");
    assert!(err.contains("line"), "no line diagnostic: {err}");
}

#[test]
fn invalid_exponent_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_1D.replace("gamma = 1.0", "gamma = 0.5"));
    let out = run(&["analyze", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn no_equilibrium_exits_3_naming_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL_1D.replace("c = 5.0", "c = 0.5"));
    let out = run(&["analyze", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c > a1"));
}

#[test]
fn modes_table_matches_oracle_and_notes_literature() {
    let dir = tempfile::tempdir().unwrap();
    // Use the full reference grid config (the mode table only reads the
    // analysis parameters, so the short horizon does not matter).
    let cfg = write_config(dir.path(), SMALL_1D);
    let out = run(&[
        "modes",
        &cfg,
        "--out-dir",
        dir.path().join("m").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("unstable modes: [2, 3, 4, 5, 6]"),
        "{stdout}"
    );
    assert!(stdout.contains("published analysis"), "{stdout}");
    for n in [2, 3, 4, 5, 6] {
        let row = stdout
            .lines()
            .find(|l| l.trim_start().starts_with(&format!("{n} ")))
            .unwrap();
        assert!(row.contains("UNSTABLE"), "{row}");
    }
}

#[test]
fn simulate_writes_consistent_text_and_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), SMALL_1D);
    let out = run(&[
        "simulate",
        &cfg,
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--format",
        "both",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    for name in ["qc_t0.5", "qr_t0.5", "qc_t1", "qr_t1"] {
        let text = fs::read_to_string(out_dir.join(format!("{name}.txt"))).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("n=32") && header.contains("dims=1") && header.contains("L=50"));
        let values: Vec<f64> = lines.map(|l| l.parse().unwrap()).collect();
        assert_eq!(values.len(), 32);

        let bin = fs::read(out_dir.join(format!("{name}.bin"))).unwrap();
        assert_eq!(&bin[0..4], b"CWF1");
        assert_eq!(bin[4], 1); // version
        assert_eq!(bin[6], 1); // dims
        assert_eq!(u32::from_le_bytes(bin[8..12].try_into().unwrap()), 32);
        let data: Vec<f64> = bin[28..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        // Text values are shortest round-trip decimals: bitwise equal after
        // parsing.
        assert_eq!(data.len(), values.len());
        for (a, b) in data.iter().zip(&values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    let diag = fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("time,qc_mean"));
    assert!(diag.lines().count() > 2);

    // Manifest covers every file and is internally consistent.
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    let listed: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["path"].as_str().unwrap())
        .collect();
    for entry in fs::read_dir(&out_dir).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name != "manifest.json" {
            assert!(listed.contains(&name.as_str()), "unlisted output {name}");
        }
    }
}

#[test]
fn manifest_config_roundtrip_reproduces_outputs_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    let cfg = write_config(dir.path(), SMALL_1D);
    assert!(run(&[
        "simulate",
        &cfg,
        "--out-dir",
        out1.to_str().unwrap(),
        "--format",
        "binary"
    ])
    .status
    .success());

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out1.join("manifest.json")).unwrap()).unwrap();
    let resolved = manifest["config_toml"].as_str().unwrap();
    let cfg2 = dir.path().join("resolved.toml");
    fs::write(&cfg2, resolved).unwrap();
    assert!(run(&[
        "simulate",
        cfg2.to_str().unwrap(),
        "--out-dir",
        out2.to_str().unwrap()
    ])
    .status
    .success());

    for name in [
        "qc_t0.5.bin",
        "qr_t0.5.bin",
        "qc_t1.bin",
        "qr_t1.bin",
        "diagnostics.csv",
    ] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs after config round-trip");
    }
}

#[test]
fn seed_override_changes_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    let cfg = write_config(dir.path(), SMALL_1D);
    assert!(
        run(&["simulate", &cfg, "--out-dir", out1.to_str().unwrap()])
            .status
            .success()
    );
    assert!(run(&[
        "simulate",
        &cfg,
        "--out-dir",
        out2.to_str().unwrap(),
        "--seed",
        "7"
    ])
    .status
    .success());
    let a = fs::read(out1.join("qr_t1.txt")).unwrap();
    let b = fs::read(out2.join("qr_t1.txt")).unwrap();
    assert_ne!(a, b);

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out2.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"].as_u64(), Some(7));
    assert!(manifest["config_toml"]
        .as_str()
        .unwrap()
        .contains("seed = 7"));
}

#[test]
fn simulate_2d_writes_graymaps() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), SMALL_2D);
    let out = run(&["simulate", &cfg, "--out-dir", out_dir.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let pgm = fs::read(out_dir.join("qr_t0.5.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n16 16\n255\n"));
    assert_eq!(pgm.len(), b"P5\n16 16\n255\n".len() + 256);

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    let norms = manifest["image_normalization"].as_array().unwrap();
    assert_eq!(norms.len(), 2);
    assert!(norms.iter().any(|n| n["path"] == "qr_t0.5.pgm"));
}

#[test]
fn sweep_writes_table_and_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), SMALL_1D);
    let out = run(&[
        "sweep",
        &cfg,
        "--b-min",
        "0.0",
        "--b-max",
        "0.1",
        "--steps",
        "3",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("b,patterned"));

    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(summary["literature_b2"].as_f64(), Some(0.137));
    let cands = summary["analytic_b2_candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 3);

    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("literature B2"));
}

#[test]
fn sweep_rejects_bad_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_1D);
    let out = run(&[
        "sweep", &cfg, "--b-min", "0.2", "--b-max", "0.1", "--steps", "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

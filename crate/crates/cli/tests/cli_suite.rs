//! Binary surface tests: exit codes, transcript determinism, the cert dump
//! command, environment overrides, and CSV round-tripping.

use std::path::Path;
use std::process::Command;

use pseudonym_pki_cli::bench::{bench, BenchConfig};
use pseudonym_pki_cli::report::{emit_report, ReportFormat};
use pseudonym_pki_cli::scenario::{run_scenario, ScenarioConfig, TamperPoint};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pseudonym-pki"))
}

fn read_transcripts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("transcript_")
        })
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn default_scenario_exits_zero_and_writes_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let output = binary()
        .args([
            "scenario",
            "--strength",
            "80",
            "--count",
            "3",
            "--seed",
            "5",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("scenario ok"));
    let transcripts = read_transcripts(dir.path());
    assert_eq!(transcripts.len(), 6);
    assert!(dir.path().join("rca.cert").exists());
    assert!(dir.path().join("pseudonym-0.cert").exists());
}

#[test]
fn builtin_defaults_run_at_strength_128() {
    let output = binary()
        .arg("scenario")
        .env_remove("PSEUDONYM_PKI_STRENGTH")
        .env_remove("PSEUDONYM_PKI_OUT")
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("strength=128 curve=P-256 pseudonyms=20"),
        "stdout: {stdout}"
    );
}

#[test]
fn equal_seeds_give_byte_identical_transcripts() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let dir_c = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&dir_a, "9"), (&dir_b, "9"), (&dir_c, "10")] {
        let status = binary()
            .args(["scenario", "--strength", "80", "--count", "2", "--seed", seed, "--out"])
            .arg(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(read_transcripts(dir_a.path()), read_transcripts(dir_b.path()));
    assert_ne!(read_transcripts(dir_a.path()), read_transcripts(dir_c.path()));
}

#[test]
fn tampered_scenario_exits_one_and_names_the_check() {
    let output = binary()
        .args([
            "scenario",
            "--strength",
            "80",
            "--count",
            "2",
            "--tamper",
            "wrapped-c",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("scenario failed at device-pca-signature"),
        "stderr: {stderr}"
    );
}

#[test]
fn unknown_strength_is_a_usage_error() {
    let output = binary()
        .args(["scenario", "--strength", "77"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    // malformed flags exit 2 via the parser as well
    let output = binary().args(["scenario", "--bogus"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let output = binary()
        .args(["bench", "--strengths", "80,abc"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn environment_variables_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let output = binary()
        .args(["scenario", "--count", "2", "--seed", "4"])
        .env("PSEUDONYM_PKI_STRENGTH", "80")
        .env("PSEUDONYM_PKI_OUT", dir.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("strength=80 curve=P-192"), "stdout: {stdout}");
    assert!(dir.path().join("transcript_device.txt").exists());
}

#[test]
fn cert_dump_describes_scenario_output() {
    let dir = tempfile::tempdir().unwrap();
    assert!(binary()
        .args(["scenario", "--strength", "80", "--count", "2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap()
        .success());
    let output = binary()
        .args(["cert", "dump"])
        .arg(dir.path().join("pseudonym-0.cert"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("certificate (P-192)"));
    assert!(stdout.contains("subject kind:  pseudonym"));

    // the chain file next to it decodes and verifies to the written root
    let curve = pseudonym_pki::curve::curve_for_strength(80).unwrap();
    let chain_bytes = std::fs::read(dir.path().join("pseudonym-0.chain")).unwrap();
    let chain = pseudonym_pki::certs::decode_chain(&chain_bytes, curve).unwrap();
    assert_eq!(chain.len(), 3);
    let root_bytes = std::fs::read(dir.path().join("rca.cert")).unwrap();
    let root = pseudonym_pki::certs::Certificate::decode(&root_bytes, curve).unwrap();
    assert_eq!(
        pseudonym_pki::certs::verify_chain(
            &chain,
            &root,
            pseudonym_pki_cli::scenario::LOGICAL_START,
            curve
        ),
        Ok(())
    );

    // garbage input is a usage error
    let bad = dir.path().join("garbage.cert");
    std::fs::write(&bad, b"not a certificate").unwrap();
    let output = binary().args(["cert", "dump"]).arg(&bad).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn bench_cli_emits_csv() {
    let output = binary()
        .args([
            "bench",
            "--strengths",
            "80",
            "--iterations",
            "3",
            "--batch",
            "2",
            "--experiments",
            "1,2",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(stdout.lines().count(), 3);
    assert!(stdout.starts_with("strength,experiment,"));
}

#[test]
fn csv_reparses_to_the_same_values() {
    let config = BenchConfig {
        strengths: vec![80],
        iterations: 3,
        batch_size: 2,
        experiments: vec![1, 3],
        seed: 1,
    };
    let report = bench(&config).unwrap();
    let csv = emit_report(&report, ReportFormat::Csv);
    for (line, cell) in csv.lines().skip(1).zip(&report.cells) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<u16>().unwrap(), cell.strength);
        assert_eq!(fields[1].parse::<u8>().unwrap(), cell.experiment);
        assert!((fields[2].parse::<f64>().unwrap() - cell.mean_us).abs() < 0.0005);
        assert!((fields[3].parse::<f64>().unwrap() - cell.sd_us).abs() < 0.0005);
        assert_eq!(fields[4].parse::<u32>().unwrap(), cell.samples);
        assert_eq!(fields[5].parse::<u32>().unwrap(), cell.batch);
        assert!((fields[6].parse::<f64>().unwrap() - cell.keys_per_second()).abs() < 0.0005);
    }
}

#[test]
fn batch_of_one_matches_single_key_experiment_within_noise() {
    // experiment 3 at batch 1 measures the same work as experiment 1
    let config = BenchConfig {
        strengths: vec![80],
        iterations: 40,
        batch_size: 1,
        experiments: vec![1, 3],
        seed: 2,
    };
    let report = bench(&config).unwrap();
    let exp1 = report.cell(80, 1).unwrap().mean_us;
    let exp3 = report.cell(80, 3).unwrap().mean_us;
    let ratio = exp1.max(exp3) / exp1.min(exp3);
    assert!(ratio < 3.0, "exp1 {exp1} vs exp3 {exp3}");
}

#[test]
fn expansion_cost_does_not_collapse_across_strengths() {
    // non-collapse only: the strongest curve must not be cheaper than the
    // weakest for the single-cocoon experiment
    let config = BenchConfig {
        strengths: vec![80, 256],
        iterations: 50,
        batch_size: 1,
        experiments: vec![1],
        seed: 6,
    };
    let report = bench(&config).unwrap();
    let weak = report.cell(80, 1).unwrap().mean_us;
    let strong = report.cell(256, 1).unwrap().mean_us;
    assert!(
        strong >= weak,
        "strength 256 mean {strong} collapsed below strength 80 mean {weak}"
    );
}

#[test]
fn library_scenario_reports_all_checkpoints_passed() {
    let config = ScenarioConfig {
        strength: 80,
        pseudonym_count: 2,
        ..ScenarioConfig::default()
    };
    let report = run_scenario(&config).unwrap();
    assert!(report.succeeded());
    assert!(report
        .checkpoints
        .iter()
        .all(|(_, s)| *s == pseudonym_pki_cli::scenario::CheckpointStatus::Passed));
    assert_eq!(report.recovered.as_deref(), Some(&report.reading[..]));
    // tamper enum names are stable CLI surface
    assert_eq!(TamperPoint::WrongT.name(), "wrong-t");
}

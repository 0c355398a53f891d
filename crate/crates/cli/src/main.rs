//! Command-line front end: `scenario` runs the healthcare flow, `bench`
//! reproduces the key-expansion timing table, `cert dump` pretty-prints a
//! certificate file.
//!
//! Exit codes: 0 success, 1 protocol failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pseudonym_pki::certs::Certificate;
use pseudonym_pki::curve::registered_curves;
use pseudonym_pki_cli::bench::{bench, BenchConfig};
use pseudonym_pki_cli::report::{emit_report, ReportFormat};
use pseudonym_pki_cli::scenario::{run_scenario, ScenarioConfig, TamperPoint};
use pseudonym_pki_cli::HarnessError;

#[derive(Parser)]
#[command(
    name = "pseudonym-pki",
    version,
    about = "Butterfly key expansion PKI: scenario runner and benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the six-step healthcare flow and write transcripts.
    Scenario {
        /// NIST security strength: 80, 112, 128, 192, or 256.
        #[arg(long, default_value_t = 128, env = "PSEUDONYM_PKI_STRENGTH")]
        strength: u16,
        /// Seed for all randomness; equal seeds give byte-identical
        /// transcripts.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output directory for transcripts and certificate files.
        #[arg(long, env = "PSEUDONYM_PKI_OUT")]
        out: Option<PathBuf>,
        /// Physiological reading to send, as a UTF-8 string.
        #[arg(long, default_value = "pulse=72,spo2=98,temp=36.6")]
        reading: String,
        /// Number of pseudonym certificates to provision.
        #[arg(long, default_value_t = 20)]
        count: u32,
        /// Fault injection point; the run must then fail at the matching
        /// checkpoint.
        #[arg(long, value_enum)]
        tamper: Option<TamperPoint>,
    },
    /// Time the key-expansion experiments and print a report.
    Bench {
        /// Comma-separated strengths, e.g. 80,112,128,192,256.
        #[arg(long, default_value = "80,112,128,192,256")]
        strengths: String,
        #[arg(long, default_value_t = 1000)]
        iterations: u32,
        /// Batch size for experiments 3 and 4.
        #[arg(long, default_value_t = 20)]
        batch: u32,
        /// Comma-separated experiment numbers out of 1,2,3,4.
        #[arg(long, default_value = "1,2,3,4")]
        experiments: String,
        #[arg(long, value_parser = ["table", "csv"], default_value = "table")]
        format: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Certificate file utilities.
    Cert {
        #[command(subcommand)]
        command: CertCommand,
    },
}

#[derive(Subcommand)]
enum CertCommand {
    /// Decode a certificate file and print a text dump.
    Dump { file: PathBuf },
}

fn parse_list<T: std::str::FromStr>(input: &str, what: &str) -> Result<Vec<T>, String> {
    input
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("invalid {what} entry: {s}"))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(HarnessError::UnknownStrength(s)) => {
            eprintln!("error: no registered curve for strength {s} (use 80, 112, 128, 192, or 256)");
            ExitCode::from(2)
        }
        Err(HarnessError::InvalidConfig(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Scenario {
            strength,
            seed,
            out,
            reading,
            count,
            tamper,
        } => {
            let config = ScenarioConfig {
                strength,
                seed,
                reading: reading.into_bytes(),
                pseudonym_count: count,
                tamper,
                out_dir: out,
            };
            let report = run_scenario(&config)?;
            for (checkpoint, status) in &report.checkpoints {
                println!("checkpoint {:<26} {:?}", checkpoint.name(), status);
            }
            if report.succeeded() {
                println!(
                    "scenario ok: strength={} curve={} pseudonyms={} reading-bytes={}",
                    strength,
                    report.curve_name,
                    report.device.pseudonyms.len(),
                    report.reading.len()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                let (checkpoint, reason) = report
                    .failure
                    .clone()
                    .unwrap_or((
                        pseudonym_pki_cli::scenario::Checkpoint::HospitalDecrypt,
                        "reading not recovered".into(),
                    ));
                eprintln!("scenario failed at {}: {}", checkpoint.name(), reason);
                Ok(ExitCode::from(1))
            }
        }
        Command::Bench {
            strengths,
            iterations,
            batch,
            experiments,
            format,
            seed,
        } => {
            let config = BenchConfig {
                strengths: parse_list(&strengths, "strength").map_err(HarnessError::InvalidConfig)?,
                iterations,
                batch_size: batch,
                experiments: parse_list(&experiments, "experiment")
                    .map_err(HarnessError::InvalidConfig)?,
                seed,
            };
            let report = bench(&config)?;
            let format = if format == "csv" {
                ReportFormat::Csv
            } else {
                ReportFormat::Table
            };
            print!("{}", emit_report(&report, format));
            Ok(ExitCode::SUCCESS)
        }
        Command::Cert { command } => match command {
            CertCommand::Dump { file } => {
                let bytes = std::fs::read(&file).map_err(|e| {
                    HarnessError::InvalidConfig(format!("cannot read {}: {e}", file.display()))
                })?;
                let decoded = registered_curves()
                    .iter()
                    .find_map(|curve| Certificate::decode(&bytes, curve).ok().map(|c| (*curve, c)));
                match decoded {
                    Some((curve, cert)) => {
                        print!("{}", describe_cert(&cert, curve));
                        Ok(ExitCode::SUCCESS)
                    }
                    None => Err(HarnessError::InvalidConfig(format!(
                        "{} does not decode as a certificate on any registered curve",
                        file.display()
                    ))),
                }
            }
        },
    }
}

fn describe_cert(cert: &Certificate, curve: &pseudonym_pki::curve::CurveParams) -> String {
    let mut out = String::new();
    out.push_str(&format!("certificate ({})\n", curve.name()));
    out.push_str(&format!("  serial:        {:#018x}\n", cert.serial));
    out.push_str(&format!("  subject kind:  {}\n", cert.subject_kind.name()));
    out.push_str(&format!("  subject id:    {}\n", hex::encode(cert.subject_id)));
    out.push_str(&format!(
        "  subject key:   {}\n",
        hex::encode(curve.point_to_bytes(&cert.subject_pub))
    ));
    out.push_str(&format!("  issuer serial: {:#018x}\n", cert.issuer_serial));
    out.push_str(&format!(
        "  validity:      [{}, {})\n",
        cert.validity.not_before, cert.validity.not_after
    ));
    out.push_str(&format!(
        "  signature:     r={} s={}\n",
        hex::encode(curve.scalar_to_bytes(&cert.signature.r)),
        hex::encode(curve.scalar_to_bytes(&cert.signature.s))
    ));
    out
}

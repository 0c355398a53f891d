//! The six-step healthcare scenario with deterministic seeding, optional
//! fault injection, per-checkpoint outcomes, and transcript output.
//!
//! Six verification checkpoints guard the flow. Tampering is applied to the
//! named message field in transit; the scenario records which checkpoint
//! rejected and leaves later checkpoints unreached.

use std::path::{Path, PathBuf};

use pseudonym_pki::bke::BkeError;
use pseudonym_pki::curve::curve_for_strength;
use pseudonym_pki::entities::{
    bootstrap, build_reading, deliver_reading, device_accept_delivery,
    device_expand_hospital_pub, enroll_device, enroll_hospital, hospital_expand,
    hospital_receive, negotiate_expansion_value, pca_issue_butterflies, ra_expand_cocoons,
    ra_forward_delivery, send_pseudonym_request, subject_id_from_label, DeviceState, EntityError,
    HospitalState, ReadingMessage, Role, System,
};
use pseudonym_pki::primitives::CryptoError;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::HarnessError;

/// Logical epoch for the injected clock; all validity windows hang off it.
pub const LOGICAL_START: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TamperPoint {
    /// Corrupt the device's stored enrollment certificate.
    EnrollmentCert,
    /// Flip a bit of the sealed scalar in the first butterfly response.
    WrappedC,
    /// Corrupt the pseudonym certificate attached to the reading.
    PseudonymCert,
    /// Flip a bit of the reading ciphertext after signing.
    ReadingCiphertext,
    /// Replace the reading signature with a near-miss.
    ReadingSignature,
    /// Hospital derives its decryption key from a different expansion value.
    WrongT,
}

impl TamperPoint {
    pub const ALL: [TamperPoint; 6] = [
        TamperPoint::EnrollmentCert,
        TamperPoint::WrappedC,
        TamperPoint::PseudonymCert,
        TamperPoint::ReadingCiphertext,
        TamperPoint::ReadingSignature,
        TamperPoint::WrongT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TamperPoint::EnrollmentCert => "enrollment-cert",
            TamperPoint::WrappedC => "wrapped-c",
            TamperPoint::PseudonymCert => "pseudonym-cert",
            TamperPoint::ReadingCiphertext => "reading-ciphertext",
            TamperPoint::ReadingSignature => "reading-signature",
            TamperPoint::WrongT => "wrong-t",
        }
    }
}

/// The six entity checkpoints, in flow order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Checkpoint {
    RaEnrollment,
    DevicePcaSignature,
    DeviceKeyReconstruction,
    HospitalChain,
    HospitalSignature,
    HospitalDecrypt,
}

impl Checkpoint {
    pub const ALL: [Checkpoint; 6] = [
        Checkpoint::RaEnrollment,
        Checkpoint::DevicePcaSignature,
        Checkpoint::DeviceKeyReconstruction,
        Checkpoint::HospitalChain,
        Checkpoint::HospitalSignature,
        Checkpoint::HospitalDecrypt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Checkpoint::RaEnrollment => "ra-enrollment",
            Checkpoint::DevicePcaSignature => "device-pca-signature",
            Checkpoint::DeviceKeyReconstruction => "device-key-reconstruction",
            Checkpoint::HospitalChain => "hospital-chain",
            Checkpoint::HospitalSignature => "hospital-signature",
            Checkpoint::HospitalDecrypt => "hospital-decrypt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckpointStatus {
    Passed,
    Failed(String),
    NotReached,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub strength: u16,
    pub seed: u64,
    pub reading: Vec<u8>,
    pub pseudonym_count: u32,
    pub tamper: Option<TamperPoint>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            strength: 128,
            seed: 7,
            reading: b"pulse=72,spo2=98,temp=36.6".to_vec(),
            pseudonym_count: 20,
            tamper: None,
            out_dir: None,
        }
    }
}

pub struct ScenarioReport {
    pub curve_name: &'static str,
    pub checkpoints: Vec<(Checkpoint, CheckpointStatus)>,
    pub failure: Option<(Checkpoint, String)>,
    pub recovered: Option<Vec<u8>>,
    pub reading: Vec<u8>,
    pub system: System,
    pub device: DeviceState,
    pub hospital: HospitalState,
    pub reading_message: Option<ReadingMessage>,
}

impl ScenarioReport {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none() && self.recovered.as_deref() == Some(&self.reading[..])
    }

    pub fn status_of(&self, checkpoint: Checkpoint) -> &CheckpointStatus {
        &self
            .checkpoints
            .iter()
            .find(|(c, _)| *c == checkpoint)
            .expect("all checkpoints tracked")
            .1
    }
}

struct Tracker {
    statuses: Vec<(Checkpoint, CheckpointStatus)>,
    failure: Option<(Checkpoint, String)>,
}

impl Tracker {
    fn new() -> Self {
        Tracker {
            statuses: Checkpoint::ALL
                .iter()
                .map(|c| (*c, CheckpointStatus::NotReached))
                .collect(),
            failure: None,
        }
    }

    fn pass(&mut self, checkpoint: Checkpoint) {
        self.set(checkpoint, CheckpointStatus::Passed);
    }

    fn fail(&mut self, checkpoint: Checkpoint, reason: String) {
        self.set(checkpoint, CheckpointStatus::Failed(reason.clone()));
        if self.failure.is_none() {
            self.failure = Some((checkpoint, reason));
        }
    }

    fn set(&mut self, checkpoint: Checkpoint, status: CheckpointStatus) {
        let slot = self
            .statuses
            .iter_mut()
            .find(|(c, _)| *c == checkpoint)
            .expect("all checkpoints tracked");
        slot.1 = status;
    }
}

fn flip_middle_bit(bytes: &mut [u8]) {
    if bytes.is_empty() {
        return;
    }
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
}

/// Run bootstrap → enrollment → pseudonym batch → negotiation → reading
/// exchange, applying the configured tamper in transit.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, HarnessError> {
    let curve = curve_for_strength(config.strength)
        .map_err(|_| HarnessError::UnknownStrength(config.strength))?;
    if config.pseudonym_count < 1 {
        return Err(HarnessError::InvalidConfig(
            "pseudonym count must be at least 1".into(),
        ));
    }
    if config.reading.is_empty() {
        return Err(HarnessError::InvalidConfig("reading must be non-empty".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut tracker = Tracker::new();

    let mut system = bootstrap(curve, LOGICAL_START, &mut rng)?;
    let mut device = DeviceState::new(curve, &mut rng)?;
    let mut hospital = HospitalState::new(curve, &mut rng)?;
    enroll_device(
        &mut system,
        &mut device,
        subject_id_from_label("bp-monitor-001"),
        &mut rng,
    )?;
    enroll_hospital(
        &mut system,
        &mut hospital,
        subject_id_from_label("clinic-001"),
        &mut rng,
    )?;

    if config.tamper == Some(TamperPoint::EnrollmentCert) {
        let cert = device.enrollment_cert.as_mut().expect("just enrolled");
        cert.subject_id[0] ^= 0x01;
    }

    let finish = |tracker: Tracker,
                  recovered: Option<Vec<u8>>,
                  system: System,
                  device: DeviceState,
                  hospital: HospitalState,
                  reading_message: Option<ReadingMessage>|
     -> Result<ScenarioReport, HarnessError> {
        let report = ScenarioReport {
            curve_name: curve.name(),
            checkpoints: tracker.statuses,
            failure: tracker.failure,
            recovered,
            reading: config.reading.clone(),
            system,
            device,
            hospital,
            reading_message,
        };
        if let Some(dir) = &config.out_dir {
            write_outputs(&report, dir)?;
        }
        Ok(report)
    };

    // provisioning through the RA and PCA
    let request = send_pseudonym_request(&mut system, &device, config.pseudonym_count)?;
    let cocoons = match ra_expand_cocoons(&mut system, &request) {
        Ok(batch) => {
            tracker.pass(Checkpoint::RaEnrollment);
            batch
        }
        Err(err @ EntityError::NotEnrolled(_)) => {
            tracker.fail(Checkpoint::RaEnrollment, err.to_string());
            return finish(tracker, None, system, device, hospital, None);
        }
        Err(other) => return Err(other.into()),
    };
    let mut butterflies = pca_issue_butterflies(&mut system, &cocoons, &mut rng)?;
    if config.tamper == Some(TamperPoint::WrappedC) {
        flip_middle_bit(&mut butterflies.items[0].0.wrapped_c.ciphertext);
    }
    ra_forward_delivery(&mut system, &butterflies);
    match device_accept_delivery(&system, &mut device, &butterflies) {
        Ok(_) => {
            tracker.pass(Checkpoint::DevicePcaSignature);
            tracker.pass(Checkpoint::DeviceKeyReconstruction);
        }
        Err(err @ EntityError::Bke(BkeError::BadPcaSignature)) => {
            tracker.fail(Checkpoint::DevicePcaSignature, err.to_string());
            return finish(tracker, None, system, device, hospital, None);
        }
        Err(
            err @ (EntityError::Bke(BkeError::KeyMismatch)
            | EntityError::Bke(BkeError::Crypto(CryptoError::MacMismatch))),
        ) => {
            tracker.pass(Checkpoint::DevicePcaSignature);
            tracker.fail(Checkpoint::DeviceKeyReconstruction, err.to_string());
            return finish(tracker, None, system, device, hospital, None);
        }
        Err(other) => return Err(other.into()),
    }

    // care episode: negotiate t, expand keys on both sides
    let t = negotiate_expansion_value(&mut system, &mut hospital, &mut device, &mut rng)?;
    if config.tamper == Some(TamperPoint::WrongT) {
        let skewed = curve.scalar_add(&t, &curve.scalar_from_u64(1));
        hospital.expansion_value = Some(skewed);
    }
    let (hospital_z, _) = hospital_expand(
        hospital.expansion_value.as_ref().expect("negotiated"),
        &hospital.keys,
        curve,
    );
    let hospital_pub = hospital
        .enrollment_cert
        .as_ref()
        .expect("hospital enrolled")
        .subject_pub
        .clone();
    let recipient = device_expand_hospital_pub(
        device.expansion_value.as_ref().expect("negotiated"),
        &hospital_pub,
        curve,
    )?;

    let mut msg = build_reading(&system, &mut device, &config.reading, &recipient, &mut rng)?;
    match config.tamper {
        Some(TamperPoint::PseudonymCert) => {
            msg.pseudonym_cert.subject_id[0] ^= 0x01;
        }
        Some(TamperPoint::ReadingCiphertext) => {
            flip_middle_bit(&mut msg.sealed.ciphertext);
        }
        Some(TamperPoint::ReadingSignature) => {
            msg.signature.s = curve.scalar_add(&msg.signature.s, &curve.scalar_from_u64(1));
        }
        _ => {}
    }
    deliver_reading(&mut system, &msg);

    match hospital_receive(&system, &msg, &hospital_z, &system.rca.cert) {
        Ok(recovered) => {
            tracker.pass(Checkpoint::HospitalChain);
            tracker.pass(Checkpoint::HospitalSignature);
            if recovered == config.reading {
                tracker.pass(Checkpoint::HospitalDecrypt);
            } else {
                tracker.fail(
                    Checkpoint::HospitalDecrypt,
                    "recovered reading differs from the original".into(),
                );
            }
            finish(tracker, Some(recovered), system, device, hospital, Some(msg))
        }
        Err(err @ EntityError::BadChain(_)) => {
            tracker.fail(Checkpoint::HospitalChain, err.to_string());
            finish(tracker, None, system, device, hospital, Some(msg))
        }
        Err(err @ EntityError::BadSignature) => {
            tracker.pass(Checkpoint::HospitalChain);
            tracker.fail(Checkpoint::HospitalSignature, err.to_string());
            finish(tracker, None, system, device, hospital, Some(msg))
        }
        Err(err @ EntityError::Crypto(CryptoError::MacMismatch)) => {
            tracker.pass(Checkpoint::HospitalChain);
            tracker.pass(Checkpoint::HospitalSignature);
            tracker.fail(Checkpoint::HospitalDecrypt, err.to_string());
            finish(tracker, None, system, device, hospital, Some(msg))
        }
        Err(other) => Err(other.into()),
    }
}

/// Write transcripts and certificate files for inspection and `cert dump`.
fn write_outputs(report: &ScenarioReport, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let curve = report.system.curve;
    for role in Role::ALL {
        let path = dir.join(format!("transcript_{}.txt", role.name()));
        std::fs::write(path, report.system.bus.transcript(role).dump_text())?;
    }
    let authorities = [
        ("rca.cert", &report.system.rca.cert),
        ("eca.cert", &report.system.eca.cert),
        ("pca.cert", &report.system.pca.cert),
        ("ra.cert", &report.system.ra.cert),
    ];
    for (name, cert) in authorities {
        std::fs::write(dir.join(name), cert.encode(curve))?;
    }
    if let Some(cert) = &report.device.enrollment_cert {
        std::fs::write(dir.join("device-enrollment.cert"), cert.encode(curve))?;
        let chain = [
            cert.clone(),
            report.system.eca.cert.clone(),
            report.system.rca.cert.clone(),
        ];
        std::fs::write(
            dir.join("device-enrollment.chain"),
            pseudonym_pki::certs::encode_chain(&chain, curve),
        )?;
    }
    if let Some((cert, _)) = report.device.pseudonyms.first() {
        std::fs::write(dir.join("pseudonym-0.cert"), cert.encode(curve))?;
        let chain = [
            cert.clone(),
            report.system.pca.cert.clone(),
            report.system.rca.cert.clone(),
        ];
        std::fs::write(
            dir.join("pseudonym-0.chain"),
            pseudonym_pki::certs::encode_chain(&chain, curve),
        )?;
    }
    Ok(())
}

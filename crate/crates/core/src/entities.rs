//! The six protocol roles (RCA, ECA, PCA, RA, device, hospital), an
//! in-process synchronous bus with per-role transcripts, and the care-flow
//! steps: bootstrap, enrollment, pseudonym provisioning through the RA and
//! PCA, expansion-value negotiation, and the sealed reading exchange.
//!
//! Every message crossing a role boundary is serialized into an [`Envelope`]
//! and recorded in both endpoint transcripts; the transcripts are the
//! evidence base for the privacy separation checks (the RA never observes
//! the pseudonym CA's fresh scalars, the PCA never observes caterpillar
//! material).

use std::collections::BTreeMap;

use rand::RngCore;
use thiserror::Error;

use crate::bke::{
    butterfly_private, butterfly_public, cocoon_private, cocoon_public, gen_caterpillar,
    BkeError, ButterflyResponse, CaterpillarMaterial, CaterpillarPublic, CocoonPublic,
};
use crate::certs::{
    issue, issue_self_signed_root, verify_chain, CertError, Certificate, ChainRejection,
    SubjectKind, Validity, SUBJECT_ID_LEN,
};
use crate::curve::{CurveError, CurveParams, KeyPair, Point, Scalar};
use crate::primitives::{
    ecdsa_sign, ecdsa_verify, ecies_decrypt, ecies_encrypt, CryptoError, SealedMessage, Signature,
};
use crate::wire::{contains_bytes, ByteReader};

pub const AUTHORITY_VALIDITY_SECS: u64 = 10 * 365 * 86_400;
pub const ENROLLMENT_VALIDITY_SECS: u64 = 365 * 86_400;
/// One logical day per pseudonym batch; configurable policy, not a protocol
/// constant.
pub const PSEUDONYM_VALIDITY_SECS: u64 = 86_400;

#[derive(Debug, Error, PartialEq)]
pub enum EntityError {
    #[error("enrollment validation failed: {0}")]
    NotEnrolled(String),
    #[error("certificate chain rejected: {0}")]
    BadChain(ChainRejection),
    #[error("message signature verification failed")]
    BadSignature,
    #[error("device holds no pseudonym key pairs")]
    NoPseudonyms,
    #[error("malformed message payload")]
    MalformedMessage,
    #[error(transparent)]
    Bke(#[from] BkeError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Rca,
    Eca,
    Pca,
    Ra,
    Device,
    Hospital,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Rca,
        Role::Eca,
        Role::Pca,
        Role::Ra,
        Role::Device,
        Role::Hospital,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Rca => "rca",
            Role::Eca => "eca",
            Role::Pca => "pca",
            Role::Ra => "ra",
            Role::Device => "device",
            Role::Hospital => "hospital",
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Role::Rca => 0,
            Role::Eca => 1,
            Role::Pca => 2,
            Role::Ra => 3,
            Role::Device => 4,
            Role::Hospital => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgKind {
    EnrollRequest,
    EnrollGrant,
    PseudonymRequest,
    CocoonBatch,
    ButterflyBatch,
    PseudonymDelivery,
    /// Negotiated expansion value; modeled as a direct envelope standing in
    /// for the out-of-band channel.
    ExpansionValueOutOfBand,
    Reading,
}

impl MsgKind {
    pub fn name(self) -> &'static str {
        match self {
            MsgKind::EnrollRequest => "enroll-request",
            MsgKind::EnrollGrant => "enroll-grant",
            MsgKind::PseudonymRequest => "pseudonym-request",
            MsgKind::CocoonBatch => "cocoon-batch",
            MsgKind::ButterflyBatch => "butterfly-batch",
            MsgKind::PseudonymDelivery => "pseudonym-delivery",
            MsgKind::ExpansionValueOutOfBand => "expansion-value-oob",
            MsgKind::Reading => "reading",
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            MsgKind::EnrollRequest => 0,
            MsgKind::EnrollGrant => 1,
            MsgKind::PseudonymRequest => 2,
            MsgKind::CocoonBatch => 3,
            MsgKind::ButterflyBatch => 4,
            MsgKind::PseudonymDelivery => 5,
            MsgKind::ExpansionValueOutOfBand => 6,
            MsgKind::Reading => 7,
        }
    }
}

/// One serialized message in flight between two roles.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub from: Role,
    pub to: Role,
    pub kind: MsgKind,
    pub seq: u64,
    pub payload: Vec<u8>,
}

impl Envelope {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 + 8 + 4 + self.payload.len());
        out.push(self.from.as_u8());
        out.push(self.to.as_u8());
        out.push(self.kind.as_u8());
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Human-readable dump line: role/seq/kind header, then the canonical
    /// envelope encoding as hex.
    pub fn dump_line(&self) -> String {
        format!(
            "seq={} from={} to={} kind={} {}",
            self.seq,
            self.from.name(),
            self.to.name(),
            self.kind.name(),
            hex::encode(self.encode())
        )
    }
}

/// Append-only record of every envelope one role sent or received.
#[derive(Debug, Clone)]
pub struct Transcript {
    role: Role,
    entries: Vec<Envelope>,
}

impl Transcript {
    fn new(role: Role) -> Self {
        Transcript {
            role,
            entries: Vec::new(),
        }
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn entries(&self) -> &[Envelope] {
        &self.entries
    }

    /// Byte scan over the serialized transcript, the primitive behind the
    /// privacy separation assertions.
    pub fn contains_bytes(&self, needle: &[u8]) -> bool {
        self.entries
            .iter()
            .any(|e| contains_bytes(&e.encode(), needle))
    }

    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.dump_line());
            out.push('\n');
        }
        out
    }
}

/// Synchronous in-process transport; assigns globally increasing sequence
/// numbers and records every envelope in both endpoint transcripts.
#[derive(Debug)]
pub struct Bus {
    next_seq: u64,
    transcripts: BTreeMap<Role, Transcript>,
}

impl Bus {
    pub fn new() -> Self {
        let transcripts = Role::ALL
            .iter()
            .map(|r| (*r, Transcript::new(*r)))
            .collect();
        Bus {
            next_seq: 0,
            transcripts,
        }
    }

    pub fn send(&mut self, from: Role, to: Role, kind: MsgKind, payload: Vec<u8>) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        let envelope = Envelope {
            from,
            to,
            kind,
            seq,
            payload,
        };
        self.transcripts
            .get_mut(&to)
            .unwrap()
            .entries
            .push(envelope.clone());
        self.transcripts.get_mut(&from).unwrap().entries.push(envelope);
        seq
    }

    pub fn transcript(&self, role: Role) -> &Transcript {
        &self.transcripts[&role]
    }
}

impl Default for Bus {
    fn default() -> Self {
        Self::new()
    }
}

/// A certificate authority's key pair and certificate.
#[derive(Debug, Clone)]
pub struct Authority {
    pub keys: KeyPair,
    pub cert: Certificate,
}

/// The four authorities, the bus, and the logical clock.
#[derive(Debug)]
pub struct System {
    pub curve: &'static CurveParams,
    pub now: u64,
    pub rca: Authority,
    pub eca: Authority,
    pub pca: Authority,
    pub ra: Authority,
    pub bus: Bus,
}

pub fn subject_id_from_label(label: &str) -> [u8; SUBJECT_ID_LEN] {
    let mut id = [0u8; SUBJECT_ID_LEN];
    let bytes = label.as_bytes();
    let take = bytes.len().min(SUBJECT_ID_LEN);
    id[..take].copy_from_slice(&bytes[..take]);
    id
}

fn random_subject_id<R: RngCore + ?Sized>(rng: &mut R) -> [u8; SUBJECT_ID_LEN] {
    let mut id = [0u8; SUBJECT_ID_LEN];
    rng.fill_bytes(&mut id);
    id
}

/// Stand up the PKI: self-signed RCA, then ECA / PCA / RA certificates
/// issued by it. Every resulting chain verifies.
pub fn bootstrap<R: RngCore + ?Sized>(
    curve: &'static CurveParams,
    now: u64,
    rng: &mut R,
) -> Result<System, EntityError> {
    let validity = Validity {
        not_before: now,
        not_after: now + AUTHORITY_VALIDITY_SECS,
    };
    let rca_keys = curve.keygen(rng)?;
    let rca_cert = issue_self_signed_root(
        &rca_keys,
        subject_id_from_label("rca-root"),
        validity,
        curve,
        rng,
    )?;
    let make_authority = |kind: SubjectKind, label: &str, rng: &mut R| -> Result<Authority, EntityError> {
        let keys = curve.keygen(rng)?;
        let cert = issue(
            &rca_cert,
            &rca_keys.secret,
            &keys.public,
            kind,
            subject_id_from_label(label),
            validity,
            curve,
            rng,
        )?;
        Ok(Authority { keys, cert })
    };
    let eca = make_authority(SubjectKind::Eca, "eca", rng)?;
    let pca = make_authority(SubjectKind::Pca, "pca", rng)?;
    let ra = make_authority(SubjectKind::Ra, "ra", rng)?;
    let rca = Authority {
        keys: rca_keys,
        cert: rca_cert,
    };
    for authority in [&eca, &pca, &ra] {
        verify_chain(
            &[authority.cert.clone(), rca.cert.clone()],
            &rca.cert,
            now,
            curve,
        )
        .map_err(|r| EntityError::NotEnrolled(r.to_string()))?;
    }
    Ok(System {
        curve,
        now,
        rca,
        eca,
        pca,
        ra,
        bus: Bus::new(),
    })
}

/// Patient-side measurement device. Its enrollment key pair is the
/// caterpillar signing pair (a, A).
#[derive(Debug)]
pub struct DeviceState {
    pub material: CaterpillarMaterial,
    pub enrollment_cert: Option<Certificate>,
    pub pseudonyms: Vec<(Certificate, Scalar)>,
    pub expansion_value: Option<Scalar>,
    pub next_index: u32,
    next_pseudonym: usize,
}

impl DeviceState {
    pub fn new<R: RngCore + ?Sized>(curve: &CurveParams, rng: &mut R) -> Result<Self, EntityError> {
        Ok(DeviceState {
            material: gen_caterpillar(curve, rng)?,
            enrollment_cert: None,
            pseudonyms: Vec::new(),
            expansion_value: None,
            next_index: 0,
            next_pseudonym: 0,
        })
    }

    pub fn enrollment_public(&self) -> &Point {
        &self.material.sign_pair.public
    }

    /// Next pseudonym pair under rotation.
    pub fn take_pseudonym(&mut self) -> Option<(Certificate, Scalar)> {
        if self.pseudonyms.is_empty() {
            return None;
        }
        let entry = self.pseudonyms[self.next_pseudonym % self.pseudonyms.len()].clone();
        self.next_pseudonym += 1;
        Some(entry)
    }
}

/// Clinic-side receiver with the long-term pair (h, H).
#[derive(Debug)]
pub struct HospitalState {
    pub keys: KeyPair,
    pub enrollment_cert: Option<Certificate>,
    pub expansion_value: Option<Scalar>,
}

impl HospitalState {
    pub fn new<R: RngCore + ?Sized>(curve: &CurveParams, rng: &mut R) -> Result<Self, EntityError> {
        Ok(HospitalState {
            keys: curve.keygen(rng)?,
            enrollment_cert: None,
            expansion_value: None,
        })
    }
}

// ---- enrollment ----

/// ECA-side issuance of an initial certificate for a device or hospital key.
pub fn eca_enroll<R: RngCore + ?Sized>(
    system: &mut System,
    subject_pub: &Point,
    kind: SubjectKind,
    subject_id: [u8; SUBJECT_ID_LEN],
    rng: &mut R,
) -> Result<Certificate, EntityError> {
    let requester = match kind {
        SubjectKind::Hospital => Role::Hospital,
        _ => Role::Device,
    };
    let mut request = vec![kind.as_u8()];
    request.extend_from_slice(&subject_id);
    request.extend_from_slice(&system.curve.point_to_bytes(subject_pub));
    system
        .bus
        .send(requester, Role::Eca, MsgKind::EnrollRequest, request);
    let cert = issue(
        &system.eca.cert,
        &system.eca.keys.secret,
        subject_pub,
        kind,
        subject_id,
        Validity {
            not_before: system.now,
            not_after: system.now + ENROLLMENT_VALIDITY_SECS,
        },
        system.curve,
        rng,
    )?;
    system.bus.send(
        Role::Eca,
        requester,
        MsgKind::EnrollGrant,
        cert.encode(system.curve),
    );
    Ok(cert)
}

pub fn enroll_device<R: RngCore + ?Sized>(
    system: &mut System,
    device: &mut DeviceState,
    subject_id: [u8; SUBJECT_ID_LEN],
    rng: &mut R,
) -> Result<(), EntityError> {
    let cert = eca_enroll(
        system,
        &device.material.sign_pair.public.clone(),
        SubjectKind::Device,
        subject_id,
        rng,
    )?;
    device.enrollment_cert = Some(cert);
    Ok(())
}

pub fn enroll_hospital<R: RngCore + ?Sized>(
    system: &mut System,
    hospital: &mut HospitalState,
    subject_id: [u8; SUBJECT_ID_LEN],
    rng: &mut R,
) -> Result<(), EntityError> {
    let cert = eca_enroll(
        system,
        &hospital.keys.public.clone(),
        SubjectKind::Hospital,
        subject_id,
        rng,
    )?;
    hospital.enrollment_cert = Some(cert);
    Ok(())
}

// ---- pseudonym provisioning ----

#[derive(Debug, Clone)]
pub struct PseudonymRequest {
    pub enrollment_cert: Certificate,
    pub share: CaterpillarPublic,
    pub start: u32,
    pub count: u32,
}

impl PseudonymRequest {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = self.enrollment_cert.encode(curve);
        out.extend_from_slice(&self.share.encode(curve));
        out.extend_from_slice(&self.start.to_be_bytes());
        out.extend_from_slice(&self.count.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, EntityError> {
        let mut r = ByteReader::new(bytes);
        let enrollment_cert =
            Certificate::read(&mut r, curve).map_err(|_| EntityError::MalformedMessage)?;
        let share =
            CaterpillarPublic::read(&mut r, curve).map_err(|_| EntityError::MalformedMessage)?;
        let start = r.u32_be().map_err(|_| EntityError::MalformedMessage)?;
        let count = r.u32_be().map_err(|_| EntityError::MalformedMessage)?;
        r.finish().map_err(|_| EntityError::MalformedMessage)?;
        Ok(PseudonymRequest {
            enrollment_cert,
            share,
            start,
            count,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CocoonBatchMsg {
    pub cocoons: Vec<CocoonPublic>,
}

impl CocoonBatchMsg {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = (self.cocoons.len() as u32).to_be_bytes().to_vec();
        for cocoon in &self.cocoons {
            out.extend_from_slice(&cocoon.encode(curve));
        }
        out
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, EntityError> {
        let mut r = ByteReader::new(bytes);
        let count = r.u32_be().map_err(|_| EntityError::MalformedMessage)?;
        let mut cocoons = Vec::with_capacity(count as usize);
        for _ in 0..count {
            cocoons
                .push(CocoonPublic::read(&mut r, curve).map_err(|_| EntityError::MalformedMessage)?);
        }
        r.finish().map_err(|_| EntityError::MalformedMessage)?;
        Ok(CocoonBatchMsg { cocoons })
    }
}

#[derive(Debug, Clone)]
pub struct ButterflyBatchMsg {
    pub items: Vec<(ButterflyResponse, Certificate)>,
}

impl ButterflyBatchMsg {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = (self.items.len() as u32).to_be_bytes().to_vec();
        for (response, cert) in &self.items {
            out.extend_from_slice(&response.encode(curve));
            out.extend_from_slice(&cert.encode(curve));
        }
        out
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, EntityError> {
        let mut r = ByteReader::new(bytes);
        let count = r.u32_be().map_err(|_| EntityError::MalformedMessage)?;
        let mut items = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let response =
                ButterflyResponse::read(&mut r, curve).map_err(|_| EntityError::MalformedMessage)?;
            let cert =
                Certificate::read(&mut r, curve).map_err(|_| EntityError::MalformedMessage)?;
            items.push((response, cert));
        }
        r.finish().map_err(|_| EntityError::MalformedMessage)?;
        Ok(ButterflyBatchMsg { items })
    }
}

/// Device → RA: enrollment certificate plus the caterpillar public share.
pub fn send_pseudonym_request(
    system: &mut System,
    device: &DeviceState,
    count: u32,
) -> Result<PseudonymRequest, EntityError> {
    let enrollment_cert = device
        .enrollment_cert
        .clone()
        .ok_or_else(|| EntityError::NotEnrolled("no enrollment certificate".into()))?;
    let request = PseudonymRequest {
        enrollment_cert,
        share: device.material.public_share(),
        start: device.next_index,
        count,
    };
    let payload = request.encode(system.curve);
    system
        .bus
        .send(Role::Device, Role::Ra, MsgKind::PseudonymRequest, payload);
    Ok(request)
}

/// RA: validate the device's enrollment chain, then expand cocoon publics
/// and forward them to the PCA. The cocoon batch carries no device identity.
pub fn ra_expand_cocoons(
    system: &mut System,
    request: &PseudonymRequest,
) -> Result<CocoonBatchMsg, EntityError> {
    let chain = [
        request.enrollment_cert.clone(),
        system.eca.cert.clone(),
        system.rca.cert.clone(),
    ];
    verify_chain(&chain, &system.rca.cert, system.now, system.curve)
        .map_err(|r| EntityError::NotEnrolled(r.to_string()))?;
    if request.enrollment_cert.subject_kind != SubjectKind::Device {
        return Err(EntityError::NotEnrolled(
            "subject is not an enrolled device".into(),
        ));
    }
    if request.share.sign_public != request.enrollment_cert.subject_pub {
        return Err(EntityError::NotEnrolled(
            "caterpillar share does not match the enrolled key".into(),
        ));
    }
    let mut cocoons = Vec::with_capacity(request.count as usize);
    for index in request.start..request.start + request.count {
        cocoons.push(cocoon_public(&request.share, index, system.curve)?);
    }
    let batch = CocoonBatchMsg { cocoons };
    let payload = batch.encode(system.curve);
    system
        .bus
        .send(Role::Ra, Role::Pca, MsgKind::CocoonBatch, payload);
    Ok(batch)
}

/// PCA: one butterfly response and one pseudonym certificate per cocoon.
/// Serial and subject id come from the PCA's rng, never from device data.
pub fn pca_issue_butterflies<R: RngCore + ?Sized>(
    system: &mut System,
    batch: &CocoonBatchMsg,
    rng: &mut R,
) -> Result<ButterflyBatchMsg, EntityError> {
    let mut items = Vec::with_capacity(batch.cocoons.len());
    for cocoon in &batch.cocoons {
        let response = butterfly_public(cocoon, &system.pca.keys, system.curve, rng)?;
        let cert = issue(
            &system.pca.cert,
            &system.pca.keys.secret,
            &response.butterfly_public,
            SubjectKind::Pseudonym,
            random_subject_id(rng),
            Validity {
                not_before: system.now,
                not_after: system.now + PSEUDONYM_VALIDITY_SECS,
            },
            system.curve,
            rng,
        )?;
        items.push((response, cert));
    }
    let out = ButterflyBatchMsg { items };
    let payload = out.encode(system.curve);
    system
        .bus
        .send(Role::Pca, Role::Ra, MsgKind::ButterflyBatch, payload);
    Ok(out)
}

/// RA forwards the PCA's batch to the device unchanged.
pub fn ra_forward_delivery(system: &mut System, batch: &ButterflyBatchMsg) {
    let payload = batch.encode(system.curve);
    system
        .bus
        .send(Role::Ra, Role::Device, MsgKind::PseudonymDelivery, payload);
}

/// Device: reconstruct each butterfly private key and keep the pair only
/// after the key-match assertion and certificate binding hold.
pub fn device_accept_delivery(
    system: &System,
    device: &mut DeviceState,
    batch: &ButterflyBatchMsg,
) -> Result<usize, EntityError> {
    let pca_public = &system.pca.cert.subject_pub;
    let mut accepted = Vec::with_capacity(batch.items.len());
    let mut max_index = device.next_index;
    for (response, cert) in &batch.items {
        let cocoon = cocoon_private(&device.material, response.index, system.curve);
        let key = butterfly_private(&cocoon, response, pca_public, system.curve)?;
        if cert.subject_pub != response.butterfly_public {
            return Err(EntityError::Bke(BkeError::KeyMismatch));
        }
        max_index = max_index.max(response.index + 1);
        accepted.push((cert.clone(), key));
    }
    let count = accepted.len();
    device.pseudonyms.extend(accepted);
    device.next_index = max_index;
    Ok(count)
}

/// The full provisioning exchange: device → RA → PCA → RA → device.
pub fn request_pseudonyms<R: RngCore + ?Sized>(
    system: &mut System,
    device: &mut DeviceState,
    count: u32,
    rng: &mut R,
) -> Result<usize, EntityError> {
    let request = send_pseudonym_request(system, device, count)?;
    let cocoons = ra_expand_cocoons(system, &request)?;
    let butterflies = pca_issue_butterflies(system, &cocoons, rng)?;
    ra_forward_delivery(system, &butterflies);
    device_accept_delivery(system, device, &butterflies)
}

// ---- expansion value and key expansion (care episode) ----

pub(crate) fn draw_expansion_value<R: RngCore + ?Sized>(
    hospital_secret: &Scalar,
    curve: &CurveParams,
    rng: &mut R,
) -> Result<Scalar, CurveError> {
    loop {
        let t = curve.random_scalar(rng)?;
        // exclude t = n - h, which would collapse the expanded key to zero
        if !curve.scalar_add(&t, hospital_secret).is_zero() {
            return Ok(t);
        }
    }
}

/// Hospital draws t and hands it to the device out of band; both sides
/// store it for the episode.
pub fn negotiate_expansion_value<R: RngCore + ?Sized>(
    system: &mut System,
    hospital: &mut HospitalState,
    device: &mut DeviceState,
    rng: &mut R,
) -> Result<Scalar, EntityError> {
    for cert in [&hospital.enrollment_cert, &device.enrollment_cert] {
        let cert = cert
            .as_ref()
            .ok_or_else(|| EntityError::NotEnrolled("no enrollment certificate".into()))?;
        let chain = [cert.clone(), system.eca.cert.clone(), system.rca.cert.clone()];
        verify_chain(&chain, &system.rca.cert, system.now, system.curve)
            .map_err(|r| EntityError::NotEnrolled(r.to_string()))?;
    }
    let t = draw_expansion_value(&hospital.keys.secret, system.curve, rng)?;
    system.bus.send(
        Role::Hospital,
        Role::Device,
        MsgKind::ExpansionValueOutOfBand,
        system.curve.scalar_to_bytes(&t),
    );
    hospital.expansion_value = Some(t.clone());
    device.expansion_value = Some(t.clone());
    Ok(t)
}

/// Hospital side of the key expansion: z = t + h, Z = t·G + H.
pub fn hospital_expand(t: &Scalar, keys: &KeyPair, curve: &CurveParams) -> (Scalar, Point) {
    let z = curve.scalar_add(t, &keys.secret);
    let t_point = curve
        .scalar_mul(t, &curve.generator())
        .expect("generator on curve");
    let expanded = curve
        .point_add(&t_point, &keys.public)
        .expect("hospital key on curve");
    let check = curve
        .scalar_mul(&z, &curve.generator())
        .expect("generator on curve");
    assert_eq!(check, expanded, "expanded key identity z·G = t·G + H");
    (z, expanded)
}

/// Device side: the same Z from t and the hospital's public key only.
pub fn device_expand_hospital_pub(
    t: &Scalar,
    hospital_pub: &Point,
    curve: &CurveParams,
) -> Result<Point, EntityError> {
    if hospital_pub.is_infinity() || !curve.is_on_curve(hospital_pub) {
        return Err(EntityError::Curve(CurveError::OffCurveInput));
    }
    let t_point = curve.scalar_mul(t, &curve.generator())?;
    Ok(curve.point_add(&t_point, hospital_pub)?)
}

// ---- reading exchange ----

/// Sealed physiological reading: pseudonym certificate, ciphertext to the
/// hospital's expanded key, and a signature by the butterfly private key
/// over the sealed bytes. Carries no enrollment identity.
#[derive(Debug, Clone)]
pub struct ReadingMessage {
    pub pseudonym_cert: Certificate,
    pub sealed: SealedMessage,
    pub signature: Signature,
}

impl ReadingMessage {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = self.pseudonym_cert.encode(curve);
        out.extend_from_slice(&self.sealed.to_bytes());
        out.extend_from_slice(&self.signature.to_bytes(curve));
        out
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, EntityError> {
        let mut r = ByteReader::new(bytes);
        let pseudonym_cert =
            Certificate::read(&mut r, curve).map_err(|_| EntityError::MalformedMessage)?;
        let sealed = SealedMessage::read(&mut r).map_err(|_| EntityError::MalformedMessage)?;
        let signature =
            Signature::read(&mut r, curve).map_err(|_| EntityError::MalformedMessage)?;
        r.finish().map_err(|_| EntityError::MalformedMessage)?;
        Ok(ReadingMessage {
            pseudonym_cert,
            sealed,
            signature,
        })
    }
}

/// Build a reading message under the device's next pseudonym. The pseudonym
/// chain is re-checked before use; sign-after-encrypt lets the hospital
/// authenticate before decrypting.
pub fn build_reading<R: RngCore + ?Sized>(
    system: &System,
    device: &mut DeviceState,
    reading: &[u8],
    recipient: &Point,
    rng: &mut R,
) -> Result<ReadingMessage, EntityError> {
    let (cert, key) = device.take_pseudonym().ok_or(EntityError::NoPseudonyms)?;
    let chain = [cert.clone(), system.pca.cert.clone(), system.rca.cert.clone()];
    verify_chain(&chain, &system.rca.cert, system.now, system.curve)
        .map_err(EntityError::BadChain)?;
    let sealed = ecies_encrypt(&key, recipient, reading, system.curve)?;
    let signature = ecdsa_sign(&key, &sealed.to_bytes(), system.curve, rng)?;
    Ok(ReadingMessage {
        pseudonym_cert: cert,
        sealed,
        signature,
    })
}

pub fn deliver_reading(system: &mut System, msg: &ReadingMessage) {
    let payload = msg.encode(system.curve);
    system
        .bus
        .send(Role::Device, Role::Hospital, MsgKind::Reading, payload);
}

pub fn send_reading<R: RngCore + ?Sized>(
    system: &mut System,
    device: &mut DeviceState,
    reading: &[u8],
    recipient: &Point,
    rng: &mut R,
) -> Result<ReadingMessage, EntityError> {
    let msg = build_reading(system, device, reading, recipient, rng)?;
    deliver_reading(system, &msg);
    Ok(msg)
}

/// Hospital: chain to the trusted root, signature under the pseudonym key,
/// then decrypt with the expanded private key. Plaintext is released only
/// if all three pass.
pub fn hospital_receive(
    system: &System,
    msg: &ReadingMessage,
    z: &Scalar,
    trusted_root: &Certificate,
) -> Result<Vec<u8>, EntityError> {
    let chain = [
        msg.pseudonym_cert.clone(),
        system.pca.cert.clone(),
        system.rca.cert.clone(),
    ];
    verify_chain(&chain, trusted_root, system.now, system.curve)
        .map_err(EntityError::BadChain)?;
    if !ecdsa_verify(
        &msg.pseudonym_cert.subject_pub,
        &msg.sealed.to_bytes(),
        &msg.signature,
        system.curve,
    ) {
        return Err(EntityError::BadSignature);
    }
    Ok(ecies_decrypt(
        z,
        &msg.pseudonym_cert.subject_pub,
        &msg.sealed,
        system.curve,
    )?)
}

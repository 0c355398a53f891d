//! Certificate model, canonical binary encoding, issuance policy, and chain
//! verification rooted at the RCA.
//!
//! The format is a minimal fixed-order layout rather than X.509: serial,
//! subject kind, opaque subject id, subject public key, issuer serial,
//! validity window, issuer signature over the preceding fields. Equal
//! certificates encode to identical bytes.

use rand::RngCore;
use thiserror::Error;

use crate::curve::{CurveError, CurveParams, Point, Scalar};
use crate::primitives::{ecdsa_sign, ecdsa_verify, CryptoError, Signature};
use crate::wire::ByteReader;

pub const SUBJECT_ID_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertError {
    #[error("{issuer:?} is not authorized to issue {subject:?} certificates")]
    UnauthorizedIssuer {
        issuer: SubjectKind,
        subject: SubjectKind,
    },
    #[error("validity window is empty")]
    InvalidValidity,
    #[error("malformed certificate encoding")]
    MalformedEncoding,
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubjectKind {
    Rca,
    Eca,
    Pca,
    Ra,
    Device,
    Hospital,
    Pseudonym,
}

impl SubjectKind {
    pub const ALL: [SubjectKind; 7] = [
        SubjectKind::Rca,
        SubjectKind::Eca,
        SubjectKind::Pca,
        SubjectKind::Ra,
        SubjectKind::Device,
        SubjectKind::Hospital,
        SubjectKind::Pseudonym,
    ];

    pub fn as_u8(self) -> u8 {
        match self {
            SubjectKind::Rca => 0,
            SubjectKind::Eca => 1,
            SubjectKind::Pca => 2,
            SubjectKind::Ra => 3,
            SubjectKind::Device => 4,
            SubjectKind::Hospital => 5,
            SubjectKind::Pseudonym => 6,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SubjectKind::Rca => "rca",
            SubjectKind::Eca => "eca",
            SubjectKind::Pca => "pca",
            SubjectKind::Ra => "ra",
            SubjectKind::Device => "device",
            SubjectKind::Hospital => "hospital",
            SubjectKind::Pseudonym => "pseudonym",
        }
    }
}

/// Half-open window [not_before, not_after) in integer seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validity {
    pub not_before: u64,
    pub not_after: u64,
}

impl Validity {
    pub fn contains(&self, now: u64) -> bool {
        self.not_before <= now && now < self.not_after
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub serial: u64,
    pub subject_kind: SubjectKind,
    pub subject_id: [u8; SUBJECT_ID_LEN],
    pub subject_pub: Point,
    pub issuer_serial: u64,
    pub validity: Validity,
    pub signature: Signature,
}

impl Certificate {
    pub fn is_self_signed(&self) -> bool {
        self.issuer_serial == self.serial
    }

    /// To-be-signed fields in canonical order.
    pub fn tbs_bytes(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.serial.to_be_bytes());
        out.push(self.subject_kind.as_u8());
        out.extend_from_slice(&self.subject_id);
        out.extend_from_slice(&curve.point_to_bytes(&self.subject_pub));
        out.extend_from_slice(&self.issuer_serial.to_be_bytes());
        out.extend_from_slice(&self.validity.not_before.to_be_bytes());
        out.extend_from_slice(&self.validity.not_after.to_be_bytes());
        out
    }

    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = self.tbs_bytes(curve);
        out.extend_from_slice(&self.signature.to_bytes(curve));
        out
    }

    pub fn read(r: &mut ByteReader<'_>, curve: &CurveParams) -> Result<Self, CertError> {
        let serial = r.u64_be().map_err(|_| CertError::MalformedEncoding)?;
        let kind = r.u8().map_err(|_| CertError::MalformedEncoding)?;
        let subject_kind = SubjectKind::from_u8(kind).ok_or(CertError::MalformedEncoding)?;
        let subject_id: [u8; SUBJECT_ID_LEN] = r
            .take(SUBJECT_ID_LEN)
            .map_err(|_| CertError::MalformedEncoding)?
            .try_into()
            .unwrap();
        let subject_pub = curve
            .read_point(r)
            .map_err(|_| CertError::MalformedEncoding)?;
        let issuer_serial = r.u64_be().map_err(|_| CertError::MalformedEncoding)?;
        let not_before = r.u64_be().map_err(|_| CertError::MalformedEncoding)?;
        let not_after = r.u64_be().map_err(|_| CertError::MalformedEncoding)?;
        let signature = Signature::read(r, curve).map_err(|_| CertError::MalformedEncoding)?;
        Ok(Certificate {
            serial,
            subject_kind,
            subject_id,
            subject_pub,
            issuer_serial,
            validity: Validity {
                not_before,
                not_after,
            },
            signature,
        })
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, CertError> {
        let mut reader = ByteReader::new(bytes);
        let cert = Self::read(&mut reader, curve)?;
        reader.finish().map_err(|_| CertError::MalformedEncoding)?;
        Ok(cert)
    }
}

/// Chain file format: for each certificate leaf to root, a 4-byte
/// big-endian length followed by its canonical encoding.
pub fn encode_chain(chain: &[Certificate], curve: &CurveParams) -> Vec<u8> {
    let mut out = Vec::new();
    for cert in chain {
        let encoded = cert.encode(curve);
        out.extend_from_slice(&(encoded.len() as u32).to_be_bytes());
        out.extend_from_slice(&encoded);
    }
    out
}

pub fn decode_chain(bytes: &[u8], curve: &CurveParams) -> Result<Vec<Certificate>, CertError> {
    let mut reader = ByteReader::new(bytes);
    let mut chain = Vec::new();
    while reader.remaining() > 0 {
        let len = reader.u32_be().map_err(|_| CertError::MalformedEncoding)? as usize;
        let body = reader.take(len).map_err(|_| CertError::MalformedEncoding)?;
        chain.push(Certificate::decode(body, curve)?);
    }
    Ok(chain)
}

/// Issuance policy: rca → {eca, pca, ra}, eca → {device, hospital},
/// pca → {pseudonym}. The root itself comes from `issue_self_signed_root`.
pub fn may_issue(issuer: SubjectKind, subject: SubjectKind) -> bool {
    use SubjectKind::*;
    matches!(
        (issuer, subject),
        (Rca, Eca) | (Rca, Pca) | (Rca, Ra) | (Eca, Device) | (Eca, Hospital) | (Pca, Pseudonym)
    )
}

fn check_subject_pub(curve: &CurveParams, subject_pub: &Point) -> Result<(), CertError> {
    if subject_pub.is_infinity() || !curve.is_on_curve(subject_pub) {
        return Err(CertError::Curve(CurveError::OffCurveInput));
    }
    Ok(())
}

/// Issue a certificate under the policy table. The serial comes from the
/// issuer's rng.
#[allow(clippy::too_many_arguments)]
pub fn issue<R: RngCore + ?Sized>(
    issuer_cert: &Certificate,
    issuer_secret: &Scalar,
    subject_pub: &Point,
    subject_kind: SubjectKind,
    subject_id: [u8; SUBJECT_ID_LEN],
    validity: Validity,
    curve: &CurveParams,
    rng: &mut R,
) -> Result<Certificate, CertError> {
    if validity.not_before >= validity.not_after {
        return Err(CertError::InvalidValidity);
    }
    if !may_issue(issuer_cert.subject_kind, subject_kind) {
        return Err(CertError::UnauthorizedIssuer {
            issuer: issuer_cert.subject_kind,
            subject: subject_kind,
        });
    }
    check_subject_pub(curve, subject_pub)?;
    let mut cert = Certificate {
        serial: rng.next_u64(),
        subject_kind,
        subject_id,
        subject_pub: subject_pub.clone(),
        issuer_serial: issuer_cert.serial,
        validity,
        signature: Signature {
            r: Scalar::zero(),
            s: Scalar::zero(),
        },
    };
    let tbs = cert.tbs_bytes(curve);
    cert.signature = ecdsa_sign(issuer_secret, &tbs, curve, rng)?;
    Ok(cert)
}

/// The RCA trust anchor: self-signed, issuer serial equals serial.
pub fn issue_self_signed_root<R: RngCore + ?Sized>(
    root_keys: &crate::curve::KeyPair,
    subject_id: [u8; SUBJECT_ID_LEN],
    validity: Validity,
    curve: &CurveParams,
    rng: &mut R,
) -> Result<Certificate, CertError> {
    if validity.not_before >= validity.not_after {
        return Err(CertError::InvalidValidity);
    }
    check_subject_pub(curve, &root_keys.public)?;
    let serial = rng.next_u64();
    let mut cert = Certificate {
        serial,
        subject_kind: SubjectKind::Rca,
        subject_id,
        subject_pub: root_keys.public.clone(),
        issuer_serial: serial,
        validity,
        signature: Signature {
            r: Scalar::zero(),
            s: Scalar::zero(),
        },
    };
    let tbs = cert.tbs_bytes(curve);
    cert.signature = ecdsa_sign(&root_keys.secret, &tbs, curve, rng)?;
    Ok(cert)
}

/// Structured rejection from chain verification; `depth` counts from the
/// leaf.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainRejection {
    #[error("chain is empty")]
    EmptyChain,
    #[error("chain does not terminate at the trusted root")]
    UntrustedRoot,
    #[error("issuer serial mismatch at depth {depth}")]
    BrokenLink { depth: usize },
    #[error("issuance policy violated at depth {depth}")]
    PolicyViolation { depth: usize },
    #[error("signature invalid at depth {depth}")]
    BadSignature { depth: usize },
    #[error("certificate expired at depth {depth}")]
    Expired { depth: usize },
    #[error("certificate not yet valid at depth {depth}")]
    NotYetValid { depth: usize },
}

/// Verify a leaf-to-root chain: every signature, the kind policy on every
/// link, every validity window against `now`, and anchoring at
/// `trusted_root`.
pub fn verify_chain(
    chain: &[Certificate],
    trusted_root: &Certificate,
    now: u64,
    curve: &CurveParams,
) -> Result<(), ChainRejection> {
    if chain.is_empty() {
        return Err(ChainRejection::EmptyChain);
    }
    let last = chain.last().unwrap();
    if last != trusted_root || last.subject_kind != SubjectKind::Rca || !last.is_self_signed() {
        return Err(ChainRejection::UntrustedRoot);
    }
    for (depth, cert) in chain.iter().enumerate() {
        let issuer = if depth + 1 < chain.len() {
            &chain[depth + 1]
        } else {
            cert // self-signed root
        };
        if cert.issuer_serial != issuer.serial {
            return Err(ChainRejection::BrokenLink { depth });
        }
        let policy_ok = if depth + 1 < chain.len() {
            may_issue(issuer.subject_kind, cert.subject_kind)
        } else {
            cert.subject_kind == SubjectKind::Rca
        };
        if !policy_ok {
            return Err(ChainRejection::PolicyViolation { depth });
        }
        if now < cert.validity.not_before {
            return Err(ChainRejection::NotYetValid { depth });
        }
        if !cert.validity.contains(now) {
            return Err(ChainRejection::Expired { depth });
        }
        let tbs = cert.tbs_bytes(curve);
        if !ecdsa_verify(&issuer.subject_pub, &tbs, &cert.signature, curve) {
            return Err(ChainRejection::BadSignature { depth });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::toy_curve;
    use rand::rngs::mock::StepRng;

    #[test]
    fn kind_codec_covers_all() {
        for kind in SubjectKind::ALL {
            assert_eq!(SubjectKind::from_u8(kind.as_u8()), Some(kind));
        }
        assert_eq!(SubjectKind::from_u8(7), None);
    }

    #[test]
    fn empty_validity_rejected() {
        let curve = toy_curve();
        let mut rng = StepRng::new(0x1234_5678_9abc_def0, 0x1111_2222_3333_4444);
        let keys = curve.keygen(&mut rng).unwrap();
        let err = issue_self_signed_root(
            &keys,
            [0u8; SUBJECT_ID_LEN],
            Validity {
                not_before: 10,
                not_after: 10,
            },
            curve,
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(err, CertError::InvalidValidity);
    }

    #[test]
    fn infinity_subject_rejected() {
        let curve = toy_curve();
        let mut rng = StepRng::new(0x1234_5678_9abc_def0, 0x1111_2222_3333_4444);
        let keys = curve.keygen(&mut rng).unwrap();
        let root = issue_self_signed_root(
            &keys,
            [0u8; SUBJECT_ID_LEN],
            Validity {
                not_before: 0,
                not_after: 100,
            },
            curve,
            &mut rng,
        )
        .unwrap();
        let err = issue(
            &root,
            &keys.secret,
            &Point::Infinity,
            SubjectKind::Eca,
            [1u8; SUBJECT_ID_LEN],
            root.validity,
            curve,
            &mut rng,
        )
        .unwrap_err();
        assert_eq!(err, CertError::Curve(CurveError::OffCurveInput));
    }
}

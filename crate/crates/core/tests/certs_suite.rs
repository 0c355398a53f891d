//! Certificate issuance policy, chain verification, canonical encoding, and
//! pseudonym unlinkability at the field level.

use pseudonym_pki::certs::{
    issue, issue_self_signed_root, may_issue, verify_chain, CertError, Certificate,
    ChainRejection, SubjectKind, Validity, SUBJECT_ID_LEN,
};
use pseudonym_pki::curve::{curve_for_strength, CurveParams, KeyPair, Scalar};
use pseudonym_pki::primitives::{ecdsa_sign, ecdsa_verify, Signature};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

const NOW: u64 = 1_000_000;

fn validity(from: u64, secs: u64) -> Validity {
    Validity {
        not_before: from,
        not_after: from + secs,
    }
}

struct Pki {
    curve: &'static CurveParams,
    rng: ChaCha20Rng,
    root_keys: KeyPair,
    root: Certificate,
}

impl Pki {
    fn new(seed: u64) -> Self {
        let curve = curve_for_strength(80).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let root_keys = curve.keygen(&mut rng).unwrap();
        let root = issue_self_signed_root(
            &root_keys,
            [b'r'; SUBJECT_ID_LEN],
            validity(NOW, 1_000_000),
            curve,
            &mut rng,
        )
        .unwrap();
        Pki {
            curve,
            rng,
            root_keys,
            root,
        }
    }

    fn issue_under(
        &mut self,
        issuer: &Certificate,
        issuer_secret: &Scalar,
        kind: SubjectKind,
        window: Validity,
    ) -> Result<(KeyPair, Certificate), CertError> {
        let keys = self.curve.keygen(&mut self.rng).unwrap();
        let secret = issuer_secret.clone();
        let cert = issue(
            issuer,
            &secret,
            &keys.public,
            kind,
            [kind.as_u8(); SUBJECT_ID_LEN],
            window,
            self.curve,
            &mut self.rng,
        )?;
        Ok((keys, cert))
    }
}

#[test]
fn self_signed_root_verifies_as_a_chain_of_one() {
    let pki = Pki::new(41);
    assert_eq!(
        verify_chain(std::slice::from_ref(&pki.root), &pki.root, NOW, pki.curve),
        Ok(())
    );
}

#[test]
fn issuance_policy_matrix_matches_the_table() {
    let mut pki = Pki::new(42);
    let window = validity(NOW, 1000);
    for issuer_kind in SubjectKind::ALL {
        // synthetic issuer cert; issue() consults only kind and serial
        let issuer_keys = pki.curve.keygen(&mut pki.rng).unwrap();
        let issuer = Certificate {
            serial: 7,
            subject_kind: issuer_kind,
            subject_id: [0; SUBJECT_ID_LEN],
            subject_pub: issuer_keys.public.clone(),
            issuer_serial: 7,
            validity: window,
            signature: Signature {
                r: Scalar::zero(),
                s: Scalar::zero(),
            },
        };
        for subject_kind in SubjectKind::ALL {
            let outcome = pki.issue_under(&issuer, &issuer_keys.secret, subject_kind, window);
            if may_issue(issuer_kind, subject_kind) {
                let (_, cert) = outcome.expect("policy allows this pair");
                assert_eq!(cert.issuer_serial, issuer.serial);
            } else {
                assert!(
                    matches!(outcome, Err(CertError::UnauthorizedIssuer { .. })),
                    "{issuer_kind:?} -> {subject_kind:?} must be refused"
                );
            }
        }
    }
    // spot checks pinned to the table
    assert!(may_issue(SubjectKind::Rca, SubjectKind::Eca));
    assert!(may_issue(SubjectKind::Eca, SubjectKind::Hospital));
    assert!(may_issue(SubjectKind::Pca, SubjectKind::Pseudonym));
    assert!(!may_issue(SubjectKind::Eca, SubjectKind::Pseudonym));
    assert!(!may_issue(SubjectKind::Rca, SubjectKind::Rca));
    assert!(!may_issue(SubjectKind::Device, SubjectKind::Device));
}

#[test]
fn three_level_chain_verifies_and_binds_the_leaf_key() {
    let mut pki = Pki::new(43);
    let window = validity(NOW, 10_000);
    let root_secret = pki.root_keys.secret.clone();
    let root = pki.root.clone();
    let (eca_keys, eca_cert) = pki
        .issue_under(&root, &root_secret, SubjectKind::Eca, window)
        .unwrap();
    let (device_keys, device_cert) = pki
        .issue_under(&eca_cert, &eca_keys.secret, SubjectKind::Device, window)
        .unwrap();
    let chain = [device_cert.clone(), eca_cert.clone(), root.clone()];
    assert_eq!(verify_chain(&chain, &root, NOW + 5, pki.curve), Ok(()));

    // binding: the accepted leaf key verifies a fresh signature
    let sig = ecdsa_sign(&device_keys.secret, b"probe", pki.curve, &mut pki.rng).unwrap();
    assert!(ecdsa_verify(&device_cert.subject_pub, b"probe", &sig, pki.curve));
}

#[test]
fn chain_rejections_name_the_failure() {
    let mut pki = Pki::new(44);
    let window = validity(NOW, 10_000);
    let root_secret = pki.root_keys.secret.clone();
    let root = pki.root.clone();
    let (eca_keys, eca_cert) = pki
        .issue_under(&root, &root_secret, SubjectKind::Eca, window)
        .unwrap();
    let (_, device_cert) = pki
        .issue_under(&eca_cert, &eca_keys.secret, SubjectKind::Device, window)
        .unwrap();
    let chain = vec![device_cert.clone(), eca_cert.clone(), root.clone()];

    assert_eq!(
        verify_chain(&[], &root, NOW, pki.curve),
        Err(ChainRejection::EmptyChain)
    );

    // leaf expired
    assert_eq!(
        verify_chain(&chain, &root, NOW + 20_000, pki.curve),
        Err(ChainRejection::Expired { depth: 0 })
    );
    assert_eq!(
        verify_chain(&chain, &root, NOW - 1, pki.curve),
        Err(ChainRejection::NotYetValid { depth: 0 })
    );

    // tampered middle certificate breaks its signature
    let mut tampered = chain.clone();
    tampered[1].subject_id[0] ^= 0x01;
    assert_eq!(
        verify_chain(&tampered, &root, NOW + 5, pki.curve),
        Err(ChainRejection::BadSignature { depth: 1 })
    );

    // broken issuer linkage
    let mut broken = chain.clone();
    broken[0].issuer_serial ^= 0xffff;
    assert_eq!(
        verify_chain(&broken, &root, NOW + 5, pki.curve),
        Err(ChainRejection::BrokenLink { depth: 0 })
    );

    // anchored at a different root
    let other = Pki::new(45);
    assert_eq!(
        verify_chain(&chain, &other.root, NOW + 5, pki.curve),
        Err(ChainRejection::UntrustedRoot)
    );

    // kind policy violated mid-chain: a device cannot appear as an issuer
    let (_, rogue_leaf) = pki
        .issue_under(&device_cert, &eca_keys.secret, SubjectKind::Pseudonym, window)
        .err()
        .map(|_| {
            // issue() refuses, so forge the cert directly to drive verify_chain
            let keys = pki.curve.keygen(&mut pki.rng).unwrap();
            let mut cert = Certificate {
                serial: 99,
                subject_kind: SubjectKind::Pseudonym,
                subject_id: [9; SUBJECT_ID_LEN],
                subject_pub: keys.public.clone(),
                issuer_serial: device_cert.serial,
                validity: window,
                signature: Signature {
                    r: Scalar::zero(),
                    s: Scalar::zero(),
                },
            };
            let tbs = cert.tbs_bytes(pki.curve);
            cert.signature = ecdsa_sign(&eca_keys.secret, &tbs, pki.curve, &mut pki.rng).unwrap();
            ((), cert)
        })
        .unwrap();
    let rogue_chain = vec![rogue_leaf, device_cert, eca_cert, root.clone()];
    assert_eq!(
        verify_chain(&rogue_chain, &root, NOW + 5, pki.curve),
        Err(ChainRejection::PolicyViolation { depth: 0 })
    );
}

#[test]
fn canonical_encoding_roundtrips_and_rejects_truncation() {
    let mut pki = Pki::new(46);
    let window = validity(NOW, 10_000);
    let root_secret = pki.root_keys.secret.clone();
    let root = pki.root.clone();
    let (_, cert) = pki
        .issue_under(&root, &root_secret, SubjectKind::Ra, window)
        .unwrap();

    let bytes = cert.encode(pki.curve);
    let decoded = Certificate::decode(&bytes, pki.curve).unwrap();
    assert_eq!(decoded, cert);
    // canonical: equal certificates encode to identical bytes
    assert_eq!(decoded.encode(pki.curve), bytes);

    assert_eq!(
        Certificate::decode(&bytes[..bytes.len() - 3], pki.curve),
        Err(CertError::MalformedEncoding)
    );
    let mut trailing = bytes.clone();
    trailing.push(0);
    assert_eq!(
        Certificate::decode(&trailing, pki.curve),
        Err(CertError::MalformedEncoding)
    );
    // unknown subject kind byte
    let mut bad_kind = bytes.clone();
    bad_kind[8] = 0x7f;
    assert_eq!(
        Certificate::decode(&bad_kind, pki.curve),
        Err(CertError::MalformedEncoding)
    );
}

#[test]
fn chain_file_roundtrips_and_verifies() {
    let mut pki = Pki::new(48);
    let window = validity(NOW, 10_000);
    let root_secret = pki.root_keys.secret.clone();
    let root = pki.root.clone();
    let (eca_keys, eca_cert) = pki
        .issue_under(&root, &root_secret, SubjectKind::Eca, window)
        .unwrap();
    let (_, device_cert) = pki
        .issue_under(&eca_cert, &eca_keys.secret, SubjectKind::Device, window)
        .unwrap();
    let chain = vec![device_cert, eca_cert, root.clone()];
    let bytes = pseudonym_pki::certs::encode_chain(&chain, pki.curve);
    let back = pseudonym_pki::certs::decode_chain(&bytes, pki.curve).unwrap();
    assert_eq!(back, chain);
    assert_eq!(verify_chain(&back, &root, NOW + 5, pki.curve), Ok(()));
    assert!(pseudonym_pki::certs::decode_chain(&bytes[..bytes.len() - 1], pki.curve).is_err());
    assert_eq!(
        pseudonym_pki::certs::decode_chain(&[], pki.curve).unwrap(),
        Vec::<Certificate>::new()
    );
}

#[test]
fn pseudonym_certificates_share_no_identifying_fields() {
    let mut pki = Pki::new(47);
    let window = validity(NOW, 10_000);
    let root_secret = pki.root_keys.secret.clone();
    let root = pki.root.clone();
    let (pca_keys, pca_cert) = pki
        .issue_under(&root, &root_secret, SubjectKind::Pca, window)
        .unwrap();

    // two pseudonym certs for the same device, as the PCA would issue them:
    // fresh random serial and id each time, distinct butterfly publics
    let issue_pseudonym = |pki: &mut Pki| {
        let butterfly = pki.curve.keygen(&mut pki.rng).unwrap();
        let mut id = [0u8; SUBJECT_ID_LEN];
        rand::RngCore::fill_bytes(&mut pki.rng, &mut id);
        issue(
            &pca_cert,
            &pca_keys.secret,
            &butterfly.public,
            SubjectKind::Pseudonym,
            id,
            window,
            pki.curve,
            &mut pki.rng,
        )
        .unwrap()
    };
    let first = issue_pseudonym(&mut pki);
    let second = issue_pseudonym(&mut pki);
    assert_ne!(first.serial, second.serial);
    assert_ne!(first.subject_id, second.subject_id);
    assert_ne!(first.subject_pub, second.subject_pub);
    // and no device-identifying field exists at all: id is pure randomness
    assert_eq!(first.subject_kind, SubjectKind::Pseudonym);
}

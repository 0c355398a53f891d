//! The asymmetric and symmetric primitives layered over the curve group:
//! ECDSA signatures, ECDH agreement, the ECIES key split and sealed-message
//! construction, and the AES-based expansion function family behind the
//! cocoon keys.
//!
//! The digest tracks the curve strength: SHA-256 up to 128 bits, SHA-384 at
//! 192, SHA-512 at 256. ECDSA reduces the leftmost order-width digest bits
//! mod n. ECIES is static-static; the protocol layer freshens recipient keys
//! via the negotiated expansion value, so each message sees new derived keys.

use aes::cipher::{BlockCipherEncrypt, KeyInit, KeyIvInit, StreamCipher};
use aes::Aes128;
use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use rand::RngCore;
use sha2::{Digest, Sha256, Sha384, Sha512};
use thiserror::Error;

use crate::curve::{CurveError, CurveParams, Point, Scalar};
use crate::wire::ByteReader;

type Aes128Ctr = ctr::Ctr128BE<Aes128>;

/// MAC tag length carried by every sealed message.
pub const TAG_LEN: usize = 32;
/// Default key-split index l: the first l KDF bytes key the MAC.
pub const DEFAULT_SPLIT_INDEX: usize = 16;
/// AES-128 key width used for both the cipher key and the expansion keys.
pub const SYM_KEY_LEN: usize = 16;

const KDF_CONTEXT: &[u8] = b"ecies-key-split-v1";
const SIGN_MAX_RETRIES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("shared point degenerates to the identity")]
    DegenerateSharedPoint,
    #[error("kdf input not longer than the split index")]
    InsufficientMaterial,
    #[error("message authentication failed")]
    MacMismatch,
    #[error("malformed message encoding")]
    MalformedEncoding,
}

/// ECDSA signature; r is the reduced x-coordinate of the nonce point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub r: Scalar,
    pub s: Scalar,
}

impl Signature {
    /// r ‖ s, each fixed-width big-endian at the order byte length.
    pub fn to_bytes(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = curve.scalar_to_bytes(&self.r);
        out.extend_from_slice(&curve.scalar_to_bytes(&self.s));
        out
    }

    pub fn read(r: &mut ByteReader<'_>, curve: &CurveParams) -> Result<Self, CryptoError> {
        let r_scalar = curve.read_scalar(r)?;
        let s_scalar = curve.read_scalar(r)?;
        Ok(Signature {
            r: r_scalar,
            s: s_scalar,
        })
    }

    pub fn from_bytes(bytes: &[u8], curve: &CurveParams) -> Result<Self, CryptoError> {
        let mut reader = ByteReader::new(bytes);
        let sig = Self::read(&mut reader, curve)?;
        reader.finish().map_err(|_| CryptoError::MalformedEncoding)?;
        Ok(sig)
    }
}

/// Key material split out of the ECDH shared secret: the first
/// `split_index` bytes key the MAC, the next block keys the cipher.
#[derive(Debug, Clone)]
pub struct DerivedKeys {
    pub mac_key: Vec<u8>,
    pub enc_key: [u8; SYM_KEY_LEN],
    pub split_index: usize,
}

/// Ciphertext plus MAC tag. `context` identifies the (sender, recipient)
/// public-key pair the keys were derived from; it is not part of the wire
/// encoding and decodes as zero.
#[derive(Debug, Clone)]
pub struct SealedMessage {
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_LEN],
    pub context: [u8; 8],
}

impl SealedMessage {
    /// 4-byte big-endian ciphertext length ‖ ciphertext ‖ 32-byte tag.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.ciphertext.len() + TAG_LEN);
        out.extend_from_slice(&(self.ciphertext.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.ciphertext);
        out.extend_from_slice(&self.tag);
        out
    }

    pub fn read(r: &mut ByteReader<'_>) -> Result<Self, CryptoError> {
        let len = r.u32_be().map_err(|_| CryptoError::MalformedEncoding)? as usize;
        let ciphertext = r
            .take(len)
            .map_err(|_| CryptoError::MalformedEncoding)?
            .to_vec();
        let tag_bytes = r.take(TAG_LEN).map_err(|_| CryptoError::MalformedEncoding)?;
        Ok(SealedMessage {
            ciphertext,
            tag: tag_bytes.try_into().unwrap(),
            context: [0u8; 8],
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut reader = ByteReader::new(bytes);
        let msg = Self::read(&mut reader)?;
        reader.finish().map_err(|_| CryptoError::MalformedEncoding)?;
        Ok(msg)
    }
}

/// 16-byte AES key driving the expansion function (ck or ek).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionKey([u8; SYM_KEY_LEN]);

impl ExpansionKey {
    pub fn new(bytes: [u8; SYM_KEY_LEN]) -> Self {
        ExpansionKey(bytes)
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; SYM_KEY_LEN];
        rng.fill_bytes(&mut bytes);
        ExpansionKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; SYM_KEY_LEN] {
        &self.0
    }
}

fn digest_bytes(curve: &CurveParams, data: &[u8]) -> Vec<u8> {
    match curve.strength_bits() {
        192 => Sha384::digest(data).to_vec(),
        256 => Sha512::digest(data).to_vec(),
        _ => Sha256::digest(data).to_vec(),
    }
}

/// Message digest e, reduced to a scalar: leftmost order-width bits mod n.
pub fn message_digest(curve: &CurveParams, message: &[u8]) -> Scalar {
    let h = digest_bytes(curve, message);
    let mut v = BigUint::from_bytes_be(&h);
    let digest_bits = (h.len() as u64) * 8;
    let order_bits = curve.order().bits();
    if digest_bits > order_bits {
        v >>= digest_bits - order_bits;
    }
    curve.scalar_from_uint(v)
}

fn hmac_tag(curve: &CurveParams, key: &[u8], data: &[u8]) -> [u8; TAG_LEN] {
    let full = match curve.strength_bits() {
        192 => {
            let mut mac = Hmac::<Sha384>::new_from_slice(key).expect("any key length");
            mac.update(data);
            mac.finalize().into_bytes().to_vec()
        }
        256 => {
            let mut mac = Hmac::<Sha512>::new_from_slice(key).expect("any key length");
            mac.update(data);
            mac.finalize().into_bytes().to_vec()
        }
        _ => {
            let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("any key length");
            mac.update(data);
            mac.finalize().into_bytes().to_vec()
        }
    };
    full[..TAG_LEN].try_into().unwrap()
}

// ---- ECDSA ----

/// Sign with a caller-chosen nonce; `None` when r or s degenerates to zero.
/// Exposed so deterministic vectors and the exhaustive toy-curve oracle can
/// drive every (secret, nonce) pair.
pub fn ecdsa_sign_with_nonce(
    secret: &Scalar,
    digest: &Scalar,
    nonce: &Scalar,
    curve: &CurveParams,
) -> Option<Signature> {
    if nonce.is_zero() {
        return None;
    }
    let nonce_point = curve
        .scalar_mul(nonce, &curve.generator())
        .expect("generator on curve");
    let x = nonce_point.x()?.clone();
    let r = curve.scalar_from_uint(x);
    if r.is_zero() {
        return None;
    }
    let k_inv = curve.scalar_inv(nonce).ok()?;
    let s = curve.scalar_mul_mod(
        &curve.scalar_add(digest, &curve.scalar_mul_mod(secret, &r)),
        &k_inv,
    );
    if s.is_zero() {
        return None;
    }
    Some(Signature { r, s })
}

/// ECDSA over the strength-matched digest with a fresh nonce per call.
pub fn ecdsa_sign<R: RngCore + ?Sized>(
    secret: &Scalar,
    message: &[u8],
    curve: &CurveParams,
    rng: &mut R,
) -> Result<Signature, CryptoError> {
    let digest = message_digest(curve, message);
    for _ in 0..SIGN_MAX_RETRIES {
        let nonce = curve.random_scalar(rng)?;
        if let Some(sig) = ecdsa_sign_with_nonce(secret, &digest, &nonce, curve) {
            return Ok(sig);
        }
    }
    Err(CryptoError::Curve(CurveError::RngFailure))
}

/// Accepts iff x(u·G + v·P) ≡ r (mod n). Malformed inputs reject.
pub fn ecdsa_verify_digest(
    public: &Point,
    digest: &Scalar,
    sig: &Signature,
    curve: &CurveParams,
) -> bool {
    if sig.r.is_zero() || sig.s.is_zero() {
        return false;
    }
    let Ok(w) = curve.scalar_inv(&sig.s) else {
        return false;
    };
    let u = curve.scalar_mul_mod(digest, &w);
    let v = curve.scalar_mul_mod(&sig.r, &w);
    let Ok(u_point) = curve.scalar_mul(&u, &curve.generator()) else {
        return false;
    };
    let Ok(v_point) = curve.scalar_mul(&v, public) else {
        return false;
    };
    let Ok(check) = curve.point_add(&u_point, &v_point) else {
        return false;
    };
    match check.x() {
        Some(x) => curve.scalar_from_uint(x.clone()) == sig.r,
        None => false,
    }
}

pub fn ecdsa_verify(
    public: &Point,
    message: &[u8],
    sig: &Signature,
    curve: &CurveParams,
) -> bool {
    ecdsa_verify_digest(public, &message_digest(curve, message), sig, curve)
}

// ---- ECDH / ECIES ----

/// Shared secret x_M: the x-coordinate of secret·Peer.
pub fn ecdh_shared(
    secret: &Scalar,
    peer_public: &Point,
    curve: &CurveParams,
) -> Result<BigUint, CryptoError> {
    let shared = curve.scalar_mul(secret, peer_public)?;
    shared
        .x()
        .cloned()
        .ok_or(CryptoError::DegenerateSharedPoint)
}

/// Split the KDF stream over x_M: the first `split_index` bytes become the
/// MAC key ϕ, the following cipher-key block becomes φ. The raw coordinate
/// is run through the digest with a context label first; splitting the bare
/// coordinate would hand out structured key bytes.
pub fn kdf_split(
    shared_x: &BigUint,
    split_index: usize,
    curve: &CurveParams,
) -> Result<DerivedKeys, CryptoError> {
    let encoded = curve.field_element_to_bytes(shared_x);
    if split_index >= encoded.len() {
        return Err(CryptoError::InsufficientMaterial);
    }
    let need = split_index + SYM_KEY_LEN;
    let mut stream = Vec::with_capacity(need + 64);
    let mut counter = 0u32;
    while stream.len() < need {
        let mut input = encoded.clone();
        input.extend_from_slice(&counter.to_be_bytes());
        input.extend_from_slice(KDF_CONTEXT);
        stream.extend_from_slice(&digest_bytes(curve, &input));
        counter += 1;
    }
    let mac_key = stream[..split_index].to_vec();
    let enc_key = stream[split_index..need].try_into().unwrap();
    Ok(DerivedKeys {
        mac_key,
        enc_key,
        split_index,
    })
}

fn apply_ctr(key: &[u8; SYM_KEY_LEN], data: &mut [u8]) {
    // fresh derived keys per message, so a zero nonce never repeats a stream
    let mut cipher = Aes128Ctr::new(key.into(), &[0u8; 16].into());
    cipher.apply_keystream(data);
}

/// Identifier of the key pair a sealed message was built for.
pub fn pair_context(
    sender_public: &Point,
    recipient_public: &Point,
    curve: &CurveParams,
) -> [u8; 8] {
    let mut input = curve.point_to_bytes(sender_public);
    input.extend_from_slice(&curve.point_to_bytes(recipient_public));
    digest_bytes(curve, &input)[..8].try_into().unwrap()
}

/// Static-static ECIES: AES-128-CTR under φ, HMAC tag under ϕ.
pub fn ecies_encrypt(
    sender_secret: &Scalar,
    recipient_public: &Point,
    plaintext: &[u8],
    curve: &CurveParams,
) -> Result<SealedMessage, CryptoError> {
    let shared = ecdh_shared(sender_secret, recipient_public, curve)?;
    let keys = kdf_split(&shared, DEFAULT_SPLIT_INDEX, curve)?;
    let mut ciphertext = plaintext.to_vec();
    apply_ctr(&keys.enc_key, &mut ciphertext);
    let tag = hmac_tag(curve, &keys.mac_key, &ciphertext);
    let sender_public = curve.scalar_mul(sender_secret, &curve.generator())?;
    let context = pair_context(&sender_public, recipient_public, curve);
    Ok(SealedMessage {
        ciphertext,
        tag,
        context,
    })
}

/// Verifies the tag before decrypting.
pub fn ecies_decrypt(
    recipient_secret: &Scalar,
    sender_public: &Point,
    sealed: &SealedMessage,
    curve: &CurveParams,
) -> Result<Vec<u8>, CryptoError> {
    let shared = ecdh_shared(recipient_secret, sender_public, curve)?;
    let keys = kdf_split(&shared, DEFAULT_SPLIT_INDEX, curve)?;
    let expected = hmac_tag(curve, &keys.mac_key, &sealed.ciphertext);
    if !constant_time_eq(&expected, &sealed.tag) {
        return Err(CryptoError::MacMismatch);
    }
    let mut plaintext = sealed.ciphertext.clone();
    apply_ctr(&keys.enc_key, &mut plaintext);
    Ok(plaintext)
}

fn constant_time_eq(a: &[u8; TAG_LEN], b: &[u8; TAG_LEN]) -> bool {
    let mut diff = 0u8;
    for (x, y) in a.iter().zip(b.iter()) {
        diff |= x ^ y;
    }
    diff == 0
}

// ---- expansion function family ----

/// The f1/f2 family: AES-ECB over blocks (index ‖ counter), both big-endian,
/// streamed until order-width plus eight bytes, reduced mod n. f1 and f2 are
/// this single map under ck and ek respectively.
pub fn expand_f(key: &ExpansionKey, index: u32, curve: &CurveParams) -> Scalar {
    let cipher = Aes128::new(aes_key(key));
    let need = curve.order_byte_len() + 8;
    let mut stream = Vec::with_capacity(need + 16);
    let mut counter = 0u64;
    while stream.len() < need {
        let mut block = [0u8; 16];
        block[..8].copy_from_slice(&u64::from(index).to_be_bytes());
        block[8..].copy_from_slice(&counter.to_be_bytes());
        let mut buf = block.into();
        cipher.encrypt_block(&mut buf);
        stream.extend_from_slice(&buf);
        counter += 1;
    }
    stream.truncate(need);
    curve.scalar_from_uint(BigUint::from_bytes_be(&stream))
}

fn aes_key(key: &ExpansionKey) -> &aes::cipher::Array<u8, aes::cipher::consts::U16> {
    key.as_bytes().into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{curve_for_strength, toy_curve};

    #[test]
    fn digest_reduces_into_order() {
        for curve in [toy_curve(), curve_for_strength(256).unwrap()] {
            let e = message_digest(curve, b"reading");
            assert!(e.value() < curve.order());
        }
    }

    #[test]
    fn sign_with_zero_or_degenerate_nonce_is_rejected() {
        let curve = toy_curve();
        let secret = curve.scalar_from_u64(2);
        let digest = curve.scalar_from_u64(5);
        assert!(ecdsa_sign_with_nonce(&secret, &digest, &Scalar::zero(), curve).is_none());
    }

    #[test]
    fn kdf_split_rejects_short_input() {
        let curve = toy_curve(); // 1-byte field elements
        let err = kdf_split(&BigUint::from(9u32), DEFAULT_SPLIT_INDEX, curve).unwrap_err();
        assert_eq!(err, CryptoError::InsufficientMaterial);
    }

    #[test]
    fn kdf_split_lengths_and_determinism() {
        let curve = curve_for_strength(128).unwrap();
        let x = BigUint::from(0xdead_beef_u64);
        let a = kdf_split(&x, 16, curve).unwrap();
        let b = kdf_split(&x, 16, curve).unwrap();
        assert_eq!(a.mac_key.len(), 16);
        assert_eq!(a.enc_key.len(), 16);
        assert_eq!(a.mac_key, b.mac_key);
        assert_eq!(a.enc_key, b.enc_key);
        let c = kdf_split(&(x + 1u32), 16, curve).unwrap();
        assert_ne!(a.mac_key, c.mac_key);
    }

    #[test]
    fn sealed_message_codec_roundtrip() {
        let sealed = SealedMessage {
            ciphertext: vec![1, 2, 3, 4, 5],
            tag: [7u8; TAG_LEN],
            context: [9u8; 8],
        };
        let bytes = sealed.to_bytes();
        assert_eq!(bytes.len(), 4 + 5 + TAG_LEN);
        let back = SealedMessage::from_bytes(&bytes).unwrap();
        assert_eq!(back.ciphertext, sealed.ciphertext);
        assert_eq!(back.tag, sealed.tag);
        assert_eq!(back.context, [0u8; 8]);
        assert!(SealedMessage::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}

//! Butterfly key expansion: caterpillar material on the device, cocoon
//! publics at the registration authority, butterfly publics at the pseudonym
//! CA, and private reconstruction back on the device.
//!
//! The registration authority expands cocoon publics without learning any
//! private key; the pseudonym CA contributes a fresh scalar c per cocoon and
//! never sees the caterpillar material. Only the device, holding both the
//! caterpillar secrets and the unwrapped c, can assemble a butterfly private
//! key.

use rand::RngCore;
use thiserror::Error;

use crate::curve::{CurveError, CurveParams, KeyPair, Point, Scalar};
use crate::primitives::{
    ecdsa_sign, ecdsa_verify, ecies_decrypt, ecies_encrypt, expand_f, CryptoError, ExpansionKey,
    SealedMessage, Signature,
};
use crate::wire::ByteReader;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BkeError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("response signature does not verify under the pseudonym CA key")]
    BadPcaSignature,
    #[error("reconstructed key does not match the delivered butterfly public")]
    KeyMismatch,
    #[error("malformed butterfly message encoding")]
    MalformedEncoding,
    #[error("batch element {index} failed: {source}")]
    AtIndex { index: u32, source: Box<BkeError> },
}

/// Device-side seed: two expansion keys and the two caterpillar pairs
/// (a, A) for signing and (p, P) for encryption.
#[derive(Debug, Clone)]
pub struct CaterpillarMaterial {
    pub ck: ExpansionKey,
    pub ek: ExpansionKey,
    pub sign_pair: KeyPair,
    pub enc_pair: KeyPair,
}

impl CaterpillarMaterial {
    /// The share handed to the registration authority: (ck, ek, A, P).
    pub fn public_share(&self) -> CaterpillarPublic {
        CaterpillarPublic {
            ck: self.ck.clone(),
            ek: self.ek.clone(),
            sign_public: self.sign_pair.public.clone(),
            enc_public: self.enc_pair.public.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaterpillarPublic {
    pub ck: ExpansionKey,
    pub ek: ExpansionKey,
    pub sign_public: Point,
    pub enc_public: Point,
}

impl CaterpillarPublic {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(self.ck.as_bytes());
        out.extend_from_slice(self.ek.as_bytes());
        out.extend_from_slice(&curve.point_to_bytes(&self.sign_public));
        out.extend_from_slice(&curve.point_to_bytes(&self.enc_public));
        out
    }

    pub fn read(r: &mut ByteReader<'_>, curve: &CurveParams) -> Result<Self, BkeError> {
        let ck = r.take(16).map_err(|_| BkeError::MalformedEncoding)?;
        let ek = r.take(16).map_err(|_| BkeError::MalformedEncoding)?;
        let sign_public = curve
            .read_point(r)
            .map_err(|_| BkeError::MalformedEncoding)?;
        let enc_public = curve
            .read_point(r)
            .map_err(|_| BkeError::MalformedEncoding)?;
        Ok(CaterpillarPublic {
            ck: ExpansionKey::new(ck.try_into().unwrap()),
            ek: ExpansionKey::new(ek.try_into().unwrap()),
            sign_public,
            enc_public,
        })
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, BkeError> {
        let mut reader = ByteReader::new(bytes);
        let share = Self::read(&mut reader, curve)?;
        reader.finish().map_err(|_| BkeError::MalformedEncoding)?;
        Ok(share)
    }
}

/// Cocoon public pair for one index: B_i = A + f1(ck,i)·G, Q_i = P + f2(ek,i)·G.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocoonPublic {
    pub index: u32,
    pub sign_point: Point,
    pub enc_point: Point,
}

impl CocoonPublic {
    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = self.index.to_be_bytes().to_vec();
        out.extend_from_slice(&curve.point_to_bytes(&self.sign_point));
        out.extend_from_slice(&curve.point_to_bytes(&self.enc_point));
        out
    }

    pub fn read(r: &mut ByteReader<'_>, curve: &CurveParams) -> Result<Self, BkeError> {
        let index = r.u32_be().map_err(|_| BkeError::MalformedEncoding)?;
        let sign_point = curve
            .read_point(r)
            .map_err(|_| BkeError::MalformedEncoding)?;
        let enc_point = curve
            .read_point(r)
            .map_err(|_| BkeError::MalformedEncoding)?;
        Ok(CocoonPublic {
            index,
            sign_point,
            enc_point,
        })
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, BkeError> {
        let mut reader = ByteReader::new(bytes);
        let cocoon = Self::read(&mut reader, curve)?;
        reader.finish().map_err(|_| BkeError::MalformedEncoding)?;
        Ok(cocoon)
    }
}

/// Pseudonym-CA answer for one cocoon: the butterfly public B_i + C, the
/// scalar c sealed to Q_i, and the CA signature binding the three fields.
#[derive(Debug, Clone)]
pub struct ButterflyResponse {
    pub index: u32,
    pub butterfly_public: Point,
    pub wrapped_c: SealedMessage,
    pub pca_signature: Signature,
}

impl ButterflyResponse {
    /// index ‖ butterfly public ‖ wrapped c, the payload under the CA
    /// signature.
    pub fn signed_payload(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = self.index.to_be_bytes().to_vec();
        out.extend_from_slice(&curve.point_to_bytes(&self.butterfly_public));
        out.extend_from_slice(&self.wrapped_c.to_bytes());
        out
    }

    pub fn encode(&self, curve: &CurveParams) -> Vec<u8> {
        let mut out = self.signed_payload(curve);
        out.extend_from_slice(&self.pca_signature.to_bytes(curve));
        out
    }

    pub fn read(r: &mut ByteReader<'_>, curve: &CurveParams) -> Result<Self, BkeError> {
        let index = r.u32_be().map_err(|_| BkeError::MalformedEncoding)?;
        let butterfly_public = curve
            .read_point(r)
            .map_err(|_| BkeError::MalformedEncoding)?;
        let wrapped_c = SealedMessage::read(r).map_err(|_| BkeError::MalformedEncoding)?;
        let pca_signature =
            Signature::read(r, curve).map_err(|_| BkeError::MalformedEncoding)?;
        Ok(ButterflyResponse {
            index,
            butterfly_public,
            wrapped_c,
            pca_signature,
        })
    }

    pub fn decode(bytes: &[u8], curve: &CurveParams) -> Result<Self, BkeError> {
        let mut reader = ByteReader::new(bytes);
        let response = Self::read(&mut reader, curve)?;
        reader.finish().map_err(|_| BkeError::MalformedEncoding)?;
        Ok(response)
    }
}

/// Device-side cocoon scalars b_i, q_i matching a CocoonPublic.
#[derive(Debug, Clone)]
pub struct CocoonPrivate {
    pub index: u32,
    pub sign_scalar: Scalar,
    pub enc_scalar: Scalar,
}

/// Fresh caterpillar material: two AES expansion keys, two keypairs.
pub fn gen_caterpillar<R: RngCore + ?Sized>(
    curve: &CurveParams,
    rng: &mut R,
) -> Result<CaterpillarMaterial, BkeError> {
    let ck = ExpansionKey::random(rng);
    let mut ek = ExpansionKey::random(rng);
    while ek == ck {
        ek = ExpansionKey::random(rng);
    }
    let sign_pair = curve.keygen(rng)?;
    let enc_pair = curve.keygen(rng)?;
    Ok(CaterpillarMaterial {
        ck,
        ek,
        sign_pair,
        enc_pair,
    })
}

fn cocoon_points(
    sign_public: &Point,
    enc_public: &Point,
    f1: &Scalar,
    f2: &Scalar,
    curve: &CurveParams,
) -> Result<(Point, Point), CurveError> {
    let g = curve.generator();
    let sign_point = curve.point_add(sign_public, &curve.scalar_mul(f1, &g)?)?;
    let enc_point = curve.point_add(enc_public, &curve.scalar_mul(f2, &g)?)?;
    Ok((sign_point, enc_point))
}

/// Registration-authority expansion of one index.
pub fn cocoon_public(
    share: &CaterpillarPublic,
    index: u32,
    curve: &CurveParams,
) -> Result<CocoonPublic, BkeError> {
    let f1 = expand_f(&share.ck, index, curve);
    let f2 = expand_f(&share.ek, index, curve);
    let (sign_point, enc_point) =
        cocoon_points(&share.sign_public, &share.enc_public, &f1, &f2, curve)?;
    Ok(CocoonPublic {
        index,
        sign_point,
        enc_point,
    })
}

/// Pseudonym-CA step: fresh (c, C), butterfly public B_i + C, c sealed to
/// Q_i, response signed by the CA key.
pub fn butterfly_public<R: RngCore + ?Sized>(
    cocoon: &CocoonPublic,
    pca_keys: &KeyPair,
    curve: &CurveParams,
    rng: &mut R,
) -> Result<ButterflyResponse, BkeError> {
    let fresh = curve.keygen(rng)?;
    let butterfly = curve.point_add(&cocoon.sign_point, &fresh.public)?;
    let wrapped_c = ecies_encrypt(
        &pca_keys.secret,
        &cocoon.enc_point,
        &curve.scalar_to_bytes(&fresh.secret),
        curve,
    )?;
    let mut response = ButterflyResponse {
        index: cocoon.index,
        butterfly_public: butterfly,
        wrapped_c,
        pca_signature: Signature {
            r: Scalar::zero(),
            s: Scalar::zero(),
        },
    };
    let payload = response.signed_payload(curve);
    response.pca_signature = ecdsa_sign(&pca_keys.secret, &payload, curve, rng)?;
    Ok(response)
}

fn cocoon_scalars(
    material: &CaterpillarMaterial,
    f1: &Scalar,
    f2: &Scalar,
    curve: &CurveParams,
) -> (Scalar, Scalar) {
    (
        curve.scalar_add(&material.sign_pair.secret, f1),
        curve.scalar_add(&material.enc_pair.secret, f2),
    )
}

/// Device-side cocoon scalars: b_i = a + f1(ck,i), q_i = p + f2(ek,i), mod n.
pub fn cocoon_private(
    material: &CaterpillarMaterial,
    index: u32,
    curve: &CurveParams,
) -> CocoonPrivate {
    let f1 = expand_f(&material.ck, index, curve);
    let f2 = expand_f(&material.ek, index, curve);
    let (sign_scalar, enc_scalar) = cocoon_scalars(material, &f1, &f2, curve);
    CocoonPrivate {
        index,
        sign_scalar,
        enc_scalar,
    }
}

/// Device-side butterfly private reconstruction: verify the CA signature,
/// unseal c with q_i, return (b_i + c) mod n only after checking it against
/// the delivered butterfly public.
pub fn butterfly_private(
    cocoon: &CocoonPrivate,
    response: &ButterflyResponse,
    pca_public: &Point,
    curve: &CurveParams,
) -> Result<Scalar, BkeError> {
    if cocoon.index != response.index {
        return Err(BkeError::KeyMismatch);
    }
    let payload = response.signed_payload(curve);
    if !ecdsa_verify(pca_public, &payload, &response.pca_signature, curve) {
        return Err(BkeError::BadPcaSignature);
    }
    let plain = ecies_decrypt(&cocoon.enc_scalar, pca_public, &response.wrapped_c, curve)?;
    let c = curve
        .scalar_from_bytes(&plain)
        .map_err(|_| BkeError::KeyMismatch)?;
    if c.is_zero() {
        return Err(BkeError::KeyMismatch);
    }
    let key = curve.scalar_add(&cocoon.sign_scalar, &c);
    let check = curve.scalar_mul(&key, &curve.generator())?;
    if check != response.butterfly_public {
        return Err(BkeError::KeyMismatch);
    }
    Ok(key)
}

/// Cocoon + butterfly expansion over a contiguous index range, in order.
pub fn expand_batch<R: RngCore + ?Sized>(
    share: &CaterpillarPublic,
    start: u32,
    count: u32,
    pca_keys: &KeyPair,
    curve: &CurveParams,
    rng: &mut R,
) -> Result<Vec<(CocoonPublic, ButterflyResponse)>, BkeError> {
    let mut out = Vec::with_capacity(count as usize);
    for index in start..start + count {
        let item = cocoon_public(share, index, curve)
            .and_then(|cocoon| {
                let response = butterfly_public(&cocoon, pca_keys, curve, rng)?;
                Ok((cocoon, response))
            })
            .map_err(|source| BkeError::AtIndex {
                index,
                source: Box::new(source),
            })?;
        out.push(item);
    }
    Ok(out)
}

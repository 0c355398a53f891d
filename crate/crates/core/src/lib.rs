//! Pseudonymous-certificate PKI built on butterfly key expansion.
//!
//! Layered bottom-up: [`curve`] provides prime-field short-Weierstrass
//! arithmetic and the strength registry, [`primitives`] the ECDSA / ECDH /
//! ECIES layer plus the AES-based expansion function family, [`bke`] the
//! butterfly key expansion pipeline, [`certs`] the certificate model and
//! chain verification, and [`entities`] the six-role protocol simulation
//! with transcript recording.

pub mod bke;
pub mod certs;
pub mod curve;
pub mod entities;
pub mod primitives;
pub mod wire;

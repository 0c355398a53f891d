//! Prime-field short-Weierstrass curves: group law, scalar arithmetic mod the
//! group order, key generation, fixed-width encodings, and the registry
//! mapping NIST security strengths to curves.
//!
//! Public boundaries exchange affine points; scalar multiplication runs on
//! Jacobian coordinates internally with a 4-bit window and a precomputed
//! table for the generator.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use once_cell::sync::{Lazy, OnceCell};
use rand::RngCore;
use thiserror::Error;

use crate::wire::ByteReader;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("point does not satisfy the curve equation")]
    OffCurveInput,
    #[error("no registered curve for strength {0}")]
    UnknownStrength(u16),
    #[error("scalar has no modular inverse")]
    DivisionByZero,
    #[error("rng failed to produce a scalar in range")]
    RngFailure,
    #[error("malformed point or scalar encoding")]
    MalformedEncoding,
}

/// Affine curve point or the group identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub fn affine(x: BigUint, y: BigUint) -> Self {
        Point::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }

    /// x-coordinate of a finite point.
    pub fn x(&self) -> Option<&BigUint> {
        match self {
            Point::Infinity => None,
            Point::Affine { x, .. } => Some(x),
        }
    }

    pub fn y(&self) -> Option<&BigUint> {
        match self {
            Point::Infinity => None,
            Point::Affine { y, .. } => Some(y),
        }
    }
}

/// Integer reduced mod the group order n. Private keys are nonzero scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn zero() -> Self {
        Scalar(BigUint::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct KeyPair {
    pub secret: Scalar,
    pub public: Point,
}

/// Jacobian point (X : Y : Z); Z = 0 encodes the identity.
#[derive(Clone)]
struct Jacobian {
    x: BigUint,
    y: BigUint,
    z: BigUint,
}

impl Jacobian {
    fn infinity() -> Self {
        Jacobian {
            x: BigUint::one(),
            y: BigUint::one(),
            z: BigUint::zero(),
        }
    }

    fn is_infinity(&self) -> bool {
        self.z.is_zero()
    }
}

const WINDOW_BITS: usize = 4;
const MAX_SCALAR_SAMPLE_ATTEMPTS: usize = 100;

/// Reduction strategy mod p. Pseudo-Mersenne primes p = 2^k − c with small c
/// (P-192, P-224, P-384, P-521) reduce by folding the high limbs; the rest
/// fall back to division.
enum Reduction {
    Fold { bits: u64, c: BigUint, mask: BigUint },
    Plain,
}

impl Reduction {
    fn for_prime(p: &BigUint) -> Self {
        let bits = p.bits();
        let c = (BigUint::one() << bits) - p;
        if c.bits() * 2 <= bits {
            let mask = (BigUint::one() << bits) - BigUint::one();
            Reduction::Fold { bits, c, mask }
        } else {
            Reduction::Plain
        }
    }
}

pub struct CurveParams {
    name: &'static str,
    strength_bits: u16,
    p: BigUint,
    a: BigUint,
    b: BigUint,
    gx: BigUint,
    gy: BigUint,
    n: BigUint,
    reduction: Reduction,
    // lazily built window table of generator multiples, rows indexed by
    // 4-bit digit position, entries by digit value 1..=15
    base_table: OnceCell<Vec<Vec<(BigUint, BigUint)>>>,
}

impl std::fmt::Debug for CurveParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CurveParams({})", self.name)
    }
}

impl PartialEq for CurveParams {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.a == other.a && self.b == other.b && self.n == other.n
    }
}

impl CurveParams {
    #[allow(clippy::too_many_arguments)]
    fn build(
        name: &'static str,
        strength_bits: u16,
        p: BigUint,
        a: BigUint,
        b: BigUint,
        gx: BigUint,
        gy: BigUint,
        n: BigUint,
    ) -> Self {
        // 4a^3 + 27b^2 != 0 (mod p): the curve must be nonsingular
        let disc = (4u32 * a.modpow(&BigUint::from(3u32), &p) + 27u32 * (&b * &b)) % &p;
        assert!(!disc.is_zero(), "{name}: singular curve parameters");
        let reduction = Reduction::for_prime(&p);
        let params = CurveParams {
            name,
            strength_bits,
            p,
            a,
            b,
            gx,
            gy,
            n,
            reduction,
            base_table: OnceCell::new(),
        };
        assert!(
            params.is_on_curve(&params.generator()),
            "{name}: generator not on curve"
        );
        params
    }

    fn nist(
        name: &'static str,
        strength_bits: u16,
        p_hex: &str,
        b_hex: &str,
        gx_hex: &str,
        gy_hex: &str,
        n_hex: &str,
    ) -> Self {
        let p = uint(p_hex);
        let a = &p - 3u32;
        Self::build(
            name,
            strength_bits,
            p.clone(),
            a,
            uint(b_hex),
            uint(gx_hex),
            uint(gy_hex),
            uint(n_hex),
        )
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn strength_bits(&self) -> u16 {
        self.strength_bits
    }

    pub fn prime(&self) -> &BigUint {
        &self.p
    }

    pub fn coeff_a(&self) -> &BigUint {
        &self.a
    }

    pub fn coeff_b(&self) -> &BigUint {
        &self.b
    }

    pub fn order(&self) -> &BigUint {
        &self.n
    }

    pub fn generator(&self) -> Point {
        Point::Affine {
            x: self.gx.clone(),
            y: self.gy.clone(),
        }
    }

    pub fn field_byte_len(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }

    pub fn order_byte_len(&self) -> usize {
        self.n.bits().div_ceil(8) as usize
    }

    // ---- field arithmetic mod p ----

    fn fadd(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.p {
            s - &self.p
        } else {
            s
        }
    }

    fn fsub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.p - (b - a)
        }
    }

    fn fmul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        self.reduce(a * b)
    }

    fn fsmall(&self, a: &BigUint, k: u32) -> BigUint {
        self.reduce(a * k)
    }

    fn fsqr(&self, a: &BigUint) -> BigUint {
        self.reduce(a * a)
    }

    fn reduce(&self, mut x: BigUint) -> BigUint {
        match &self.reduction {
            Reduction::Fold { bits, c, mask } => {
                while x.bits() > *bits {
                    let hi = &x >> *bits;
                    x = hi * c + (x & mask);
                }
                if x >= self.p {
                    x -= &self.p;
                }
                x
            }
            Reduction::Plain => x % &self.p,
        }
    }

    // ---- group law ----

    pub fn is_on_curve(&self, point: &Point) -> bool {
        match point {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                if x >= &self.p || y >= &self.p {
                    return false;
                }
                let lhs = self.fsqr(y);
                let rhs = self.fadd(
                    &self.fadd(&self.fmul(&self.fsqr(x), x), &self.fmul(&self.a, x)),
                    &self.b,
                );
                lhs == rhs
            }
        }
    }

    fn ensure_on_curve(&self, point: &Point) -> Result<(), CurveError> {
        if self.is_on_curve(point) {
            Ok(())
        } else {
            Err(CurveError::OffCurveInput)
        }
    }

    /// Group law on affine points; handles identity operands, doubling, and
    /// inverse pairs.
    pub fn point_add(&self, p: &Point, q: &Point) -> Result<Point, CurveError> {
        self.ensure_on_curve(p)?;
        self.ensure_on_curve(q)?;
        Ok(self.add_unchecked(p, q))
    }

    fn add_unchecked(&self, p: &Point, q: &Point) -> Point {
        let (x1, y1) = match p {
            Point::Infinity => return q.clone(),
            Point::Affine { x, y } => (x, y),
        };
        let (x2, y2) = match q {
            Point::Infinity => return p.clone(),
            Point::Affine { x, y } => (x, y),
        };
        if x1 == x2 && self.fadd(y1, y2).is_zero() {
            return Point::Infinity;
        }
        let lambda = if x1 == x2 && y1 == y2 {
            let num = self.fadd(&self.fsmall(&self.fsqr(x1), 3), &self.a);
            let den = self.fsmall(y1, 2);
            self.fmul(&num, &self.field_inv(&den))
        } else {
            let num = self.fsub(y2, y1);
            let den = self.fsub(x2, x1);
            self.fmul(&num, &self.field_inv(&den))
        };
        let x3 = self.fsub(&self.fsub(&self.fsqr(&lambda), x1), x2);
        let y3 = self.fsub(&self.fmul(&lambda, &self.fsub(x1, &x3)), y1);
        Point::Affine { x: x3, y: y3 }
    }

    pub fn point_neg(&self, p: &Point) -> Point {
        match p {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::Affine {
                x: x.clone(),
                y: self.fsub(&BigUint::zero(), y),
            },
        }
    }

    fn field_inv(&self, a: &BigUint) -> BigUint {
        // inputs come from nonzero denominators in the group law
        a.modinv(&self.p).expect("field inverse of zero")
    }

    /// k·P via windowed double-and-add; k·G uses the fixed-base table.
    pub fn scalar_mul(&self, k: &Scalar, point: &Point) -> Result<Point, CurveError> {
        self.ensure_on_curve(point)?;
        if k.is_zero() || point.is_infinity() {
            return Ok(Point::Infinity);
        }
        if let Point::Affine { x, y } = point {
            if x == &self.gx && y == &self.gy {
                return Ok(self.mul_base(&k.0));
            }
        }
        Ok(self.mul_general(&k.0, point))
    }

    fn mul_general(&self, k: &BigUint, point: &Point) -> Point {
        let base = self.jac_from_affine(point);
        // table[d-1] = d·P for d in 1..=15
        let mut table = Vec::with_capacity(15);
        table.push(base.clone());
        for d in 1..15 {
            let prev: &Jacobian = &table[d - 1];
            table.push(self.jac_add(prev, &base));
        }
        let bytes = k.to_bytes_be();
        let mut acc = Jacobian::infinity();
        for byte in bytes {
            for nibble in [byte >> 4, byte & 0x0f] {
                for _ in 0..WINDOW_BITS {
                    acc = self.jac_double(&acc);
                }
                if nibble != 0 {
                    acc = self.jac_add(&acc, &table[nibble as usize - 1]);
                }
            }
        }
        self.jac_to_affine(&acc)
    }

    fn mul_base(&self, k: &BigUint) -> Point {
        let table = self.base_table();
        let bytes = k.to_bytes_le();
        let mut acc = Jacobian::infinity();
        for (row, entry) in table.iter().enumerate() {
            let byte = match bytes.get(row / 2) {
                Some(b) => *b,
                None => break,
            };
            let digit = if row % 2 == 0 { byte & 0x0f } else { byte >> 4 };
            if digit != 0 {
                acc = self.jac_add_affine(&acc, &entry[digit as usize - 1]);
            }
        }
        self.jac_to_affine(&acc)
    }

    fn base_table(&self) -> &Vec<Vec<(BigUint, BigUint)>> {
        self.base_table.get_or_init(|| {
            let windows = (self.n.bits() as usize).div_ceil(WINDOW_BITS);
            let mut rows = Vec::with_capacity(windows);
            // cur = 16^row · G
            let mut cur = self.jac_from_affine(&self.generator());
            for _ in 0..windows {
                let mut multiples = Vec::with_capacity(15);
                multiples.push(cur.clone());
                for d in 1..15 {
                    let prev: &Jacobian = &multiples[d - 1];
                    multiples.push(self.jac_add(prev, &cur));
                }
                let row: Vec<(BigUint, BigUint)> = multiples
                    .iter()
                    .map(|j| match self.jac_to_affine(j) {
                        Point::Affine { x, y } => (x, y),
                        Point::Infinity => unreachable!("generator multiple below n is finite"),
                    })
                    .collect();
                cur = self.jac_double(&multiples[7]); // 2·(8·cur) = 16·cur
                rows.push(row);
            }
            rows
        })
    }

    // ---- Jacobian internals ----

    fn jac_from_affine(&self, point: &Point) -> Jacobian {
        match point {
            Point::Infinity => Jacobian::infinity(),
            Point::Affine { x, y } => Jacobian {
                x: x.clone(),
                y: y.clone(),
                z: BigUint::one(),
            },
        }
    }

    fn jac_to_affine(&self, j: &Jacobian) -> Point {
        if j.is_infinity() {
            return Point::Infinity;
        }
        let zinv = j.z.modinv(&self.p).expect("nonzero z");
        let zinv2 = self.fsqr(&zinv);
        let x = self.fmul(&j.x, &zinv2);
        let y = self.fmul(&j.y, &self.fmul(&zinv2, &zinv));
        Point::Affine { x, y }
    }

    fn jac_double(&self, j: &Jacobian) -> Jacobian {
        if j.is_infinity() || j.y.is_zero() {
            return Jacobian::infinity();
        }
        let xx = self.fsqr(&j.x);
        let yy = self.fsqr(&j.y);
        let yyyy = self.fsqr(&yy);
        let zz = self.fsqr(&j.z);
        let s = self.fsmall(&self.fmul(&j.x, &yy), 4);
        let m = self.fadd(&self.fsmall(&xx, 3), &self.fmul(&self.a, &self.fsqr(&zz)));
        let x3 = self.fsub(&self.fsqr(&m), &self.fsmall(&s, 2));
        let y3 = self.fsub(&self.fmul(&m, &self.fsub(&s, &x3)), &self.fsmall(&yyyy, 8));
        let z3 = self.fsmall(&self.fmul(&j.y, &j.z), 2);
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn jac_add(&self, p: &Jacobian, q: &Jacobian) -> Jacobian {
        if p.is_infinity() {
            return q.clone();
        }
        if q.is_infinity() {
            return p.clone();
        }
        let z1z1 = self.fsqr(&p.z);
        let z2z2 = self.fsqr(&q.z);
        let u1 = self.fmul(&p.x, &z2z2);
        let u2 = self.fmul(&q.x, &z1z1);
        let s1 = self.fmul(&p.y, &self.fmul(&q.z, &z2z2));
        let s2 = self.fmul(&q.y, &self.fmul(&p.z, &z1z1));
        if u1 == u2 {
            return if s1 == s2 {
                self.jac_double(p)
            } else {
                Jacobian::infinity()
            };
        }
        let h = self.fsub(&u2, &u1);
        let r = self.fsub(&s2, &s1);
        let hh = self.fsqr(&h);
        let hhh = self.fmul(&h, &hh);
        let v = self.fmul(&u1, &hh);
        let x3 = self.fsub(&self.fsub(&self.fsqr(&r), &hhh), &self.fsmall(&v, 2));
        let y3 = self.fsub(&self.fmul(&r, &self.fsub(&v, &x3)), &self.fmul(&s1, &hhh));
        let z3 = self.fmul(&self.fmul(&p.z, &q.z), &h);
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn jac_add_affine(&self, p: &Jacobian, q: &(BigUint, BigUint)) -> Jacobian {
        if p.is_infinity() {
            return Jacobian {
                x: q.0.clone(),
                y: q.1.clone(),
                z: BigUint::one(),
            };
        }
        let z1z1 = self.fsqr(&p.z);
        let u2 = self.fmul(&q.0, &z1z1);
        let s2 = self.fmul(&q.1, &self.fmul(&p.z, &z1z1));
        if p.x == u2 {
            return if p.y == s2 {
                self.jac_double(p)
            } else {
                Jacobian::infinity()
            };
        }
        let h = self.fsub(&u2, &p.x);
        let r = self.fsub(&s2, &p.y);
        let hh = self.fsqr(&h);
        let hhh = self.fmul(&h, &hh);
        let v = self.fmul(&p.x, &hh);
        let x3 = self.fsub(&self.fsub(&self.fsqr(&r), &hhh), &self.fsmall(&v, 2));
        let y3 = self.fsub(&self.fmul(&r, &self.fsub(&v, &x3)), &self.fmul(&p.y, &hhh));
        let z3 = self.fmul(&p.z, &h);
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    // ---- scalar arithmetic mod n ----

    pub fn scalar_from_uint(&self, v: BigUint) -> Scalar {
        Scalar(v % &self.n)
    }

    pub fn scalar_from_u64(&self, v: u64) -> Scalar {
        self.scalar_from_uint(BigUint::from(v))
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        let s = &a.0 + &b.0;
        Scalar(if s >= self.n { s - &self.n } else { s })
    }

    pub fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        if a.0 >= b.0 {
            Scalar(&a.0 - &b.0)
        } else {
            Scalar(&self.n - (&b.0 - &a.0))
        }
    }

    pub fn scalar_mul_mod(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.n)
    }

    pub fn scalar_neg(&self, a: &Scalar) -> Scalar {
        if a.0.is_zero() {
            Scalar::zero()
        } else {
            Scalar(&self.n - &a.0)
        }
    }

    pub fn scalar_inv(&self, a: &Scalar) -> Result<Scalar, CurveError> {
        a.0.modinv(&self.n)
            .map(Scalar)
            .ok_or(CurveError::DivisionByZero)
    }

    /// Uniform scalar in [1, n) by rejection sampling.
    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<Scalar, CurveError> {
        let len = self.order_byte_len();
        let excess_bits = (len as u64) * 8 - self.n.bits();
        let mask = 0xffu8 >> excess_bits;
        let mut buf = vec![0u8; len];
        for _ in 0..MAX_SCALAR_SAMPLE_ATTEMPTS {
            rng.fill_bytes(&mut buf);
            buf[0] &= mask;
            let v = BigUint::from_bytes_be(&buf);
            if !v.is_zero() && v < self.n {
                return Ok(Scalar(v));
            }
        }
        Err(CurveError::RngFailure)
    }

    pub fn keygen<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<KeyPair, CurveError> {
        let secret = self.random_scalar(rng)?;
        let public = self.mul_base(&secret.0);
        Ok(KeyPair { secret, public })
    }

    // ---- encodings ----

    /// Uncompressed point: 0x04 ‖ x ‖ y with fixed-width big-endian field
    /// elements; the identity encodes as the single octet 0x00.
    pub fn point_to_bytes(&self, point: &Point) -> Vec<u8> {
        match point {
            Point::Infinity => vec![0x00],
            Point::Affine { x, y } => {
                let len = self.field_byte_len();
                let mut out = Vec::with_capacity(1 + 2 * len);
                out.push(0x04);
                out.extend_from_slice(&be_bytes_pad(x, len));
                out.extend_from_slice(&be_bytes_pad(y, len));
                out
            }
        }
    }

    pub fn point_from_bytes(&self, bytes: &[u8]) -> Result<Point, CurveError> {
        let mut r = ByteReader::new(bytes);
        let point = self.read_point(&mut r)?;
        r.finish().map_err(|_| CurveError::MalformedEncoding)?;
        Ok(point)
    }

    pub fn read_point(&self, r: &mut ByteReader<'_>) -> Result<Point, CurveError> {
        let tag = r.u8().map_err(|_| CurveError::MalformedEncoding)?;
        match tag {
            0x00 => Ok(Point::Infinity),
            0x04 => {
                let len = self.field_byte_len();
                let xb = r.take(len).map_err(|_| CurveError::MalformedEncoding)?;
                let yb = r.take(len).map_err(|_| CurveError::MalformedEncoding)?;
                let point = Point::Affine {
                    x: BigUint::from_bytes_be(xb),
                    y: BigUint::from_bytes_be(yb),
                };
                self.ensure_on_curve(&point)?;
                Ok(point)
            }
            _ => Err(CurveError::MalformedEncoding),
        }
    }

    /// Fixed-width big-endian field element, width = field byte length.
    pub fn field_element_to_bytes(&self, v: &BigUint) -> Vec<u8> {
        be_bytes_pad(v, self.field_byte_len())
    }

    /// Fixed-width big-endian scalar, width = order byte length.
    pub fn scalar_to_bytes(&self, s: &Scalar) -> Vec<u8> {
        be_bytes_pad(&s.0, self.order_byte_len())
    }

    pub fn scalar_from_bytes(&self, bytes: &[u8]) -> Result<Scalar, CurveError> {
        let mut r = ByteReader::new(bytes);
        let s = self.read_scalar(&mut r)?;
        r.finish().map_err(|_| CurveError::MalformedEncoding)?;
        Ok(s)
    }

    pub fn read_scalar(&self, r: &mut ByteReader<'_>) -> Result<Scalar, CurveError> {
        let b = r
            .take(self.order_byte_len())
            .map_err(|_| CurveError::MalformedEncoding)?;
        let v = BigUint::from_bytes_be(b);
        if v >= self.n {
            return Err(CurveError::MalformedEncoding);
        }
        Ok(Scalar(v))
    }
}

fn be_bytes_pad(v: &BigUint, len: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    assert!(raw.len() <= len, "value wider than encoding");
    let mut out = vec![0u8; len - raw.len()];
    out.extend_from_slice(&raw);
    out
}

fn uint(hex: &str) -> BigUint {
    BigUint::parse_bytes(hex.as_bytes(), 16).expect("valid hex literal")
}

// NIST SP 800-186 prime curves, strengths per SP 800-57.
const P192_P: &str = "fffffffffffffffffffffffffffffffeffffffffffffffff";
const P192_B: &str = "64210519e59c80e70fa7e9ab72243049feb8deecc146b9b1";
const P192_GX: &str = "188da80eb03090f67cbf20eb43a18800f4ff0afd82ff1012";
const P192_GY: &str = "07192b95ffc8da78631011ed6b24cdd573f977a11e794811";
const P192_N: &str = "ffffffffffffffffffffffff99def836146bc9b1b4d22831";

const P224_P: &str = "ffffffffffffffffffffffffffffffff000000000000000000000001";
const P224_B: &str = "b4050a850c04b3abf54132565044b0b7d7bfd8ba270b39432355ffb4";
const P224_GX: &str = "b70e0cbd6bb4bf7f321390b94a03c1d356c21122343280d6115c1d21";
const P224_GY: &str = "bd376388b5f723fb4c22dfe6cd4375a05a07476444d5819985007e34";
const P224_N: &str = "ffffffffffffffffffffffffffff16a2e0b8f03e13dd29455c5c2a3d";

const P256_P: &str = "ffffffff00000001000000000000000000000000ffffffffffffffffffffffff";
const P256_B: &str = "5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b";
const P256_GX: &str = "6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296";
const P256_GY: &str = "4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5";
const P256_N: &str = "ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551";

const P384_P: &str = "fffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffeffffffff0000000000000000ffffffff";
const P384_B: &str = "b3312fa7e23ee7e4988e056be3f82d19181d9c6efe8141120314088f5013875ac656398d8a2ed19d2a85c8edd3ec2aef";
const P384_GX: &str = "aa87ca22be8b05378eb1c71ef320ad746e1d3b628ba79b9859f741e082542a385502f25dbf55296c3a545e3872760ab7";
const P384_GY: &str = "3617de4a96262c6f5d9e98bf9292dc29f8f41dbd289a147ce9da3113b5f0b8c00a60b1ce1d7e819d7a431d7c90ea0e5f";
const P384_N: &str = "ffffffffffffffffffffffffffffffffffffffffffffffffc7634d81f4372ddf581a0db248b0a77aecec196accc52973";

const P521_P: &str = "1ffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff";
const P521_B: &str = "51953eb9618e1c9a1f929a21a0b68540eea2da725b99b315f3b8b489918ef109e156193951ec7e937b1652c0bd3bb1bf073573df883d2c34f1ef451fd46b503f00";
const P521_GX: &str = "c6858e06b70404e9cd9e3ecb662395b4429c648139053fb521f828af606b4d3dbaa14b5e77efe75928fe1dc127a2ffa8de3348b3c1856a429bf97e7e31c2e5bd66";
const P521_GY: &str = "11839296a789a3bc0045c8a5fb42c7d1bd998f54449579b446817afbd17273e662c97ee72995ef42640c550b9013fad0761353c7086a272c24088be94769fd16650";
const P521_N: &str = "1fffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffffa51868783bf2f966b7fcc0148f709a5d03bb5c9b8899c47aebb6fb71e91386409";

static P192: Lazy<CurveParams> =
    Lazy::new(|| CurveParams::nist("P-192", 80, P192_P, P192_B, P192_GX, P192_GY, P192_N));
static P224: Lazy<CurveParams> =
    Lazy::new(|| CurveParams::nist("P-224", 112, P224_P, P224_B, P224_GX, P224_GY, P224_N));
static P256: Lazy<CurveParams> =
    Lazy::new(|| CurveParams::nist("P-256", 128, P256_P, P256_B, P256_GX, P256_GY, P256_N));
static P384: Lazy<CurveParams> =
    Lazy::new(|| CurveParams::nist("P-384", 192, P384_P, P384_B, P384_GX, P384_GY, P384_N));
static P521: Lazy<CurveParams> =
    Lazy::new(|| CurveParams::nist("P-521", 256, P521_P, P521_B, P521_GX, P521_GY, P521_N));

/// Tiny 19-element group over F_17, reserved for oracle tests. Not part of
/// the strength registry.
static TOY: Lazy<CurveParams> = Lazy::new(|| {
    CurveParams::build(
        "toy-p17",
        0,
        BigUint::from(17u32),
        BigUint::from(2u32),
        BigUint::from(2u32),
        BigUint::from(5u32),
        BigUint::from(1u32),
        BigUint::from(19u32),
    )
});

pub fn curve_for_strength(strength_bits: u16) -> Result<&'static CurveParams, CurveError> {
    match strength_bits {
        80 => Ok(&P192),
        112 => Ok(&P224),
        128 => Ok(&P256),
        192 => Ok(&P384),
        256 => Ok(&P521),
        other => Err(CurveError::UnknownStrength(other)),
    }
}

/// All five registered strengths, weakest first.
pub fn registered_curves() -> [&'static CurveParams; 5] {
    [&P192, &P224, &P256, &P384, &P521]
}

pub fn toy_curve() -> &'static CurveParams {
    &TOY
}

#[cfg(test)]
mod tests {
    use super::*;

    /// RngCore stub replaying a fixed byte pattern.
    struct FixedRng(Vec<u8>, usize);

    impl RngCore for FixedRng {
        fn next_u32(&mut self) -> u32 {
            let mut b = [0u8; 4];
            self.fill_bytes(&mut b);
            u32::from_le_bytes(b)
        }
        fn next_u64(&mut self) -> u64 {
            let mut b = [0u8; 8];
            self.fill_bytes(&mut b);
            u64::from_le_bytes(b)
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            for d in dest.iter_mut() {
                *d = self.0[self.1 % self.0.len()];
                self.1 += 1;
            }
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    #[test]
    fn keygen_with_unit_scalar_yields_generator() {
        let curve = curve_for_strength(128).unwrap();
        // all-zero bytes except a trailing 1 decode as the scalar 1
        let mut pattern = vec![0u8; curve.order_byte_len()];
        *pattern.last_mut().unwrap() = 1;
        let mut rng = FixedRng(pattern, 0);
        let pair = curve.keygen(&mut rng).unwrap();
        assert_eq!(pair.secret.value(), &BigUint::one());
        assert_eq!(pair.public, curve.generator());
    }

    #[test]
    fn stuck_rng_reports_failure() {
        let curve = curve_for_strength(256).unwrap();
        // all-ones stays >= n after masking for P-521, so sampling never lands
        let mut rng = FixedRng(vec![0xff], 0);
        assert_eq!(curve.random_scalar(&mut rng), Err(CurveError::RngFailure));
    }

    #[test]
    fn unknown_strength_rejected() {
        assert_eq!(curve_for_strength(100), Err(CurveError::UnknownStrength(100)));
    }

    #[test]
    fn base_and_general_multiplication_agree() {
        let curve = curve_for_strength(128).unwrap();
        let g = curve.generator();
        for v in [1u64, 2, 3, 0xffff, 0x0123_4567_89ab_cdef] {
            let k = curve.scalar_from_u64(v);
            let fixed = curve.scalar_mul(&k, &g).unwrap();
            let general = curve.mul_general(k.value(), &g);
            assert_eq!(fixed, general, "k={v}");
        }
    }

    #[test]
    fn point_codec_roundtrip_and_rejects() {
        let curve = curve_for_strength(80).unwrap();
        let g = curve.generator();
        let enc = curve.point_to_bytes(&g);
        assert_eq!(enc.len(), 1 + 2 * curve.field_byte_len());
        assert_eq!(curve.point_from_bytes(&enc).unwrap(), g);
        assert_eq!(curve.point_to_bytes(&Point::Infinity), vec![0x00]);
        assert_eq!(
            curve.point_from_bytes(&[0x00]).unwrap(),
            Point::Infinity
        );
        // off-curve coordinates are rejected even when well-formed
        let mut bad = enc.clone();
        let last = bad.len() - 1;
        bad[last] ^= 1;
        assert_eq!(curve.point_from_bytes(&bad), Err(CurveError::OffCurveInput));
        assert_eq!(
            curve.point_from_bytes(&enc[..enc.len() - 1]),
            Err(CurveError::MalformedEncoding)
        );
    }

    #[test]
    fn scalar_codec_is_strict() {
        let curve = toy_curve();
        let s = curve.scalar_from_u64(7);
        let enc = curve.scalar_to_bytes(&s);
        assert_eq!(enc, vec![7]);
        assert_eq!(curve.scalar_from_bytes(&enc).unwrap(), s);
        // value >= n rejected
        assert_eq!(
            curve.scalar_from_bytes(&[19]),
            Err(CurveError::MalformedEncoding)
        );
        assert_eq!(
            curve.scalar_from_bytes(&[0, 7]),
            Err(CurveError::MalformedEncoding)
        );
    }

    #[test]
    fn shared_values_cross_threads() {
        // immutable after construction, usable concurrently
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<CurveParams>();
        assert_send_sync::<Point>();
        assert_send_sync::<Scalar>();
        assert_send_sync::<KeyPair>();
        let curve = curve_for_strength(80).unwrap();
        let handles: Vec<_> = (1..4u64)
            .map(|k| {
                std::thread::spawn(move || {
                    curve
                        .scalar_mul(&curve.scalar_from_u64(k), &curve.generator())
                        .unwrap()
                })
            })
            .collect();
        let points: Vec<Point> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(points[0], curve.generator());
        assert_eq!(
            points[2],
            curve.point_add(&points[0], &points[1]).unwrap()
        );
    }

    #[test]
    fn folded_reduction_matches_division() {
        for curve in registered_curves() {
            let mut x = curve.prime() * curve.prime() - 1u32;
            for _ in 0..64 {
                assert_eq!(curve.reduce(x.clone()), &x % curve.prime(), "{}", curve.name());
                x = (&x * 3u32) >> 2;
            }
        }
    }

    #[test]
    fn scalar_arithmetic_mod_order() {
        let curve = toy_curve();
        let n_minus_1 = curve.scalar_from_u64(18);
        let one = curve.scalar_from_u64(1);
        assert!(curve.scalar_add(&n_minus_1, &one).is_zero());
        assert_eq!(curve.scalar_inv(&one).unwrap(), one);
        let two = curve.scalar_from_u64(2);
        assert_eq!(curve.scalar_inv(&two).unwrap(), curve.scalar_from_u64(10));
        assert_eq!(curve.scalar_inv(&Scalar::zero()), Err(CurveError::DivisionByZero));
        assert_eq!(curve.scalar_neg(&two), curve.scalar_from_u64(17));
        assert!(curve.scalar_neg(&Scalar::zero()).is_zero());
    }
}

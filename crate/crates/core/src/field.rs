//! Exact arithmetic over GF(2^m) via discrete-log tables.
//!
//! A [`FieldContext`] fixes the extension degree `m` and a primitive
//! polynomial, and precomputes log/antilog tables so that multiplication is
//! two table lookups. Elements are stored as integers in `[0, 2^m)` whose
//! bits are the coefficients of a polynomial in the primitive element α.

use crate::{Error, Result};

/// Standard minimal-weight primitive polynomials over GF(2), indexed by
/// degree m = 3..=16. Bit k of each mask is the coefficient of x^k.
const PRIMITIVE_POLYS: [(usize, u32); 14] = [
    (3, 0x0B),     // x^3 + x + 1
    (4, 0x13),     // x^4 + x + 1
    (5, 0x25),     // x^5 + x^2 + 1
    (6, 0x43),     // x^6 + x + 1
    (7, 0x89),     // x^7 + x^3 + 1
    (8, 0x11D),    // x^8 + x^4 + x^3 + x^2 + 1
    (9, 0x211),    // x^9 + x^4 + 1
    (10, 0x409),   // x^10 + x^3 + 1
    (11, 0x805),   // x^11 + x^2 + 1
    (12, 0x1053),  // x^12 + x^6 + x^4 + x + 1
    (13, 0x201B),  // x^13 + x^4 + x^3 + x + 1
    (14, 0x4443),  // x^14 + x^10 + x^6 + x + 1
    (15, 0x8003),  // x^15 + x + 1
    (16, 0x1100B), // x^16 + x^12 + x^3 + x + 1
];

/// An element of GF(2^m), valid only within the context that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement(u32);

impl FieldElement {
    /// The additive identity.
    pub const ZERO: FieldElement = FieldElement(0);
    /// The multiplicative identity.
    pub const ONE: FieldElement = FieldElement(1);

    /// Integer representation (polynomial coefficient bits).
    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// GF(2^m) arithmetic environment: primitive polynomial plus log/antilog
/// tables. Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct FieldContext {
    m: usize,
    primitive_poly: u32,
    /// `log[x]` = discrete log of x base α, for 1 <= x < 2^m. Entry 0 unused.
    log: Vec<u32>,
    /// `antilog[e]` = α^e for 0 <= e < 2^m - 1.
    antilog: Vec<u32>,
}

impl FieldContext {
    /// Build GF(2^m) with the shipped primitive polynomial for m in [3, 16].
    pub fn new(m: usize) -> Result<FieldContext> {
        let poly = PRIMITIVE_POLYS
            .iter()
            .find(|&&(deg, _)| deg == m)
            .map(|&(_, p)| p)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("extension degree m={m} outside supported [3, 16]"))
            })?;
        FieldContext::with_poly(m, poly)
    }

    /// Build GF(2^m) from a caller-supplied degree-m polynomial mask.
    ///
    /// Construction enumerates all powers of α and fails unless α has
    /// multiplicative order exactly 2^m - 1, which verifies that the
    /// polynomial is both irreducible and primitive.
    pub fn with_poly(m: usize, primitive_poly: u32) -> Result<FieldContext> {
        if !(3..=16).contains(&m) {
            return Err(Error::InvalidParameter(format!(
                "extension degree m={m} outside supported [3, 16]"
            )));
        }
        if primitive_poly >> m != 1 {
            return Err(Error::InvalidParameter(format!(
                "polynomial {primitive_poly:#x} does not have degree {m}"
            )));
        }
        let order = (1usize << m) - 1;
        let mut log = vec![u32::MAX; 1 << m];
        let mut antilog = vec![0u32; order];
        let mut cur: u32 = 1;
        for (e, slot) in antilog.iter_mut().enumerate() {
            if log[cur as usize] != u32::MAX {
                // Revisited an element before exhausting the group: α is not
                // primitive for this polynomial.
                return Err(Error::InvalidParameter(format!(
                    "polynomial {primitive_poly:#x} is not primitive for m={m}"
                )));
            }
            log[cur as usize] = e as u32;
            *slot = cur;
            cur <<= 1;
            if cur >> m == 1 {
                cur ^= primitive_poly;
            }
        }
        if cur != 1 {
            return Err(Error::InvalidParameter(format!(
                "polynomial {primitive_poly:#x} is not primitive for m={m}"
            )));
        }
        Ok(FieldContext {
            m,
            primitive_poly,
            log,
            antilog,
        })
    }

    /// Extension degree m.
    pub fn degree(&self) -> usize {
        self.m
    }

    /// The primitive polynomial mask used by this context.
    pub fn primitive_poly(&self) -> u32 {
        self.primitive_poly
    }

    /// Multiplicative group order, 2^m - 1.
    pub fn order(&self) -> usize {
        self.antilog.len()
    }

    /// Wrap an integer in [0, 2^m) as a field element.
    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if (value as usize) < (1usize << self.m) {
            Ok(FieldElement(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "value {value} out of range for GF(2^{})",
                self.m
            )))
        }
    }

    /// Field addition (characteristic 2): bitwise XOR.
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    /// Field multiplication via log tables; 0·x = 0.
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        let e = (self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize) % self.order();
        FieldElement(self.antilog[e])
    }

    /// Multiplicative inverse of a nonzero element.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::InvalidParameter("zero has no inverse".into()));
        }
        let e = (self.order() - self.log[a.0 as usize] as usize) % self.order();
        Ok(FieldElement(self.antilog[e]))
    }

    /// α^e, with the exponent reduced modulo 2^m - 1.
    pub fn alpha_pow(&self, e: u64) -> FieldElement {
        let e = (e % self.order() as u64) as usize;
        FieldElement(self.antilog[e])
    }

    /// Discrete log base α of a nonzero element.
    pub fn dlog(&self, a: FieldElement) -> Result<usize> {
        if a.is_zero() {
            return Err(Error::InvalidParameter("zero has no discrete log".into()));
        }
        Ok(self.log[a.0 as usize] as usize)
    }

    /// Binary image of an element: length-m coefficient vector, least
    /// significant coefficient first.
    pub fn binary_image(&self, x: FieldElement) -> Vec<u8> {
        (0..self.m).map(|i| ((x.0 >> i) & 1) as u8).collect()
    }

    /// Inverse of [`binary_image`](Self::binary_image): bits are read least
    /// significant coefficient first.
    pub fn element_from_bits(&self, bits: &[u8]) -> Result<FieldElement> {
        if bits.len() != self.m {
            return Err(Error::InvalidParameter(format!(
                "expected {} bits, got {}",
                self.m,
                bits.len()
            )));
        }
        let mut v = 0u32;
        for (i, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::InvalidParameter(format!(
                    "bit value {b} not in {{0,1}}"
                )));
            }
            v |= (b as u32) << i;
        }
        Ok(FieldElement(v))
    }
}

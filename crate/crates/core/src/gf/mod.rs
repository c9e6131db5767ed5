//! Arithmetic over GF(2^8) with the reduction polynomial x^8 + x^4 + x^3 + x^2 + 1.
//!
//! Elements are bytes whose bits are the coefficients of a degree-7 polynomial
//! over GF(2). Addition is XOR; multiplication goes through log/exp tables
//! built at compile time from the generator `0x02`.

mod mds;

pub use mds::{Decoder, MdsCodec};

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full reduction polynomial, including the x^8 term.
pub const POLY: u16 = 0x11D;

static EXP: [u8; 512] = build_exp();
static LOG: [u8; 256] = build_log();

const fn build_exp() -> [u8; 512] {
    let mut table = [0u8; 512];
    let mut val: u16 = 1;
    let mut i = 0;
    while i < 255 {
        table[i] = val as u8;
        table[i + 255] = val as u8;
        val <<= 1;
        if val & 0x100 != 0 {
            val ^= POLY;
        }
        i += 1;
    }
    table[510] = table[0];
    table[511] = table[1];
    table
}

const fn build_log() -> [u8; 256] {
    let exp = build_exp();
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 255 {
        table[exp[i] as usize] = i as u8;
        i += 1;
    }
    table
}

/// An element of GF(2^8).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn inv(self) -> Result<Gf256> {
        if self.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(Gf256(EXP[255 - LOG[self.0 as usize] as usize]))
    }

    /// `g^e` for the generator `g = 0x02`.
    pub fn exp(e: usize) -> Gf256 {
        Gf256(EXP[e % 255])
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:02X}", self.0)
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:02X}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

impl Add for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

// Characteristic 2: subtraction and addition coincide.
impl Sub for Gf256 {
    type Output = Gf256;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    fn mul(self, rhs: Gf256) -> Gf256 {
        if self.0 == 0 || rhs.0 == 0 {
            return Gf256::ZERO;
        }
        Gf256(EXP[LOG[self.0 as usize] as usize + LOG[rhs.0 as usize] as usize])
    }
}

impl MulAssign for Gf256 {
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Gf256 {
    fn sum<I: Iterator<Item = Gf256>>(iter: I) -> Gf256 {
        iter.fold(Gf256::ZERO, |acc, x| acc + x)
    }
}

pub fn gf_add(a: Gf256, b: Gf256) -> Gf256 {
    a + b
}

pub fn gf_mul(a: Gf256, b: Gf256) -> Gf256 {
    a * b
}

pub fn gf_inv(a: Gf256) -> Result<Gf256> {
    a.inv()
}

/// Wraps raw bytes as field elements.
pub fn symbols(bytes: &[u8]) -> Vec<Gf256> {
    bytes.iter().copied().map(Gf256).collect()
}

/// Unwraps field elements back to raw bytes.
pub fn bytes(symbols: &[Gf256]) -> Vec<u8> {
    symbols.iter().map(|s| s.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Carry-less multiply followed by long division by 0x11D.
    fn schoolbook_mul(a: u8, b: u8) -> u8 {
        let mut prod: u16 = 0;
        for bit in 0..8 {
            if b & (1 << bit) != 0 {
                prod ^= (a as u16) << bit;
            }
        }
        for bit in (8..16).rev() {
            if prod & (1 << bit) != 0 {
                prod ^= POLY << (bit - 8);
            }
        }
        prod as u8
    }

    #[test]
    fn add_examples() {
        assert_eq!(gf_add(Gf256(0x57), Gf256(0x83)), Gf256(0xD4));
        for a in 0..=255u8 {
            assert_eq!(gf_add(Gf256(a), Gf256(a)), Gf256::ZERO);
            assert_eq!(gf_add(Gf256(a), Gf256::ZERO), Gf256(a));
        }
    }

    #[test]
    fn mul_examples() {
        assert_eq!(schoolbook_mul(0x02, 0x80), 0x1D);
        assert_eq!(gf_mul(Gf256(0x02), Gf256(0x80)), Gf256(0x1D));
        for a in 0..=255u8 {
            assert_eq!(gf_mul(Gf256(a), Gf256::ONE), Gf256(a));
            assert_eq!(gf_mul(Gf256(a), Gf256::ZERO), Gf256::ZERO);
        }
    }

    #[test]
    fn mul_matches_schoolbook_everywhere() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(gf_mul(Gf256(a), Gf256(b)).0, schoolbook_mul(a, b), "{a:#x}*{b:#x}");
            }
        }
    }

    #[test]
    fn inverse_exhaustive() {
        assert_eq!(gf_inv(Gf256::ONE), Ok(Gf256::ONE));
        assert_eq!(gf_inv(Gf256::ZERO), Err(Error::ZeroInverse));
        for a in 1..=255u8 {
            let inv = gf_inv(Gf256(a)).unwrap();
            assert_eq!(gf_mul(Gf256(a), inv), Gf256::ONE);
        }
    }

    #[test]
    fn generator_is_primitive() {
        let mut seen = std::collections::HashSet::new();
        for e in 0..255 {
            seen.insert(Gf256::exp(e).0);
        }
        assert_eq!(seen.len(), 255);
        assert!(!seen.contains(&0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn field_axioms(a: u8, b: u8, c: u8) {
            let (a, b, c) = (Gf256(a), Gf256(b), Gf256(c));
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!(a + b, b + a);
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
        }
    }
}

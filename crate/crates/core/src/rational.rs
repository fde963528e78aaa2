//! Exact arbitrary-precision rationals in canonical form.
//!
//! Every value is kept reduced with a positive denominator (zero is `0/1`),
//! so equality and hashing are structural. The textual form is `p/q`, with
//! `/q` omitted when the denominator is one; the same form is used in CLI
//! output and JSON payloads.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid rational at byte {position}: expected {expected}")]
    Parse {
        position: usize,
        expected: &'static str,
    },
}

/// An exact rational number.
///
/// Canonical form is enforced eagerly on construction: `denominator > 0` and
/// `gcd(|numerator|, denominator) = 1`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Builds `numer/denom`, reducing to canonical form.
    pub fn new(numer: BigInt, denom: BigInt) -> Result<Self, RationalError> {
        if denom.is_zero() {
            return Err(RationalError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    /// Shorthand for small test values; panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Rational::new(BigInt::from(numer), BigInt::from(denom))
            .expect("nonzero denominator")
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Greatest integer `<= self` (floor toward minus infinity, so
    /// `floor(-7/2) = -4`).
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    /// Least integer `>= self`.
    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Fractional part `self - floor(self)`, always in `[0, 1)`.
    pub fn fract(&self) -> Rational {
        Rational(&self.0 - BigRational::from_integer(self.floor_int()))
    }

    pub fn abs(&self) -> Rational {
        Rational(self.0.abs())
    }

    /// Multiplicative inverse; errors on zero.
    pub fn recip(&self) -> Result<Rational, RationalError> {
        if self.is_zero() {
            return Err(RationalError::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    /// Exact division; errors on a zero divisor.
    pub fn div(&self, rhs: &Rational) -> Result<Rational, RationalError> {
        if rhs.is_zero() {
            return Err(RationalError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn cmp_value(&self, rhs: &Rational) -> Ordering {
        self.0.cmp(&rhs.0)
    }

    pub fn min(self, rhs: Rational) -> Rational {
        if self <= rhs { self } else { rhs }
    }

    pub fn max(self, rhs: Rational) -> Rational {
        if self >= rhs { self } else { rhs }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = RationalError;

    /// Parses `p` or `p/q` with an optional leading sign on `p`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        let slash = s.find('/');
        let (numer_text, denom_text) = match slash {
            Some(i) => (&s[..i], Some(&s[i + 1..])),
            None => (s, None),
        };
        let numer: BigInt = numer_text.parse().map_err(|_| RationalError::Parse {
            position: 0,
            expected: "integer numerator",
        })?;
        let denom: BigInt = match denom_text {
            Some(t) => {
                let pos = slash.unwrap() + 1;
                let d: BigInt = t.parse().map_err(|_| RationalError::Parse {
                    position: pos,
                    expected: "integer denominator",
                })?;
                if !d.is_positive() {
                    return Err(RationalError::Parse {
                        position: pos,
                        expected: "positive denominator",
                    });
                }
                d
            }
            None => {
                if bytes.is_empty() {
                    return Err(RationalError::Parse {
                        position: 0,
                        expected: "integer numerator",
                    });
                }
                BigInt::one()
            }
        };
        Rational::new(numer, denom)
    }
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

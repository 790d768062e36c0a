//! p-adic integers at finite precision, and Teichmüller representatives.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numtheory::{big_pow, is_prime, padic_valuation};

/// Working precision used when the caller does not ask for one.
pub const DEFAULT_PRECISION: u32 = 64;

/// An element of `Z_p` known modulo `p^precision`.
///
/// The residue is always kept in `[0, p^precision)`. Values are immutable;
/// every operation returns a new one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PadicInt {
    p: u64,
    precision: u32,
    value: BigUint,
}

/// `v_p(x - y)` at finite precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffValuation {
    Exact(u32),
    /// `x` and `y` agree modulo `p^N`; the true valuation is at least `N`.
    AtLeast(u32),
}

impl PadicInt {
    pub fn new(p: u64, precision: u32, value: impl Into<BigUint>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::domain(format!("{p} is not a prime")));
        }
        if precision == 0 {
            return Err(Error::domain("precision must be positive"));
        }
        let value = value.into() % big_pow(p, precision);
        Ok(PadicInt {
            p,
            precision,
            value,
        })
    }

    pub fn zero(p: u64, precision: u32) -> Result<Self> {
        Self::new(p, precision, BigUint::zero())
    }

    pub fn one(p: u64, precision: u32) -> Result<Self> {
        Self::new(p, precision, BigUint::one())
    }

    // `value` already reduced, `p` already checked
    fn from_parts(p: u64, precision: u32, value: BigUint) -> Self {
        PadicInt {
            p,
            precision,
            value,
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> BigUint {
        big_pow(self.p, self.precision)
    }

    pub fn is_unit(&self) -> bool {
        !(&self.value % self.p).is_zero()
    }

    /// Residue modulo `p`.
    pub fn digit0(&self) -> u64 {
        (&self.value % self.p).try_into().expect("residue mod p fits u64")
    }

    /// Reduce to a lower precision.
    pub fn truncate(&self, precision: u32) -> Result<Self> {
        if precision == 0 || precision > self.precision {
            return Err(Error::Precision {
                need: precision,
                have: self.precision,
            });
        }
        Ok(Self::from_parts(
            self.p,
            precision,
            &self.value % big_pow(self.p, precision),
        ))
    }

    fn common(&self, other: &Self) -> Result<(u32, BigUint)> {
        if self.p != other.p {
            return Err(Error::domain(format!(
                "mismatched primes {} and {}",
                self.p, other.p
            )));
        }
        let n = self.precision.min(other.precision);
        Ok((n, big_pow(self.p, n)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (n, m) = self.common(other)?;
        Ok(Self::from_parts(self.p, n, (&self.value + &other.value) % m))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let (n, m) = self.common(other)?;
        let a = &self.value % &m;
        let b = &other.value % &m;
        let v = if a >= b { a - b } else { &m - b + a };
        Ok(Self::from_parts(self.p, n, v))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (n, m) = self.common(other)?;
        Ok(Self::from_parts(self.p, n, (&self.value * &other.value) % m))
    }

    pub fn pow(&self, exp: &BigUint) -> Self {
        Self::from_parts(
            self.p,
            self.precision,
            self.value.modpow(exp, &self.modulus()),
        )
    }

    pub fn square(&self) -> Self {
        Self::from_parts(
            self.p,
            self.precision,
            (&self.value * &self.value) % self.modulus(),
        )
    }

    /// `v_p(self)`, or `None` when the value is 0 at this precision.
    pub fn valuation(&self) -> Option<u32> {
        if self.value.is_zero() {
            None
        } else {
            Some(padic_valuation(&self.value, self.p).expect("nonzero"))
        }
    }

    /// `v_p(self - other)`; both operands must share `p` and precision.
    pub fn diff_valuation(&self, other: &Self) -> Result<DiffValuation> {
        if self.p != other.p {
            return Err(Error::domain(format!(
                "mismatched primes {} and {}",
                self.p, other.p
            )));
        }
        if self.precision != other.precision {
            return Err(Error::domain(format!(
                "mismatched precisions {} and {}",
                self.precision, other.precision
            )));
        }
        Ok(match self.sub(other)?.valuation() {
            Some(v) => DiffValuation::Exact(v),
            None => DiffValuation::AtLeast(self.precision),
        })
    }
}

impl fmt::Display for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self.value, self.p, self.precision)
    }
}

impl Serialize for PadicInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("PadicInt", 3)?;
        s.serialize_field("p", &self.p)?;
        s.serialize_field("N", &self.precision)?;
        s.serialize_field("value", &self.value.to_string())?;
        s.end()
    }
}

/// The Teichmüller representative of the unit `c mod p`: the unique
/// `(p-1)`-st root of unity in `Z_p` congruent to `c`, to precision `N`.
///
/// Iterates `w <- w^p` from `w = c`. Each step fixes one more digit, and the
/// iteration stops as soon as two successive iterates coincide mod `p^N`,
/// which forces `w^(p-1) = 1` there.
pub fn teichmuller(c: u64, p: u64, precision: u32) -> Result<PadicInt> {
    if p == 2 || !is_prime(p) {
        return Err(Error::domain(format!("{p} is not an odd prime")));
    }
    if c % p == 0 {
        return Err(Error::domain(format!("{c} is not a unit modulo {p}")));
    }
    let modulus = big_pow(p, precision);
    let exp = BigUint::from(p);
    let mut w = BigUint::from(c % p);
    loop {
        let next = w.modpow(&exp, &modulus);
        if next == w {
            return PadicInt::new(p, precision, w);
        }
        w = next;
    }
}

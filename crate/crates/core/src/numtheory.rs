//! Integer number theory used throughout the crate: valuations, multiplicative
//! orders, Euler's phi, divisors, and the `v_p(2^(p-1) - 1)` computation that
//! separates Wieferich primes from the rest.
//!
//! Word-sized arithmetic goes through `u128` intermediates. Anything that can
//! outgrow a machine word (powers of `p`, `2^(p-1) - 1`) is a [`BigUint`].

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u64;
    let mut base = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    result
}

/// `p^e` as a big integer.
pub fn big_pow(p: u64, e: u32) -> BigUint {
    num_traits::pow(BigUint::from(p), e as usize)
}

/// `p^e` if it fits in a `u64`.
pub fn checked_pow(p: u64, e: u32) -> Option<u64> {
    p.checked_pow(e)
}

const SMALL_PRIMES: [u64; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];

/// Deterministic Miller-Rabin, exact for every `u64`.
///
/// The witness set {2, 3, ..., 37} has no strong pseudoprime below
/// 3.3 * 10^24, which covers the whole type.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &SMALL_PRIMES {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    if n < 53 * 53 {
        return true;
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &SMALL_PRIMES[..12] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// Brent's variant of Pollard's rho; `n` must be odd and composite.
fn pollard_brent(n: u64) -> u64 {
    let f = |x: u64, c: u64| (mul_mod(x, x, n) + c) % n;
    for c in 1u64.. {
        let mut y = 2u64;
        let mut r = 1u64;
        let mut q = 1u64;
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        const BATCH: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y, c);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..BATCH.min(r - k) {
                    y = f(y, c);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = q.gcd(&n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == n {
            // the batched product overshot; replay one step at a time
            loop {
                ys = f(ys, c);
                g = x.abs_diff(ys).gcd(&n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

fn factor_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

/// Prime factorization as `(prime, exponent)` pairs in ascending prime order.
/// `factor(1)` is empty.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n > 0, "factor(0) is undefined");
    let mut primes = Vec::new();
    let mut q = 2u64;
    while q < 1000 && q * q <= n {
        while n % q == 0 {
            primes.push(q);
            n /= q;
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        factor_into(n, &mut primes);
    }
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for q in primes {
        match out.last_mut() {
            Some((last, e)) if *last == q => *e += 1,
            _ => out.push((q, 1)),
        }
    }
    out
}

/// `v_p(x)`, the exponent of `p` in `x`.
pub fn padic_valuation(x: &BigUint, p: u64) -> Result<u32> {
    if x.is_zero() {
        return Err(Error::domain("valuation of 0 is infinite"));
    }
    if p < 2 {
        return Err(Error::domain(format!("{p} is not a prime")));
    }
    let p = BigUint::from(p);
    let mut x = x.clone();
    let mut e = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return Ok(e);
        }
        x = q;
        e += 1;
    }
}

pub fn valuation_u64(mut x: u64, p: u64) -> Result<u32> {
    if x == 0 {
        return Err(Error::domain("valuation of 0 is infinite"));
    }
    let mut e = 0;
    while x % p == 0 {
        x /= p;
        e += 1;
    }
    Ok(e)
}

pub fn euler_phi(d: u64) -> u64 {
    factor(d)
        .into_iter()
        .fold(1, |acc, (q, e)| acc * (q - 1) * q.pow(e - 1))
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (q, e) in factor(n) {
        let current = divs.len();
        let mut qk = 1;
        for _ in 0..e {
            qk *= q;
            for i in 0..current {
                divs.push(divs[i] * qk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

/// Multiplicative order of `a` modulo `modulus`.
///
/// Starts from `phi(modulus)` and strips prime factors while the power stays
/// 1, so the cost is polylogarithmic once `phi` is factored. `ord_1(a) = 1`.
pub fn mul_order(a: u64, modulus: u64) -> Result<u64> {
    if modulus == 0 {
        return Err(Error::domain("modulus must be positive"));
    }
    if modulus == 1 {
        return Ok(1);
    }
    let a = a % modulus;
    if a.gcd(&modulus) != 1 {
        return Err(Error::domain(format!(
            "{a} is not a unit modulo {modulus}"
        )));
    }
    let mut phi = 1u64;
    let mut phi_primes: Vec<u64> = Vec::new();
    for (q, e) in factor(modulus) {
        phi *= (q - 1) * q.pow(e - 1);
        if e > 1 {
            phi_primes.push(q);
        }
        phi_primes.extend(factor(q - 1).into_iter().map(|(r, _)| r));
    }
    phi_primes.sort_unstable();
    phi_primes.dedup();

    let mut order = phi;
    for q in phi_primes {
        while order % q == 0 && pow_mod(a, order / q, modulus) == 1 {
            order /= q;
        }
    }
    Ok(order)
}

/// Order of 2 in `(Z/pZ)^*`.
pub fn ord2(p: u64) -> Result<u64> {
    mul_order(2, p)
}

/// `p = 2^k * m + 1` with `m` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeDecomposition {
    pub p: u64,
    pub k: u32,
    pub m: u64,
}

pub fn require_odd_prime(p: u64) -> Result<()> {
    if p == 2 {
        Err(Error::domain("p = 2 is not an odd prime"))
    } else if !is_prime(p) {
        Err(Error::domain(format!("{p} is not a prime")))
    } else {
        Ok(())
    }
}

pub fn factor_p_minus_one(p: u64) -> Result<PrimeDecomposition> {
    require_odd_prime(p)?;
    let k = (p - 1).trailing_zeros();
    Ok(PrimeDecomposition {
        p,
        k,
        m: (p - 1) >> k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WieferichValuation {
    pub p: u64,
    /// `v_p(2^(p-1) - 1)`, at least 1.
    pub s: u32,
    pub is_wieferich: bool,
}

/// `s = v_p(2^(p-1) - 1)`, found by testing `2^(p-1) = 1 mod p^(e+1)` for
/// growing `e`. No upper bound on `s` is assumed beyond `s < p - 1`.
pub fn wieferich_valuation(p: u64) -> Result<WieferichValuation> {
    require_odd_prime(p)?;
    let exp = BigUint::from(p - 1);
    let two = BigUint::from(2u32);
    let mut s = 1u32;
    loop {
        let modulus = big_pow(p, s + 1);
        if !two.modpow(&exp, &modulus).is_one() {
            break;
        }
        s += 1;
    }
    Ok(WieferichValuation {
        p,
        s,
        is_wieferich: s >= 2,
    })
}

/// Odd primes below `limit` with `v_p(2^(p-1) - 1) >= 2`.
pub fn wieferich_scan(limit: u64) -> Vec<WieferichValuation> {
    (3..limit)
        .step_by(2)
        .filter(|&p| is_prime(p))
        .filter_map(|p| wieferich_valuation(p).ok())
        .filter(|w| w.is_wieferich)
        .collect()
}

/// Odd primes in `[3, limit)`.
pub fn odd_primes_below(limit: u64) -> impl Iterator<Item = u64> {
    (3..limit).step_by(2).filter(|&p| is_prime(p))
}

pub fn to_u64(x: &BigUint) -> Option<u64> {
    x.to_u64()
}

//! How cycles of `f_n` lift to level `n + 1`.
//!
//! For a cycle of length `l` at level `n`, put `g = f^l`. Over each vertex `x`
//! the map `g_{n+1}` acts on the `p` residues `x + p^n t` as the affine map
//! `t -> b + a t (mod p)`, where `a = g'(x) mod p` and `b = (g(x) - x) / p^n
//! mod p`. The pair `(a, b)` decides the fate of the cycle:
//!
//! | `a`           | `b`    | lifts                                            |
//! |---------------|--------|--------------------------------------------------|
//! | 1             | != 0   | one cycle of length `p l` (grows)                |
//! | 1             | 0      | `p` cycles of length `l` (splits)                |
//! | 0             | any    | one cycle of length `l`, rest are tails          |
//! | other, ord `r`| any    | one `l`-cycle and `(p-1)/r` cycles of length `lr`|
//!
//! [`lift_cycles`] enumerates lifts by simulation, independently of `(a, b)`,
//! so the two can be compared.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::level_graph::{find_cycles, rogers_structure, CycleCensus, DEFAULT_MAX_NODES};
use crate::numtheory::{big_pow, checked_pow, is_prime, mul_order, ord2, pow_mod, wieferich_valuation};

/// A cycle of `f_n` on `Z/p^nZ`, stored as its smallest residue and length.
///
/// Residues are `u64`; construction requires `p^(n+1) < 2^64` so that the
/// lift level is representable too.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CycleAtLevel {
    pub p: u64,
    pub level: u32,
    pub length: u64,
    pub rep: u64,
}

fn lift_modulus(p: u64, level: u32) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not a prime")));
    }
    if level == 0 {
        return Err(Error::domain("level must be at least 1"));
    }
    checked_pow(p, level + 1).ok_or_else(|| Error::Resource {
        what: "word-sized residues",
        needed: format!("{p}^{}", level + 1),
        bound: u64::MAX,
    })?;
    Ok(p.pow(level))
}

#[inline]
fn sq(x: u64, m: u64) -> u64 {
    ((x as u128 * x as u128) % m as u128) as u64
}

impl CycleAtLevel {
    /// The cycle of `f_level` through `x`. Fails if `x` is not periodic.
    pub fn through(p: u64, level: u32, x: u64) -> Result<Self> {
        let m = lift_modulus(p, level)?;
        let x = x % m;
        // Brent: cycle length first, then tail length
        let (mut power, mut lam) = (1u64, 1u64);
        let mut tortoise = x;
        let mut hare = sq(x, m);
        while tortoise != hare {
            if power == lam {
                tortoise = hare;
                power *= 2;
                lam = 0;
            }
            hare = sq(hare, m);
            lam += 1;
        }
        let mut y = x;
        for _ in 0..lam {
            y = sq(y, m);
        }
        if y != x {
            return Err(Error::domain(format!(
                "{x} is not periodic under squaring mod {p}^{level}"
            )));
        }
        let mut rep = x;
        let mut y = sq(x, m);
        while y != x {
            rep = rep.min(y);
            y = sq(y, m);
        }
        Ok(CycleAtLevel {
            p,
            level,
            length: lam,
            rep,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.level)
    }

    /// Vertices in orbit order, starting at `rep`.
    pub fn vertices(&self) -> Vec<u64> {
        let m = self.modulus();
        let mut out = Vec::with_capacity(self.length as usize);
        let mut x = self.rep;
        for _ in 0..self.length {
            out.push(x);
            x = sq(x, m);
        }
        out
    }

    pub fn is_unit_cycle(&self) -> bool {
        self.rep % self.p != 0
    }
}

impl fmt::Display for CycleAtLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{} mod {}^{}; length {}]",
            self.rep, self.p, self.level, self.length
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind")]
pub enum LiftClass {
    Grows,
    Splits,
    PartiallySplits { r: u64 },
    GrowsTails,
}

impl LiftClass {
    /// Cycle lengths among the lifts of an `l`-cycle of this class.
    pub fn expected_lifts(&self, p: u64, length: u64) -> CycleCensus {
        let mut c = CycleCensus::new();
        match *self {
            LiftClass::Grows => c.add(p * length, 1u32),
            LiftClass::Splits => c.add(length, p),
            LiftClass::PartiallySplits { r } => {
                c.add(length, 1u32);
                c.add(length * r, (p - 1) / r);
            }
            LiftClass::GrowsTails => c.add(length, 1u32),
        }
        c
    }
}

impl fmt::Display for LiftClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftClass::Grows => write!(f, "Grows"),
            LiftClass::Splits => write!(f, "Splits"),
            LiftClass::PartiallySplits { r } => write!(f, "PartiallySplits({r})"),
            LiftClass::GrowsTails => write!(f, "GrowsTails"),
        }
    }
}

/// The linearization coefficients of a cycle, reduced mod `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnBn {
    pub a: u64,
    /// Only meaningful when `a = 1`; `None` otherwise.
    pub b: Option<u64>,
}

/// `a = prod f'(x_j) = 2^l * prod x_j (mod p)` over the cycle, and
/// `b = (f^l(rep) - rep) / p^n (mod p)` computed mod `p^(n+1)`.
pub fn an_bn(c: &CycleAtLevel) -> AnBn {
    let p = c.p;
    let verts = c.vertices();
    let a = verts
        .iter()
        .fold(1u64, |acc, &x| (acc * ((2 * (x % p)) % p)) % p);
    let b = (a == 1).then(|| {
        let pn = c.modulus();
        let m = pn * p;
        let mut g = c.rep;
        for _ in 0..c.length {
            g = sq(g, m);
        }
        let diff = (g + m - c.rep) % m;
        debug_assert_eq!(diff % pn, 0);
        diff / pn
    });
    AnBn { a, b }
}

pub fn classify(c: &CycleAtLevel) -> LiftClass {
    let AnBn { a, b } = an_bn(c);
    match (a, b) {
        (0, _) => LiftClass::GrowsTails,
        (1, Some(0)) => LiftClass::Splits,
        (1, _) => LiftClass::Grows,
        (a, _) => LiftClass::PartiallySplits {
            r: mul_order(a, c.p).expect("a is a nonzero residue mod p"),
        },
    }
}

/// All cycles of `f_{n+1}` lying over `c`, found by iterating the `p * l`
/// residues `x_i + p^n t`. Sorted by representative.
pub fn lift_cycles(c: &CycleAtLevel) -> Result<Vec<CycleAtLevel>> {
    lift_cycles_bounded(c, DEFAULT_MAX_NODES)
}

pub fn lift_cycles_bounded(c: &CycleAtLevel, max_nodes: u64) -> Result<Vec<CycleAtLevel>> {
    let p = c.p;
    let size = c.length.checked_mul(p).filter(|&s| s <= max_nodes);
    if size.is_none() {
        return Err(Error::Resource {
            what: "lift enumeration",
            needed: format!("{} * {p} residues", c.length),
            bound: max_nodes,
        });
    }
    let pn = c.modulus();
    let m = pn * p;
    let mut residues: Vec<u64> = c
        .vertices()
        .into_iter()
        .flat_map(|x| (0..p).map(move |t| x + pn * t))
        .collect();
    residues.sort_unstable();
    let index = |y: u64| residues.binary_search(&y).expect("lifts map into X_sigma") as u64;
    let found = find_cycles(residues.len() as u64, 0..residues.len() as u64, |i| {
        index(sq(residues[i as usize], m))
    });
    let mut out: Vec<CycleAtLevel> = found
        .into_iter()
        .map(|cy| CycleAtLevel {
            p,
            level: c.level + 1,
            length: cy.length,
            rep: residues[cy.rep as usize],
        })
        .collect();
    out.sort_by_key(|cy| cy.rep);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FateBranch {
    /// `2^l = 1 mod p`: the shadow cycle splits at every level.
    Splits,
    /// `2^l != 1 mod p`: the shadow cycle partially splits at every level.
    PartiallySplits,
}

/// What happens around the shadow of a periodic orbit of length `l`, level
/// after level: at each level a batch of `born_count` cycles of length
/// `born_length` detaches from the shadow; each of them splits `s - 1` more
/// times and then grows forever.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShadowFate {
    pub p: u64,
    pub orbit_length: u64,
    pub branch: FateBranch,
    /// `v_p(2^(p-1) - 1)`.
    pub s: u32,
    /// `ord_p(2) / gcd(l, ord_p(2))`; 1 exactly in the split branch.
    pub r: u64,
    pub born_count: u64,
    pub born_length: u64,
}

pub fn shadow_fate(orbit_length: u64, p: u64) -> Result<ShadowFate> {
    let s = wieferich_valuation(p)?.s;
    if !rogers_structure(p)?
        .components
        .iter()
        .any(|c| c.cycle_length == orbit_length)
    {
        return Err(Error::domain(format!(
            "no periodic orbit of length {orbit_length} for p = {p}"
        )));
    }
    let o = ord2(p)?;
    let r = o / orbit_length.gcd(&o);
    let branch = if pow_mod(2, orbit_length, p) == 1 {
        FateBranch::Splits
    } else {
        FateBranch::PartiallySplits
    };
    debug_assert_eq!(branch == FateBranch::Splits, r == 1);
    Ok(ShadowFate {
        p,
        orbit_length,
        branch,
        s,
        r,
        born_count: (p - 1) / r,
        born_length: orbit_length * r,
    })
}

/// The cycle census of `f_n` on `Z/p^nZ`, derived symbolically from the
/// level-1 structure and the shadow fates. Never enumerates `p^n` residues.
pub fn predicted_cycle_census(p: u64, n: u32) -> Result<CycleCensus> {
    if n == 0 {
        return Err(Error::domain("level must be at least 1"));
    }
    let mut census = CycleCensus::new();
    if p == 2 {
        // every unit squares into the fixed point 1
        census.add(1u32, 2u32);
        return Ok(census);
    }
    census.add(1u32, 1u32);
    let structure = rogers_structure(p)?;
    for comp in &structure.components {
        let fate = shadow_fate(comp.cycle_length, p)?;
        let copies = BigUint::from(comp.copies);
        let born = BigUint::from(fate.born_count);
        census.add(comp.cycle_length, copies.clone());
        let s = fate.s;
        for birth in 1..n {
            let age = n - birth;
            let (count, length) = if age <= s {
                (big_pow(p, age - 1), BigUint::from(fate.born_length))
            } else {
                (
                    big_pow(p, s - 1),
                    BigUint::from(fate.born_length) * big_pow(p, age - s),
                )
            };
            census.add(length, &copies * &born * count);
        }
    }
    Ok(census)
}

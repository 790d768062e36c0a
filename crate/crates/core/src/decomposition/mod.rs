//! The minimal decomposition of `Z_p` under `x -> x^2`.
//!
//! Around each periodic orbit `(x_1, ..., x_l)` of Teichmüller points the
//! disks `D_1(x_i)` split into the orbit itself and the sphere unions
//! `S_n = U_i S_{p^-n}(x_i)`, `n >= 1`. Every `S_n` is a finite union of
//! minimal components. With `o = ord_p(2)`, `s = v_p(2^(p-1) - 1)` and
//! `j = l * o / gcd(o, l)`, there are `(p - 1) * gcd(o, l) / o * p^(s-1)`
//! components on `S_n`, each made of `j` disks of radius `p^-(n+s)`.
//!
//! Components are found constructively, by following `f` on the residues of
//! `S_n` modulo `p^(n+s)`; the closed-form counts are what [`verify`] checks
//! them against.

mod locate;
mod report;
mod verify;

use std::time::Instant;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::level_graph::{build_graph_bounded, find_cycles, unit_cycles, DEFAULT_MAX_NODES};
use crate::numtheory::{big_pow, mul_order, ord2, require_odd_prime, wieferich_valuation};
use crate::padic::{teichmuller, PadicInt};

pub use locate::{locate, locate_integer, Location};
pub use report::{decompose, decompose_with, Basin, DecomposeOptions, DecompositionReport};
pub use verify::{verify_decomposition, verify_decomposition_with, Check, VerificationReport, VerifyOptions};

/// Default number of spheres per orbit in a report.
pub const DEFAULT_DEPTH: u32 = 3;

/// Sphere unions with more residues than this are sampled, not enumerated.
pub const DEFAULT_MAX_SPHERE_RESIDUES: u64 = 1 << 20;

pub(crate) fn check_deadline(deadline: Option<Instant>, completed: impl FnOnce() -> String) -> Result<()> {
    match deadline {
        Some(t) if Instant::now() >= t => Err(Error::Deadline {
            completed: completed(),
        }),
        _ => Ok(()),
    }
}

/// Precision used when none is given: `depth + s + 4` digits.
pub fn default_precision(p: u64, depth: u32) -> Result<u32> {
    let s = if p == 2 { 1 } else { wieferich_valuation(p)?.s };
    Ok(depth + s + 4)
}

/// A periodic orbit of `f` in the units of `Z_p`, given by its Teichmüller
/// points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicOrbit {
    pub p: u64,
    /// Multiplicative order of the orbit's points; divides the odd part of
    /// `p - 1`.
    pub d: u64,
    pub length: u64,
    /// Smallest level-1 residue on the orbit; used as the orbit's name.
    pub root: u64,
    /// `centers[0]` lifts `root`, `centers[i + 1] = centers[i]^2`.
    pub centers: Vec<PadicInt>,
}

impl PeriodicOrbit {
    pub fn precision(&self) -> u32 {
        self.centers[0].precision()
    }

    /// Level-1 residues of the orbit, in orbit order.
    pub fn residues(&self) -> Vec<u64> {
        self.centers.iter().map(|c| c.digit0()).collect()
    }

    pub fn center_values(&self) -> Vec<&BigUint> {
        self.centers.iter().map(|c| c.value()).collect()
    }
}

/// Teichmüller lifts of every level-1 unit cycle, sorted by `(d, root)`.
pub fn periodic_orbits(p: u64, precision: u32) -> Result<Vec<PeriodicOrbit>> {
    periodic_orbits_bounded(p, precision, DEFAULT_MAX_NODES)
}

pub fn periodic_orbits_bounded(p: u64, precision: u32, max_nodes: u64) -> Result<Vec<PeriodicOrbit>> {
    require_odd_prime(p)?;
    let g = build_graph_bounded(p, 1, max_nodes)?;
    let mut orbits = Vec::new();
    for cycle in unit_cycles(&g) {
        let mut centers = Vec::with_capacity(cycle.length as usize);
        let mut x = cycle.rep;
        for _ in 0..cycle.length {
            centers.push(teichmuller(x, p, precision)?);
            x = g.successor(x);
        }
        orbits.push(PeriodicOrbit {
            p,
            d: mul_order(cycle.rep, p)?,
            length: cycle.length,
            root: cycle.rep,
            centers,
        });
    }
    orbits.sort_by_key(|o| (o.d, o.root));
    Ok(orbits)
}

/// Stable name of a minimal component.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ComponentId {
    pub d: u64,
    pub orbit_root: u64,
    pub sphere: u32,
    /// Smallest disk center, a residue mod `p^(sphere + s)`.
    pub min_center: BigUint,
}

impl std::fmt::Display for ComponentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "d{}/orbit{}/sphere{}/{}",
            self.d, self.orbit_root, self.sphere, self.min_center
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalComponent {
    pub id: ComponentId,
    pub orbit_length: u64,
    pub sphere_index: u32,
    /// Number of disks, `j`.
    pub disk_count: u64,
    /// Disks have radius `p^-radius_exponent`.
    pub radius_exponent: u32,
    /// Disk centers mod `p^radius_exponent`, in orbit order from the smallest.
    pub disk_centers: Vec<BigUint>,
    /// How many of the disks lie on the sphere around each orbit point.
    pub sphere_disks: Vec<u64>,
    pub p: u64,
}

impl MinimalComponent {
    /// `(l, l j)`, the first two terms of the structure sequence.
    pub fn odometer_head(&self) -> (u64, u64) {
        (self.orbit_length, self.orbit_length * self.disk_count)
    }
}

/// Structure sequence `(l, l j, l j p, l j p^2, ...)` of the odometer the
/// component is conjugate to.
pub fn odometer_sequence(comp: &MinimalComponent, terms: usize) -> Result<Vec<BigUint>> {
    if terms < 2 {
        return Err(Error::domain("an odometer sequence needs at least 2 terms"));
    }
    let (first, second) = comp.odometer_head();
    let mut out = vec![BigUint::from(first), BigUint::from(second)];
    while out.len() < terms {
        let next = out.last().expect("nonempty") * comp.p;
        out.push(next);
    }
    Ok(out)
}

/// All minimal components on one sphere union `S_n` of an orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SphereDecomposition {
    pub p: u64,
    pub d: u64,
    pub orbit_root: u64,
    pub orbit_length: u64,
    pub sphere_index: u32,
    pub s: u32,
    /// Number of components on the sphere union: counted when enumerated,
    /// from the closed form when sampled.
    pub count_total: BigUint,
    pub radius_exponent: u32,
    /// Every component when enumerated; one spot-checked component when
    /// `sampled`.
    pub components: Vec<MinimalComponent>,
    pub sampled: bool,
}

/// Closed-form values for sphere `n` of an orbit of length `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SphereFormula {
    pub count: BigUint,
    pub j: u64,
    pub radius_exponent: u32,
}

pub fn sphere_formula(p: u64, orbit_length: u64, n: u32) -> Result<SphereFormula> {
    let s = wieferich_valuation(p)?.s;
    let o = ord2(p)?;
    let g = o.gcd(&orbit_length);
    Ok(SphereFormula {
        count: BigUint::from((p - 1) * g / o) * big_pow(p, s - 1),
        j: orbit_length * o / g,
        radius_exponent: n + s,
    })
}

// Residues of S_n mod p^(n+s) are x_i + p^n t with t a unit mod p^s; a
// residue is addressed by (orbit position i, t).
struct SphereSpace<'a> {
    p: u64,
    n: u32,
    level: u32,
    pn: BigUint,
    modulus: BigUint,
    centers: Vec<BigUint>,
    digits: u64,
    orbit: &'a PeriodicOrbit,
}

impl<'a> SphereSpace<'a> {
    fn new(orbit: &'a PeriodicOrbit, n: u32, s: u32) -> Result<Self> {
        let p = orbit.p;
        let level = n + s;
        let modulus = big_pow(p, level);
        let digits = big_pow(p, s).to_u64().ok_or(Error::Resource {
            what: "sphere digits",
            needed: format!("{p}^{s}"),
            bound: u64::MAX,
        })?;
        Ok(SphereSpace {
            p,
            n,
            level,
            pn: big_pow(p, n),
            centers: orbit
                .centers
                .iter()
                .map(|c| c.value() % &modulus)
                .collect(),
            modulus,
            digits,
            orbit,
        })
    }

    fn residue(&self, i: usize, t: u64) -> BigUint {
        (&self.centers[i] + &self.pn * t) % &self.modulus
    }

    fn locate(&self, y: &BigUint, i_hint: usize) -> (usize, u64) {
        let i = i_hint % self.centers.len();
        let c = &self.centers[i];
        let diff = if y >= c {
            y - c
        } else {
            &self.modulus - c + y
        };
        debug_assert!((&diff % &self.pn).is_zero());
        let t = (diff / &self.pn).to_u64().expect("t < p^s");
        (i, t)
    }

    fn step(&self, i: usize, t: u64) -> (usize, u64) {
        let y = self.residue(i, t);
        let next = (&y * &y) % &self.modulus;
        self.locate(&next, i + 1)
    }

    fn component_from(&self, i0: usize, t0: u64) -> MinimalComponent {
        let l = self.centers.len();
        let mut disks = Vec::new();
        let mut sphere_disks = vec![0u64; l];
        let (mut i, mut t) = (i0, t0);
        loop {
            disks.push(self.residue(i, t));
            sphere_disks[i] += 1;
            (i, t) = self.step(i, t);
            if (i, t) == (i0, t0) {
                break;
            }
        }
        let start = disks
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1))
            .map(|(k, _)| k)
            .expect("nonempty cycle");
        disks.rotate_left(start);
        MinimalComponent {
            id: ComponentId {
                d: self.orbit.d,
                orbit_root: self.orbit.root,
                sphere: self.n,
                min_center: disks[0].clone(),
            },
            orbit_length: self.orbit.length,
            sphere_index: self.n,
            disk_count: disks.len() as u64,
            radius_exponent: self.level,
            disk_centers: disks,
            sphere_disks,
            p: self.p,
        }
    }
}

/// Components on the sphere union `S_n` of `orbit`.
pub fn sphere_decomposition(orbit: &PeriodicOrbit, n: u32) -> Result<SphereDecomposition> {
    sphere_decomposition_bounded(orbit, n, DEFAULT_MAX_SPHERE_RESIDUES)
}

pub fn sphere_decomposition_bounded(
    orbit: &PeriodicOrbit,
    n: u32,
    max_residues: u64,
) -> Result<SphereDecomposition> {
    if n == 0 {
        return Err(Error::domain("sphere index must be at least 1"));
    }
    let p = orbit.p;
    let s = wieferich_valuation(p)?.s;
    let level = n + s;
    if level > orbit.precision() {
        return Err(Error::Precision {
            need: level,
            have: orbit.precision(),
        });
    }
    let formula = sphere_formula(p, orbit.length, n)?;
    let space = SphereSpace::new(orbit, n, s)?;
    let l = orbit.length as usize;
    let nodes = (l as u64).checked_mul(space.digits);

    let enumerate = matches!(nodes, Some(k) if k <= max_residues);
    let (components, count_total) = if enumerate {
        let digits = space.digits;
        let found = find_cycles(
            nodes.expect("checked"),
            (0..nodes.expect("checked")).filter(|k| (k % digits) % p != 0),
            |k| {
                let (i, t) = space.step((k / digits) as usize, k % digits);
                i as u64 * digits + t
            },
        );
        let mut comps: Vec<MinimalComponent> = found
            .iter()
            .map(|c| space.component_from((c.rep / digits) as usize, c.rep % digits))
            .collect();
        comps.sort_by(|a, b| a.id.cmp(&b.id));
        let count = BigUint::from(comps.len());
        (comps, count)
    } else {
        if formula.j > max_residues {
            return Err(Error::Resource {
                what: "component spot check",
                needed: format!("{} disks", formula.j),
                bound: max_residues,
            });
        }
        (vec![space.component_from(0, 1)], formula.count.clone())
    };

    Ok(SphereDecomposition {
        p,
        d: orbit.d,
        orbit_root: orbit.root,
        orbit_length: orbit.length,
        sphere_index: n,
        s,
        count_total,
        radius_exponent: level,
        components,
        sampled: !enumerate,
    })
}

/// Number of steps for `x` to return to itself under squaring mod `modulus`,
/// or `None` if it has not returned after `cap` steps.
pub(crate) fn return_time(x: &BigUint, modulus: &BigUint, cap: u64) -> Option<u64> {
    let x = x % modulus;
    let mut y = (&x * &x) % modulus;
    let mut steps = 1;
    while y != x {
        if steps >= cap {
            return None;
        }
        y = (&y * &y) % modulus;
        steps += 1;
    }
    Some(steps)
}

/// Whether the component's disks, reduced to level `level >= n + s`, form a
/// single cycle of `f_level`. The lifted set is invariant with
/// `j * p^(level - n - s)` residues and squaring is injective on it, so it
/// is one cycle exactly when a center returns after that many steps.
pub fn is_single_cycle_at(comp: &MinimalComponent, level: u32) -> Result<bool> {
    if level < comp.radius_exponent {
        return Err(Error::domain(format!(
            "level {level} is below the disk radius exponent {}",
            comp.radius_exponent
        )));
    }
    let size = BigUint::from(comp.disk_count) * big_pow(comp.p, level - comp.radius_exponent);
    let size = size.to_u64().ok_or(Error::Resource {
        what: "cycle walk",
        needed: "more than 2^64 steps".into(),
        bound: u64::MAX,
    })?;
    let modulus = big_pow(comp.p, level);
    Ok(return_time(&comp.disk_centers[0], &modulus, size) == Some(size))
}

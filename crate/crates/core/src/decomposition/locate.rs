use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use super::{return_time, sphere_formula, ComponentId, DEFAULT_MAX_SPHERE_RESIDUES};
use crate::error::{Error, Result};
use crate::lift_engine::CycleAtLevel;
use crate::numtheory::{big_pow, mul_order, pow_mod, wieferich_valuation};
use crate::padic::{teichmuller, DiffValuation, PadicInt};

/// Where a point sits in `Z_p = P ⊔ M ⊔ B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Location {
    /// 0 to the available precision.
    FixedPointZero,
    /// `pZ_p \ {0}`, attracted to 0.
    ZeroBasin { valuation: u32 },
    /// `p = 2` only: 1 to the available precision.
    FixedPointOne,
    /// `p = 2` only: an odd point other than 1, attracted to 1.
    UnitBasin,
    /// A unit whose residue mod `p` is off the level-1 cycles. It reaches the
    /// cycle of `feeds_orbit` after `steps` squarings mod `p`.
    TreeBasin {
        residue: u64,
        feeds_orbit: u64,
        steps: u32,
    },
    /// Inside a minimal component on sphere `sphere` of an orbit.
    Component {
        id: ComponentId,
        orbit_index: u64,
        disk_count: u64,
        radius_exponent: u32,
    },
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::FixedPointZero => write!(f, "fixed point 0"),
            Location::ZeroBasin { valuation } => {
                write!(f, "basin of 0 (valuation {valuation})")
            }
            Location::FixedPointOne => write!(f, "fixed point 1"),
            Location::UnitBasin => write!(f, "basin of 1"),
            Location::TreeBasin {
                residue,
                feeds_orbit,
                steps,
            } => write!(
                f,
                "tree basin: residue {residue} reaches orbit {feeds_orbit} after {steps} steps"
            ),
            Location::Component {
                id,
                orbit_index,
                disk_count,
                radius_exponent,
            } => write!(
                f,
                "component(orbit {}, sphere {}, min center {}, d {}) near orbit point {orbit_index}: {disk_count} disks of radius p^-{radius_exponent}",
                id.orbit_root, id.sphere, id.min_center, id.d
            ),
        }
    }
}

/// Classifies `x`. A unit on a cycle disk at distance `p^-v` from its orbit
/// point needs precision at least `v + s` to pin down its component.
pub fn locate(x: &PadicInt) -> Result<Location> {
    let p = x.prime();
    let n = x.precision();
    match x.valuation() {
        None => return Ok(Location::FixedPointZero),
        Some(v) if v > 0 => return Ok(Location::ZeroBasin { valuation: v }),
        Some(_) => {}
    }
    if p == 2 {
        return Ok(if x.value().is_one() {
            Location::FixedPointOne
        } else {
            Location::UnitBasin
        });
    }

    let c = x.digit0();
    let m = (p - 1) >> (p - 1).trailing_zeros();
    if pow_mod(c, m, p) != 1 {
        let mut y = c;
        let mut steps = 0;
        while pow_mod(y, m, p) != 1 {
            y = pow_mod(y, 2, p);
            steps += 1;
        }
        let cycle = CycleAtLevel::through(p, 1, y)?;
        return Ok(Location::TreeBasin {
            residue: c,
            feeds_orbit: cycle.rep,
            steps,
        });
    }

    let cycle = CycleAtLevel::through(p, 1, c)?;
    let orbit_index = cycle
        .vertices()
        .iter()
        .position(|&y| y == c)
        .expect("c lies on its cycle") as u64;
    let center = teichmuller(c, p, n)?;
    let v = match x.diff_valuation(&center)? {
        DiffValuation::Exact(v) => v,
        DiffValuation::AtLeast(_) => {
            return Err(Error::Undecidable {
                precision: n,
                reason: format!(
                    "{} agrees with the periodic point over {c} to full precision",
                    x.value()
                ),
            })
        }
    };
    let s = wieferich_valuation(p)?.s;
    let level = v + s;
    if level > n {
        return Err(Error::Precision {
            need: level,
            have: n,
        });
    }
    let formula = sphere_formula(p, cycle.length, v)?;
    if formula.j > DEFAULT_MAX_SPHERE_RESIDUES {
        return Err(Error::Resource {
            what: "component walk",
            needed: format!("{} steps", formula.j),
            bound: DEFAULT_MAX_SPHERE_RESIDUES,
        });
    }
    let modulus = big_pow(p, level);
    let start: BigUint = x.value() % &modulus;
    let period = return_time(&start, &modulus, formula.j).ok_or_else(|| Error::Domain(format!(
        "{start} does not return within {} steps mod {p}^{level}",
        formula.j
    )))?;
    let mut min_center = start.clone();
    let mut y = start;
    for _ in 0..period {
        y = (&y * &y) % &modulus;
        if y < min_center {
            min_center = y.clone();
        }
    }
    Ok(Location::Component {
        id: ComponentId {
            d: mul_order(c, p)?,
            orbit_root: cycle.rep,
            sphere: v,
            min_center,
        },
        orbit_index,
        disk_count: period,
        radius_exponent: level,
    })
}

/// Convenience for callers holding a plain integer.
pub fn locate_integer(p: u64, value: &BigUint, precision: u32) -> Result<Location> {
    locate(&PadicInt::new(p, precision, value.clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(p: u64, n: u32, x: u64) -> Result<Location> {
        locate(&PadicInt::new(p, n, x).unwrap())
    }

    #[test]
    fn locate_examples() {
        assert_eq!(at(7, 5, 0).unwrap(), Location::FixedPointZero);
        assert_eq!(at(7, 5, 14).unwrap(), Location::ZeroBasin { valuation: 1 });

        match at(3, 4, 4).unwrap() {
            Location::Component { id, disk_count, radius_exponent, .. } => {
                assert_eq!((id.orbit_root, id.sphere), (1, 1));
                assert_eq!(id.min_center, BigUint::from(4u32));
                assert_eq!((disk_count, radius_exponent), (2, 2));
            }
            other => panic!("unexpected {other:?}"),
        }

        // 2 = 30 mod 7 but not mod 49: sphere 1 of the 2-orbit
        match at(7, 2, 2).unwrap() {
            Location::Component { id, disk_count, orbit_index, .. } => {
                assert_eq!((id.orbit_root, id.sphere, id.d), (2, 1, 3));
                assert_eq!(disk_count, 6);
                assert_eq!(orbit_index, 0);
            }
            other => panic!("unexpected {other:?}"),
        }

        // 3^2 = 2 mod 7, so 3 hangs off the 2-cycle
        assert_eq!(
            at(7, 2, 3).unwrap(),
            Location::TreeBasin { residue: 3, feeds_orbit: 2, steps: 1 }
        );
    }

    #[test]
    fn locate_errors() {
        assert!(matches!(at(7, 3, 1), Err(Error::Undecidable { .. })));
        assert!(matches!(at(7, 2, 1 + 49), Err(Error::Undecidable { .. })));
        assert_eq!(
            at(1093, 2, 1094),
            Err(Error::Precision { need: 3, have: 2 })
        );
    }

    #[test]
    fn fixed_point_sphere() {
        match at(7, 2, 8).unwrap() {
            Location::Component { id, disk_count, radius_exponent, .. } => {
                assert_eq!((id.orbit_root, id.sphere, id.d), (1, 1, 1));
                assert_eq!((disk_count, radius_exponent), (3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn p2_locations() {
        assert_eq!(at(2, 6, 0).unwrap(), Location::FixedPointZero);
        assert_eq!(at(2, 6, 1).unwrap(), Location::FixedPointOne);
        assert_eq!(at(2, 6, 3).unwrap(), Location::UnitBasin);
        assert_eq!(at(2, 6, 12).unwrap(), Location::ZeroBasin { valuation: 2 });
    }
}

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{
    check_deadline, is_single_cycle_at, periodic_orbits_bounded, sphere_decomposition_bounded, sphere_formula,
    DEFAULT_MAX_SPHERE_RESIDUES,
};
use crate::error::{Error, Result};
use crate::level_graph::{build_graph_bounded, census_at_level, unit_cycles, Bounds};
use crate::lift_engine::{an_bn, classify, lift_cycles_bounded, predicted_cycle_census, CycleAtLevel};
use crate::numtheory::{big_pow, checked_pow, is_prime, pow_mod, wieferich_valuation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub p: u64,
    pub max_level: u32,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let level = c.level.map(|n| format!(" n={n}")).unwrap_or_default();
            out.push_str(&format!(
                "{} {}{}: {}\n",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                level,
                c.detail
            ));
        }
        let failed = self.failures().count();
        out.push_str(&format!(
            "p = {}, levels 1..={}: {} checks, {} failed\n",
            self.p,
            self.max_level,
            self.checks.len(),
            failed
        ));
        out
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: &str, level: Option<u32>, passed: bool, detail: String) {
        self.0.push(Check {
            name: name.to_string(),
            level,
            passed,
            detail,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub max_nodes: u64,
    pub max_stream_nodes: u64,
    /// Checked between levels.
    pub deadline: Option<Instant>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        let bounds = Bounds::default();
        VerifyOptions {
            max_nodes: bounds.max_nodes,
            max_stream_nodes: bounds.max_stream_nodes,
            deadline: None,
        }
    }
}

/// Checks the decomposition of `Z_p` against brute force at every level up to
/// `max_level`.
pub fn verify_decomposition(p: u64, max_level: u32) -> Result<VerificationReport> {
    verify_decomposition_with(p, max_level, VerifyOptions::default())
}

pub fn verify_decomposition_with(
    p: u64,
    max_level: u32,
    opts: VerifyOptions,
) -> Result<VerificationReport> {
    let max_nodes = opts.max_nodes;
    let deadline = |stage: &str, n: u32| {
        check_deadline(opts.deadline, || format!("{stage} checks through level {n}"))
    };
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not a prime")));
    }
    if max_level == 0 {
        return Err(Error::domain("max level must be at least 1"));
    }
    let bounds = Bounds {
        max_nodes,
        max_stream_nodes: opts.max_stream_nodes,
    };
    let mut checks = Checks(Vec::new());

    for n in 1..=max_level {
        deadline("census", n - 1)?;
        let oracle = census_at_level(p, n, bounds)?;
        let predicted = predicted_cycle_census(p, n)?;
        checks.push(
            "census",
            Some(n),
            oracle == predicted,
            format!("enumerated {oracle}, predicted {predicted}"),
        );
    }
    if p == 2 {
        return Ok(finish(p, max_level, checks));
    }

    let s = wieferich_valuation(p)?.s;
    let orbits = periodic_orbits_bounded(p, max_level, max_nodes)?;

    for n in 1..=max_level {
        if checked_pow(p, n + 1).is_none() {
            break;
        }
        for orbit in &orbits {
            let x = orbit.centers[0].truncate(n)?.value().to_u64().expect("fits a word");
            let shadow = CycleAtLevel::through(p, n, x)?;
            let a = an_bn(&shadow).a;
            let want = pow_mod(2, orbit.length, p);
            checks.push(
                "shadow",
                Some(n),
                shadow.length == orbit.length && a == want,
                format!(
                    "orbit {}: shadow length {} (want {}), a = {a} (want {want})",
                    orbit.root, shadow.length, orbit.length
                ),
            );
        }
    }

    for n in 1..max_level {
        deadline("lift", n - 1)?;
        let Ok(g) = build_graph_bounded(p, n, max_nodes) else {
            break;
        };
        if checked_pow(p, n + 1).is_none() {
            break;
        }
        let mut bad = Vec::new();
        let mut total = 0usize;
        for cy in unit_cycles(&g) {
            let c = CycleAtLevel {
                p,
                level: n,
                length: cy.length,
                rep: cy.rep,
            };
            let lifted = lift_cycles_bounded(&c, max_nodes)?;
            let mut got = crate::level_graph::CycleCensus::new();
            for l in &lifted {
                got.add(l.length, 1u32);
            }
            let want = classify(&c).expected_lifts(p, c.length);
            if got != want {
                bad.push(format!("{c}: lifts {got}, expected {want}"));
            }
            total += 1;
        }
        checks.push(
            "lift classes",
            Some(n),
            bad.is_empty(),
            if bad.is_empty() {
                format!("{total} unit cycles lift as classified")
            } else {
                bad.join("; ")
            },
        );
    }

    for level in 2..=max_level {
        let Some(size) = checked_pow(p, level - 1).filter(|&k| k <= max_nodes) else {
            break;
        };
        if checked_pow(p, level + 1).is_none() {
            break;
        }
        let modulus = big_pow(p, level);
        for orbit in &orbits {
            let center = orbit.centers[0].truncate(level)?.value().to_u64().expect("fits a word");
            let m = modulus.to_u64().expect("fits a word");
            let mut counts = vec![0u64; level as usize];
            for t in 1..size {
                let y = (center + p * t) % m;
                let diff = (y + m - center) % m;
                let mut v = 0;
                let mut d = diff;
                while d % p == 0 {
                    d /= p;
                    v += 1;
                }
                counts[v as usize] += 1;
            }
            let ok = (1..level).all(|i| counts[i as usize] == (p - 1) * p.pow(level - i - 1));
            checks.push(
                "sphere residues",
                Some(level),
                ok,
                format!("orbit {}: counts by distance {:?}", orbit.root, &counts[1..]),
            );
        }
    }

    let mut measure = BigRational::new(BigInt::one(), BigInt::from(p));
    let tree = (1..p).filter(|&c| pow_mod(c, (p - 1) >> (p - 1).trailing_zeros(), p) != 1).count();
    measure += BigRational::new(BigInt::from(tree), BigInt::from(p));
    for orbit in &orbits {
        let mut depth = 0;
        for n in 1..=max_level.saturating_sub(s) {
            let residues = orbit.length.saturating_mul(p.saturating_pow(s));
            if residues > DEFAULT_MAX_SPHERE_RESIDUES.min(max_nodes) {
                break;
            }
            deadline("sphere", n - 1)?;
            let sphere = sphere_decomposition_bounded(orbit, n, DEFAULT_MAX_SPHERE_RESIDUES)?;
            let formula = sphere_formula(p, orbit.length, n)?;
            let comps = &sphere.components;
            let sizes_ok = comps.iter().all(|c| c.disk_count == formula.j);
            checks.push(
                "sphere components",
                Some(n),
                sphere.count_total == formula.count && sizes_ok,
                format!(
                    "orbit {}: {} components (want {}), j = {:?} (want {})",
                    orbit.root,
                    sphere.count_total,
                    formula.count,
                    comps.iter().map(|c| c.disk_count).collect::<Vec<_>>(),
                    formula.j
                ),
            );

            let mut all: Vec<&BigUint> = comps.iter().flat_map(|c| c.disk_centers.iter()).collect();
            let covered = all.len() as u64;
            all.sort();
            all.dedup();
            let distinct = all.len() as u64;
            let want = orbit.length * (p - 1) * p.pow(s - 1);
            let pn = big_pow(p, n);
            let on_sphere = all.iter().all(|y| {
                orbit.centers.iter().any(|c| {
                    let c = c.value() % big_pow(p, n + s);
                    let diff = if **y >= c { *y - &c } else { &c - *y };
                    (&diff % &pn).is_zero() && !(&diff % (&pn * p)).is_zero()
                })
            });
            checks.push(
                "partition",
                Some(n),
                covered == want && distinct == want && on_sphere,
                format!(
                    "orbit {}: {covered} disks, {distinct} distinct, {want} residues on the sphere",
                    orbit.root
                ),
            );

            for level in sphere.radius_exponent..=max_level {
                let steps = formula.j.saturating_mul(p.saturating_pow(level - sphere.radius_exponent));
                if steps > max_nodes {
                    break;
                }
                let mut ok = true;
                for c in comps {
                    ok &= is_single_cycle_at(c, level)?;
                }
                checks.push(
                    "single cycle",
                    Some(level),
                    ok,
                    format!(
                        "orbit {}, sphere {n}: each component is one cycle of length {steps}",
                        orbit.root
                    ),
                );
            }

            let disk = BigRational::new(BigInt::one(), BigInt::from(big_pow(p, n + s)));
            let count = BigInt::from(sphere.count_total.clone());
            measure += disk * count * BigInt::from(formula.j);
            depth = n;
        }
        // spheres beyond `depth` have total measure l / p^(depth + 1)
        measure += BigRational::new(BigInt::from(orbit.length), BigInt::from(big_pow(p, depth + 1)));
    }
    checks.push(
        "measure",
        None,
        measure.is_one(),
        format!("zero disk + tree disks + spheres = {measure}"),
    );

    Ok(finish(p, max_level, checks))
}

fn finish(p: u64, max_level: u32, checks: Checks) -> VerificationReport {
    let passed = checks.0.iter().all(|c| c.passed);
    VerificationReport {
        p,
        max_level,
        checks: checks.0,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primes_verify() {
        for (p, n) in [(3, 5), (7, 4), (11, 3), (13, 3), (5, 4)] {
            let r = verify_decomposition(p, n).unwrap();
            assert!(r.passed, "{}", r.to_text());
            for name in ["census", "shadow", "lift classes", "sphere components", "partition", "single cycle", "measure"] {
                assert!(r.checks.iter().any(|c| c.name == name), "p={p} missing {name}");
            }
        }
    }

    #[test]
    fn p2_census_only() {
        let r = verify_decomposition(2, 6).unwrap();
        assert!(r.passed);
        assert_eq!(r.checks.len(), 6);
    }

    #[test]
    fn past_deadline_stops_before_first_level() {
        let opts = VerifyOptions {
            deadline: Some(Instant::now()),
            ..VerifyOptions::default()
        };
        assert!(matches!(
            verify_decomposition_with(3, 4, opts),
            Err(Error::Deadline { .. })
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(verify_decomposition(9, 3), Err(Error::Domain(_))));
        assert!(matches!(verify_decomposition(7, 0), Err(Error::Domain(_))));
    }
}

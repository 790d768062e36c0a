use num_bigint::BigUint;
use proptest::prelude::*;

use squaremap::decomposition::{
    locate, odometer_sequence, periodic_orbits, sphere_decomposition, Location,
};
use squaremap::level_graph::{build_graph, cycle_census, CycleCensus};
use squaremap::lift_engine::{classify, lift_cycles, predicted_cycle_census, CycleAtLevel};
use squaremap::numtheory::{odd_primes_below, wieferich_valuation};
use squaremap::padic::PadicInt;

fn small_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(odd_primes_below(60).collect::<Vec<_>>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn census_matches_brute_force(p in small_prime(), n in 1u32..=3) {
        prop_assume!(p.pow(n) <= 200_000);
        let oracle = cycle_census(&build_graph(p, n).unwrap());
        prop_assert_eq!(oracle, predicted_cycle_census(p, n).unwrap());
    }

    #[test]
    fn lifts_follow_their_class(p in small_prime(), n in 1u32..=2, x in any::<u64>()) {
        let g = build_graph(p, n).unwrap();
        // walk into a cycle from an arbitrary start
        let mut y = x % g.modulus();
        for _ in 0..64 {
            y = g.successor(y);
        }
        let c = CycleAtLevel::through(p, n, y).unwrap();
        let mut got = CycleCensus::new();
        for l in lift_cycles(&c).unwrap() {
            got.add(l.length, 1u32);
        }
        prop_assert_eq!(got, classify(&c).expected_lifts(p, c.length));
    }

    #[test]
    fn located_points_stay_in_their_component(
        p in prop::sample::select(vec![3u64, 5, 7, 11, 13]),
        v in 1u32..=2,
        alpha in 1u64..10_000,
        which in any::<prop::sample::Index>(),
    ) {
        prop_assume!(alpha % p != 0);
        let s = wieferich_valuation(p).unwrap().s;
        let prec = v + s + 2;
        let orbits = periodic_orbits(p, prec).unwrap();
        let orbit = which.get(&orbits);
        let x = orbit.centers[0]
            .add(&PadicInt::new(p, prec, BigUint::from(p).pow(v) * alpha).unwrap())
            .unwrap();
        let before = locate(&x).unwrap();
        let after = locate(&x.square()).unwrap();
        let (Location::Component { id: a, .. }, Location::Component { id: b, .. }) = (&before, &after) else {
            return Err(TestCaseError::fail(format!("{before:?} / {after:?}")));
        };
        prop_assert_eq!(a, b);
        prop_assert_eq!(a.sphere, v);

        let sd = sphere_decomposition(orbit, v).unwrap();
        prop_assert!(sd.components.iter().any(|c| &c.id == a));
    }
}

#[test]
fn odometer_terms_divide() {
    for p in [3u64, 5, 7, 11] {
        let orbits = periodic_orbits(p, 6).unwrap();
        for orbit in &orbits {
            let sd = sphere_decomposition(orbit, 1).unwrap();
            for comp in &sd.components {
                let seq = odometer_sequence(comp, 6).unwrap();
                for w in seq.windows(2) {
                    assert_eq!(&w[1] % &w[0], BigUint::from(0u32));
                }
                for w in seq[1..].windows(2) {
                    assert_eq!(&w[0] * p, w[1]);
                }
            }
        }
    }
}

#[test]
fn odometer_examples() {
    let cases: [(u64, u64, [u64; 4]); 3] = [
        (3, 1, [1, 2, 6, 18]),
        (7, 2, [2, 12, 84, 588]),
        (5, 1, [1, 4, 20, 100]),
    ];
    for (p, l, want) in cases {
        let orbits = periodic_orbits(p, 4).unwrap();
        let orbit = orbits.iter().find(|o| o.length == l).unwrap();
        let sd = sphere_decomposition(orbit, 1).unwrap();
        let seq = odometer_sequence(&sd.components[0], 4).unwrap();
        let want: Vec<BigUint> = want.iter().map(|&x| BigUint::from(x)).collect();
        assert_eq!(seq, want, "p={p}");
    }
}

#[test]
fn unique_shadow_per_level() {
    for (p, top) in [(7u64, 4u32), (11, 3), (13, 3)] {
        let orbits = periodic_orbits(p, top).unwrap();
        for n in 1..=top {
            let g = build_graph(p, n).unwrap();
            let cycles = squaremap::level_graph::cycles(&g);
            for orbit in &orbits {
                let root = orbit.centers[0].digit0();
                let l = orbit.length;
                let over: Vec<_> = cycles
                    .iter()
                    .filter(|c| c.length == l && c.rep % p != 0)
                    .filter(|c| {
                        let mut x = c.rep;
                        (0..l).any(|_| {
                            let hit = x % p == root;
                            x = g.successor(x);
                            hit
                        })
                    })
                    .collect();
                // no split-branch orbits for these primes, so the shadow is alone
                assert_eq!(over.len(), 1, "p={p} n={n} orbit {root}");
                assert!(teich_close(over[0].rep, orbit, n));
            }
        }
    }
}

fn teich_close(rep: u64, orbit: &squaremap::decomposition::PeriodicOrbit, n: u32) -> bool {
    orbit
        .centers
        .iter()
        .any(|c| c.truncate(n).unwrap().value() == &BigUint::from(rep))
}

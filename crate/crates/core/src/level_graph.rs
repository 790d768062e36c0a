//! The finite side of the dynamics: the functional graph of `x -> x^2` on
//! `Z/p^nZ`, its brute-force cycle census, and the level-1 structure of the
//! unit graph (a disjoint union of cycles, each vertex carrying a binary tree).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numtheory::{
    checked_pow, divisors, euler_phi, factor_p_minus_one, is_prime, mul_order, PrimeDecomposition,
};

pub const DEFAULT_MAX_NODES: u64 = 100_000_000;

/// Above `max_nodes` the census can still run without materializing the
/// successor array, using two bits of state per residue.
pub const DEFAULT_MAX_STREAM_NODES: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_nodes: u64,
    pub max_stream_nodes: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_nodes: DEFAULT_MAX_NODES,
            max_stream_nodes: DEFAULT_MAX_STREAM_NODES,
        }
    }
}

pub(crate) fn level_modulus(p: u64, n: u32, bound: u64, what: &'static str) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not a prime")));
    }
    if n == 0 {
        return Err(Error::domain("level must be at least 1"));
    }
    match checked_pow(p, n) {
        Some(m) if m <= bound => Ok(m),
        _ => Err(Error::Resource {
            what,
            needed: format!("{p}^{n} nodes"),
            bound,
        }),
    }
}

/// The successor array of `f_n(x) = x^2 mod p^n`.
#[derive(Debug, Clone)]
pub struct FunctionalGraph {
    p: u64,
    level: u32,
    modulus: u64,
    successor: Vec<u32>,
}

impl FunctionalGraph {
    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn successor(&self, x: u64) -> u64 {
        self.successor[x as usize] as u64
    }

    pub fn successors(&self) -> &[u32] {
        &self.successor
    }

    pub fn is_unit(&self, x: u64) -> bool {
        x % self.p != 0
    }
}

pub fn build_graph(p: u64, n: u32) -> Result<FunctionalGraph> {
    build_graph_bounded(p, n, DEFAULT_MAX_NODES)
}

pub fn build_graph_bounded(p: u64, n: u32, max_nodes: u64) -> Result<FunctionalGraph> {
    let bound = max_nodes.min(u32::MAX as u64 + 1);
    let modulus = level_modulus(p, n, bound, "functional graph")?;
    let successor = (0..modulus)
        .map(|x| ((x as u128 * x as u128) % modulus as u128) as u32)
        .collect();
    Ok(FunctionalGraph {
        p,
        level: n,
        modulus,
        successor,
    })
}

/// A cycle found in a functional graph, named by its smallest residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Cycle {
    pub rep: u64,
    pub length: u64,
}

// Two bits per node: 0 unseen, 1 on the current path, 2 finished.
struct NodeState {
    bits: Vec<u64>,
}

impl NodeState {
    fn new(n: u64) -> Self {
        NodeState {
            bits: vec![0; n.div_ceil(32) as usize],
        }
    }

    #[inline]
    fn get(&self, x: u64) -> u8 {
        ((self.bits[(x / 32) as usize] >> ((x % 32) * 2)) & 3) as u8
    }

    #[inline]
    fn set(&mut self, x: u64, v: u8) {
        let w = &mut self.bits[(x / 32) as usize];
        let shift = (x % 32) * 2;
        *w = (*w & !(3 << shift)) | ((v as u64) << shift);
    }
}

/// Every cycle reachable from the seeds, each reported once.
pub(crate) fn find_cycles(
    nodes: u64,
    seeds: impl Iterator<Item = u64>,
    succ: impl Fn(u64) -> u64,
) -> Vec<Cycle> {
    let mut state = NodeState::new(nodes);
    let mut path: Vec<u64> = Vec::new();
    let mut cycles = Vec::new();
    for seed in seeds {
        if state.get(seed) != 0 {
            continue;
        }
        let mut x = seed;
        while state.get(x) == 0 {
            state.set(x, 1);
            path.push(x);
            x = succ(x);
        }
        if state.get(x) == 1 {
            let mut length = 1;
            let mut rep = x;
            let mut y = succ(x);
            while y != x {
                rep = rep.min(y);
                length += 1;
                y = succ(y);
            }
            cycles.push(Cycle { rep, length });
        }
        for &y in &path {
            state.set(y, 2);
        }
        path.clear();
    }
    cycles.sort_unstable();
    cycles
}

/// All cycles of the graph, sorted by representative.
pub fn cycles(g: &FunctionalGraph) -> Vec<Cycle> {
    find_cycles(g.modulus, 0..g.modulus, |x| g.successor(x))
}

/// Cycles contained in the unit group.
pub fn unit_cycles(g: &FunctionalGraph) -> Vec<Cycle> {
    find_cycles(
        g.modulus,
        (0..g.modulus).filter(|&x| g.is_unit(x)),
        |x| g.successor(x),
    )
}

/// Multiset of cycle lengths: `length -> number of cycles of that length`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleCensus {
    entries: BTreeMap<BigUint, BigUint>,
}

impl CycleCensus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, length: impl Into<BigUint>, count: impl Into<BigUint>) {
        let count = count.into();
        if count.is_zero() {
            return;
        }
        *self.entries.entry(length.into()).or_default() += count;
    }

    pub fn from_cycles<'a>(cycles: impl IntoIterator<Item = &'a Cycle>) -> Self {
        let mut c = Self::new();
        for cy in cycles {
            c.add(cy.length, 1u32);
        }
        c
    }

    pub fn from_pairs(pairs: &[(u64, u64)]) -> Self {
        let mut c = Self::new();
        for &(l, n) in pairs {
            c.add(l, n);
        }
        c
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BigUint, &BigUint)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_of(&self, length: u64) -> BigUint {
        self.entries
            .get(&BigUint::from(length))
            .cloned()
            .unwrap_or_default()
    }

    /// Total number of periodic residues, `sum(length * count)`.
    pub fn cyclic_nodes(&self) -> BigUint {
        self.entries.iter().map(|(l, c)| l * c).sum()
    }

    pub fn total_cycles(&self) -> BigUint {
        self.entries.values().sum()
    }

    /// Entries as `(length, count)` when both fit a `u64`.
    pub fn to_pairs(&self) -> Option<Vec<(u64, u64)>> {
        self.entries
            .iter()
            .map(|(l, c)| Some((l.to_u64()?, c.to_u64()?)))
            .collect()
    }
}

impl std::fmt::Display for CycleCensus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, (l, c)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({l}, {c})")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize)]
struct CensusEntry {
    length: serde_json::Number,
    count: serde_json::Number,
}

fn json_int(x: &BigUint) -> serde_json::Number {
    x.to_string().parse().expect("decimal integer is a JSON number")
}

impl Serialize for CycleCensus {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for (l, c) in &self.entries {
            seq.serialize_element(&CensusEntry {
                length: json_int(l),
                count: json_int(c),
            })?;
        }
        seq.end()
    }
}

pub fn cycle_census(g: &FunctionalGraph) -> CycleCensus {
    CycleCensus::from_cycles(&cycles(g))
}

/// Census of `f_n` without building the successor array.
pub fn streaming_cycle_census(p: u64, n: u32, max_stream_nodes: u64) -> Result<CycleCensus> {
    let modulus = level_modulus(p, n, max_stream_nodes, "streaming census")?;
    let m = modulus as u128;
    let found = find_cycles(modulus, 0..modulus, |x| ((x as u128 * x as u128) % m) as u64);
    Ok(CycleCensus::from_cycles(&found))
}

/// Census at level `n`, materializing the graph when it fits `max_nodes` and
/// streaming otherwise.
pub fn census_at_level(p: u64, n: u32, bounds: Bounds) -> Result<CycleCensus> {
    match build_graph_bounded(p, n, bounds.max_nodes) {
        Ok(g) => Ok(cycle_census(&g)),
        Err(Error::Resource { .. }) => streaming_cycle_census(p, n, bounds.max_stream_nodes),
        Err(e) => Err(e),
    }
}

/// One family of level-1 unit cycles: the `phi(d)/ord_d(2)` cycles made of
/// elements of multiplicative order `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RogersComponent {
    pub d: u64,
    pub cycle_length: u64,
    pub copies: u64,
    pub tree_height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RogersStructure {
    pub decomposition: PrimeDecomposition,
    /// One entry per divisor `d` of `m`, ascending in `d`.
    pub components: Vec<RogersComponent>,
}

impl RogersStructure {
    pub fn unit_cycle_count(&self) -> u64 {
        self.components.iter().map(|c| c.copies).sum()
    }

    pub fn cyclic_units(&self) -> u64 {
        self.components.iter().map(|c| c.copies * c.cycle_length).sum()
    }

    /// Predicted census of the unit graph at level 1.
    pub fn unit_census(&self) -> CycleCensus {
        let mut c = CycleCensus::new();
        for comp in &self.components {
            c.add(comp.cycle_length, comp.copies);
        }
        c
    }
}

pub fn rogers_structure(p: u64) -> Result<RogersStructure> {
    let decomposition = factor_p_minus_one(p)?;
    let components = divisors(decomposition.m)
        .into_iter()
        .map(|d| {
            let cycle_length = mul_order(2, d).expect("d is odd");
            RogersComponent {
                d,
                cycle_length,
                copies: euler_phi(d) / cycle_length,
                tree_height: decomposition.k,
            }
        })
        .collect();
    Ok(RogersStructure {
        decomposition,
        components,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RogersVerification {
    pub p: u64,
    pub ok: bool,
    pub discrepancies: Vec<String>,
}

/// Checks the level-1 unit graph against [`rogers_structure`]: the cycle
/// multiset, and a perfect binary tree of height `k` hanging off every cycle
/// vertex (one tree child at the root, then 2 children per node down to
/// depth `k`, leaves exactly at depth `k`).
pub fn verify_rogers(p: u64) -> Result<RogersVerification> {
    verify_rogers_bounded(p, DEFAULT_MAX_NODES)
}

pub fn verify_rogers_bounded(p: u64, max_nodes: u64) -> Result<RogersVerification> {
    let structure = rogers_structure(p)?;
    let g = build_graph_bounded(p, 1, max_nodes)?;
    let k = structure.decomposition.k;
    let mut discrepancies = Vec::new();

    let found = unit_cycles(&g);
    let census = CycleCensus::from_cycles(&found);
    if census != structure.unit_census() {
        discrepancies.push(format!(
            "unit cycle census {census} differs from predicted {}",
            structure.unit_census()
        ));
    }

    let mut on_cycle = vec![false; p as usize];
    for c in &found {
        let mut x = c.rep;
        for _ in 0..c.length {
            on_cycle[x as usize] = true;
            x = g.successor(x);
        }
    }
    let mut preimages: Vec<Vec<u64>> = vec![Vec::new(); p as usize];
    for x in 1..p {
        preimages[g.successor(x) as usize].push(x);
    }

    let mut covered = 0u64;
    for root in (1..p).filter(|&x| on_cycle[x as usize]) {
        covered += 1;
        let children: Vec<u64> = preimages[root as usize]
            .iter()
            .copied()
            .filter(|&y| !on_cycle[y as usize])
            .collect();
        if children.len() != 1 {
            discrepancies.push(format!(
                "cycle vertex {root} has {} tree children, expected 1",
                children.len()
            ));
            continue;
        }
        let mut layer = children;
        for depth in 1..=k {
            covered += layer.len() as u64;
            let mut next = Vec::new();
            for &y in &layer {
                let kids = &preimages[y as usize];
                let expected = if depth == k { 0 } else { 2 };
                if kids.len() != expected {
                    discrepancies.push(format!(
                        "tree node {y} at depth {depth} under {root} has {} children, expected {expected}",
                        kids.len()
                    ));
                }
                next.extend_from_slice(kids);
            }
            layer = next;
        }
    }
    if covered != p - 1 {
        discrepancies.push(format!("trees and cycles cover {covered} of {} units", p - 1));
    }

    Ok(RogersVerification {
        p,
        ok: discrepancies.is_empty(),
        discrepancies,
    })
}

/// Graphviz rendering with decimal node names, nodes and edges in ascending
/// order of residue.
pub fn export_dot(g: &FunctionalGraph, restrict_to_units: bool) -> String {
    let mut out = String::new();
    let name = if restrict_to_units { "units" } else { "ring" };
    let _ = writeln!(
        out,
        "digraph \"{name}_{}_{}\" {{",
        g.prime(),
        g.level()
    );
    let keep = |x: u64| !restrict_to_units || g.is_unit(x);
    for x in (0..g.modulus()).filter(|&x| keep(x)) {
        let _ = writeln!(out, "  \"{x}\";");
    }
    for x in (0..g.modulus()).filter(|&x| keep(x)) {
        let _ = writeln!(out, "  \"{x}\" -> \"{}\";", g.successor(x));
    }
    out.push_str("}\n");
    out
}

/// Multiplicative automorphism `x -> x^t` of the level-1 unit graph, used to
/// relabel graphs in tests.
pub fn coprime_exponents(p: u64) -> impl Iterator<Item = u64> {
    (1..p).filter(move |t| t.gcd(&(p - 1)) == 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::{odd_primes_below, pow_mod};

    #[test]
    fn build_graph_examples() {
        let g = build_graph(3, 1).unwrap();
        assert_eq!(g.successors(), &[0, 1, 1]);
        let g = build_graph(3, 2).unwrap();
        assert_eq!(g.successor(2), 4);
        assert_eq!(g.successor(4), 7);
        assert_eq!(g.successor(7), 4);
        let g = build_graph(11, 1).unwrap();
        let mut x = 3;
        let mut orbit = vec![];
        for _ in 0..4 {
            orbit.push(x);
            x = g.successor(x);
        }
        assert_eq!(orbit, vec![3, 9, 4, 5]);
        assert_eq!(x, 3);
        for g in [build_graph(5, 3).unwrap(), build_graph(2, 4).unwrap()] {
            assert_eq!(g.successor(0), 0);
            assert_eq!(g.successor(1), 1);
            assert_eq!(g.successors().len() as u64, g.modulus());
        }
    }

    #[test]
    fn build_graph_rejects_oversized_levels() {
        match build_graph_bounded(3, 20, 1000) {
            Err(Error::Resource { bound, .. }) => assert_eq!(bound, 1000),
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_graph(4, 1).is_err());
        assert!(build_graph(3, 0).is_err());
    }

    #[test]
    fn census_examples() {
        let census = |p, n| cycle_census(&build_graph(p, n).unwrap());
        assert_eq!(census(17, 1), CycleCensus::from_pairs(&[(1, 2)]));
        assert_eq!(census(3, 2), CycleCensus::from_pairs(&[(1, 2), (2, 1)]));
        assert_eq!(census(11, 1), CycleCensus::from_pairs(&[(1, 2), (4, 1)]));
        let g = build_graph(3, 2).unwrap();
        assert_eq!(
            cycles(&g),
            vec![
                Cycle { rep: 0, length: 1 },
                Cycle { rep: 1, length: 1 },
                Cycle { rep: 4, length: 2 }
            ]
        );
    }

    #[test]
    fn streaming_matches_materialized() {
        for (p, n) in [(3, 6), (5, 4), (7, 3), (2, 10)] {
            let g = build_graph(p, n).unwrap();
            assert_eq!(
                streaming_cycle_census(p, n, 1 << 20).unwrap(),
                cycle_census(&g)
            );
        }
        let bounds = Bounds {
            max_nodes: 10,
            max_stream_nodes: 1000,
        };
        assert_eq!(
            census_at_level(3, 5, bounds).unwrap(),
            cycle_census(&build_graph(3, 5).unwrap())
        );
    }

    #[test]
    fn census_node_total_matches_walk() {
        // every periodic residue counted once: compare to the brute-force test
        // "x returns to itself within modulus steps"
        let g = build_graph(7, 2).unwrap();
        let periodic = (0..g.modulus())
            .filter(|&x| {
                let mut y = g.successor(x);
                for _ in 0..g.modulus() {
                    if y == x {
                        return true;
                    }
                    y = g.successor(y);
                }
                false
            })
            .count();
        assert_eq!(cycle_census(&g).cyclic_nodes(), BigUint::from(periodic));
    }

    #[test]
    fn rogers_examples() {
        let t = |p| -> Vec<(u64, u64, u32)> {
            rogers_structure(p)
                .unwrap()
                .components
                .iter()
                .map(|c| (c.cycle_length, c.copies, c.tree_height))
                .collect()
        };
        assert_eq!(t(11), vec![(1, 1, 1), (4, 1, 1)]);
        assert_eq!(t(17), vec![(1, 1, 4)]);
        assert_eq!(t(7), vec![(1, 1, 1), (2, 1, 1)]);
        assert!(rogers_structure(2).is_err());
    }

    #[test]
    fn rogers_counts() {
        for p in odd_primes_below(2000) {
            let s = rogers_structure(p).unwrap();
            let d = s.decomposition;
            assert_eq!(s.cyclic_units(), d.m);
            assert_eq!(d.m << d.k, p - 1);
        }
    }

    #[test]
    fn verify_rogers_small() {
        for p in [3, 5, 7, 11, 13, 17, 257] {
            let v = verify_rogers(p).unwrap();
            assert!(v.ok, "{p}: {:?}", v.discrepancies);
        }
    }

    #[test]
    fn unit_census_invariant_under_automorphisms() {
        for p in [7u64, 11, 13, 31, 41] {
            let g = build_graph(p, 1).unwrap();
            let base = CycleCensus::from_cycles(&unit_cycles(&g));
            for t in coprime_exponents(p) {
                // relabel x -> x^t; squaring commutes with it, so the relabeled
                // graph is again a functional graph on the units
                let relabel = |x: u64| pow_mod(x, t, p);
                let mut image = vec![0u64; p as usize];
                for x in 1..p {
                    image[relabel(x) as usize] = relabel(g.successor(x));
                }
                let found = find_cycles(p, 1..p, |x| image[x as usize]);
                assert_eq!(CycleCensus::from_cycles(&found), base, "p = {p}, t = {t}");
            }
        }
    }

    #[test]
    fn dot_examples() {
        let dot = export_dot(&build_graph(3, 1).unwrap(), true);
        assert_eq!(
            dot,
            "digraph \"units_3_1\" {\n  \"1\";\n  \"2\";\n  \"1\" -> \"1\";\n  \"2\" -> \"1\";\n}\n"
        );
        let dot = export_dot(&build_graph(11, 1).unwrap(), true);
        assert_eq!(dot.lines().filter(|l| l.ends_with("\";") && !l.contains("->")).count(), 10);
        assert!(dot.contains("\"3\" -> \"9\";"));
        let dot = export_dot(&build_graph(3, 2).unwrap(), false);
        assert_eq!(dot.lines().filter(|l| !l.contains("->") && l.ends_with("\";")).count(), 9);
        assert!(dot.contains("\"0\" -> \"0\";"));
    }

    #[test]
    fn census_json_shape() {
        let c = CycleCensus::from_pairs(&[(1, 2), (4, 1)]);
        assert_eq!(
            serde_json::to_string(&c).unwrap(),
            r#"[{"length":1,"count":2},{"length":4,"count":1}]"#
        );
    }
}

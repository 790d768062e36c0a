use std::fmt::Write as _;
use std::time::Instant;

use num_bigint::BigUint;
use serde::Serialize;

use super::{
    check_deadline, default_precision, odometer_sequence, periodic_orbits_bounded, sphere_decomposition_bounded,
    PeriodicOrbit, SphereDecomposition, DEFAULT_DEPTH, DEFAULT_MAX_SPHERE_RESIDUES,
};
use crate::error::{Error, Result};
use crate::level_graph::DEFAULT_MAX_NODES;
use crate::numtheory::{is_prime, ord2, pow_mod, wieferich_valuation};
use crate::padic::PadicInt;

/// Odometer terms printed per component.
const ODOMETER_TERMS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecomposeOptions {
    pub depth: u32,
    /// `None` selects `depth + s + 4`.
    pub precision: Option<u32>,
    pub max_nodes: u64,
    pub max_sphere_residues: u64,
    /// Checked between spheres.
    pub deadline: Option<Instant>,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            depth: DEFAULT_DEPTH,
            precision: None,
            max_nodes: DEFAULT_MAX_NODES,
            max_sphere_residues: DEFAULT_MAX_SPHERE_RESIDUES,
            deadline: None,
        }
    }
}

/// Points attracted to the periodic part without belonging to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basin {
    /// `pZ_p \ {0}` is attracted to 0.
    pub zero_disk: bool,
    /// Level-1 units off the cycles; their disks fall into the cycle disks.
    pub tree_residues: Vec<u64>,
    /// `p = 2` only: every unit other than 1 is attracted to 1.
    pub unit_disk_to_one: bool,
}

/// `Z_p = P ⊔ M ⊔ B` for one prime, up to a sphere depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionReport {
    pub p: u64,
    pub precision: u32,
    pub depth: u32,
    /// `v_p(2^(p-1) - 1)`; absent for `p = 2`.
    pub s: Option<u32>,
    pub special_p2: bool,
    /// Unit periodic orbits; the fixed point 0 is implicit.
    pub orbits: Vec<PeriodicOrbit>,
    /// One entry per orbit and sphere index `1..=depth`.
    pub spheres: Vec<SphereDecomposition>,
    pub basin: Basin,
}

pub fn decompose(p: u64, depth: u32, precision: u32) -> Result<DecompositionReport> {
    decompose_with(
        p,
        DecomposeOptions {
            depth,
            precision: Some(precision),
            ..DecomposeOptions::default()
        },
    )
}

pub fn decompose_with(p: u64, opts: DecomposeOptions) -> Result<DecompositionReport> {
    if !is_prime(p) {
        return Err(Error::domain(format!("{p} is not a prime")));
    }
    let precision = match opts.precision {
        Some(n) => n,
        None => default_precision(p, opts.depth)?,
    };
    if precision == 0 {
        return Err(Error::domain("precision must be positive"));
    }
    if p == 2 {
        return Ok(DecompositionReport {
            p,
            precision,
            depth: opts.depth,
            s: None,
            special_p2: true,
            orbits: vec![PeriodicOrbit {
                p,
                d: 1,
                length: 1,
                root: 1,
                centers: vec![PadicInt::one(2, precision)?],
            }],
            spheres: Vec::new(),
            basin: Basin {
                zero_disk: true,
                tree_residues: Vec::new(),
                unit_disk_to_one: true,
            },
        });
    }

    let s = wieferich_valuation(p)?.s;
    if opts.depth + s > precision {
        return Err(Error::Precision {
            need: opts.depth + s,
            have: precision,
        });
    }
    let orbits = periodic_orbits_bounded(p, precision, opts.max_nodes)?;
    let mut spheres = Vec::new();
    for orbit in &orbits {
        for n in 1..=opts.depth {
            check_deadline(opts.deadline, || {
                format!("{} of {} sphere unions", spheres.len(), orbits.len() as u32 * opts.depth)
            })?;
            spheres.push(sphere_decomposition_bounded(orbit, n, opts.max_sphere_residues)?);
        }
    }
    let m = (p - 1) >> (p - 1).trailing_zeros();
    // units of odd order are exactly the cycle residues
    let tree_residues = (1..p).filter(|&x| pow_mod(x, m, p) != 1).collect();

    Ok(DecompositionReport {
        p,
        precision,
        depth: opts.depth,
        s: Some(s),
        special_p2: false,
        orbits,
        spheres,
        basin: Basin {
            zero_disk: true,
            tree_residues,
            unit_disk_to_one: false,
        },
    })
}

#[derive(Serialize)]
struct ReportJson {
    p: u64,
    #[serde(rename = "N")]
    precision: u32,
    depth: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    special_p2: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<u32>,
    periodic: Vec<PeriodicJson>,
    minimal: Vec<MinimalJson>,
    basin: BasinJson,
}

#[derive(Serialize)]
struct PeriodicJson {
    /// 0 marks the fixed point 0.
    d: u64,
    length: u64,
    root: String,
    centers: Vec<String>,
}

#[derive(Serialize)]
struct MinimalJson {
    id: String,
    orbit: String,
    d: u64,
    sphere: u32,
    count_total: serde_json::Number,
    j: u64,
    radius_exp: u32,
    disks: Vec<String>,
    sphere_disks: Vec<u64>,
    odometer: Vec<serde_json::Number>,
    sampled: bool,
}

#[derive(Serialize)]
struct BasinJson {
    zero_disk: bool,
    tree_residues: Vec<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    unit_disk_to_one: bool,
}

fn number(x: &BigUint) -> serde_json::Number {
    x.to_string().parse().expect("decimal integer")
}

impl DecompositionReport {
    /// Number of unit periodic points (`m` for odd `p`).
    pub fn unit_periodic_points(&self) -> u64 {
        self.orbits.iter().map(|o| o.length).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut periodic = vec![PeriodicJson {
            d: 0,
            length: 1,
            root: "0".into(),
            centers: vec!["0".into()],
        }];
        periodic.extend(self.orbits.iter().map(|o| PeriodicJson {
            d: o.d,
            length: o.length,
            root: o.root.to_string(),
            centers: o.centers.iter().map(|c| c.value().to_string()).collect(),
        }));
        let mut minimal = Vec::new();
        for sd in &self.spheres {
            for comp in &sd.components {
                minimal.push(MinimalJson {
                    id: comp.id.to_string(),
                    orbit: sd.orbit_root.to_string(),
                    d: sd.d,
                    sphere: sd.sphere_index,
                    count_total: number(&sd.count_total),
                    j: comp.disk_count,
                    radius_exp: comp.radius_exponent,
                    disks: comp.disk_centers.iter().map(|x| x.to_string()).collect(),
                    sphere_disks: comp.sphere_disks.clone(),
                    odometer: odometer_sequence(comp, ODOMETER_TERMS)
                        .expect("enough terms")
                        .iter()
                        .map(number)
                        .collect(),
                    sampled: sd.sampled,
                });
            }
        }
        let json = ReportJson {
            p: self.p,
            precision: self.precision,
            depth: self.depth,
            special_p2: self.special_p2.then_some(true),
            s: self.s,
            periodic,
            minimal,
            basin: BasinJson {
                zero_disk: self.basin.zero_disk,
                tree_residues: self
                    .basin
                    .tree_residues
                    .iter()
                    .map(|x| x.to_string())
                    .collect(),
                unit_disk_to_one: self.basin.unit_disk_to_one,
            },
        };
        serde_json::to_value(json).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let p = self.p;
        if self.special_p2 {
            let _ = writeln!(out, "p = 2 (precision {})", self.precision);
            let _ = writeln!(out, "periodic points: P = {{0, 1}}, both fixed");
            let _ = writeln!(out, "minimal components: M = {{}}");
            let _ = writeln!(out, "basin: B = Z_2 \\ {{0, 1}}");
            let _ = writeln!(out, "  2Z_2 \\ {{0}} -> 0");
            let _ = writeln!(out, "  1 + 2Z_2 \\ {{1}} -> 1");
            return out;
        }
        let s = self.s.expect("odd p has s");
        let _ = writeln!(
            out,
            "p = {p}, precision {}, depth {}, s = {s}, ord_p(2) = {}",
            self.precision,
            self.depth,
            ord2(p).expect("odd prime")
        );
        let _ = writeln!(
            out,
            "periodic points: 0 and {} unit points in {} orbits",
            self.unit_periodic_points(),
            self.orbits.len()
        );
        for o in &self.orbits {
            let centers: Vec<String> = o.centers.iter().map(|c| c.value().to_string()).collect();
            let _ = writeln!(
                out,
                "  orbit {} (d = {}, length {}): [{}] mod {p}^{}",
                o.root,
                o.d,
                o.length,
                centers.join(", "),
                self.precision
            );
        }
        let _ = writeln!(out, "minimal components:");
        for sd in &self.spheres {
            let j = sd.components.first().map(|c| c.disk_count).unwrap_or(0);
            let _ = writeln!(
                out,
                "  orbit {}, sphere {}: {} components of {j} disks, radius {p}^-{}{}",
                sd.orbit_root,
                sd.sphere_index,
                sd.count_total,
                sd.radius_exponent,
                if sd.sampled { " (sampled)" } else { "" }
            );
            for comp in &sd.components {
                let disks: Vec<String> = comp.disk_centers.iter().map(|x| x.to_string()).collect();
                let odo: Vec<String> = odometer_sequence(comp, ODOMETER_TERMS)
                    .expect("enough terms")
                    .iter()
                    .map(|x| x.to_string())
                    .collect();
                let _ = writeln!(
                    out,
                    "    {{{}}} odometer ({}, ...)",
                    disks.join(", "),
                    odo.join(", ")
                );
            }
        }
        let _ = writeln!(out, "basin:");
        let _ = writeln!(out, "  pZ_p \\ {{0}} -> 0");
        let tree: Vec<String> = self.basin.tree_residues.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "  tree residues mod {p}: [{}]", tree.join(", "));
        out
    }
}

//! Dynamics of the square map `x -> x^2` on the ring `Z_p` of p-adic integers.
//!
//! For an odd prime `p` the ring splits into the fixed point 0 with its basin
//! `pZ_p`, finitely many periodic orbits (Teichmüller lifts of the level-1
//! unit cycles), countably many minimal components on the spheres around
//! those orbits, and the basin formed by the level-1 trees. This crate
//! computes that decomposition exactly and checks every count against a
//! brute-force simulation of `x -> x^2` on `Z/p^nZ`.
//!
//! Modules, bottom-up:
//!
//! * [`numtheory`]: valuations, multiplicative orders, primality, factoring.
//! * [`padic`]: finite-precision p-adic integers and Teichmüller lifts.
//! * [`level_graph`]: functional graphs on `Z/p^nZ` and their cycle census.
//! * [`lift_engine`]: how a cycle at level `n` lifts to level `n + 1`.
//! * [`decomposition`]: periodic orbits, minimal components, point location.

pub mod decomposition;
pub mod error;
pub mod level_graph;
pub mod lift_engine;
pub mod numtheory;
pub mod padic;

pub use error::{Error, Result};

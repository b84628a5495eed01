//! Sphere graphs, free splittings and submanifold projections for free
//! groups of small rank, computed through exact algebraic models.
//!
//! Layers, from the bottom up:
//!
//! * [`word`]: reduced words, bases, automorphisms, Nielsen moves.
//! * [`stallings`] and [`whitehead`]: folded subgroup graphs, Whitehead
//!   minimization, primitivity and free-factor tests.
//! * [`splittings`]: spheres as one-edge free splittings, exact
//!   disjointness oracles, sphere-graph balls and path repairs.
//! * [`farey`]: the exact rank-two model.
//! * [`growth`]: intersection numbers against roses, exponential growth,
//!   descent sequences and the Fibonacci twist family.
//! * [`projections`]: projections to the complement of a non-separating
//!   sphere and their property suites.
//! * [`projection_complex`]: projection-complex axioms, the pair graph, electrification,
//!   four-point hyperbolicity estimates.
//! * [`io`]: experiment specs, reports, caches and calibration storage.

pub mod error;
pub mod farey;
pub mod growth;
pub mod io;
pub mod projection_complex;
pub mod projections;
pub mod labeled;
pub mod par;
pub mod splittings;
pub mod stallings;
pub mod whitehead;
pub mod word;

pub use error::{Error, Result};

//! Spheres in the doubled handlebody as free splittings of `F_n`.
//!
//! A sphere is modelled by its one-edge free splitting: an HNN extension
//! over a corank-one free factor when it is non-separating, a free product
//! `P * Q` when it separates. Every sphere carries a chart (an automorphism
//! sequence carrying it to a standard sphere) which the disjointness oracle
//! uses to read the other sphere's vertex groups in standard coordinates.

pub mod ball;
pub mod chart;
pub mod marked;
pub mod oracle;
pub mod repair;
pub mod sphere;

pub use ball::{build_ball, build_local_ball, enumerate_orbit, Ball, BallBounds, GraphKind, LinkTemplate, Universe};
pub use chart::{whitehead_table, Chart, ChartStep};
pub use marked::{theta, MarkedEdge, MarkedGraph};
pub use oracle::{disjoint, nsg_edge, side_of, Answer, Disjointness, PairKind};
pub use repair::{
    canonicalize, conj_contained, corank_one_completion, ff1_shorten, ffm_edge, nonsep_in_side, repair_bounding_pairs,
    repair_nonseparating, tau, SplittingData,
};
pub use sphere::{NonSepSphere, SepSphere, Sphere, SphereChart, SphereKey};

/// `sphere_from_chart`: the sphere dual to a petal.
pub fn sphere_from_chart(c: &SphereChart) -> crate::Result<NonSepSphere> {
    NonSepSphere::from_chart(c)
}

//! Simulation of the two-dimensional discrete Gaussian free field on
//! annulus-like lattice domains, its concentric decompositions into
//! decorated random walks, and ballot-type estimates.

pub mod concentric;
pub mod drw;
pub mod field_io;
pub mod functionals;
pub mod gff;
pub mod harmonic;
pub mod lattice;
pub mod potential;
pub mod provenance;
pub mod scales;
pub mod seeds;
pub mod shape;
pub mod solver;
pub mod stats;

pub use lattice::{DiscreteDomain, LatticeSet, Point};
pub use shape::{ContinuumDomain, Shape};

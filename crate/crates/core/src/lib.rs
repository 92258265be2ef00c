//! Regional colocation mining with Monte Carlo significance testing.

pub mod colocation;
pub mod harness;
pub mod miners;
pub mod provenance;
pub mod rational;
pub mod significance;
pub mod spatial;
pub mod synthgen;

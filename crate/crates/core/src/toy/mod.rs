//! The restricted Hamiltonian over equal-amplitude generations and its
//! dynamics: exact derivation, integration, the two-generation reduction,
//! and the staged energy cascade experiment.

pub mod cascade;
pub mod derive;
pub mod dynamics;
pub mod poly;
pub mod reduce;

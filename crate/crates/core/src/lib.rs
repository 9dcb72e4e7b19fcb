//! Exact resonant generation sets on Z^2 and the finite-dimensional cascade
//! dynamics they induce for the completely resonant NLS on the 2-torus.
//!
//! The crate is organized in four layers:
//!
//! * combinatorics and exact geometry: [`prototype`], [`tree`], [`resvec`],
//!   [`genset`], [`verify`], [`construct`];
//! * the restricted Hamiltonian over equal-amplitude generations and its
//!   dynamics: [`toy`];
//! * the resonant truncation over a concrete set, the lift/rescale
//!   correspondence and the Galerkin comparison: [`resonant`];
//! * orchestration: [`cli`], [`manifest`], trajectory I/O in [`state`].

pub mod cli;
pub mod construct;
pub mod error;
pub mod exact;
pub mod genset;
pub mod manifest;
pub mod ode;
pub mod prototype;
pub mod resonant;
pub mod resvec;
pub mod state;
pub mod toy;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};

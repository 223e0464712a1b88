//! Numerical laboratory for periodic polyhedral sweeping processes.
//!
//! The crate integrates `ż ∈ −N_{C(t)}(z)` for moving polyhedra
//! `C(t) = {z : ⟨b_i, z⟩ ≤ c_i(t)}` with the catching-up scheme, measures how
//! trajectories approach periodic orbits, and reduces a chain of frictional
//! blocks joined by actuated springs (the crawler) to such a process.
//!
//! Everything here is pure computation on owned data: no IO, no global state.
//! File formats and the command line front end live in the `polysweep` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod crawler;
mod error;
pub mod linalg;
pub mod polyhedra;
pub mod scenarios;
pub mod signals;
pub mod sweeping;

pub use error::{Error, Result};
pub use polyhedra::{ActiveSet, FrozenPolyhedron, MovingPolyhedron, Projection, Tolerances};
pub use signals::{PeriodicSignal, SignalKind};
pub use sweeping::{Classification, SweepingProblem, TimeGrid, Trajectory};

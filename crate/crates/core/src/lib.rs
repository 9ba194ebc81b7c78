//! Fluorescence of a laser-driven Λ-atom whose `b → a` transition decays into
//! a flat vacuum while the `b → c` transition couples to the continuum just
//! above a photonic band edge.
//!
//! The atomic density matrix is built without a master equation:
//!
//! * [`resolvent`] gives the closed-form Laplace-domain amplitudes,
//! * [`inversion`] turns them into the no-jump populations and norm `P(t)`,
//! * [`renewal`] resums all jump histories into ensemble averages,
//! * [`montecarlo`] samples quantum-jump trajectories from `P(t)`,
//! * [`steadystate`] computes the trapped population `P(∞)` and scans.

pub mod config;
pub mod error;
pub mod grid;
pub mod inversion;
pub mod montecarlo;
pub mod quad;
pub mod renewal;
pub mod resolvent;
pub mod scenario;
pub mod spectral;
pub mod steadystate;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use inversion::{nojump_populations, ContourSpec, NoJumpSolution};
pub use resolvent::{ReservoirKind, SystemParams};

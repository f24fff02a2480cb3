//! Positive-P simulation of a spin-squeezed two-component 1D condensate and
//! of the squeezed light pulse obtained by Raman output coupling of its
//! collective coherence.
//!
//! The pipeline is split in two stages that share only the z-grid:
//!
//! * the squeezing stage ([`ground_state`], [`ensemble`], [`dynamics`],
//!   [`spin`]) works in trap units (`hbar = Omega = l0 = 1`);
//! * the optical stage ([`raman`], [`modes`], [`quadrature`]) works in
//!   light-cone units (retarded time in `l0/c`, fields in
//!   `sqrt(2 pi hbar omega_q / l0)`).
//!
//! [`harness`] strings the stages together and writes the run artifacts.

pub mod bessel;
pub mod checkpoint;
pub mod config;
pub mod dicke;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod grid;
pub mod ground_state;
pub mod harness;
pub mod modes;
pub mod quadrature;
pub mod raman;
pub mod spin;
pub mod stats;

pub use num_complex::Complex64 as C64;

pub use config::SimulationConfig;
pub use ensemble::PPlusTrajectory;
pub use error::{Error, Result};
pub use grid::Grid1D;

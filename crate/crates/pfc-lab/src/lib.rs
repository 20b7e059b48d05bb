//! A numerical laboratory for a tunable frustrated-chain gadget in the
//! transverse-field Ising model.
//!
//! The crate constructs perturbed ferromagnetic chains, computes their exact
//! classical thermodynamics (transfer matrices) and transverse-field spectra
//! (dense diagonalization), and contrasts classical spin-vector Monte Carlo
//! annealing against closed- and open-system quantum annealing dynamics.
//!
//! Modules:
//! * [`ising`] - problem containers, the chain builder, annealing schedules;
//! * [`thermo`] - transfer-matrix partition function, magnetization, free
//!   energy, and the brute-force Gibbs oracle;
//! * [`spectral`] - dense spectra, minimum-gap location, phase diagrams, and
//!   Gibbs reference states;
//! * [`semiclassical`] - spin-coherent potential landscapes and trace-norm
//!   distances;
//! * [`svmc`] - the four spin-vector Monte Carlo variants with campaign
//!   statistics;
//! * [`ame`] - von-Neumann and adiabatic-master-equation density-matrix
//!   evolution;
//! * [`experiment`] - reproducible experiment campaigns behind the `pfc-lab`
//!   command-line tool.

pub mod ame;
pub mod error;
pub mod experiment;
pub mod ising;
pub mod ode;
pub mod semiclassical;
pub mod spectral;
pub mod svmc;
pub mod thermo;
pub mod units;

pub use error::{Error, Result};

//! Numerical toolkit for the 1-D periodic Schrodinger (Hill) operator:
//! band structure, the quasimomentum conformal map onto a comb domain,
//! Titchmarsh-Weyl and Bloch functions, high-energy asymptotics, and the
//! Riccati reduction for distributional potentials `c + p'`.

pub mod bloch;
pub mod cli;
pub mod diffalg;
pub mod distrib;
pub mod error;
pub mod monodromy;
pub mod numerics;
pub mod potential;
pub mod quasimomentum;
pub mod report;
pub mod spectrum;
pub mod svg;

pub use error::{Error, Result};
pub use potential::{PeriodicPotential, PotentialDescriptor};

pub type C64 = num_complex::Complex64;

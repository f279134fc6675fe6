//! Numerical verification of the spectrum of open spin-1/2 XXZ and XXX chains
//! with the most general integrable boundary conditions.
//!
//! The library builds transfer matrices explicitly at small chain length N,
//! extracts their full spectra, and checks the analytic characterizations:
//! the quadratic separation-of-variables system, inhomogeneous and homogeneous
//! Baxter T-Q equations, generalized Bethe equations, discrete boundary
//! symmetries, and the degenerations that occur on special parameter loci.

pub mod numerics;

pub mod model6v;

pub mod sov;

pub mod baxter;

pub mod symmetry;

pub mod xxx;

pub mod cli;

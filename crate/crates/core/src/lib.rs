//! Auxiliary space preconditioning of P1 linear elasticity through a
//! generalized finite element space embedded in continuous quadratics.
//!
//! The pieces, bottom up: [`mesh`] builds structured triangulations of the
//! unit square, [`assembly`] produces the stiffness and mass matrices,
//! [`transfer`] maps P1 vector fields into P2, [`solver`] holds the
//! preconditioners and deflated PCG, [`verify`] computes dense reference
//! spectra, and [`experiment`] drives the numerical studies.

pub mod assembly;
pub mod experiment;
pub mod mesh;
pub mod solver;
pub mod sparse;
pub mod transfer;
pub mod verify;

//! Numerical checks for a sieve loss budget: Buchstab's function and its
//! bounds, the region predicates, a small language describing the loss
//! integrals, Monte Carlo estimation and the final budget verdict.

pub mod buchstab;
pub mod cli;
pub mod dsl;
pub mod lossbudget;
pub mod quadrature;
pub mod regions;

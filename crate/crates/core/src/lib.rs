//! Characteristic quasipolynomials, root location, multiplicity-induced
//! dominancy synthesis, delayed feedback design and time-domain simulation
//! for linear delay differential-algebraic systems.

mod dd;
mod linalg;
mod quadrature;

pub mod feedback;
pub mod mid;
pub mod quasipoly;
pub mod rootfinder;
pub mod simulate;

pub use num_complex::Complex64;

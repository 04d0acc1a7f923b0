//! Exact truncated calculus for graded deformation structures.
//!
//! Everything is computed over the rationals: formal-parameter series are
//! truncated polynomials with an explicit order, spectral-parameter series are
//! exact Laurent polynomials, and all sign bookkeeping funnels through a
//! single Koszul routine. The crate covers graded Lie algebras and their
//! exterior calculus, enveloping-algebra cochains with brace operations and
//! twists, associativity and pentagon residuals, star-product solving,
//! L-infinity structures and morphisms, and dynamical Yang-Baxter residuals.

pub mod brace;
pub mod cdybe;
pub mod cemodel;
pub mod cochain;
pub mod error;
pub mod graded;
pub mod lie;
pub mod linfty;
pub mod localmodel;
pub mod poly;
pub mod ratfn;
pub mod scalars;
pub mod star;
pub mod testgen;
pub mod uea;

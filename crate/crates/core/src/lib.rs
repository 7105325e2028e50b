//! Random thin sets of integers and the harmonic-analysis quantities used to
//! study them: selector sampling, Orlicz and sup norms of trigonometric
//! polynomials, deviation inequalities for Banach-valued sums,
//! quasi-independent extraction, uniform-convergence constants, ergodic
//! diagnostics, and end-to-end desk-scale pipelines.

pub mod concentration;
pub mod ergodic;
pub mod error;
pub mod experiments;
pub mod io;
pub mod polynorm;
pub mod quasiindep;
pub mod rng;
pub mod spectra;
pub mod stats;
pub mod ucconst;

pub use error::{Error, Result};

//! Quadrature in weighted Korobov spaces with rank-1 lattice rules whose
//! trailing coordinates are filled with independent uniform random numbers.
//!
//! The crate is organized bottom-up:
//!
//! * [`korobov`]: space parameters, kernel, zeta and totient.
//! * [`lattice`]: lattice, concatenated and anchored point sets; dual lattice
//!   membership and character sums.
//! * [`cbc`]: component-by-component construction (naive and FFT-based).
//! * [`wce`]: exact, closed-form, brute-force and replicated worst-case errors.
//! * [`bounds`]: theoretical upper bounds, advice on the lattice dimension,
//!   and the reduced-CBC cost model.

pub mod bounds;
pub mod cbc;
pub mod error;
pub mod korobov;
pub mod lattice;
pub mod wce;

pub use error::{Error, Result};

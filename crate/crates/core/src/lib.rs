//! Higher-order exterior-derivative complexes built from multi-index
//! orderings: exact identities on trigonometric forms, Fourier symbols, and
//! numerical probes of L1-duality and Gagliardo-Nirenberg type estimates on
//! the periodic box `[0, 2pi)^n`.

pub mod error;
pub mod forms;
pub mod increments;
pub mod inequalities;
pub mod multiindex;
pub mod operators;
pub mod symbol;
pub mod verify;

pub use error::{Error, Result};

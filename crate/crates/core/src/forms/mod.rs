//! Differential forms with per-label coefficients on the periodic box
//! `[0, 2pi)^n`.
//!
//! Three coefficient backends share the [`Field`] interface:
//! [`TrigPoly`] (exact rational trigonometric polynomials), [`GridField`]
//! (samples with spectral derivatives) and [`BumpField`] (finite sums of
//! Gaussian derivatives, exact under differentiation and rotation).

mod bump;
mod form;
mod grid;
mod pullback;
mod serialize;
mod trig;

pub use bump::{BumpField, BumpTerm};
pub use form::{
    grad_lp_norm, inner_product, inner_product_wedge, lp_norm, sobolev_norm, Form,
};
pub use grid::{GridField, GridShape};
pub use pullback::{givens_factor, is_orthogonal, minor_det, LinearPullback};
pub use serialize::AnyForm;
pub use trig::{Phase, TrigPoly};
pub(crate) use trig::rat;

use std::fmt::Debug;

/// Coefficient scalars: exact rationals or `f64`.
pub trait Scalar:
    num::Signed
    + num::FromPrimitive
    + num::ToPrimitive
    + Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
{
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer scalar")
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {}
impl Scalar for num::BigRational {}

/// A coefficient function of the source variables.
pub trait Field: Clone + Debug + PartialEq + Send + Sync + Sized + 'static {
    type Scalar: Scalar;
    /// Data needed to build a zero of the same kind (variable count, grid).
    type Shape: Clone + Debug + PartialEq + Send + Sync;
    /// Per-input cache for repeated differentiation (the spectrum on grids).
    type Prepared: Send + Sync;

    fn shape(&self) -> Self::Shape;
    fn zero(shape: &Self::Shape) -> Self;
    fn nvars(&self) -> usize;
    fn is_zero(&self) -> bool;

    fn add_assign(&mut self, other: &Self);
    /// `self += c * other` for an integer weight.
    fn add_scaled_int(&mut self, other: &Self, c: i64);
    fn scale(&mut self, c: &Self::Scalar);

    /// Mixed partial `∂^alpha` with `alpha` over the source variables.
    fn derivative(&self, alpha: &[u32]) -> Self;

    fn prepare(&self) -> Self::Prepared;
    /// `Σ c · ∂^alpha f` over prepared inputs.
    fn differential_sum(shape: &Self::Shape, terms: &[(i64, &[u32], &Self::Prepared)]) -> Self;

    /// Largest absolute coefficient in the backend's natural basis.
    fn max_abs(&self) -> f64;
}

/// Fields that can be multiplied and integrated against the normalized
/// measure `(2pi)^-n dx`.
pub trait Algebra: Field {
    fn mul(&self, other: &Self) -> Self;
    fn mean(&self) -> Self::Scalar;
    fn inner(&self, other: &Self) -> Self::Scalar {
        self.mul(other).mean()
    }
}

/// Fields that can be evaluated on a uniform `P^n` grid.
pub trait Sample: Field {
    fn sample(&self, p: usize) -> GridField;
}

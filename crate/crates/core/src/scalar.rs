//! Scalar abstraction shared by every numeric type in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real field the engine computes over: `f32` or `f64`.
///
/// Default tolerances are tuned for `f64`; callers working in `f32` should
/// pass their own [`Tolerances`].
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

pub(crate) fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

pub(crate) fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Numerical thresholds for one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Algebraic identities: hermiticity, idempotence, completeness, unitarity.
    pub algebra: T,
    /// Spectra and consistency (off-diagonal decoherence entries, probabilities).
    pub consistency: T,
    /// Branch weight below which a tree branch is pruned.
    pub prune: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            algebra: T::lit(1e-12),
            consistency: T::lit(1e-10),
            prune: T::lit(1e-12),
        }
    }
}

impl<T: Real> Tolerances<T> {
    pub fn with_consistency(mut self, tol: T) -> Self {
        self.consistency = tol;
        self
    }
}

use num_complex::Complex;

use super::{Kron, QmError, QmResult};
use crate::scalar::{cone, czero, Real};

/// Ket in a finite-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Validated constructor: non-empty, finite, nonzero norm.
    pub fn new(amps: Vec<Complex<T>>) -> QmResult<Self> {
        if amps.is_empty() {
            return Err(QmError::Empty);
        }
        if let Some(i) = amps.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QmError::NonFinite(i));
        }
        let v = Self { amps };
        if v.norm_sqr() == T::zero() {
            return Err(QmError::ZeroVector);
        }
        Ok(v)
    }

    /// Builds a vector from real amplitudes (test and fixture helper).
    pub fn from_real(amps: &[f64]) -> QmResult<Self> {
        Self::new(amps.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect())
    }

    /// Unvalidated: branch vectors may legitimately be zero.
    pub(crate) fn from_amps(amps: Vec<Complex<T>>) -> Self {
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_amps(vec![czero(); dim])
    }

    /// Computational basis ket `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = vec![czero(); dim];
        amps[index] = cone();
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: T) -> bool {
        (self.norm_sqr() - T::one()).abs() < tol
    }

    pub fn normalized(&self) -> QmResult<Self> {
        let n = self.norm();
        if n == T::zero() || !n.is_finite() {
            return Err(QmError::ZeroVector);
        }
        Ok(self.scale(Complex::new(T::one() / n, T::zero())))
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self::from_amps(self.amps.iter().map(|z| z * factor).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_amps(self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_amps(self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect())
    }

    pub(crate) fn axpy(&mut self, factor: Complex<T>, x: &Self) {
        for (y, xi) in self.amps.iter_mut().zip(&x.amps) {
            *y += factor * xi;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Multiplies by a global phase so the first component with modulus
    /// above `threshold` is real and positive.
    pub fn with_canonical_phase(&self, threshold: T) -> Self {
        match self.amps.iter().find(|z| z.norm() > threshold) {
            Some(z) => self.scale(z.conj() / z.norm()),
            None => self.clone(),
        }
    }
}

impl<T: Real> Kron for StateVector<T> {
    fn kron(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Self::from_amps(amps)
    }
}

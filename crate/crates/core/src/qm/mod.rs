//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is immutable once built. Composite spaces use the
//! leftmost tensor factor as the slow index: in `a ⊗ b` the amplitude of
//! `|i⟩|j⟩` lives at `i * dim(b) + j`.

mod density;
mod operator;
mod projector;
mod vector;

pub use density::DensityOperator;
pub use operator::Operator;
pub use projector::{
    complete_basis, orthonormalize, validate_pvm, ProjectiveDecomposition, Projector,
    GRAM_SCHMIDT_CUTOFF,
};
pub use vector::StateVector;

pub(crate) use projector::phase;

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QmError {
    #[error("empty vector or operator")]
    Empty,
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square: row {row} has {len} entries, expected {dim}")]
    NotSquare { row: usize, len: usize, dim: usize },
    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not idempotent (max deviation {deviation:.3e})")]
    NotIdempotent { deviation: f64 },
    #[error("operator is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("vector {index} is zero or linearly dependent on the preceding ones")]
    DegenerateSpan { index: usize },
    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("density operator trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("density operator is not positive semidefinite")]
    NotPositive,
    #[error("negative ensemble weight {0}")]
    NegativeWeight(f64),
    #[error("invalid subsystem sites {sites:?} for factor dims {dims:?}")]
    InvalidSites { sites: Vec<usize>, dims: Vec<usize> },
    #[error("decomposition has no members")]
    PvmEmpty,
    #[error("duplicate decomposition label `{0}`")]
    PvmDuplicateLabel(String),
    #[error("projectors `{first}` and `{second}` are not orthogonal (max |PQ| = {deviation:.3e})")]
    PvmNotOrthogonal {
        first: String,
        second: String,
        deviation: f64,
    },
    #[error("projectors do not sum to the identity (max deviation {deviation:.3e})")]
    PvmIncomplete { deviation: f64 },
}

pub type QmResult<T> = Result<T, QmError>;

/// Kronecker composition, left operand as the slow index.
pub trait Kron {
    fn kron(&self, other: &Self) -> Self;
}

/// `a ⊗ b` for two states or two operators.
///
/// Mixing kinds is rejected at compile time by the shared `Kron` bound.
pub fn tensor_product<K: Kron>(a: &K, b: &K) -> K {
    a.kron(b)
}

/// Left-folded tensor product of a non-empty list.
pub fn tensor_all<K: Kron + Clone>(factors: &[K]) -> Option<K> {
    let (first, rest) = factors.split_first()?;
    Some(rest.iter().fold(first.clone(), |acc, f| acc.kron(f)))
}

/// Mixed-radix digits of `index`, most significant factor first.
pub(crate) fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

/// Lifts an operator acting on the subsystems `sites` of a composite space
/// with factor dimensions `dims` to the full space.
///
/// The operator's own factor order follows `sites`; all other factors get the
/// identity.
pub fn embed<T: Real>(op: &Operator<T>, dims: &[usize], sites: &[usize]) -> QmResult<Operator<T>> {
    let bad = || QmError::InvalidSites {
        sites: sites.to_vec(),
        dims: dims.to_vec(),
    };
    if sites.is_empty() || sites.iter().any(|&s| s >= dims.len()) {
        return Err(bad());
    }
    for (i, s) in sites.iter().enumerate() {
        if sites[..i].contains(s) {
            return Err(bad());
        }
    }
    let sub_dims: Vec<usize> = sites.iter().map(|&s| dims[s]).collect();
    let sub_dim: usize = sub_dims.iter().product();
    if sub_dim != op.dim() {
        return Err(QmError::DimensionMismatch {
            expected: sub_dim,
            found: op.dim(),
        });
    }
    let full: usize = dims.iter().product();
    let n = dims.len();
    let mut rd = vec![0; n];
    let mut cd = vec![0; n];
    let local = |d: &[usize]| sites.iter().fold(0, |acc, &s| acc * dims[s] + d[s]);
    let spectator: Vec<usize> = (0..n).filter(|k| !sites.contains(k)).collect();
    Ok(Operator::from_fn(full, |r, c| {
        digits(r, dims, &mut rd);
        digits(c, dims, &mut cd);
        if spectator.iter().any(|&k| rd[k] != cd[k]) {
            crate::scalar::czero()
        } else {
            op[(local(&rd), local(&cd))]
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c, creal};

    fn sigma_z() -> Operator<f64> {
        Operator::from_real(2, &[1.0, 0.0, 0.0, -1.0])
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = Operator::<f64>::identity(2);
        assert_eq!(tensor_product(&i2, &i2), Operator::identity(4));
    }

    #[test]
    fn basis_kron_uses_slow_left_index() {
        let v = tensor_product(&StateVector::<f64>::basis(2, 0), &StateVector::basis(2, 1));
        assert_eq!(v, StateVector::basis(4, 1));
    }

    #[test]
    fn sigma_z_on_eigenvector() {
        let op = sigma_z().kron(&Operator::identity(2));
        let v = StateVector::<f64>::basis(2, 0).kron(&StateVector::basis(2, 1));
        let out = op.apply(&v);
        assert!(out.max_abs_diff(&v) < 1e-15);
    }

    #[test]
    fn embed_matches_kron_when_sites_are_in_order() {
        let a = Operator::from_fn(3, |r, col| c(r as f64, col as f64 * 0.5));
        let dims = [2, 3, 2];
        let lifted = embed(&a, &dims, &[1]).unwrap();
        let direct = Operator::identity(2).kron(&a).kron(&Operator::identity(2));
        assert!(lifted.max_abs_diff(&direct) < 1e-15);
    }

    #[test]
    fn embed_respects_site_order() {
        // swap-free check: σz on site 0 ⊗ X on site 2 given as one operator
        // with reversed site order equals X ⊗ σz reordered.
        let x = Operator::from_real(2, &[0.0, 1.0, 1.0, 0.0]);
        let op = x.kron(&sigma_z());
        let lifted = embed(&op, &[2, 2, 2], &[2, 0]).unwrap();
        let direct = sigma_z().kron(&Operator::identity(2)).kron(&x);
        assert!(lifted.max_abs_diff(&direct) < 1e-15);
    }

    #[test]
    fn embed_rejects_bad_sites() {
        let x = Operator::<f64>::identity(2);
        assert!(matches!(embed(&x, &[2, 2], &[2]), Err(QmError::InvalidSites { .. })));
        assert!(matches!(
            embed(&x.kron(&x), &[2, 2], &[0, 0]),
            Err(QmError::InvalidSites { .. })
        ));
        assert!(matches!(
            embed(&x, &[3, 2], &[0]),
            Err(QmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tensor_all_folds_left() {
        let v = tensor_all(&[
            StateVector::<f64>::basis(2, 1),
            StateVector::basis(3, 2),
            StateVector::basis(2, 0),
        ])
        .unwrap();
        assert_eq!(v.amps()[(3 + 2) * 2], creal(1.0));
        assert!(tensor_all::<StateVector<f64>>(&[]).is_none());
    }
}

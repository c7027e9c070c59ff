use std::collections::HashSet;

use num_complex::Complex;

use super::{embed, Kron, Operator, QmError, QmResult, StateVector};
use crate::scalar::{creal, Real};

/// Relative residual below which Gram–Schmidt treats a vector as dependent.
pub const GRAM_SCHMIDT_CUTOFF: f64 = 1e-10;

/// Modified Gram–Schmidt. Fails on the first vector whose residual norm drops
/// below `cutoff` times its original norm.
pub fn orthonormalize<T: Real>(vectors: &[StateVector<T>], cutoff: T) -> QmResult<Vec<StateVector<T>>> {
    let mut basis: Vec<StateVector<T>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        if let Some(first) = basis.first() {
            if first.dim() != v.dim() {
                return Err(QmError::DimensionMismatch {
                    expected: first.dim(),
                    found: v.dim(),
                });
            }
        }
        let original = v.norm();
        if original == T::zero() {
            return Err(QmError::DegenerateSpan { index });
        }
        let mut w = v.clone();
        for q in &basis {
            let overlap = q.inner(&w);
            w.axpy(-overlap, q);
        }
        let residual = w.norm();
        if residual < cutoff * original {
            return Err(QmError::DegenerateSpan { index });
        }
        basis.push(w.scale(creal(T::one() / residual)));
    }
    Ok(basis)
}

/// Extends an orthonormal set to an orthonormal basis of `C^dim`.
///
/// Candidates are computational basis vectors; at each step the one with the
/// largest residual is taken, with one re-orthogonalization pass.
pub fn complete_basis<T: Real>(orthonormal: &[StateVector<T>], dim: usize) -> Vec<StateVector<T>> {
    let mut basis = orthonormal.to_vec();
    let project_out = |w: &mut StateVector<T>, basis: &[StateVector<T>]| {
        for q in basis {
            let overlap = q.inner(w);
            w.axpy(-overlap, q);
        }
    };
    while basis.len() < dim {
        let mut best: Option<StateVector<T>> = None;
        for i in 0..dim {
            let mut w = StateVector::basis(dim, i);
            project_out(&mut w, &basis);
            if best.as_ref().is_none_or(|b| w.norm_sqr() > b.norm_sqr()) {
                best = Some(w);
            }
        }
        let mut w = best.expect("dim > 0");
        project_out(&mut w, &basis);
        let n = w.norm();
        basis.push(w.scale(creal(T::one() / n)));
    }
    basis
}

/// Orthogonal projector: Hermitian and idempotent.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector<T>(Operator<T>);

impl<T: Real> Projector<T> {
    pub fn new(op: Operator<T>, tol: T) -> QmResult<Self> {
        op.check_finite()?;
        let herm = op.hermiticity_defect();
        if !(herm < tol) {
            return Err(QmError::NotHermitian {
                deviation: herm.as_f64(),
            });
        }
        let idem = op.matmul(&op).max_abs_diff(&op);
        if !(idem < tol) {
            return Err(QmError::NotIdempotent {
                deviation: idem.as_f64(),
            });
        }
        Ok(Self(op))
    }

    /// Projector onto the span of `vectors`, whose rank equals `vectors.len()`.
    pub fn from_span(vectors: &[StateVector<T>]) -> QmResult<Self> {
        let first = vectors.first().ok_or(QmError::Empty)?;
        let basis = orthonormalize(vectors, T::lit(GRAM_SCHMIDT_CUTOFF))?;
        let mut op = Operator::zeros(first.dim());
        for q in &basis {
            op = op.add(&Operator::outer(q, q));
        }
        Ok(Self(op))
    }

    /// `|v⟩⟨v|` for the normalized direction of `v`.
    pub fn onto(v: &StateVector<T>) -> QmResult<Self> {
        Self::from_span(std::slice::from_ref(v))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Operator::identity(dim))
    }

    pub fn basis_state(dim: usize, index: usize) -> Self {
        let e = StateVector::basis(dim, index);
        Self(Operator::outer(&e, &e))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn operator(&self) -> &Operator<T> {
        &self.0
    }

    pub fn into_operator(self) -> Operator<T> {
        self.0
    }

    /// `I − P`
    pub fn complement(&self) -> Self {
        Self(Operator::identity(self.dim()).sub(&self.0))
    }

    pub fn rank(&self) -> usize {
        self.0.trace().re.round().to_usize().unwrap_or(0)
    }

    pub fn apply(&self, v: &StateVector<T>) -> StateVector<T> {
        self.0.apply(v)
    }

    pub fn commutes_with(&self, other: &Self, tol: T) -> bool {
        self.0.commutator_norm(&other.0) < tol
    }

    /// Lifts to a composite space; tensoring with identities preserves the
    /// projector identities exactly, so no re-validation is needed.
    pub fn embed(&self, dims: &[usize], sites: &[usize]) -> QmResult<Self> {
        embed(&self.0, dims, sites).map(Self)
    }

    /// `U P U†`, re-validated at `tol`.
    pub fn conjugate_by(&self, unitary: &Operator<T>, tol: T) -> QmResult<Self> {
        Self::new(self.0.conjugate_by(unitary), tol)
    }
}

impl<T: Real> Kron for Projector<T> {
    fn kron(&self, other: &Self) -> Self {
        Self(self.0.kron(&other.0))
    }
}

/// Labelled set of mutually orthogonal projectors summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveDecomposition<T> {
    dim: usize,
    members: Vec<(String, Projector<T>)>,
}

/// Checks dimensions, label uniqueness, pairwise orthogonality and
/// completeness, in that order.
pub fn validate_pvm<T: Real>(
    candidate: Vec<(String, Projector<T>)>,
    tol: T,
) -> QmResult<ProjectiveDecomposition<T>> {
    let dim = candidate.first().ok_or(QmError::PvmEmpty)?.1.dim();
    if let Some((_, p)) = candidate.iter().find(|(_, p)| p.dim() != dim) {
        return Err(QmError::DimensionMismatch {
            expected: dim,
            found: p.dim(),
        });
    }
    let mut seen = HashSet::new();
    for (label, _) in &candidate {
        if !seen.insert(label.as_str()) {
            return Err(QmError::PvmDuplicateLabel(label.clone()));
        }
    }
    for (i, (la, pa)) in candidate.iter().enumerate() {
        for (lb, pb) in &candidate[i + 1..] {
            let overlap = pa.operator().matmul(pb.operator()).max_abs();
            if !(overlap < tol) {
                return Err(QmError::PvmNotOrthogonal {
                    first: la.clone(),
                    second: lb.clone(),
                    deviation: overlap.as_f64(),
                });
            }
        }
    }
    let sum = candidate
        .iter()
        .fold(Operator::zeros(dim), |acc, (_, p)| acc.add(p.operator()));
    let deviation = sum.max_abs_diff(&Operator::identity(dim));
    if !(deviation < tol) {
        return Err(QmError::PvmIncomplete {
            deviation: deviation.as_f64(),
        });
    }
    Ok(ProjectiveDecomposition {
        dim,
        members: candidate,
    })
}

impl<T: Real> ProjectiveDecomposition<T> {
    /// Single-member decomposition `{label: I}`.
    pub fn trivial(label: impl Into<String>, dim: usize) -> Self {
        Self {
            dim,
            members: vec![(label.into(), Projector::identity(dim))],
        }
    }

    /// Projectors onto the members of an orthonormal basis.
    pub fn from_basis(labelled: &[(&str, StateVector<T>)], tol: T) -> QmResult<Self> {
        let members = labelled
            .iter()
            .map(|(l, v)| Ok((l.to_string(), Projector::onto(v)?)))
            .collect::<QmResult<Vec<_>>>()?;
        validate_pvm(members, tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[(String, Projector<T>)] {
        &self.members
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|(l, _)| l.as_str())
    }

    pub fn get(&self, label: &str) -> Option<&Projector<T>> {
        self.members.iter().find(|(l, _)| l == label).map(|(_, p)| p)
    }

    /// Embeds every member; orthogonality and completeness carry over.
    pub fn embed(&self, dims: &[usize], sites: &[usize]) -> QmResult<Self> {
        let members = self
            .members
            .iter()
            .map(|(l, p)| Ok((l.clone(), p.embed(dims, sites)?)))
            .collect::<QmResult<Vec<_>>>()?;
        Ok(Self {
            dim: dims.iter().product(),
            members,
        })
    }

    /// Coarse-graining: merges the named members into one labelled member.
    pub fn merge(&self, labels: &[&str], merged: impl Into<String>) -> Option<Self> {
        let mut sum: Option<Operator<T>> = None;
        let mut members = Vec::new();
        let mut insert_at = None;
        for (l, p) in &self.members {
            if labels.contains(&l.as_str()) {
                insert_at.get_or_insert(members.len());
                sum = Some(match sum {
                    Some(s) => s.add(p.operator()),
                    None => p.operator().clone(),
                });
            } else {
                members.push((l.clone(), p.clone()));
            }
        }
        let at = insert_at?;
        members.insert(at, (merged.into(), Projector(sum?)));
        Some(Self { dim: self.dim, members })
    }
}

pub(crate) fn phase<T: Real>(angle: T) -> Complex<T> {
    Complex::new(angle.cos(), angle.sin())
}

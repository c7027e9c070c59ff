use num_complex::Complex;

use super::{Operator, QmError, QmResult, StateVector};
use crate::scalar::{creal, czero, Real, Tolerances};

/// Density operator ρ, stored both as a matrix and as an unnormalized
/// ensemble `ρ = Σ_v |v⟩⟨v|` so branch weights can be propagated as vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator<T> {
    matrix: Operator<T>,
    ensemble: Vec<StateVector<T>>,
}

impl<T: Real> DensityOperator<T> {
    /// `|ψ⟩⟨ψ|` for a state normalized within `tol`.
    pub fn from_pure(state: &StateVector<T>, tol: T) -> QmResult<Self> {
        if !state.is_normalized(tol) {
            return Err(QmError::NotNormalized {
                norm_sqr: state.norm_sqr().as_f64(),
            });
        }
        Ok(Self {
            matrix: Operator::outer(state, state),
            ensemble: vec![state.clone()],
        })
    }

    /// `Σ w_i |ψ_i⟩⟨ψ_i|` over normalized states with weights summing to one.
    pub fn from_mixture(components: &[(T, StateVector<T>)], tol: T) -> QmResult<Self> {
        let dim = components.first().ok_or(QmError::Empty)?.1.dim();
        let mut matrix = Operator::zeros(dim);
        let mut ensemble = Vec::with_capacity(components.len());
        let mut total = T::zero();
        for (w, psi) in components {
            if psi.dim() != dim {
                return Err(QmError::DimensionMismatch {
                    expected: dim,
                    found: psi.dim(),
                });
            }
            if *w < T::zero() {
                return Err(QmError::NegativeWeight(w.as_f64()));
            }
            if !psi.is_normalized(tol) {
                return Err(QmError::NotNormalized {
                    norm_sqr: psi.norm_sqr().as_f64(),
                });
            }
            total += *w;
            let v = psi.scale(creal(w.sqrt()));
            matrix = matrix.add(&Operator::outer(&v, &v));
            ensemble.push(v);
        }
        if !((total - T::one()).abs() < tol) {
            return Err(QmError::TraceNotOne { trace: total.as_f64() });
        }
        Ok(Self { matrix, ensemble })
    }

    /// Validates a matrix: Hermitian and unit trace within `tol.algebra`,
    /// smallest eigenvalue above `−tol.consistency`.
    pub fn from_operator(matrix: Operator<T>, tol: &Tolerances<T>) -> QmResult<Self> {
        matrix.check_finite()?;
        let herm = matrix.hermiticity_defect();
        if !(herm < tol.algebra) {
            return Err(QmError::NotHermitian {
                deviation: herm.as_f64(),
            });
        }
        let trace = matrix.trace().re;
        if !((trace - T::one()).abs() < tol.algebra) {
            return Err(QmError::TraceNotOne { trace: trace.as_f64() });
        }
        // ρ + δI positive definite  ⇔  λ_min(ρ) > −δ
        let shifted = matrix.add(&Operator::identity(matrix.dim()).scale(creal(tol.consistency)));
        if !cholesky_succeeds(&shifted) {
            return Err(QmError::NotPositive);
        }
        let ensemble = pivoted_cholesky(&matrix, tol.algebra * T::lit(1e-3));
        Ok(Self { matrix, ensemble })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Operator<T> {
        &self.matrix
    }

    /// Vectors with `ρ = Σ |v⟩⟨v|`.
    pub fn ensemble(&self) -> &[StateVector<T>] {
        &self.ensemble
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, unitary: &Operator<T>) -> Self {
        Self {
            matrix: self.matrix.conjugate_by(unitary),
            ensemble: self.ensemble.iter().map(|v| unitary.apply(v)).collect(),
        }
    }

    /// Multiplies every ensemble member by a global phase; ρ is unchanged.
    pub fn with_global_phase(&self, phase: Complex<T>) -> Self {
        Self {
            matrix: self.matrix.clone(),
            ensemble: self.ensemble.iter().map(|v| v.scale(phase)).collect(),
        }
    }
}

fn cholesky_succeeds<T: Real>(a: &Operator<T>) -> bool {
    let n = a.dim();
    let mut l = vec![czero::<T>(); n * n];
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > T::zero()) {
            return false;
        }
        let djj = d.sqrt();
        l[j * n + j] = creal(djj);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    true
}

/// Columns `l_k` with `A ≈ Σ |l_k⟩⟨l_k|`, stopping once the largest remaining
/// diagonal entry falls below `stop`.
fn pivoted_cholesky<T: Real>(a: &Operator<T>, stop: T) -> Vec<StateVector<T>> {
    let n = a.dim();
    let mut r: Vec<Complex<T>> = a.entries().to_vec();
    let mut columns = Vec::new();
    loop {
        let (p, d) = (0..n)
            .map(|i| (i, r[i * n + i].re))
            .fold((0, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(d > stop) {
            break;
        }
        let s = d.sqrt();
        let col: Vec<Complex<T>> = (0..n).map(|i| r[i * n + p] / s).collect();
        for i in 0..n {
            for j in 0..n {
                r[i * n + j] -= col[i] * col[j].conj();
            }
        }
        columns.push(StateVector::from_amps(col));
        if columns.len() == n {
            break;
        }
    }
    columns
}

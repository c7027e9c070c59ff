//! Histories over a time grid, chain operators and the consistency
//! (decoherence) matrix.
//!
//! Chain operators are written in the Schrödinger picture with explicit
//! evolutions, `F = P_f U_f ⋯ P_1 U_1`, and the consistency matrix is
//! `M[g][k] = Tr(F_k ρ F_g†)`, whose diagonal is the Born weight
//! `Tr(F ρ F†)` of each history.
//!
//! Besides projective events a history may contain *classical choice*
//! events: a freely chosen setting with a prior weight. A choice acts as the
//! identity on the Hilbert space and scales the history weight; histories
//! that disagree on a choice are exclusive alternatives, so their
//! off-diagonal entries vanish identically.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::qm::{DensityOperator, Operator, Projector, QmError, StateVector};
use crate::scalar::{creal, czero, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error(transparent)]
    Qm(#[from] QmError),
    #[error("a time grid needs at least t_0")]
    EmptyGrid,
    #[error("times are not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("expected {expected} evolution operators, found {found}")]
    EvolutionCount { expected: usize, found: usize },
    #[error("evolution over interval {interval} is not unitary (deviation {deviation:.3e})")]
    NotUnitary { interval: usize, deviation: f64 },
    #[error("dimension mismatch: system has dim {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("history needs one event for each of t_1..t_{expected}, found {found}")]
    WrongEventCount { expected: usize, found: usize },
    #[error("event {position} is at time {time}, expected {expected}")]
    EventOutOfOrder {
        position: usize,
        time: usize,
        expected: usize,
    },
    #[error("choice weight {0} outside [0, 1]")]
    InvalidChoiceWeight(f64),
    #[error("history does not belong to the family's time grid")]
    GridMismatch,
    #[error("history probability {0:e} is negative beyond tolerance (numerical bug)")]
    NegativeProbability(f64),
    #[error("family is not a consistent framework: |M[{g}][{k}]| = {magnitude:.3e}")]
    FrameworkViolation { g: usize, k: usize, magnitude: f64 },
}

pub type HistoryResult<T> = Result<T, HistoryError>;

/// Ordered times `t_0 < t_1 < … < t_f` with one evolution per interval.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid<T> {
    dim: usize,
    times: Vec<T>,
    evolutions: Vec<Operator<T>>,
    trivial: Vec<bool>,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(times: Vec<T>, evolutions: Vec<Operator<T>>, dim: usize, tol: T) -> HistoryResult<Self> {
        if times.is_empty() {
            return Err(HistoryError::EmptyGrid);
        }
        if let Some(i) = (1..times.len()).find(|&i| !(times[i] > times[i - 1])) {
            return Err(HistoryError::NotIncreasing(i));
        }
        if evolutions.len() != times.len() - 1 {
            return Err(HistoryError::EvolutionCount {
                expected: times.len() - 1,
                found: evolutions.len(),
            });
        }
        let mut trivial = Vec::with_capacity(evolutions.len());
        for (interval, u) in evolutions.iter().enumerate() {
            if u.dim() != dim {
                return Err(HistoryError::DimensionMismatch {
                    expected: dim,
                    found: u.dim(),
                });
            }
            let is_id = u.is_exact_identity();
            if !is_id {
                let deviation = u.unitarity_defect();
                if !(deviation < tol) {
                    return Err(HistoryError::NotUnitary {
                        interval,
                        deviation: deviation.as_f64(),
                    });
                }
            }
            trivial.push(is_id);
        }
        Ok(Self {
            dim,
            times,
            evolutions,
            trivial,
        })
    }

    /// Times `0, 1, …, f` with identity evolution between them.
    pub fn identity(dim: usize, final_time: usize) -> Self {
        Self {
            dim,
            times: (0..=final_time).map(|t| T::from_usize(t).expect("small integer")).collect(),
            evolutions: vec![Operator::identity(dim); final_time],
            trivial: vec![true; final_time],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// Index of `t_f`.
    pub fn final_time(&self) -> usize {
        self.times.len() - 1
    }

    /// `U(t_time, t_{time-1})` for `time ≥ 1`.
    pub fn evolution_into(&self, time: usize) -> &Operator<T> {
        &self.evolutions[time - 1]
    }

    /// Applies `U(t_time, t_{time-1})`, skipping exact identities.
    pub fn evolve_into(&self, time: usize, v: &StateVector<T>) -> StateVector<T> {
        if self.trivial[time - 1] {
            v.clone()
        } else {
            self.evolutions[time - 1].apply(v)
        }
    }

    /// The same grid with every evolution conjugated by `unitary`.
    pub fn conjugate_by(&self, unitary: &Operator<T>) -> Self {
        let evolutions: Vec<_> = self.evolutions.iter().map(|u| u.conjugate_by(unitary)).collect();
        Self {
            dim: self.dim,
            times: self.times.clone(),
            trivial: evolutions.iter().map(Operator::is_exact_identity).collect(),
            evolutions,
        }
    }
}

/// What happens at one time of a history.
#[derive(Clone, Debug, PartialEq)]
pub enum EventKind<T> {
    /// A projector from that time's decomposition.
    Projector(Projector<T>),
    /// A classical free choice with prior weight; identity on the Hilbert space.
    Choice { weight: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event<T> {
    pub time: usize,
    pub label: String,
    pub kind: EventKind<T>,
}

impl<T: Real> Event<T> {
    pub fn projector(time: usize, label: impl Into<String>, projector: Projector<T>) -> Self {
        Self {
            time,
            label: label.into(),
            kind: EventKind::Projector(projector),
        }
    }

    pub fn choice(time: usize, label: impl Into<String>, weight: T) -> Self {
        Self {
            time,
            label: label.into(),
            kind: EventKind::Choice { weight },
        }
    }

    /// `P` for projective events, `None` (identity) for choices.
    pub fn projector_ref(&self) -> Option<&Projector<T>> {
        match &self.kind {
            EventKind::Projector(p) => Some(p),
            EventKind::Choice { .. } => None,
        }
    }
}

/// One event at each of `t_1 … t_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct History<T> {
    grid: Arc<TimeGrid<T>>,
    events: Vec<Event<T>>,
}

impl<T: Real> History<T> {
    pub fn new(grid: Arc<TimeGrid<T>>, events: Vec<Event<T>>) -> HistoryResult<Self> {
        let f = grid.final_time();
        if events.len() != f {
            return Err(HistoryError::WrongEventCount {
                expected: f,
                found: events.len(),
            });
        }
        for (position, e) in events.iter().enumerate() {
            if e.time != position + 1 {
                return Err(HistoryError::EventOutOfOrder {
                    position,
                    time: e.time,
                    expected: position + 1,
                });
            }
            match &e.kind {
                EventKind::Projector(p) if p.dim() != grid.dim() => {
                    return Err(HistoryError::DimensionMismatch {
                        expected: grid.dim(),
                        found: p.dim(),
                    })
                }
                EventKind::Choice { weight } if !(*weight >= T::zero() && *weight <= T::one()) => {
                    return Err(HistoryError::InvalidChoiceWeight(weight.as_f64()))
                }
                _ => {}
            }
        }
        Ok(Self { grid, events })
    }

    pub fn grid(&self) -> &Arc<TimeGrid<T>> {
        &self.grid
    }

    pub fn events(&self) -> &[Event<T>] {
        &self.events
    }

    pub fn labels(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.label.as_str()).collect()
    }

    /// Product of the classical choice weights.
    pub fn choice_weight(&self) -> T {
        self.events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Choice { weight } => Some(weight),
                EventKind::Projector(_) => None,
            })
            .fold(T::one(), |a, w| a * w)
    }

    /// `(time, label)` of each classical choice.
    pub fn choice_key(&self) -> Vec<(usize, &str)> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Choice { .. }))
            .map(|e| (e.time, e.label.as_str()))
            .collect()
    }

    /// `F v` without forming `F`.
    pub fn propagate(&self, v: &StateVector<T>) -> StateVector<T> {
        self.events.iter().fold(v.clone(), |acc, e| {
            let evolved = self.grid.evolve_into(e.time, &acc);
            match e.projector_ref() {
                Some(p) => p.apply(&evolved),
                None => evolved,
            }
        })
    }
}

/// `F = P_f U(t_f, t_{f−1}) ⋯ P_1 U(t_1, t_0)`; choice events contribute the
/// identity.
pub fn chain_operator<T: Real>(h: &History<T>) -> Operator<T> {
    h.events.iter().fold(Operator::identity(h.grid.dim()), |acc, e| {
        let evolved = h.grid.evolution_into(e.time).matmul(&acc);
        match e.projector_ref() {
            Some(p) => p.operator().matmul(&evolved),
            None => evolved,
        }
    })
}

/// Born weight `w · Tr(F ρ F†)` where `w` is the product of choice weights.
///
/// Values in `(−tol, 0)` are clamped to zero; anything more negative is an
/// internal-consistency error.
pub fn history_probability<T: Real>(h: &History<T>, rho: &DensityOperator<T>, tol: T) -> HistoryResult<T> {
    if rho.dim() != h.grid.dim() {
        return Err(HistoryError::DimensionMismatch {
            expected: h.grid.dim(),
            found: rho.dim(),
        });
    }
    let f = chain_operator(h);
    let p = f.matmul(rho.matrix()).matmul(&f.adjoint()).trace().re * h.choice_weight();
    if p < -tol {
        return Err(HistoryError::NegativeProbability(p.as_f64()));
    }
    Ok(p.max(T::zero()))
}

/// A family of histories on one grid, indexed by `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryFamily<T> {
    grid: Arc<TimeGrid<T>>,
    rho: DensityOperator<T>,
    histories: Vec<History<T>>,
}

impl<T: Real> HistoryFamily<T> {
    pub fn new(grid: Arc<TimeGrid<T>>, rho: DensityOperator<T>, histories: Vec<History<T>>) -> HistoryResult<Self> {
        if rho.dim() != grid.dim() {
            return Err(HistoryError::DimensionMismatch {
                expected: grid.dim(),
                found: rho.dim(),
            });
        }
        if histories.iter().any(|h| !Arc::ptr_eq(&h.grid, &grid) && *h.grid != *grid) {
            return Err(HistoryError::GridMismatch);
        }
        Ok(Self { grid, rho, histories })
    }

    pub fn grid(&self) -> &Arc<TimeGrid<T>> {
        &self.grid
    }

    pub fn rho(&self) -> &DensityOperator<T> {
        &self.rho
    }

    pub fn histories(&self) -> &[History<T>] {
        &self.histories
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffDiagonal<T> {
    pub g: usize,
    pub k: usize,
    pub magnitude: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport<T> {
    /// `matrix[g][k] = Tr(F_k ρ F_g†)`.
    pub matrix: Vec<Vec<Complex<T>>>,
    pub tol: T,
    pub verdict: Verdict,
    /// Largest off-diagonal modulus; `None` for a single history.
    pub worst_offdiag: Option<OffDiagonal<T>>,
}

impl<T: Real> ConsistencyReport<T> {
    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.matrix.len()).map(|k| self.matrix[k][k].re).collect()
    }

    /// Σ diagonal; 1 for an exhaustive family.
    pub fn total(&self) -> T {
        self.diagonal().into_iter().sum()
    }
}

/// Consistency matrix via ensemble propagation: with `ρ = Σ|v⟩⟨v|`,
/// `M[g][k] = w Σ_v ⟨F_g v | F_k v⟩`.
pub fn consistency_matrix<T: Real>(fam: &HistoryFamily<T>, tol: T) -> ConsistencyReport<T> {
    let branches: Vec<Vec<StateVector<T>>> = fam
        .histories
        .par_iter()
        .map(|h| fam.rho.ensemble().iter().map(|v| h.propagate(v)).collect())
        .collect();
    let keys: Vec<_> = fam.histories.iter().map(History::choice_key).collect();
    let weights: Vec<T> = fam.histories.iter().map(History::choice_weight).collect();
    let n = fam.histories.len();
    let mut matrix = vec![vec![czero(); n]; n];
    let mut worst: Option<OffDiagonal<T>> = None;
    for g in 0..n {
        for k in g..n {
            if keys[g] != keys[k] {
                continue;
            }
            let overlap = branches[g]
                .iter()
                .zip(&branches[k])
                .fold(czero::<T>(), |acc, (a, b)| acc + a.inner(b))
                * creal(weights[g]);
            matrix[g][k] = overlap;
            matrix[k][g] = overlap.conj();
            if g != k && worst.is_none_or(|w| overlap.norm() > w.magnitude) {
                worst = Some(OffDiagonal {
                    g,
                    k,
                    magnitude: overlap.norm(),
                });
            }
        }
        // Diagonal entries are real by construction.
        matrix[g][g].im = T::zero();
    }
    if n > 1 && worst.is_none() {
        worst = Some(OffDiagonal {
            g: 0,
            k: 1,
            magnitude: T::zero(),
        });
    }
    let verdict = match worst {
        Some(w) if !(w.magnitude < tol) => Verdict::Inconsistent,
        _ => Verdict::Consistent,
    };
    ConsistencyReport {
        matrix,
        tol,
        verdict,
        worst_offdiag: worst,
    }
}

/// Probabilities of each history, refusing families that are not consistent
/// at `tol`.
pub fn family_distribution<T: Real>(fam: &HistoryFamily<T>, tol: T) -> HistoryResult<Vec<(usize, T)>> {
    let report = consistency_matrix(fam, tol);
    if let (Verdict::Inconsistent, Some(w)) = (report.verdict, report.worst_offdiag) {
        return Err(HistoryError::FrameworkViolation {
            g: w.g,
            k: w.k,
            magnitude: w.magnitude.as_f64(),
        });
    }
    Ok(report.diagonal().into_iter().enumerate().collect())
}

/// Two histories of a qubit starting in `|0⟩`: `x+` at t1, `z0` or `z1` at
/// t2, `x+` again at t3. Their off-diagonal entry is 1/8, so the pair is
/// not a consistent family.
pub fn xzx_demo<T: Real>() -> HistoryFamily<T> {
    let grid = Arc::new(TimeGrid::identity(2, 3));
    let x_plus = StateVector::from_real(&[1.0, 1.0]).and_then(|v| v.normalized()).expect("nonzero");
    let x = Projector::onto(&x_plus).expect("nonzero");
    let history = |label: &str, index: usize| {
        History::new(
            grid.clone(),
            vec![
                Event::projector(1, "x+", x.clone()),
                Event::projector(2, label, Projector::basis_state(2, index)),
                Event::projector(3, "x+", x.clone()),
            ],
        )
        .expect("well-formed by construction")
    };
    let rho = DensityOperator::from_pure(&StateVector::basis(2, 0), T::lit(1e-12)).expect("normalized");
    HistoryFamily::new(grid.clone(), rho, vec![history("z0", 0), history("z1", 1)]).expect("one grid")
}

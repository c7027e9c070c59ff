//! The Hardy two-qubit scenario: initial state, the measurement bases forced
//! by Hardy's zero constraints, the apparatus model and the reports built on
//! the resulting framework tree.
//!
//! Outcome labels follow the mapping to Hardy's notation: `ML1±` and `MR1±`
//! are z-type measurements (`ML1+ = |z⁺⟩_L`, `MR1+ = |z⁻⟩_R`), `ML2±` and
//! `MR2±` the derived d-type ones. With `ψ = a|z⁺z⁺⟩ + b|z⁺z⁻⟩ + c|z⁻z⁺⟩`:
//!
//! * `ML2+` is the unit vector orthogonal to `a|z⁺⟩ + c|z⁻⟩`, so `ML2+ ∧ MR1−` never occurs;
//! * `MR2−` is the unit vector orthogonal to `a|z⁺⟩ + b|z⁻⟩`, so `ML1+ ∧ MR2−` never occurs;
//! * the missing `|z⁻z⁻⟩` amplitude rules out `ML1− ∧ MR1+`.

mod apparatus;
mod scenario;
mod sweep;

pub use apparatus::{
    measurement_unitary, pointer_decomposition, setting_decomposition, Completion, POINTER_MINUS, POINTER_PLUS, READY,
    REGISTER_DIM,
};
pub use scenario::{
    build_measurement_scenario, no_signaling_report, verify_hardy_predictions, HardyReport, HardyScenario,
    JointTable, MarginalComparison, Mode, NoSignalingReport, PredictionCheck, ScenarioConfig, ScenarioOptions, TimeOrder,
};
pub use sweep::{maximize_s4, parameter_sweep, S4Optimum, SweepRow, SymmetricFamily};

use num_complex::Complex;
use thiserror::Error;

use crate::counterfactual::CounterfactualError;
use crate::histories::HistoryError;
use crate::qm::{ProjectiveDecomposition, QmError, StateVector};
use crate::scalar::{c, creal, czero, Real};
use crate::tree::TreeError;

/// Magnitude every amplitude must exceed for a strict Hardy state.
pub const STRICT_HARDY_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardyError {
    #[error(transparent)]
    Qm(#[from] QmError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Counterfactual(#[from] CounterfactualError),
    #[error("amplitudes are not normalized (|a|²+|b|²+|c|² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("not a strict Hardy state: |a|={a:.3e}, |b|={b:.3e}, |c|={c:.3e}")]
    NotStrictHardy { a: f64, b: f64, c: f64 },
    #[error("degenerate amplitudes: cannot fix the {0} d-type basis")]
    DegenerateBasis(Side),
    #[error("invalid choice amplitudes on side {side}: |α|²+|β|² = {norm_sqr}")]
    InvalidChoice { side: Side, norm_sqr: f64 },
    #[error("scenario family is inconsistent: worst off-diagonal {magnitude:.3e}")]
    Inconsistent { magnitude: f64 },
    #[error("empty parameter family")]
    EmptyFamily,
}

pub type HardyResult<T> = Result<T, HardyError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    L,
    R,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::L => "L",
            Self::R => "R",
        })
    }
}

/// `(a, b, c)` with `|a|² + |b|² + |c|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardyAmplitudes<T> {
    pub a: Complex<T>,
    pub b: Complex<T>,
    pub c: Complex<T>,
}

impl<T: Real> HardyAmplitudes<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, tol: T) -> HardyResult<Self> {
        let amps = Self { a, b, c };
        let n = amps.norm_sqr();
        if !((n - T::one()).abs() < tol) {
            return Err(HardyError::NotNormalized { norm_sqr: n.as_f64() });
        }
        Ok(amps)
    }

    /// Rescales to unit norm; fails only for the zero triple.
    pub fn normalized(a: Complex<T>, b: Complex<T>, c: Complex<T>) -> HardyResult<Self> {
        let raw = Self { a, b, c };
        let n = raw.norm_sqr().sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(HardyError::NotNormalized {
                norm_sqr: raw.norm_sqr().as_f64(),
            });
        }
        let s = creal(T::one() / n);
        Ok(Self {
            a: a * s,
            b: b * s,
            c: c * s,
        })
    }

    pub fn real(a: T, b: T, c: T, tol: T) -> HardyResult<Self> {
        Self::new(creal(a), creal(b), creal(c), tol)
    }

    /// `a = b = c = 1/√3`.
    pub fn equal() -> Self {
        let x = creal(T::lit(1.0 / 3.0).sqrt());
        Self { a: x, b: x, c: x }
    }

    /// Real family with `a = c = √((1 − b²)/2)`.
    pub fn symmetric_ac(b: T) -> Self {
        let a = ((T::one() - b * b) / T::lit(2.0)).sqrt();
        Self {
            a: creal(a),
            b: creal(b),
            c: creal(a),
        }
    }

    /// Real family with `b = c = t`, `a = √(1 − 2t²)`.
    pub fn symmetric_bc(t: T) -> Self {
        let a = (T::one() - T::lit(2.0) * t * t).sqrt();
        Self {
            a: creal(a),
            b: creal(t),
            c: creal(t),
        }
    }

    pub fn norm_sqr(&self) -> T {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr()
    }

    /// All three amplitudes above [`STRICT_HARDY_FLOOR`].
    pub fn is_strict(&self) -> bool {
        let floor = T::lit(STRICT_HARDY_FLOOR);
        self.a.norm() > floor && self.b.norm() > floor && self.c.norm() > floor
    }

    pub fn require_strict(&self) -> HardyResult<()> {
        if self.is_strict() {
            Ok(())
        } else {
            Err(HardyError::NotStrictHardy {
                a: self.a.norm().as_f64(),
                b: self.b.norm().as_f64(),
                c: self.c.norm().as_f64(),
            })
        }
    }

    /// Closed form of the S4 probability for real amplitudes:
    /// `a²b²c² / ((a² + c²)(a² + b²))`. Uses moduli for complex input.
    pub fn s4_closed_form(&self) -> T {
        let (a2, b2, c2) = (self.a.norm_sqr(), self.b.norm_sqr(), self.c.norm_sqr());
        a2 * b2 * c2 / ((a2 + c2) * (a2 + b2))
    }
}

/// `ψ = a|z⁺z⁺⟩ + b|z⁺z⁻⟩ + c|z⁻z⁺⟩`, with `|z⁺⟩ = |0⟩` and L the slow index.
pub fn build_hardy_state<T: Real>(amps: &HardyAmplitudes<T>) -> StateVector<T> {
    StateVector::from_amps(vec![amps.a, amps.b, amps.c, czero()])
}

/// The d-type bases on each side.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyBases<T> {
    pub ml2_plus: StateVector<T>,
    pub ml2_minus: StateVector<T>,
    pub mr2_plus: StateVector<T>,
    pub mr2_minus: StateVector<T>,
}

/// Derives the d-type bases for a strict Hardy triple.
///
/// Phases follow the first-nonzero-component-real-positive convention.
pub fn derive_hardy_bases<T: Real>(amps: &HardyAmplitudes<T>) -> HardyResult<HardyBases<T>> {
    amps.require_strict()?;
    constraint_bases(amps)
}

/// Same construction without the strictness precondition; used to build
/// degenerate scenarios (for example `b = 0`) for diagnostics.
pub(crate) fn constraint_bases<T: Real>(amps: &HardyAmplitudes<T>) -> HardyResult<HardyBases<T>> {
    let floor = T::lit(STRICT_HARDY_FLOOR);
    let pair = |along: Complex<T>, across: Complex<T>, side: Side| -> HardyResult<(StateVector<T>, StateVector<T>)> {
        if (along.norm_sqr() + across.norm_sqr()).sqrt() <= floor {
            return Err(HardyError::DegenerateBasis(side));
        }
        let parallel = StateVector::from_amps(vec![along, across]).normalized()?.with_canonical_phase(floor);
        let orthogonal = StateVector::from_amps(vec![across.conj(), -along.conj()])
            .normalized()?
            .with_canonical_phase(floor);
        Ok((parallel, orthogonal))
    };
    let (ml2_minus, ml2_plus) = pair(amps.a, amps.c, Side::L)?;
    let (mr2_plus, mr2_minus) = pair(amps.a, amps.b, Side::R)?;
    Ok(HardyBases {
        ml2_plus,
        ml2_minus,
        mr2_plus,
        mr2_minus,
    })
}

/// One two-outcome measurement on one side's qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetting<T> {
    pub side: Side,
    pub name: String,
    pub plus: StateVector<T>,
    pub minus: StateVector<T>,
}

impl<T: Real> MeasurementSetting<T> {
    pub fn new(side: Side, name: impl Into<String>, plus: StateVector<T>, minus: StateVector<T>, tol: T) -> HardyResult<Self> {
        let s = Self {
            side,
            name: name.into(),
            plus,
            minus,
        };
        s.decomposition(tol)?;
        Ok(s)
    }

    pub fn plus_label(&self) -> String {
        format!("{}+", self.name)
    }

    pub fn minus_label(&self) -> String {
        format!("{}-", self.name)
    }

    /// Outcome PVM on the bare qubit; errors if the basis is not orthonormal.
    pub fn decomposition(&self, tol: T) -> HardyResult<ProjectiveDecomposition<T>> {
        for v in [&self.plus, &self.minus] {
            if v.dim() != 2 || !v.is_normalized(tol) {
                return Err(QmError::NotNormalized {
                    norm_sqr: v.norm_sqr().as_f64(),
                }
                .into());
            }
        }
        let plus = self.plus_label();
        let minus = self.minus_label();
        Ok(ProjectiveDecomposition::from_basis(
            &[(plus.as_str(), self.plus.clone()), (minus.as_str(), self.minus.clone())],
            tol,
        )?)
    }
}

/// The four settings of the two-region experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct HardySettings<T> {
    pub ml1: MeasurementSetting<T>,
    pub ml2: MeasurementSetting<T>,
    pub mr1: MeasurementSetting<T>,
    pub mr2: MeasurementSetting<T>,
}

impl<T: Real> HardySettings<T> {
    /// z-type first settings plus the given d-type bases.
    pub fn from_bases(bases: &HardyBases<T>, tol: T) -> HardyResult<Self> {
        let z_plus = StateVector::basis(2, 0);
        let z_minus = StateVector::basis(2, 1);
        Ok(Self {
            ml1: MeasurementSetting::new(Side::L, "ML1", z_plus.clone(), z_minus.clone(), tol)?,
            ml2: MeasurementSetting::new(Side::L, "ML2", bases.ml2_plus.clone(), bases.ml2_minus.clone(), tol)?,
            mr1: MeasurementSetting::new(Side::R, "MR1", z_minus, z_plus, tol)?,
            mr2: MeasurementSetting::new(Side::R, "MR2", bases.mr2_plus.clone(), bases.mr2_minus.clone(), tol)?,
        })
    }

    pub fn left(&self) -> [&MeasurementSetting<T>; 2] {
        [&self.ml1, &self.ml2]
    }

    pub fn right(&self) -> [&MeasurementSetting<T>; 2] {
        [&self.mr1, &self.mr2]
    }
}

/// Choice amplitudes `(α, β)` from weights `(w, 1 − w)`.
pub fn choice_from_weights<T: Real>(first: T, second: T) -> [Complex<T>; 2] {
    [c(first.max(T::zero()).sqrt(), T::zero()), c(second.max(T::zero()).sqrt(), T::zero())]
}

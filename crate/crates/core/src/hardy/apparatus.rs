//! Measuring devices as six-level registers coupled to one qubit.
//!
//! Register levels: two "ready" states, one per setting, and a pointer pair
//! per setting. A device primed in `α|ready₁⟩ + β|ready₂⟩` measures setting 1
//! or 2 in superposition.

use num_complex::Complex;

use super::{HardyResult, MeasurementSetting};
use crate::qm::{complete_basis, phase, Kron, Operator, ProjectiveDecomposition, Projector, QmError, StateVector};
use crate::scalar::{cone, creal, czero, Real};

pub const REGISTER_DIM: usize = 6;
/// Ready levels, indexed by setting.
pub const READY: [usize; 2] = [0, 1];
/// `+` pointer levels, indexed by setting.
pub const POINTER_PLUS: [usize; 2] = [2, 4];
/// `−` pointer levels, indexed by setting.
pub const POINTER_MINUS: [usize; 2] = [3, 5];

/// How the measurement isometry is extended to a unitary on the rest of the
/// qubit ⊗ register space. Probabilities on the tree must not depend on it.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Completion<T> {
    /// Complement bases paired in order.
    #[default]
    Ordered,
    /// Complement bases paired through a fixed phased rotation by the angle.
    Rotated(T),
}

/// Unitary on `qubit ⊗ register` (qubit slow) taking
/// `|b_s±⟩|ready_s⟩ → |b_s±⟩|pointer_s±⟩` for both settings.
pub fn measurement_unitary<T: Real>(
    first: &MeasurementSetting<T>,
    second: &MeasurementSetting<T>,
    completion: Completion<T>,
) -> HardyResult<Operator<T>> {
    let n = 2 * REGISTER_DIM;
    let level = |i| StateVector::basis(REGISTER_DIM, i);
    let mut inputs = Vec::with_capacity(4);
    let mut outputs = Vec::with_capacity(4);
    for (s, setting) in [first, second].into_iter().enumerate() {
        inputs.push(setting.plus.kron(&level(READY[s])));
        inputs.push(setting.minus.kron(&level(READY[s])));
        outputs.push(setting.plus.kron(&level(POINTER_PLUS[s])));
        outputs.push(setting.minus.kron(&level(POINTER_MINUS[s])));
    }
    let domain = complete_basis(&inputs, n);
    let range = complete_basis(&outputs, n);
    let rest = n - inputs.len();
    let mixing = match completion {
        Completion::Ordered => Operator::identity(rest),
        Completion::Rotated(angle) => pairwise_rotation(rest, angle),
    };

    let mut u = Operator::zeros(n);
    for (out, inp) in outputs.iter().zip(&inputs) {
        u = u.add(&Operator::outer(out, inp));
    }
    for j in 0..rest {
        let mut image = StateVector::zeros(n);
        for k in 0..rest {
            let m = mixing[(k, j)];
            if m != czero() {
                image.axpy(m, &range[inputs.len() + k]);
            }
        }
        u = u.add(&Operator::outer(&image, &domain[inputs.len() + j]));
    }
    let defect = u.unitarity_defect();
    if !(defect < T::lit(1e-10)) {
        return Err(QmError::NotUnitary {
            deviation: defect.as_f64(),
        }
        .into());
    }
    Ok(u)
}

/// Block-diagonal unitary of phased 2×2 rotations on consecutive pairs.
fn pairwise_rotation<T: Real>(dim: usize, angle: T) -> Operator<T> {
    let (cos, sin) = (creal(angle.cos()), angle.sin());
    let mut rows: Vec<Vec<Complex<T>>> = (0..dim)
        .map(|r| (0..dim).map(|c| if r == c { cone() } else { czero() }).collect())
        .collect();
    for k in 0..dim / 2 {
        let p = phase(angle * T::lit((k + 1) as f64));
        let (i, j) = (2 * k, 2 * k + 1);
        rows[i][i] = cos;
        rows[i][j] = -p.conj() * sin;
        rows[j][i] = p * sin;
        rows[j][j] = cos;
    }
    Operator::from_rows(rows).expect("square by construction")
}

/// `{name_1: span{ready₁, p₁±}, name_2: span{ready₂, p₂±}}` on one register.
pub fn setting_decomposition<T: Real>(names: [&str; 2], tol: T) -> HardyResult<ProjectiveDecomposition<T>> {
    let members = (0..2)
        .map(|s| {
            let span = [READY[s], POINTER_PLUS[s], POINTER_MINUS[s]].map(|i| StateVector::basis(REGISTER_DIM, i));
            Ok((names[s].to_string(), Projector::from_span(&span)?))
        })
        .collect::<Result<Vec<_>, QmError>>()?;
    Ok(crate::qm::validate_pvm(members, tol)?)
}

/// `{s+: |p_s+⟩⟨p_s+|, s−: I − |p_s+⟩⟨p_s+|}` on one register.
pub fn pointer_decomposition<T: Real>(setting: &MeasurementSetting<T>, index: usize, tol: T) -> HardyResult<ProjectiveDecomposition<T>> {
    let plus = Projector::basis_state(REGISTER_DIM, POINTER_PLUS[index]);
    let minus = plus.complement();
    Ok(crate::qm::validate_pvm(
        vec![(setting.plus_label(), plus), (setting.minus_label(), minus)],
        tol,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::{derive_hardy_bases, HardyAmplitudes, HardySettings};

    fn settings() -> HardySettings<f64> {
        let bases = derive_hardy_bases(&HardyAmplitudes::equal()).unwrap();
        HardySettings::from_bases(&bases, 1e-12).unwrap()
    }

    #[test]
    fn unitary_writes_pointer_records() {
        let s = settings();
        for completion in [Completion::Ordered, Completion::Rotated(0.7)] {
            let u = measurement_unitary(&s.ml1, &s.ml2, completion).unwrap();
            assert!(u.is_unitary(1e-12));
            let input = s.ml2.minus.kron(&StateVector::basis(REGISTER_DIM, READY[1]));
            let expected = s.ml2.minus.kron(&StateVector::basis(REGISTER_DIM, POINTER_MINUS[1]));
            assert!(u.apply(&input).max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn completions_differ_off_the_isometry() {
        let s = settings();
        let a = measurement_unitary(&s.mr1, &s.mr2, Completion::Ordered).unwrap();
        let b = measurement_unitary(&s.mr1, &s.mr2, Completion::Rotated(0.3)).unwrap();
        assert!(a.max_abs_diff(&b) > 1e-3);
    }

    #[test]
    fn register_decompositions_are_complete() {
        let d = setting_decomposition::<f64>(["ML1", "ML2"], 1e-12).unwrap();
        assert_eq!(d.members()[0].1.rank(), 3);
        let p = pointer_decomposition(&settings().ml2, 1, 1e-12).unwrap();
        assert_eq!(p.labels().collect::<Vec<_>>(), ["ML2+", "ML2-"]);
        assert_eq!(p.members()[1].1.rank(), 5);
    }
}

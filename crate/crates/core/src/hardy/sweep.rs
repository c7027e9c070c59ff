use rayon::prelude::*;

use super::scenario::{build_measurement_scenario, verify_hardy_predictions, HardyReport, Mode, ScenarioConfig, ScenarioOptions};
use super::{HardyAmplitudes, HardyError, HardyResult};
use crate::counterfactual::{locality_report, CounterfactualError, LocalityReport};
use crate::scalar::{Real, Tolerances};

/// One family member with its Hardy probabilities and SR verdicts.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub amplitudes: HardyAmplitudes<T>,
    pub report: HardyReport<T>,
    pub locality: Result<LocalityReport<T>, CounterfactualError>,
}

impl<T: Real> SweepRow<T> {
    pub fn s4(&self) -> Option<T> {
        self.report.s4.value
    }

    /// `P(MR2+)` reached through the `ML2+` pivot of the ML2 query.
    pub fn mr2_plus_given_ml2_plus(&self) -> Option<T> {
        let report = self.locality.as_ref().ok()?;
        let s = "ML2+";
        report.ml2.pivot(s)?.probability_of("MR2+")
    }
}

/// Evaluates every member in parallel; rows keep the input order.
pub fn parameter_sweep<T: Real>(family: &[HardyAmplitudes<T>], options: &ScenarioOptions<T>) -> HardyResult<Vec<SweepRow<T>>> {
    if family.is_empty() {
        return Err(HardyError::EmptyFamily);
    }
    family
        .par_iter()
        .map(|amps| {
            let scenario = build_measurement_scenario(&ScenarioConfig {
                amplitudes: *amps,
                options: options.clone(),
            })?;
            Ok(SweepRow {
                amplitudes: *amps,
                report: verify_hardy_predictions(&scenario, options.tolerances.consistency),
                locality: locality_report(&scenario),
            })
        })
        .collect()
}

/// Real one-parameter families of Hardy triples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetricFamily {
    /// `a = c = √((1 − b²)/2)`, parameter `b ∈ (0, 1)`.
    AEqualsC,
    /// `b = c = t`, `a = √(1 − 2t²)`, parameter `t ∈ (0, 1/√2)`.
    BEqualsC,
}

impl SymmetricFamily {
    pub fn member<T: Real>(self, parameter: T) -> HardyAmplitudes<T> {
        match self {
            Self::AEqualsC => HardyAmplitudes::symmetric_ac(parameter),
            Self::BEqualsC => HardyAmplitudes::symmetric_bc(parameter),
        }
    }

    /// Open parameter interval.
    pub fn domain<T: Real>(self) -> (T, T) {
        match self {
            Self::AEqualsC => (T::zero(), T::one()),
            Self::BEqualsC => (T::zero(), T::lit(0.5).sqrt()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct S4Optimum<T> {
    pub family: SymmetricFamily,
    pub parameter: T,
    pub amplitudes: HardyAmplitudes<T>,
    pub s4: T,
}

const COARSE_GRID: usize = 256;

/// Maximizes S4 along a family: coarse grid, then golden-section search in
/// the bracket around the best grid point. S4 is a conditional probability,
/// so it is evaluated on the cheaper particle-mode tree.
pub fn maximize_s4<T: Real>(family: SymmetricFamily, tolerances: &Tolerances<T>) -> HardyResult<S4Optimum<T>> {
    let options = ScenarioOptions {
        mode: Mode::Particle,
        prune: false,
        tolerances: *tolerances,
        ..Default::default()
    };
    let s4 = |x: T| -> HardyResult<T> {
        let scenario = build_measurement_scenario(&ScenarioConfig {
            amplitudes: family.member(x),
            options: options.clone(),
        })?;
        Ok(verify_hardy_predictions(&scenario, tolerances.consistency).s4.value.unwrap_or(T::zero()))
    };
    let (lo, hi) = family.domain::<T>();
    let step = (hi - lo) / T::lit((COARSE_GRID + 1) as f64);
    let grid: Vec<T> = (1..=COARSE_GRID).map(|i| lo + step * T::lit(i as f64)).collect();
    let values = grid.par_iter().map(|&x| s4(x)).collect::<HardyResult<Vec<T>>>()?;
    let best = (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });

    let mut a = grid[best] - step;
    let mut b = grid[best] + step;
    let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (s4(x1)?, s4(x2)?);
    for _ in 0..200 {
        if b - a < T::lit(1e-12) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = s4(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = s4(x1)?;
        }
    }
    let parameter = (a + b) / T::lit(2.0);
    Ok(S4Optimum {
        family,
        parameter,
        amplitudes: family.member(parameter),
        s4: s4(parameter)?,
    })
}

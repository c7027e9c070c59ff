//! Consistent-histories analysis of Hardy's two-particle experiment.
//!
//! The numerical core is generic over the real scalar (`f32` or `f64`); the
//! aliases below fix it to `f64`, which the default tolerances assume.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterfactual;
pub mod hardy;
pub mod histories;
pub mod qm;
pub mod scalar;
pub mod tree;

pub use num_complex::Complex;
pub use scalar::{Real, Tolerances};

pub type Complex64 = num_complex::Complex<f64>;
pub type StateVector = qm::StateVector<f64>;
pub type Operator = qm::Operator<f64>;
pub type Projector = qm::Projector<f64>;
pub type ProjectiveDecomposition = qm::ProjectiveDecomposition<f64>;
pub type DensityOperator = qm::DensityOperator<f64>;
pub type TimeGrid = histories::TimeGrid<f64>;
pub type History = histories::History<f64>;
pub type HistoryFamily = histories::HistoryFamily<f64>;
pub type ConsistencyReport = histories::ConsistencyReport<f64>;
pub type FrameworkTree = tree::FrameworkTree<f64>;
pub type HardyAmplitudes = hardy::HardyAmplitudes<f64>;
pub type HardyScenario = hardy::HardyScenario<f64>;
pub type ScenarioConfig = hardy::ScenarioConfig<f64>;
pub type ScenarioOptions = hardy::ScenarioOptions<f64>;
pub type CounterfactualVerdict = counterfactual::CounterfactualVerdict<f64>;
pub type LocalityReport = counterfactual::LocalityReport<f64>;

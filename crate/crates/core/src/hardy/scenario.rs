use std::sync::Arc;

use num_complex::Complex;

use super::apparatus::{measurement_unitary, pointer_decomposition, setting_decomposition, Completion, READY, REGISTER_DIM};
use super::{build_hardy_state, choice_from_weights, constraint_bases, HardyAmplitudes, HardyError, HardyResult, HardySettings, Side};
use crate::histories::{consistency_matrix, ConsistencyReport, TimeGrid};
use crate::qm::{embed, DensityOperator, Kron, Operator, StateVector};
use crate::scalar::{Real, Tolerances};
use crate::tree::{build_tree, prune_zero_branches, BranchPath, FrameworkTree, Schedule, Stage, StageRule};

/// How the free choice of settings enters the description.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    /// Devices are quantum registers in a superposition of ready states.
    #[default]
    Apparatus,
    /// Only the two qubits are quantum; settings are classical choices.
    Particle,
}

/// Which side's choice and readout come first on the time grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TimeOrder {
    #[default]
    LeftFirst,
    RightFirst,
}

impl TimeOrder {
    /// Times of the setting choice on each side: `(L, R)`.
    pub fn choice_times(self) -> (usize, usize) {
        match self {
            Self::LeftFirst => (1, 3),
            Self::RightFirst => (3, 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOptions<T> {
    /// Ready-state amplitudes `(α, β)` of the L device.
    pub choice_l: [Complex<T>; 2],
    pub choice_r: [Complex<T>; 2],
    pub mode: Mode,
    pub order: TimeOrder,
    pub completion: Completion<T>,
    pub tolerances: Tolerances<T>,
    pub prune: bool,
}

impl<T: Real> Default for ScenarioOptions<T> {
    fn default() -> Self {
        let half = T::lit(0.5);
        Self {
            choice_l: choice_from_weights(half, half),
            choice_r: choice_from_weights(half, half),
            mode: Mode::default(),
            order: TimeOrder::default(),
            completion: Completion::default(),
            tolerances: Tolerances::default(),
            prune: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig<T> {
    pub amplitudes: HardyAmplitudes<T>,
    pub options: ScenarioOptions<T>,
}

impl<T: Real> Default for ScenarioConfig<T> {
    fn default() -> Self {
        Self {
            amplitudes: HardyAmplitudes::equal(),
            options: ScenarioOptions::default(),
        }
    }
}

/// A built two-region experiment: settings, framework tree and its
/// consistency certificate.
#[derive(Clone, Debug)]
pub struct HardyScenario<T> {
    amplitudes: Option<HardyAmplitudes<T>>,
    settings: HardySettings<T>,
    options: ScenarioOptions<T>,
    weights_l: [T; 2],
    weights_r: [T; 2],
    tree: FrameworkTree<T>,
    consistency: ConsistencyReport<T>,
}

/// Builds the scenario for a Hardy triple; the d-type bases follow from the
/// amplitudes. Degenerate but non-strict triples (for example `b = 0`) are
/// accepted so that their predictions can be inspected.
pub fn build_measurement_scenario<T: Real>(config: &ScenarioConfig<T>) -> HardyResult<HardyScenario<T>> {
    let amps = config.amplitudes;
    HardyAmplitudes::new(amps.a, amps.b, amps.c, config.options.tolerances.algebra.max(T::lit(1e-9)))?;
    let bases = constraint_bases(&amps)?;
    let settings = HardySettings::from_bases(&bases, config.options.tolerances.algebra)?;
    HardyScenario::assemble(Some(amps), &build_hardy_state(&amps), settings, config.options.clone())
}

impl<T: Real> HardyScenario<T> {
    /// Arbitrary two-qubit state with arbitrary settings.
    pub fn custom(state: &StateVector<T>, settings: HardySettings<T>, options: ScenarioOptions<T>) -> HardyResult<Self> {
        if state.dim() != 4 {
            return Err(crate::qm::QmError::DimensionMismatch {
                expected: 4,
                found: state.dim(),
            }
            .into());
        }
        Self::assemble(None, state, settings, options)
    }

    fn assemble(
        amplitudes: Option<HardyAmplitudes<T>>,
        psi: &StateVector<T>,
        settings: HardySettings<T>,
        options: ScenarioOptions<T>,
    ) -> HardyResult<Self> {
        let tol = options.tolerances;
        let weights_l = choice_weights(&options.choice_l, Side::L, tol.algebra)?;
        let weights_r = choice_weights(&options.choice_r, Side::R, tol.algebra)?;
        let names_l = [settings.ml1.name.as_str(), settings.ml2.name.as_str()];
        let names_r = [settings.mr1.name.as_str(), settings.mr2.name.as_str()];

        let (tl, tr) = options.order.choice_times();
        let (grid, schedule, rho) = match options.mode {
            Mode::Particle => {
                let dims = [2, 2];
                let outcomes = |side: usize, time: usize, pair: [&super::MeasurementSetting<T>; 2]| -> HardyResult<StageRule<T>> {
                    let cases = pair
                        .iter()
                        .map(|s| Ok((s.name.clone(), Stage::Projective(s.decomposition(tol.algebra)?.embed(&dims, &[side])?))))
                        .collect::<HardyResult<Vec<_>>>()?;
                    Ok(StageRule::ByAncestor { time, cases })
                };
                let schedule = ordered(
                    options.order,
                    [
                        StageRule::Fixed(Stage::choice(&[(names_l[0], weights_l[0]), (names_l[1], weights_l[1])], tol.algebra)?),
                        outcomes(0, tl, settings.left())?,
                    ],
                    [
                        StageRule::Fixed(Stage::choice(&[(names_r[0], weights_r[0]), (names_r[1], weights_r[1])], tol.algebra)?),
                        outcomes(1, tr, settings.right())?,
                    ],
                );
                (TimeGrid::identity(4, 4), schedule, DensityOperator::from_pure(psi, tol.algebra)?)
            }
            Mode::Apparatus => {
                let dims = [2, 2, REGISTER_DIM, REGISTER_DIM];
                let dim: usize = dims.iter().product();
                let ready = |amps: &[Complex<T>; 2]| {
                    let mut v = StateVector::zeros(REGISTER_DIM);
                    v.axpy(amps[0], &StateVector::basis(REGISTER_DIM, READY[0]));
                    v.axpy(amps[1], &StateVector::basis(REGISTER_DIM, READY[1]));
                    v
                };
                let initial = psi.kron(&ready(&options.choice_l)).kron(&ready(&options.choice_r));
                let u_l = measurement_unitary(&settings.ml1, &settings.ml2, options.completion)?;
                let u_r = measurement_unitary(&settings.mr1, &settings.mr2, options.completion)?;
                // evolutions[i] leads into time i + 1, so each coupling sits between
                // its device's setting projection and its readout.
                let mut evolutions: Vec<Operator<T>> = (0..4).map(|_| Operator::identity(dim)).collect();
                evolutions[tl] = embed(&u_l, &dims, &[0, 2])?;
                evolutions[tr] = embed(&u_r, &dims, &[1, 3])?;
                let times = (0..5).map(|t| T::lit(t as f64)).collect();
                let grid = TimeGrid::new(times, evolutions, dim, tol.algebra.max(T::lit(1e-10)))?;
                let readout = |site: usize, time: usize, pair: [&super::MeasurementSetting<T>; 2]| -> HardyResult<StageRule<T>> {
                    let cases = pair
                        .iter()
                        .enumerate()
                        .map(|(i, s)| Ok((s.name.clone(), Stage::Projective(pointer_decomposition(s, i, tol.algebra)?.embed(&dims, &[site])?))))
                        .collect::<HardyResult<Vec<_>>>()?;
                    Ok(StageRule::ByAncestor { time, cases })
                };
                let schedule = ordered(
                    options.order,
                    [
                        StageRule::Fixed(Stage::Projective(setting_decomposition(names_l, tol.algebra)?.embed(&dims, &[2])?)),
                        readout(2, tl, settings.left())?,
                    ],
                    [
                        StageRule::Fixed(Stage::Projective(setting_decomposition(names_r, tol.algebra)?.embed(&dims, &[3])?)),
                        readout(3, tr, settings.right())?,
                    ],
                );
                (grid, schedule, DensityOperator::from_pure(&initial, tol.algebra.max(T::lit(1e-10)))?)
            }
        };

        let mut tree = build_tree(Arc::new(grid), &schedule, rho)?;
        if options.prune {
            tree = prune_zero_branches(&tree, tol.prune);
        }
        let consistency = consistency_matrix(&tree.family()?, tol.consistency);
        if let Some(worst) = consistency.worst_offdiag.filter(|_| !consistency.is_consistent()) {
            return Err(HardyError::Inconsistent {
                magnitude: worst.magnitude.as_f64(),
            });
        }
        Ok(Self {
            amplitudes,
            settings,
            options,
            weights_l,
            weights_r,
            tree,
            consistency,
        })
    }

    /// `None` for scenarios built from an arbitrary state.
    pub fn amplitudes(&self) -> Option<&HardyAmplitudes<T>> {
        self.amplitudes.as_ref()
    }

    pub fn settings(&self) -> &HardySettings<T> {
        &self.settings
    }

    pub fn options(&self) -> &ScenarioOptions<T> {
        &self.options
    }

    pub fn mode(&self) -> Mode {
        self.options.mode
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.options.tolerances
    }

    pub fn tree(&self) -> &FrameworkTree<T> {
        &self.tree
    }

    pub fn consistency(&self) -> &ConsistencyReport<T> {
        &self.consistency
    }

    /// Prior setting probabilities `[P(ML1), P(ML2)]`.
    pub fn weights_l(&self) -> [T; 2] {
        self.weights_l
    }

    pub fn weights_r(&self) -> [T; 2] {
        self.weights_r
    }

    /// Every leaf (pruned ones included) with its joint probability.
    pub fn leaf_table(&self) -> Vec<(BranchPath, T)> {
        self.tree
            .all_leaves()
            .into_iter()
            .map(|(p, n)| (p, n.probability))
            .collect()
    }

    /// `P(o_L, o_R | s_L, s_R)` for every setting pair with nonzero prior.
    pub fn joint_table(&self) -> JointTable<T> {
        let s = &self.settings;
        let left = [&s.ml1, &s.ml2];
        let right = [&s.mr1, &s.mr2];
        let mut entries = [[None; 2]; 2];
        for (i, sl) in left.iter().enumerate() {
            for (j, sr) in right.iter().enumerate() {
                let prior = self.weights_l[i] * self.weights_r[j];
                if !(prior > self.options.tolerances.algebra) {
                    continue;
                }
                let mut table = [[T::zero(); 2]; 2];
                for (path, p) in self.leaf_table() {
                    if !(path.contains(&sl.name) && path.contains(&sr.name)) {
                        continue;
                    }
                    let ol = if path.contains(&sl.plus_label()) { 0 } else { 1 };
                    let or = if path.contains(&sr.plus_label()) { 0 } else { 1 };
                    table[ol][or] += p / prior;
                }
                entries[i][j] = Some(table);
            }
        }
        JointTable {
            left: left.map(|m| m.name.clone()),
            right: right.map(|m| m.name.clone()),
            entries,
        }
    }
}

fn ordered<T: Real>(order: TimeOrder, left: [StageRule<T>; 2], right: [StageRule<T>; 2]) -> Schedule<T> {
    let (first, second) = match order {
        TimeOrder::LeftFirst => (left, right),
        TimeOrder::RightFirst => (right, left),
    };
    Schedule::new(first.into_iter().chain(second).collect())
}

fn choice_weights<T: Real>(amps: &[Complex<T>; 2], side: Side, tol: T) -> HardyResult<[T; 2]> {
    let w = [amps[0].norm_sqr(), amps[1].norm_sqr()];
    let total = w[0] + w[1];
    if !((total - T::one()).abs() < tol.max(T::lit(1e-9))) {
        return Err(HardyError::InvalidChoice {
            side,
            norm_sqr: total.as_f64(),
        });
    }
    Ok(w)
}

/// Conditional outcome probabilities per setting pair.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable<T> {
    pub left: [String; 2],
    pub right: [String; 2],
    /// `entries[s_L][s_R][o_L][o_R]`, outcome index 0 for `+`; `None` when
    /// the setting pair has zero prior.
    pub entries: [[Option<[[T; 2]; 2]>; 2]; 2],
}

impl<T: Real> JointTable<T> {
    /// `P(l, r | settings)` for outcome labels such as `"ML2+"`, `"MR2-"`.
    pub fn get(&self, l: &str, r: &str) -> Option<T> {
        let (sl, ol) = Self::split(&self.left, l)?;
        let (sr, or) = Self::split(&self.right, r)?;
        self.entries[sl][sr].map(|t| t[ol][or])
    }

    fn split(names: &[String; 2], label: &str) -> Option<(usize, usize)> {
        let (name, sign) = label.split_at(label.len().checked_sub(1)?);
        let setting = names.iter().position(|n| n == name)?;
        let outcome = match sign {
            "+" => 0,
            "-" => 1,
            _ => return None,
        };
        Some((setting, outcome))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionCheck<T> {
    pub name: &'static str,
    pub left: String,
    pub right: String,
    /// `None` when the setting pair has zero prior.
    pub value: Option<T>,
    pub holds: bool,
}

/// The four Hardy probabilities: three that must vanish and one that must not.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyReport<T> {
    pub s1: PredictionCheck<T>,
    pub s2: PredictionCheck<T>,
    pub s3: PredictionCheck<T>,
    pub s4: PredictionCheck<T>,
}

impl<T> HardyReport<T> {
    pub fn zeros_hold(&self) -> bool {
        self.s1.holds && self.s2.holds && self.s3.holds
    }

    pub fn is_hardy(&self) -> bool {
        self.zeros_hold() && self.s4.holds
    }

    pub fn checks(&self) -> [&PredictionCheck<T>; 4] {
        [&self.s1, &self.s2, &self.s3, &self.s4]
    }
}

pub fn verify_hardy_predictions<T: Real>(scenario: &HardyScenario<T>, tol: T) -> HardyReport<T> {
    let table = scenario.joint_table();
    let s = scenario.settings();
    let check = |name, l: String, r: String, expect_zero: bool| {
        let value = table.get(&l, &r);
        let holds = value.is_some_and(|v| if expect_zero { v < tol } else { v > tol });
        PredictionCheck {
            name,
            left: l,
            right: r,
            value,
            holds,
        }
    };
    HardyReport {
        s1: check("S1", s.ml1.minus_label(), s.mr1.plus_label(), true),
        s2: check("S2", s.ml1.plus_label(), s.mr2.minus_label(), true),
        s3: check("S3", s.ml2.plus_label(), s.mr1.minus_label(), true),
        s4: check("S4", s.ml2.plus_label(), s.mr2.minus_label(), false),
    }
}

/// One marginal compared across the far side's two settings.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalComparison<T> {
    /// Outcome label, e.g. `"MR1+"`.
    pub outcome: String,
    /// The far-side settings the marginal was computed under.
    pub far_settings: [String; 2],
    pub values: [T; 2],
    pub discrepancy: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoSignalingReport<T> {
    pub comparisons: Vec<MarginalComparison<T>>,
    pub max_discrepancy: T,
}

/// Each side's outcome marginals must not depend on the other side's setting.
/// Pairs with zero prior are skipped.
pub fn no_signaling_report<T: Real>(scenario: &HardyScenario<T>) -> NoSignalingReport<T> {
    let table = scenario.joint_table();
    let s = scenario.settings();
    let mut comparisons = Vec::new();
    for (j, near) in s.right().into_iter().enumerate() {
        for (o, label) in [near.plus_label(), near.minus_label()].into_iter().enumerate() {
            let marginal = |i: usize| table.entries[i][j].map(|t| t[0][o] + t[1][o]);
            if let (Some(x), Some(y)) = (marginal(0), marginal(1)) {
                comparisons.push(MarginalComparison {
                    outcome: label,
                    far_settings: table.left.clone(),
                    values: [x, y],
                    discrepancy: (x - y).abs(),
                });
            }
        }
    }
    for (i, near) in s.left().into_iter().enumerate() {
        for (o, label) in [near.plus_label(), near.minus_label()].into_iter().enumerate() {
            let marginal = |j: usize| table.entries[i][j].map(|t| t[o][0] + t[o][1]);
            if let (Some(x), Some(y)) = (marginal(0), marginal(1)) {
                comparisons.push(MarginalComparison {
                    outcome: label,
                    far_settings: table.right.clone(),
                    values: [x, y],
                    discrepancy: (x - y).abs(),
                });
            }
        }
    }
    let max_discrepancy = comparisons.iter().map(|c| c.discrepancy).fold(T::zero(), T::max);
    NoSignalingReport {
        comparisons,
        max_discrepancy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(mode: Mode) -> HardyScenario<f64> {
        build_measurement_scenario(&ScenarioConfig {
            options: ScenarioOptions {
                mode,
                ..Default::default()
            },
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn equal_amplitudes_give_hardy_numbers() {
        for mode in [Mode::Particle, Mode::Apparatus] {
            let s = scenario(mode);
            let report = verify_hardy_predictions(&s, 1e-10);
            assert!(report.is_hardy(), "{mode:?}");
            assert!((report.s4.value.unwrap() - 1.0 / 12.0).abs() < 1e-12);
            let leaf = s
                .leaf_table()
                .into_iter()
                .find(|(p, _)| p.labels() == ["ML2", "ML2+", "MR2", "MR2-"])
                .unwrap();
            assert!((leaf.1 - 1.0 / 48.0).abs() < 1e-12);
            assert_eq!(s.tree().total_leaf_count(), 16);
            assert!(s.consistency().is_consistent());
        }
    }

    #[test]
    fn b_zero_scenario_fails_s4_only() {
        let amps = HardyAmplitudes::real(0.6, 0.0, 0.8, 1e-12).unwrap();
        let s = build_measurement_scenario(&ScenarioConfig {
            amplitudes: amps,
            options: ScenarioOptions {
                mode: Mode::Particle,
                ..Default::default()
            },
        })
        .unwrap();
        let report = verify_hardy_predictions(&s, 1e-10);
        assert!(report.zeros_hold());
        assert!(!report.s4.holds);
    }

    #[test]
    fn zero_prior_pairs_are_unavailable() {
        let s = build_measurement_scenario(&ScenarioConfig {
            amplitudes: HardyAmplitudes::equal(),
            options: ScenarioOptions {
                mode: Mode::Particle,
                choice_l: choice_from_weights(1.0, 0.0),
                ..Default::default()
            },
        })
        .unwrap();
        let report = verify_hardy_predictions(&s, 1e-10);
        assert_eq!(report.s3.value, None);
        assert!(!report.is_hardy());
        assert!(no_signaling_report(&s).comparisons.iter().all(|c| c.outcome.starts_with("ML")));
    }

    #[test]
    fn rejects_unnormalized_choice() {
        let err = build_measurement_scenario(&ScenarioConfig {
            amplitudes: HardyAmplitudes::<f64>::equal(),
            options: ScenarioOptions {
                choice_l: choice_from_weights(0.7, 0.7),
                ..Default::default()
            },
        })
        .unwrap_err();
        assert!(matches!(err, HardyError::InvalidChoice { side: Side::L, .. }));
    }

    #[test]
    fn time_order_does_not_change_the_joint_table() {
        for mode in [Mode::Particle, Mode::Apparatus] {
            let build = |order| -> JointTable<f64> {
                build_measurement_scenario(&ScenarioConfig {
                    amplitudes: HardyAmplitudes::normalized(Complex::new(0.5, 0.1), Complex::new(0.3, -0.4), Complex::new(0.2, 0.6))
                        .unwrap(),
                    options: ScenarioOptions {
                        mode,
                        order,
                        ..Default::default()
                    },
                })
                .unwrap()
                .joint_table()
            };
            let (a, b) = (build(TimeOrder::LeftFirst), build(TimeOrder::RightFirst));
            for (ra, rb) in a.entries.iter().flatten().zip(b.entries.iter().flatten()) {
                let (ra, rb) = (ra.unwrap(), rb.unwrap());
                for (x, y) in ra.iter().flatten().zip(rb.iter().flatten()) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn no_signaling_holds() {
        let report = no_signaling_report(&scenario(Mode::Apparatus));
        assert_eq!(report.comparisons.len(), 8);
        assert!(report.max_discrepancy < 1e-12);
    }
}

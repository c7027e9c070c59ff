//! Counterfactual queries on a framework tree.
//!
//! A query fixes a premise (a set of events that occurred), a pivot time and
//! an alternative branch at that time. The pivot nodes sit one step earlier
//! on the premise-compatible paths; from each one the state is carried down
//! the alternative branch and the outcome distribution one step later is
//! read off. Probabilities are conditioned on the pivot node.

use thiserror::Error;

use crate::hardy::{no_signaling_report, HardyScenario, NoSignalingReport};
use crate::qm::StateVector;
use crate::scalar::{creal, Real};
use crate::tree::{ensemble_weight, BranchPath, FrameworkTree, NodeKind, TreeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CounterfactualError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("premise has probability {probability:.3e}; nothing to condition on")]
    VacuousPremise { probability: f64 },
    #[error("`{label}` is not an event of this framework")]
    FrameworkViolation { label: String },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("alternative `{alternative}` cannot be reached from pivot {pivot}")]
    UnreachableAlternative { alternative: String, pivot: BranchPath },
    #[error("not a Hardy state: every amplitude must be nonzero")]
    NotHardyState,
}

pub type CounterfactualResult<T> = Result<T, CounterfactualError>;

/// The events assumed to have occurred.
#[derive(Clone, Debug, PartialEq)]
pub enum Premise {
    /// A path prefix from the root.
    Path(BranchPath),
    /// Labels that must all appear somewhere on the path.
    Labels(Vec<String>),
}

impl Premise {
    pub fn labels<S: AsRef<str>>(labels: &[S]) -> Self {
        Self::Labels(labels.iter().map(|l| l.as_ref().to_string()).collect())
    }

    pub fn matches(&self, path: &BranchPath) -> bool {
        match self {
            Self::Path(prefix) => prefix.len() <= path.len() && path.labels()[..prefix.len()] == *prefix.labels(),
            Self::Labels(labels) => labels.iter().all(|l| path.contains(l)),
        }
    }

    fn mentioned(&self) -> &[String] {
        match self {
            Self::Path(p) => p.labels(),
            Self::Labels(l) => l,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterfactualQuery {
    pub premise: Premise,
    /// Time of the alternative branch; pivots sit at `pivot_time − 1`.
    pub pivot_time: usize,
    pub alternative: String,
    /// Outcome labels one step after the alternative; empty means all.
    pub targets: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivotPath<T> {
    pub path: BranchPath,
    /// `P(pivot | premise)`.
    pub probability: T,
}

/// Outcome distribution reached through the alternative from one pivot.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotOutcome<T> {
    pub pivot: PivotPath<T>,
    pub distribution: Vec<(String, T)>,
}

impl<T: Real> PivotOutcome<T> {
    pub fn probability_of(&self, outcome: &str) -> Option<T> {
        self.distribution.iter().find(|(l, _)| l == outcome).map(|(_, p)| *p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRange<T> {
    pub outcome: String,
    pub min: T,
    pub max: T,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Classification<T> {
    /// Probability 1 (within tolerance) on every pivot path; carries the minimum.
    Necessary { outcome: String, probability: T },
    /// Single-target query whose outcome has probability 0 on every pivot path;
    /// carries the maximum.
    Impossible { outcome: String, probability: T },
    /// Per-target probability ranges over the pivot paths.
    Possible(Vec<OutcomeRange<T>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterfactualVerdict<T> {
    pub classification: Classification<T>,
    pub pivots: Vec<PivotOutcome<T>>,
}

impl<T: Real> CounterfactualVerdict<T> {
    pub fn is_necessary(&self, outcome: &str) -> bool {
        matches!(&self.classification, Classification::Necessary { outcome: o, .. } if o == outcome)
    }

    /// Distribution from the pivot whose last label is `pivot_label`.
    pub fn pivot(&self, pivot_label: &str) -> Option<&PivotOutcome<T>> {
        self.pivots.iter().find(|p| p.pivot.path.last() == Some(pivot_label))
    }
}

/// Premise-compatible leaves, grouped by their node at `pivot_time − 1`,
/// with the conditional probability of each group. Groups at or below `tol`
/// are dropped.
pub fn find_pivot<T: Real>(
    tree: &FrameworkTree<T>,
    premise: &Premise,
    pivot_time: usize,
    tol: T,
) -> CounterfactualResult<Vec<PivotPath<T>>> {
    if pivot_time == 0 || pivot_time > tree.grid().final_time() {
        return Err(CounterfactualError::InvalidQuery(format!(
            "pivot time {pivot_time} outside 1..={}",
            tree.grid().final_time()
        )));
    }
    let mut groups: Vec<(BranchPath, T)> = Vec::new();
    let mut total = T::zero();
    for (path, node) in tree.all_leaves() {
        if !premise.matches(&path) {
            continue;
        }
        total += node.probability;
        let prefix = path.prefix(pivot_time - 1);
        match groups.iter_mut().find(|(p, _)| *p == prefix) {
            Some((_, w)) => *w += node.probability,
            None => groups.push((prefix, node.probability)),
        }
    }
    if !(total > tol) {
        return Err(CounterfactualError::VacuousPremise {
            probability: total.as_f64(),
        });
    }
    Ok(groups
        .into_iter()
        .map(|(path, w)| PivotPath {
            path,
            probability: w / total,
        })
        .filter(|p| p.probability > tol)
        .collect())
}

pub fn evaluate_counterfactual<T: Real>(
    tree: &FrameworkTree<T>,
    query: &CounterfactualQuery,
    tol: T,
) -> CounterfactualResult<CounterfactualVerdict<T>> {
    let final_time = tree.grid().final_time();
    if query.pivot_time == 0 || query.pivot_time >= final_time {
        return Err(CounterfactualError::InvalidQuery(format!(
            "pivot time {} must lie in 1..{final_time}",
            query.pivot_time
        )));
    }
    let known: Vec<BranchPath> = tree.all_leaves().into_iter().map(|(p, _)| p).collect();
    for label in query.premise.mentioned() {
        if !known.iter().any(|p| p.contains(label)) {
            return Err(CounterfactualError::FrameworkViolation { label: label.clone() });
        }
    }
    if let Premise::Path(prefix) = &query.premise {
        if tree.resolve(prefix).is_none() {
            return Err(CounterfactualError::FrameworkViolation {
                label: prefix.to_string(),
            });
        }
    }

    let pivots = find_pivot(tree, &query.premise, query.pivot_time, tol)?;
    if pivots.is_empty() {
        return Err(CounterfactualError::VacuousPremise { probability: 0.0 });
    }
    // The alternative must be counterfactual: no premise-compatible history
    // of positive weight takes it.
    for (path, node) in tree.all_leaves() {
        if node.probability > tol
            && query.premise.matches(&path)
            && path.labels().get(query.pivot_time - 1) == Some(&query.alternative)
        {
            return Err(CounterfactualError::InvalidQuery(format!(
                "premise already allows `{}` at time {}",
                query.alternative, query.pivot_time
            )));
        }
    }

    let mut outcomes = Vec::with_capacity(pivots.len());
    for pivot in pivots {
        outcomes.push(propagate_alternative(tree, pivot, query, tol)?);
    }
    let targets: Vec<String> = if query.targets.is_empty() {
        outcomes[0].distribution.iter().map(|(l, _)| l.clone()).collect()
    } else {
        query.targets.clone()
    };
    for t in &targets {
        if outcomes.iter().any(|o| o.probability_of(t).is_none()) {
            return Err(CounterfactualError::FrameworkViolation { label: t.clone() });
        }
    }
    Ok(CounterfactualVerdict {
        classification: classify(&outcomes, &targets, tol),
        pivots: outcomes,
    })
}

fn propagate_alternative<T: Real>(
    tree: &FrameworkTree<T>,
    pivot: PivotPath<T>,
    query: &CounterfactualQuery,
    tol: T,
) -> CounterfactualResult<PivotOutcome<T>> {
    let node = tree.resolve(&pivot.path).expect("pivot is a prefix of a leaf");
    let alt = node
        .child(&query.alternative)
        .ok_or_else(|| CounterfactualError::FrameworkViolation {
            label: pivot.path.child(&query.alternative).to_string(),
        })?;
    let vectors = tree.branch_vectors(&pivot.path).expect("pivot resolves");
    let at_pivot = normalize(&vectors, ensemble_weight(&vectors));
    let through = tree.step(alt, &at_pivot);
    let reach = ensemble_weight(&through);
    let prior = match alt.kind {
        NodeKind::Choice(w) => w,
        _ => T::one(),
    };
    if !(reach * prior > tol) {
        return Err(CounterfactualError::UnreachableAlternative {
            alternative: query.alternative.clone(),
            pivot: pivot.path,
        });
    }
    let through = normalize(&through, reach);
    let distribution = alt
        .children
        .iter()
        .map(|child| (child.label.clone(), ensemble_weight(&tree.step(child, &through))))
        .collect();
    Ok(PivotOutcome { pivot, distribution })
}

fn normalize<T: Real>(vectors: &[StateVector<T>], weight: T) -> Vec<StateVector<T>> {
    let s = creal(T::one() / weight.sqrt());
    vectors.iter().map(|v| v.scale(s)).collect()
}

fn classify<T: Real>(outcomes: &[PivotOutcome<T>], targets: &[String], tol: T) -> Classification<T> {
    let values = |t: &str| -> Vec<T> { outcomes.iter().map(|o| o.probability_of(t).expect("checked")).collect() };
    for t in targets {
        if values(t).iter().all(|&p| p > T::one() - tol) {
            return Classification::Necessary {
                outcome: t.clone(),
                probability: values(t).into_iter().fold(T::one(), T::min),
            };
        }
    }
    if let [t] = targets {
        if values(t).iter().all(|&p| p < tol) {
            return Classification::Impossible {
                outcome: t.clone(),
                probability: values(t).into_iter().fold(T::zero(), T::max),
            };
        }
    }
    Classification::Possible(
        targets
            .iter()
            .map(|t| OutcomeRange {
                outcome: t.clone(),
                min: values(t).into_iter().fold(T::infinity(), T::min),
                max: values(t).into_iter().fold(T::neg_infinity(), T::max),
            })
            .collect(),
    )
}

/// Which L setting the counterfactual argument starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LSetting {
    ML1,
    ML2,
}

impl LSetting {
    pub fn label(self) -> &'static str {
        match self {
            Self::ML1 => "ML1",
            Self::ML2 => "ML2",
        }
    }
}

/// The SR query: given `MR1` was measured with result `MR1+`, what would
/// `MR2` have shown? The pivot is the node just before the R setting choice.
pub fn sr_query<T: Real>(scenario: &HardyScenario<T>, setting: LSetting) -> CounterfactualQuery {
    let s = scenario.settings();
    let l = match setting {
        LSetting::ML1 => &s.ml1,
        LSetting::ML2 => &s.ml2,
    };
    CounterfactualQuery {
        premise: Premise::labels(&[l.name.clone(), s.mr1.name.clone(), s.mr1.plus_label()]),
        pivot_time: scenario.options().order.choice_times().1,
        alternative: s.mr2.name.clone(),
        targets: vec![s.mr2.plus_label(), s.mr2.minus_label()],
    }
}

pub fn evaluate_sr<T: Real>(scenario: &HardyScenario<T>, setting: LSetting) -> CounterfactualResult<CounterfactualVerdict<T>> {
    evaluate_counterfactual(scenario.tree(), &sr_query(scenario, setting), scenario.tolerances().consistency)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalityReport<T> {
    pub ml1: CounterfactualVerdict<T>,
    pub ml2: CounterfactualVerdict<T>,
    /// The SR verdict is necessary under ML1 but not under ML2.
    pub demonstrated: bool,
    pub no_signaling: NoSignalingReport<T>,
}

/// Runs the SR query under both L settings side by side.
pub fn locality_report<T: Real>(scenario: &HardyScenario<T>) -> CounterfactualResult<LocalityReport<T>> {
    if scenario.amplitudes().is_some_and(|a| !a.is_strict()) {
        return Err(CounterfactualError::NotHardyState);
    }
    let ml1 = evaluate_sr(scenario, LSetting::ML1)?;
    let ml2 = evaluate_sr(scenario, LSetting::ML2)?;
    let target = scenario.settings().mr2.plus_label();
    let demonstrated = ml1.is_necessary(&target) && !ml2.is_necessary(&target);
    Ok(LocalityReport {
        ml1,
        ml2,
        demonstrated,
        no_signaling: no_signaling_report(scenario),
    })
}

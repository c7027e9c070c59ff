//! Branching-tree presentation of a history family.
//!
//! A tree starts at `t_0` (carrying ρ) and branches once per time according
//! to a [`Schedule`]. Each root-to-leaf path is a history; the set of leaf
//! paths is the family. The decomposition used at a time may depend on the
//! branch taken earlier, so outcome projectors can differ per setting.

mod compat;
mod export;

pub use compat::{check_compatibility, enforce_single_framework, Compatibility, Witness};
pub use export::{NodeDocument, TreeDocument, TREE_SCHEMA_VERSION};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histories::{Event, History, HistoryError, HistoryFamily, TimeGrid};
use crate::qm::{DensityOperator, ProjectiveDecomposition, Projector, QmError, StateVector};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error(transparent)]
    Qm(#[from] QmError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error("schedule covers {found} times, grid has {expected}")]
    ScheduleLength { expected: usize, found: usize },
    #[error("schedule has no stage for time {time} after branch `{path}`")]
    MissingBranch { time: usize, path: BranchPath },
    #[error("stage at time {time} has dim {found}, system dim is {expected}")]
    DimensionMismatch {
        time: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid choice stage: {0}")]
    InvalidChoice(String),
    #[error("path `{path}` leaves the framework at label `{label}` (position {position})")]
    FrameworkViolation {
        path: BranchPath,
        position: usize,
        label: String,
    },
    #[error("tree document: {0}")]
    Document(String),
}

pub type TreeResult<T> = Result<T, TreeError>;

/// Labels from `t_1` down to some node.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchPath(pub Vec<String>);

impl BranchPath {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Self {
        Self(labels.iter().map(|s| s.as_ref().to_string()).collect())
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<&str> {
        self.0.last().map(String::as_str)
    }

    pub fn child(&self, label: &str) -> Self {
        let mut labels = self.0.clone();
        labels.push(label.to_string());
        Self(labels)
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.iter().any(|l| l == label)
    }
}

impl fmt::Display for BranchPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("(root)");
        }
        f.write_str(&self.0.join(" > "))
    }
}

/// What a tree offers at one time.
#[derive(Clone, Debug, PartialEq)]
pub enum Stage<T> {
    Projective(ProjectiveDecomposition<T>),
    /// Free classical choice among labelled settings with prior weights.
    Choice(Vec<(String, T)>),
}

impl<T: Real> Stage<T> {
    pub fn choice(options: &[(&str, T)], tol: T) -> TreeResult<Self> {
        if options.is_empty() {
            return Err(TreeError::InvalidChoice("no options".into()));
        }
        let mut total = T::zero();
        for (i, (label, w)) in options.iter().enumerate() {
            if !(*w >= T::zero() && *w <= T::one()) {
                return Err(TreeError::InvalidChoice(format!("weight {w} of `{label}`")));
            }
            if options[..i].iter().any(|(l, _)| l == label) {
                return Err(TreeError::InvalidChoice(format!("duplicate label `{label}`")));
            }
            total += *w;
        }
        if !((total - T::one()).abs() < tol) {
            return Err(TreeError::InvalidChoice(format!("weights sum to {total}")));
        }
        Ok(Self::Choice(options.iter().map(|(l, w)| (l.to_string(), *w)).collect()))
    }

    pub fn labels(&self) -> Vec<&str> {
        match self {
            Self::Projective(pvm) => pvm.labels().collect(),
            Self::Choice(options) => options.iter().map(|(l, _)| l.as_str()).collect(),
        }
    }
}

/// How the stage for one time is selected.
#[derive(Clone, Debug, PartialEq)]
pub enum StageRule<T> {
    Fixed(Stage<T>),
    /// Keyed on the label the branch carries at an earlier `time`.
    ByAncestor {
        time: usize,
        cases: Vec<(String, Stage<T>)>,
    },
}

/// Stage rules for `t_1 … t_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule<T> {
    rules: Vec<StageRule<T>>,
}

impl<T: Real> Schedule<T> {
    pub fn new(rules: Vec<StageRule<T>>) -> Self {
        Self { rules }
    }

    /// The same decomposition on every branch at each time.
    pub fn uniform(stages: Vec<Stage<T>>) -> Self {
        Self::new(stages.into_iter().map(StageRule::Fixed).collect())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Stage for the children of the node at `path` (which sits at `time − 1`).
    pub fn stage_for(&self, time: usize, path: &BranchPath) -> TreeResult<&Stage<T>> {
        let missing = || TreeError::MissingBranch {
            time,
            path: path.clone(),
        };
        match self.rules.get(time - 1).ok_or_else(missing)? {
            StageRule::Fixed(stage) => Ok(stage),
            StageRule::ByAncestor { time: at, cases } => {
                let key = path.labels().get(at.wrapping_sub(1)).ok_or_else(missing)?;
                cases
                    .iter()
                    .find(|(label, _)| label == key)
                    .map(|(_, stage)| stage)
                    .ok_or_else(missing)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind<T> {
    Root,
    Projective(Projector<T>),
    Choice(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchNode<T> {
    pub time: usize,
    pub label: String,
    pub kind: NodeKind<T>,
    /// Cumulative weight of reaching this node: choice weights × ‖F_partial ρ F_partial†‖.
    pub probability: T,
    pub pruned: bool,
    pub children: Vec<BranchNode<T>>,
}

impl<T: Real> BranchNode<T> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn child(&self, label: &str) -> Option<&BranchNode<T>> {
        self.children.iter().find(|c| c.label == label)
    }

    pub fn live_children(&self) -> impl Iterator<Item = &BranchNode<T>> {
        self.children.iter().filter(|c| !c.pruned)
    }

    pub fn projector(&self) -> Option<&Projector<T>> {
        match &self.kind {
            NodeKind::Projective(p) => Some(p),
            _ => None,
        }
    }

    fn mark_pruned(&mut self) {
        self.pruned = true;
        for c in &mut self.children {
            c.mark_pruned();
        }
    }

    fn count_leaves(&self, include_pruned: bool) -> usize {
        if self.pruned && !include_pruned {
            return 0;
        }
        if self.is_leaf() {
            return 1;
        }
        self.children.iter().map(|c| c.count_leaves(include_pruned)).sum()
    }
}

/// A path removed by pruning, with the weight it had.
#[derive(Clone, Debug, PartialEq)]
pub struct PrunedBranch<T> {
    pub path: BranchPath,
    pub probability: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameworkTree<T> {
    grid: Arc<TimeGrid<T>>,
    rho: DensityOperator<T>,
    root: BranchNode<T>,
    pruned: Vec<PrunedBranch<T>>,
}

/// Expands `schedule` into the full tree and records every node's weight.
pub fn build_tree<T: Real>(
    grid: Arc<TimeGrid<T>>,
    schedule: &Schedule<T>,
    rho: DensityOperator<T>,
) -> TreeResult<FrameworkTree<T>> {
    if schedule.len() != grid.final_time() {
        return Err(TreeError::ScheduleLength {
            expected: grid.final_time(),
            found: schedule.len(),
        });
    }
    if rho.dim() != grid.dim() {
        return Err(TreeError::DimensionMismatch {
            time: 0,
            expected: grid.dim(),
            found: rho.dim(),
        });
    }
    let mut root = BranchNode {
        time: 0,
        label: "root".into(),
        kind: NodeKind::Root,
        probability: rho.trace(),
        pruned: false,
        children: Vec::new(),
    };
    let ctx = Expansion {
        grid: &grid,
        schedule,
    };
    ctx.expand(&mut root, &BranchPath::default(), rho.ensemble(), T::one())?;
    Ok(FrameworkTree {
        grid,
        rho,
        root,
        pruned: Vec::new(),
    })
}

struct Expansion<'a, T> {
    grid: &'a TimeGrid<T>,
    schedule: &'a Schedule<T>,
}

impl<T: Real> Expansion<'_, T> {
    fn expand(&self, node: &mut BranchNode<T>, path: &BranchPath, vectors: &[StateVector<T>], weight: T) -> TreeResult<()> {
        let time = node.time + 1;
        if time > self.grid.final_time() {
            return Ok(());
        }
        let stage = self.schedule.stage_for(time, path)?;
        let evolved: Vec<_> = vectors.iter().map(|v| self.grid.evolve_into(time, v)).collect();
        match stage {
            Stage::Projective(pvm) => {
                if pvm.dim() != self.grid.dim() {
                    return Err(TreeError::DimensionMismatch {
                        time,
                        expected: self.grid.dim(),
                        found: pvm.dim(),
                    });
                }
                for (label, projector) in pvm.members() {
                    let branch: Vec<_> = evolved.iter().map(|v| projector.apply(v)).collect();
                    let mut child = BranchNode {
                        time,
                        label: label.clone(),
                        kind: NodeKind::Projective(projector.clone()),
                        probability: weight * ensemble_weight(&branch),
                        pruned: false,
                        children: Vec::new(),
                    };
                    self.expand(&mut child, &path.child(label), &branch, weight)?;
                    node.children.push(child);
                }
            }
            Stage::Choice(options) => {
                for (label, w) in options {
                    let mut child = BranchNode {
                        time,
                        label: label.clone(),
                        kind: NodeKind::Choice(*w),
                        probability: weight * *w * ensemble_weight(&evolved),
                        pruned: false,
                        children: Vec::new(),
                    };
                    self.expand(&mut child, &path.child(label), &evolved, weight * *w)?;
                    node.children.push(child);
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn ensemble_weight<T: Real>(vectors: &[StateVector<T>]) -> T {
    vectors.iter().map(StateVector::norm_sqr).sum()
}

/// Removes every branch whose weight is below `tol`, recording it in
/// [`FrameworkTree::pruned`]. Surviving weights are untouched.
pub fn prune_zero_branches<T: Real>(tree: &FrameworkTree<T>, tol: T) -> FrameworkTree<T> {
    fn walk<T: Real>(node: &mut BranchNode<T>, path: &BranchPath, tol: T, out: &mut Vec<PrunedBranch<T>>) {
        for child in &mut node.children {
            if child.pruned {
                continue;
            }
            let child_path = path.child(&child.label);
            if child.probability < tol {
                out.push(PrunedBranch {
                    path: child_path,
                    probability: child.probability,
                });
                child.mark_pruned();
            } else {
                walk(child, &child_path, tol, out);
            }
        }
    }
    let mut out = tree.clone();
    let mut newly = Vec::new();
    walk(&mut out.root, &BranchPath::default(), tol, &mut newly);
    out.pruned.extend(newly);
    out
}

impl<T: Real> FrameworkTree<T> {
    pub fn grid(&self) -> &Arc<TimeGrid<T>> {
        &self.grid
    }

    pub fn rho(&self) -> &DensityOperator<T> {
        &self.rho
    }

    pub fn root(&self) -> &BranchNode<T> {
        &self.root
    }

    pub fn pruned(&self) -> &[PrunedBranch<T>] {
        &self.pruned
    }

    /// Surviving leaves in schedule order.
    pub fn leaves(&self) -> Vec<(BranchPath, &BranchNode<T>)> {
        self.collect_leaves(false)
    }

    /// Every leaf, pruned or not.
    pub fn all_leaves(&self) -> Vec<(BranchPath, &BranchNode<T>)> {
        self.collect_leaves(true)
    }

    fn collect_leaves(&self, include_pruned: bool) -> Vec<(BranchPath, &BranchNode<T>)> {
        fn walk<'a, T: Real>(
            node: &'a BranchNode<T>,
            path: BranchPath,
            include_pruned: bool,
            out: &mut Vec<(BranchPath, &'a BranchNode<T>)>,
        ) {
            if node.pruned && !include_pruned {
                return;
            }
            if node.is_leaf() {
                out.push((path, node));
                return;
            }
            for c in &node.children {
                walk(c, path.child(&c.label), include_pruned, out);
            }
        }
        let mut out = Vec::new();
        for c in &self.root.children {
            walk(c, BranchPath::new(&[c.label.as_str()]), include_pruned, &mut out);
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.root.count_leaves(false)
    }

    pub fn total_leaf_count(&self) -> usize {
        self.root.count_leaves(true)
    }

    /// Nodes along `path`, root excluded; pruned nodes resolve too.
    pub fn path_nodes(&self, path: &BranchPath) -> Option<Vec<&BranchNode<T>>> {
        let mut node = &self.root;
        let mut out = Vec::with_capacity(path.len());
        for label in path.labels() {
            node = node.child(label)?;
            out.push(node);
        }
        Some(out)
    }

    pub fn resolve(&self, path: &BranchPath) -> Option<&BranchNode<T>> {
        if path.is_empty() {
            return Some(&self.root);
        }
        self.path_nodes(path).and_then(|nodes| nodes.last().copied())
    }

    /// Applies the step into `node`: evolution to its time, then its
    /// projector (choices are the identity).
    pub fn step(&self, node: &BranchNode<T>, vectors: &[StateVector<T>]) -> Vec<StateVector<T>> {
        vectors
            .iter()
            .map(|v| {
                let evolved = self.grid.evolve_into(node.time, v);
                match node.projector() {
                    Some(p) => p.apply(&evolved),
                    None => evolved,
                }
            })
            .collect()
    }

    /// Unnormalized ensemble `F_partial v` for each ρ-ensemble member.
    pub fn branch_vectors(&self, path: &BranchPath) -> Option<Vec<StateVector<T>>> {
        let nodes = self.path_nodes(path)?;
        Some(
            nodes
                .into_iter()
                .fold(self.rho.ensemble().to_vec(), |vs, node| self.step(node, &vs)),
        )
    }

    fn history_for(&self, path: &BranchPath) -> TreeResult<History<T>> {
        let nodes = self.path_nodes(path).expect("leaf path resolves");
        let events = nodes
            .into_iter()
            .map(|n| match &n.kind {
                NodeKind::Projective(p) => Event::projector(n.time, n.label.clone(), p.clone()),
                NodeKind::Choice(w) => Event::choice(n.time, n.label.clone(), *w),
                NodeKind::Root => unreachable!("root is never on a path"),
            })
            .collect();
        Ok(History::new(self.grid.clone(), events)?)
    }

    /// Surviving leaf paths as a history family.
    pub fn family(&self) -> TreeResult<HistoryFamily<T>> {
        self.family_of(&self.leaves())
    }

    /// Every leaf path, including pruned ones.
    pub fn full_family(&self) -> TreeResult<HistoryFamily<T>> {
        self.family_of(&self.all_leaves())
    }

    fn family_of(&self, leaves: &[(BranchPath, &BranchNode<T>)]) -> TreeResult<HistoryFamily<T>> {
        let histories = leaves
            .iter()
            .map(|(path, _)| self.history_for(path))
            .collect::<TreeResult<Vec<_>>>()?;
        Ok(HistoryFamily::new(self.grid.clone(), self.rho.clone(), histories)?)
    }

    /// Leaf paths with their probabilities, surviving leaves only.
    pub fn leaf_probabilities(&self) -> Vec<(BranchPath, T)> {
        self.leaves().into_iter().map(|(p, n)| (p, n.probability)).collect()
    }
}

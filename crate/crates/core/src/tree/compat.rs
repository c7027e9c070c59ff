use crate::histories::HistoryFamily;
use crate::qm::Projector;
use crate::scalar::Real;

use super::{BranchPath, FrameworkTree, TreeError, TreeResult};

/// First non-commuting pair found between two families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub time: usize,
    pub first: String,
    pub second: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Compatibility {
    Compatible,
    Incompatible(Witness),
}

impl Compatibility {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Self::Compatible)
    }
}

/// Distinct projectors at `time`, in first-appearance order. Choice events
/// act as the identity and commute with everything, so they are skipped.
fn projectors_at<T: Real>(fam: &HistoryFamily<T>, time: usize) -> Vec<(&str, &Projector<T>)> {
    let mut out: Vec<(&str, &Projector<T>)> = Vec::new();
    for h in fam.histories() {
        let e = &h.events()[time - 1];
        if let Some(p) = e.projector_ref() {
            if !out.iter().any(|(l, q)| *l == e.label && *q == p) {
                out.push((e.label.as_str(), p));
            }
        }
    }
    out
}

/// Two families can be combined in one argument iff every projector of one
/// commutes with every projector of the other at each time.
pub fn check_compatibility<T: Real>(a: &HistoryFamily<T>, b: &HistoryFamily<T>, tol: T) -> TreeResult<Compatibility> {
    if a.grid().dim() != b.grid().dim() {
        return Err(TreeError::DimensionMismatch {
            time: 0,
            expected: a.grid().dim(),
            found: b.grid().dim(),
        });
    }
    if a.grid().final_time() != b.grid().final_time() {
        return Err(TreeError::History(crate::histories::HistoryError::GridMismatch));
    }
    for time in 1..=a.grid().final_time() {
        let left = projectors_at(a, time);
        let right = projectors_at(b, time);
        for (la, pa) in &left {
            for (lb, pb) in &right {
                if !pa.commutes_with(pb, tol) {
                    return Ok(Compatibility::Incompatible(Witness {
                        time,
                        first: la.to_string(),
                        second: lb.to_string(),
                    }));
                }
            }
        }
    }
    Ok(Compatibility::Compatible)
}

/// Every path must resolve inside this one tree (pruned branches included:
/// they belong to the framework with zero weight).
pub fn enforce_single_framework<T: Real>(paths: &[BranchPath], tree: &FrameworkTree<T>) -> TreeResult<()> {
    for path in paths {
        let mut node = tree.root();
        for (position, label) in path.labels().iter().enumerate() {
            node = node.child(label).ok_or_else(|| TreeError::FrameworkViolation {
                path: path.clone(),
                position,
                label: label.clone(),
            })?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::histories::{Event, History, TimeGrid};
    use crate::qm::{DensityOperator, ProjectiveDecomposition, StateVector};
    use crate::tree::{build_tree, Schedule, Stage};

    fn family(pvm: &ProjectiveDecomposition<f64>) -> HistoryFamily<f64> {
        let grid = Arc::new(TimeGrid::identity(2, 1));
        let rho = DensityOperator::from_pure(&StateVector::basis(2, 0), 1e-12).unwrap();
        let hs = pvm
            .members()
            .iter()
            .map(|(l, p)| History::new(grid.clone(), vec![Event::projector(1, l.clone(), p.clone())]).unwrap())
            .collect();
        HistoryFamily::new(grid, rho, hs).unwrap()
    }

    fn z() -> ProjectiveDecomposition<f64> {
        ProjectiveDecomposition::from_basis(&[("z0", StateVector::basis(2, 0)), ("z1", StateVector::basis(2, 1))], 1e-12)
            .unwrap()
    }

    fn x() -> ProjectiveDecomposition<f64> {
        ProjectiveDecomposition::from_basis(
            &[
                ("x+", StateVector::from_real(&[1.0, 1.0]).unwrap()),
                ("x-", StateVector::from_real(&[1.0, -1.0]).unwrap()),
            ],
            1e-12,
        )
        .unwrap()
    }

    #[test]
    fn family_is_compatible_with_itself() {
        assert!(check_compatibility(&family(&z()), &family(&z()), 1e-12).unwrap().is_compatible());
    }

    #[test]
    fn z_and_x_are_incompatible() {
        let c = check_compatibility(&family(&z()), &family(&x()), 1e-12).unwrap();
        assert_eq!(
            c,
            Compatibility::Incompatible(Witness {
                time: 1,
                first: "z0".into(),
                second: "x+".into()
            })
        );
    }

    #[test]
    fn refinement_is_compatible_with_coarse_graining() {
        let fine = ProjectiveDecomposition::<f64>::from_basis(
            &[("0", StateVector::basis(2, 0)), ("1", StateVector::basis(2, 1))],
            1e-12,
        )
        .unwrap();
        let coarse = fine.merge(&["0", "1"], "any").unwrap();
        assert!(check_compatibility(&family(&fine), &family(&coarse), 1e-12).unwrap().is_compatible());
    }

    #[test]
    fn single_framework_paths() {
        let grid = Arc::new(TimeGrid::identity(2, 2));
        let rho = DensityOperator::from_pure(&StateVector::basis(2, 0), 1e-12).unwrap();
        let tree = build_tree(grid, &Schedule::uniform(vec![Stage::Projective(z()), Stage::Projective(z())]), rho).unwrap();
        assert!(enforce_single_framework(&[], &tree).is_ok());
        assert!(enforce_single_framework(&[BranchPath::new(&["z1", "z0"]), BranchPath::new(&["z0"])], &tree).is_ok());
        let err = enforce_single_framework(&[BranchPath::new(&["z0", "x+"])], &tree).unwrap_err();
        assert!(matches!(err, TreeError::FrameworkViolation { position: 1, ref label, .. } if label == "x+"));
    }
}

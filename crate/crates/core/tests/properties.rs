mod common;

use std::sync::Arc;

use chainlogic::hardy::{build_measurement_scenario, choice_from_weights, Completion, Mode};
use chainlogic::histories::{consistency_matrix, history_probability, Event, History, HistoryFamily, TimeGrid};
use chainlogic::qm::{
    orthonormalize, tensor_product, DensityOperator, Kron, Operator, ProjectiveDecomposition, Projector, StateVector,
};
use chainlogic::tree::{build_tree, prune_zero_branches, Schedule, Stage};
use chainlogic::{ScenarioConfig, ScenarioOptions};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> StateVector<f64> {
    StateVector::new(
        (0..dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

fn random_basis(rng: &mut ChaCha8Rng, dim: usize) -> Vec<StateVector<f64>> {
    let raw: Vec<_> = (0..dim).map(|_| random_vector(rng, dim)).collect();
    orthonormalize(&raw, 1e-10).unwrap()
}

fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Operator<f64> {
    let basis = random_basis(rng, dim);
    Operator::from_fn(dim, |r, c| basis[c].amps()[r])
}

fn random_operator(rng: &mut ChaCha8Rng, dim: usize) -> Operator<f64> {
    Operator::from_fn(dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_pvm(rng: &mut ChaCha8Rng, dim: usize, prefix: &str) -> ProjectiveDecomposition<f64> {
    let labels: Vec<String> = (0..dim).map(|i| format!("{prefix}{i}")).collect();
    let basis = random_basis(rng, dim);
    let members: Vec<(&str, StateVector<f64>)> = labels.iter().map(String::as_str).zip(basis).collect();
    ProjectiveDecomposition::from_basis(&members, 1e-12).unwrap()
}

/// Three-level system, random state, random evolution and two random bases.
fn random_family(rng: &mut ChaCha8Rng) -> HistoryFamily<f64> {
    let dim = 3;
    let grid = Arc::new(TimeGrid::new(vec![0.0, 1.0, 2.0], vec![random_unitary(rng, dim), random_unitary(rng, dim)], dim, 1e-10).unwrap());
    let first = random_pvm(rng, dim, "a");
    let second = random_pvm(rng, dim, "b");
    let psi = random_vector(rng, dim).normalized().unwrap();
    let rho = DensityOperator::from_pure(&psi, 1e-12).unwrap();
    let mut histories = Vec::new();
    for (l1, p1) in first.members() {
        for (l2, p2) in second.members() {
            histories.push(
                History::new(grid.clone(), vec![Event::projector(1, l1.clone(), p1.clone()), Event::projector(2, l2.clone(), p2.clone())])
                    .unwrap(),
            );
        }
    }
    HistoryFamily::new(grid, rho, histories).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensor_product_is_associative(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (a, b, c) = (random_operator(&mut rng, 2), random_operator(&mut rng, 3), random_operator(&mut rng, 2));
        let left = tensor_product(&tensor_product(&a, &b), &c);
        let right = tensor_product(&a, &tensor_product(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
        let (u, v) = (random_vector(&mut rng, 2), random_vector(&mut rng, 3));
        prop_assert!(a.kron(&b).apply(&u.kron(&v)).max_abs_diff(&a.apply(&u).kron(&b.apply(&v))) < 1e-12);
    }

    #[test]
    fn span_projector_ignores_the_spanning_set(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (u, v) = (random_vector(&mut rng, 4), random_vector(&mut rng, 4));
        let mix = u.scale(Complex64::new(0.3, -1.1)).add(&v.scale(Complex64::new(2.0, 0.4)));
        let p = Projector::from_span(&[u.clone(), v.clone()]).unwrap();
        let q = Projector::from_span(&[mix, v]).unwrap();
        prop_assert!(p.operator().max_abs_diff(q.operator()) < 1e-10);
        prop_assert_eq!(p.rank(), 2);
    }

    #[test]
    fn decoherence_matrix_is_hermitian_with_born_diagonal(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let fam = random_family(&mut rng);
        let report = consistency_matrix(&fam, 1e-10);
        let n = fam.len();
        for g in 0..n {
            for k in 0..n {
                prop_assert!((report.matrix[g][k] - report.matrix[k][g].conj()).norm() < 1e-12);
            }
            let p = history_probability(&fam.histories()[g], fam.rho(), 1e-10).unwrap();
            prop_assert!((report.matrix[g][g].re - p).abs() < 1e-12);
        }
        prop_assert!((report.matrix.iter().flatten().sum::<Complex64>() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn decoherence_matrix_is_unitarily_invariant(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let fam = random_family(&mut rng);
        let w = random_unitary(&mut rng, 3);
        let grid = Arc::new(fam.grid().conjugate_by(&w));
        let histories = fam
            .histories()
            .iter()
            .map(|h| {
                let events = h
                    .events()
                    .iter()
                    .map(|e| Event::projector(e.time, e.label.clone(), e.projector_ref().unwrap().conjugate_by(&w, 1e-10).unwrap()))
                    .collect();
                History::new(grid.clone(), events).unwrap()
            })
            .collect();
        let moved = HistoryFamily::new(grid, fam.rho().conjugate_by(&w), histories).unwrap();
        let (a, b) = (consistency_matrix(&fam, 1e-10), consistency_matrix(&moved, 1e-10));
        for (ra, rb) in a.matrix.iter().zip(&b.matrix) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coarse_graining_adds_weights_and_interference(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let fam = random_family(&mut rng);
        let report = consistency_matrix(&fam, 1e-10);
        // Histories 0 and 1 share the first event and differ at t2.
        let (h0, h1) = (&fam.histories()[0], &fam.histories()[1]);
        let merged_projector = Projector::new(
            h0.events()[1].projector_ref().unwrap().operator().add(h1.events()[1].projector_ref().unwrap().operator()),
            1e-10,
        )
        .unwrap();
        let merged = History::new(
            fam.grid().clone(),
            vec![h0.events()[0].clone(), Event::projector(2, "b0|b1", merged_projector)],
        )
        .unwrap();
        let p = history_probability(&merged, fam.rho(), 1e-10).unwrap();
        let expected = report.matrix[0][0].re + report.matrix[1][1].re + 2.0 * report.matrix[0][1].re;
        prop_assert!((p - expected).abs() < 1e-12);
    }

    #[test]
    fn commuting_decompositions_give_consistent_trees(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dim = 4;
        let basis = random_basis(&mut rng, dim);
        let coarse = |groups: &[&[usize]], prefix: &str| {
            let members = groups
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let span: Vec<_> = g.iter().map(|&j| basis[j].clone()).collect();
                    (format!("{prefix}{i}"), Projector::from_span(&span).unwrap())
                })
                .collect();
            chainlogic::qm::validate_pvm(members, 1e-10).unwrap()
        };
        let stages = vec![
            Stage::Projective(coarse(&[&[0, 1], &[2, 3]], "p")),
            Stage::Projective(coarse(&[&[0], &[1, 2], &[3]], "q")),
            Stage::Projective(coarse(&[&[0, 3], &[1], &[2]], "r")),
        ];
        let psi = random_vector(&mut rng, dim).normalized().unwrap();
        let rho = DensityOperator::from_pure(&psi, 1e-12).unwrap();
        let tree = build_tree(Arc::new(TimeGrid::identity(dim, 3)), &Schedule::uniform(stages), rho).unwrap();
        let pruned = prune_zero_branches(&tree, 1e-12);
        let report = consistency_matrix(&pruned.family().unwrap(), 1e-10);
        prop_assert!(report.is_consistent(), "{:?}", report.worst_offdiag);
        let total: f64 = pruned.leaf_probabilities().iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for (path, p) in pruned.leaf_probabilities() {
            let before = tree.resolve(&path).unwrap().probability;
            prop_assert!((before - p).abs() < 1e-12);
        }
    }

    #[test]
    fn choice_weights_factor_out(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let amplitudes = common::random_triple(&mut rng, 1e-3);
        let (wl, wr) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
        let scenario = build_measurement_scenario(&ScenarioConfig {
            amplitudes,
            options: ScenarioOptions {
                mode: Mode::Particle,
                choice_l: choice_from_weights(wl, 1.0 - wl),
                choice_r: choice_from_weights(wr, 1.0 - wr),
                ..Default::default()
            },
        })
        .unwrap();
        let table = scenario.joint_table();
        for (path, p) in scenario.leaf_table() {
            let labels = path.labels();
            let prior = if labels[0] == "ML1" { wl } else { 1.0 - wl } * if labels[2] == "MR1" { wr } else { 1.0 - wr };
            let conditional = table.get(&labels[1], &labels[3]).unwrap();
            prop_assert!((p - prior * conditional).abs() < 1e-12);
        }
    }

    #[test]
    fn completions_agree_on_random_states(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let amplitudes = common::random_triple(&mut rng, 1e-3);
        let table = |completion| {
            build_measurement_scenario(&ScenarioConfig {
                amplitudes,
                options: ScenarioOptions { completion, ..Default::default() },
            })
            .unwrap()
            .leaf_table()
        };
        let angle = rng.gen_range(0.1..3.0);
        for ((_, x), (_, y)) in table(Completion::Ordered).iter().zip(&table(Completion::Rotated(angle))) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn single_precision_core_runs() {
    let scenario = build_measurement_scenario(&chainlogic::hardy::ScenarioConfig::<f32> {
        amplitudes: chainlogic::hardy::HardyAmplitudes::equal(),
        options: chainlogic::hardy::ScenarioOptions {
            mode: Mode::Particle,
            tolerances: chainlogic::Tolerances {
                algebra: 1e-5,
                consistency: 1e-5,
                prune: 1e-6,
            },
            ..Default::default()
        },
    })
    .unwrap();
    let report = chainlogic::hardy::verify_hardy_predictions(&scenario, 1e-5);
    assert!(report.is_hardy());
    assert!((report.s4.value.unwrap() - 1.0 / 12.0).abs() < 1e-5);
}

//! End-to-end acceptance checks, one line of output per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use chainlogic::counterfactual::{evaluate_sr, Classification, LSetting};
use chainlogic::hardy::{
    build_measurement_scenario, choice_from_weights, maximize_s4, no_signaling_report, parameter_sweep, verify_hardy_predictions,
    Completion, Mode, SymmetricFamily,
};
use chainlogic::histories::{consistency_matrix, xzx_demo, Event, History, HistoryFamily, TimeGrid, Verdict};
use chainlogic::qm::{DensityOperator, ProjectiveDecomposition, StateVector};
use chainlogic::tree::{check_compatibility, prune_zero_branches, Compatibility, Witness};
use chainlogic::{HardyAmplitudes, HardyScenario, ScenarioConfig, ScenarioOptions, Tolerances};
use common::oracle;
use rand::Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn particle(amplitudes: HardyAmplitudes) -> HardyScenario {
    build_measurement_scenario(&ScenarioConfig {
        amplitudes,
        options: ScenarioOptions {
            mode: Mode::Particle,
            ..Default::default()
        },
    })
    .expect("scenario builds")
}

fn random_triples(n: usize) -> Vec<HardyAmplitudes> {
    let mut rng = common::rng(0x4a7d_1ee5);
    (0..n).map(|_| common::random_triple(&mut rng, 1e-3)).collect()
}

fn hardy_zeros() -> Outcome {
    let start = Instant::now();
    let triples = random_triples(1000);
    let worst = triples
        .par_iter()
        .map(|amps| {
            let report = verify_hardy_predictions(&particle(*amps), 1e-10);
            let lib = [&report.s1, &report.s2, &report.s3]
                .iter()
                .map(|c| c.value.expect("all settings available"))
                .fold(0.0, f64::max);
            let psi = oracle::state(amps.a, amps.b, amps.c);
            let s = oracle::settings(amps.a, amps.b, amps.c);
            let brute = [
                oracle::joint(&psi, s.ml1[1], s.mr1[0]),
                oracle::joint(&psi, s.ml1[0], s.mr2[1]),
                oracle::joint(&psi, s.ml2[0], s.mr1[1]),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            lib.max(brute)
        })
        .reduce(|| 0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    ensure(worst < 1e-10, || format!("worst zero {worst:.3e}"))?;
    ensure(elapsed < 10.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!("1000 triples, largest S1-S3 value {worst:.2e}, {elapsed:.2} s"))
}

fn hardy_positivity() -> Outcome {
    let eq = HardyAmplitudes::equal();
    let s4 = verify_hardy_predictions(&particle(eq), 1e-10).s4.value.unwrap();
    let s = oracle::settings(eq.a, eq.b, eq.c);
    let brute = oracle::joint(&oracle::state(eq.a, eq.b, eq.c), s.ml2[0], s.mr2[1]);
    ensure((s4 - brute).abs() < 1e-10 && (brute - 1.0 / 12.0).abs() < 1e-10, || {
        format!("S4 {s4} vs oracle {brute}")
    })?;
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for j in 0..10 {
            let theta = 0.15 + 1.25 * i as f64 / 4.0;
            let phi = 0.1 + 1.35 * j as f64 / 9.0;
            let (a, b, c) = (theta.cos(), theta.sin() * phi.cos(), theta.sin() * phi.sin());
            let amps = HardyAmplitudes::real(a, b, c, 1e-12).unwrap();
            let closed = a * a * b * b * c * c / ((a * a + c * c) * (a * a + b * b));
            let st = oracle::settings(amps.a, amps.b, amps.c);
            let brute = oracle::joint(&oracle::state(amps.a, amps.b, amps.c), st.ml2[0], st.mr2[1]);
            let lib = verify_hardy_predictions(&particle(amps), 1e-10).s4.value.unwrap();
            worst = worst.max((closed - brute).abs()).max((lib - brute).abs());
        }
    }
    ensure(worst < 1e-12, || format!("closed form deviates by {worst:.3e}"))?;
    Ok(format!("S4 = {s4:.12} at equal amplitudes, 50-point grid deviation {worst:.1e}"))
}

fn consistency() -> Outcome {
    let scenario = build_measurement_scenario(&ScenarioConfig::default()).map_err(|e| e.to_string())?;
    let report = scenario.consistency();
    let worst = report.worst_offdiag.map_or(0.0, |w| w.magnitude);
    ensure(report.verdict == Verdict::Consistent && worst < 1e-10, || format!("Hardy family off-diagonal {worst:.3e}"))?;
    let demo = consistency_matrix(&xzx_demo::<f64>(), 1e-10);
    let m = demo.worst_offdiag.unwrap().magnitude;
    let oracle = oracle::xzx_offdiagonal();
    ensure(demo.verdict == Verdict::Inconsistent && (m - 0.125).abs() < 1e-12 && (oracle - 0.125).abs() < 1e-12, || {
        format!("x/z/x off-diagonal {m} (oracle {oracle})")
    })?;
    Ok(format!("Hardy family worst off-diagonal {worst:.1e}; x/z/x off-diagonal {m:.12}"))
}

fn sr_dichotomy() -> Outcome {
    let triples = random_triples(1000);
    let worst = triples
        .par_iter()
        .map(|amps| -> Result<(f64, f64), String> {
            let s = particle(*amps);
            let v1 = evaluate_sr(&s, LSetting::ML1).map_err(|e| e.to_string())?;
            let p1 = match v1.classification {
                Classification::Necessary { ref outcome, probability } if outcome == "MR2+" => probability,
                other => return Err(format!("ML1 verdict {other:?} for {amps:?}")),
            };
            let v2 = evaluate_sr(&s, LSetting::ML2).map_err(|e| e.to_string())?;
            let fail = v2.pivot("ML2+").and_then(|p| p.probability_of("MR2-")).ok_or("no ML2+ pivot")?;
            let st = oracle::settings(amps.a, amps.b, amps.c);
            let brute = oracle::conditional_right(&oracle::state(amps.a, amps.b, amps.c), st.ml2[0], st.mr2[1]);
            if fail.is_nan() || fail <= 1e-6 || (fail - brute).abs() > 1e-10 {
                return Err(format!("P(MR2-|ML2+) {fail} vs oracle {brute} for {amps:?}"));
            }
            Ok(((1.0 - p1).abs(), (fail - brute).abs()))
        })
        .try_reduce(|| (0.0, 0.0), |x, y| Ok((x.0.max(y.0), x.1.max(y.1))))?;
    ensure(worst.0 < 1e-10, || format!("ML1 necessity deviates by {:.3e}", worst.0))?;
    let eq = evaluate_sr(&particle(HardyAmplitudes::equal()), LSetting::ML2).map_err(|e| e.to_string())?;
    let half = eq.pivot("ML2+").and_then(|p| p.probability_of("MR2-")).unwrap();
    ensure((half - 0.5).abs() < 1e-10, || format!("equal amplitudes give {half}"))?;
    let apparatus = build_measurement_scenario(&ScenarioConfig::default()).map_err(|e| e.to_string())?;
    ensure(evaluate_sr(&apparatus, LSetting::ML1).map_err(|e| e.to_string())?.is_necessary("MR2+"), || {
        "apparatus ML1 verdict not necessary".into()
    })?;
    Ok(format!(
        "1000 triples: |1 - P(MR2+)| <= {:.1e} under ML1, oracle deviation {:.1e} under ML2; P(MR2-|ML2+) = {half:.12} at equal amplitudes",
        worst.0, worst.1
    ))
}

fn sweep_options() -> ScenarioOptions {
    ScenarioOptions::default()
}

fn amplification() -> Outcome {
    let bs = [0.5, 0.1, 0.01];
    let family: Vec<_> = bs.iter().map(|&b| HardyAmplitudes::symmetric_ac(b)).collect();
    let rows = parameter_sweep(&family, &sweep_options()).map_err(|e| e.to_string())?;
    let ps: Vec<f64> = rows.iter().map(|r| r.mr2_plus_given_ml2_plus().unwrap()).collect();
    ensure(ps.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {ps:?}"))?;
    ensure(ps[2] < 2e-4, || format!("P at b = 0.01 is {}", ps[2]))?;
    for (row, &b) in rows.iter().zip(&bs) {
        let a2 = (1.0 - b * b) / 2.0;
        let closed = b * b / (a2 + b * b);
        let p = row.mr2_plus_given_ml2_plus().unwrap();
        ensure((p - closed).abs() < 1e-10, || format!("b = {b}: {p} vs {closed}"))?;
    }
    Ok(format!("P(MR2+|ML2+) = {:.6e}, {:.6e}, {:.6e}", ps[0], ps[1], ps[2]))
}

fn no_signaling() -> Outcome {
    let family: Vec<_> = [0.5, 0.1, 0.01].iter().map(|&b| HardyAmplitudes::symmetric_ac(b)).collect();
    let rows = parameter_sweep(&family, &sweep_options()).map_err(|e| e.to_string())?;
    let sweep_worst = rows
        .iter()
        .map(|r| r.locality.as_ref().map(|l| l.no_signaling.max_discrepancy).map_err(|e| e.to_string()))
        .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))?;
    let random_worst = random_triples(1000)
        .par_iter()
        .map(|amps| no_signaling_report(&particle(*amps)).max_discrepancy)
        .reduce(|| 0.0, f64::max);
    ensure(sweep_worst < 1e-10 && random_worst < 1e-10, || {
        format!("discrepancy sweep {sweep_worst:.3e}, random {random_worst:.3e}")
    })?;
    Ok(format!("max marginal discrepancy {:.1e}", sweep_worst.max(random_worst)))
}

fn mode_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(7);
    let configs: Vec<_> = (0..100)
        .map(|_| {
            let amps = common::random_triple(&mut rng, 1e-3);
            let wl: f64 = rng.gen_range(0.05..0.95);
            let wr: f64 = rng.gen_range(0.05..0.95);
            let angle: f64 = rng.gen_range(0.1..3.0);
            (amps, wl, wr, angle)
        })
        .collect();
    let worst = configs
        .par_iter()
        .map(|&(amplitudes, wl, wr, angle)| -> Result<(f64, f64), String> {
            let build = |mode, completion| {
                build_measurement_scenario(&ScenarioConfig {
                    amplitudes,
                    options: ScenarioOptions {
                        mode,
                        completion,
                        choice_l: choice_from_weights(wl, 1.0 - wl),
                        choice_r: choice_from_weights(wr, 1.0 - wr),
                        prune: false,
                        ..Default::default()
                    },
                })
                .map_err(|e| e.to_string())
                .map(|s| s.leaf_table())
            };
            let particle = build(Mode::Particle, Completion::Ordered)?;
            let ordered = build(Mode::Apparatus, Completion::Ordered)?;
            let rotated = build(Mode::Apparatus, Completion::Rotated(angle))?;
            let mut modes: f64 = 0.0;
            let mut completions: f64 = 0.0;
            for ((p, (q, r)), ((pp, x), ((qp, y), (rp, z)))) in particle
                .iter()
                .map(|(p, _)| p)
                .zip(ordered.iter().map(|(q, _)| q).zip(rotated.iter().map(|(r, _)| r)))
                .zip(particle.iter().zip(ordered.iter().zip(&rotated)))
            {
                if p != q || q != r || pp != qp || qp != rp {
                    return Err(format!("leaf order differs at {p}"));
                }
                modes = modes.max((x - y).abs());
                completions = completions.max((y - z).abs());
            }
            if particle.len() != 16 || ordered.len() != 16 {
                return Err("leaf tables are not 16 entries".into());
            }
            Ok((modes, completions))
        })
        .try_reduce(|| (0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1))))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(worst.0 < 1e-10 && worst.1 < 1e-10, || {
        format!("mode gap {:.3e}, completion gap {:.3e}", worst.0, worst.1)
    })?;
    ensure(elapsed < 60.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "100 configs: mode gap {:.1e}, completion gap {:.1e}, {elapsed:.1} s",
        worst.0, worst.1
    ))
}

fn structural() -> Outcome {
    let unpruned = build_measurement_scenario(&ScenarioConfig {
        options: ScenarioOptions {
            prune: false,
            ..Default::default()
        },
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let tree = unpruned.tree();
    ensure(tree.leaf_count() == 16, || format!("{} leaves before pruning", tree.leaf_count()))?;
    let once = prune_zero_branches(tree, 1e-12);
    let twice = prune_zero_branches(&once, 1e-12);
    ensure(once == twice, || "pruning is not idempotent".into())?;
    let total: f64 = once.leaf_probabilities().iter().map(|(_, p)| p).sum();
    ensure((total - 1.0).abs() < 1e-10, || format!("surviving leaves sum to {total}"))?;
    Ok(format!("16 leaves unpruned, {} after pruning, total {total:.12}", once.leaf_count()))
}

fn compatibility() -> Outcome {
    let family = |labels: [&str; 2], vectors: [&[f64]; 2]| {
        let pvm = ProjectiveDecomposition::from_basis(
            &[
                (labels[0], StateVector::from_real(vectors[0]).unwrap()),
                (labels[1], StateVector::from_real(vectors[1]).unwrap()),
            ],
            1e-12,
        )
        .unwrap();
        let grid = Arc::new(TimeGrid::identity(2, 1));
        let rho = DensityOperator::from_pure(&StateVector::basis(2, 0), 1e-12).unwrap();
        let histories = pvm
            .members()
            .iter()
            .map(|(l, p)| History::new(grid.clone(), vec![Event::projector(1, l.clone(), p.clone())]).unwrap())
            .collect();
        (HistoryFamily::new(grid, rho, histories).unwrap(), pvm)
    };
    let (z, z_pvm) = family(["z+", "z-"], [&[1.0, 0.0], &[0.0, 1.0]]);
    let (x, _) = family(["x+", "x-"], [&[1.0, 1.0], &[1.0, -1.0]]);
    let verdict = check_compatibility(&z, &x, 1e-12).map_err(|e| e.to_string())?;
    let expected = Witness {
        time: 1,
        first: "z+".into(),
        second: "x+".into(),
    };
    ensure(verdict == Compatibility::Incompatible(expected.clone()), || format!("z vs x gave {verdict:?}"))?;
    let coarse = z_pvm.merge(&["z+", "z-"], "I").unwrap();
    let grid = z.grid().clone();
    let coarse_family = HistoryFamily::new(
        grid.clone(),
        z.rho().clone(),
        vec![History::new(grid, vec![Event::projector(1, "I", coarse.members()[0].1.clone())]).unwrap()],
    )
    .unwrap();
    ensure(check_compatibility(&z, &coarse_family, 1e-12).map_err(|e| e.to_string())?.is_compatible(), || {
        "refinement reported incompatible".into()
    })?;
    Ok(format!(
        "z vs x incompatible, witness (t={}, {}, {}); refinement compatible",
        expected.time, expected.first, expected.second
    ))
}

fn derived_optimum() -> Outcome {
    let opt = maximize_s4::<f64>(SymmetricFamily::BEqualsC, &Tolerances::default()).map_err(|e| e.to_string())?;
    let upper = 0.5f64.sqrt();
    let grid_best = (1..=10_000)
        .map(|i| oracle::s4_b_equals_c(upper * i as f64 / 10_001.0))
        .fold(0.0, f64::max);
    ensure((opt.s4 - grid_best).abs() < 1e-3, || format!("optimizer {} vs grid {grid_best}", opt.s4))?;
    Ok(format!(
        "max S4 = {:.8} at b = c = {:.6}; 10^4-point grid oracle {grid_best:.8}",
        opt.s4, opt.parameter
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("Hardy zeros", hardy_zeros),
        ("Hardy positivity", hardy_positivity),
        ("Consistency", consistency),
        ("SR dichotomy", sr_dichotomy),
        ("Amplification", amplification),
        ("No-signaling", no_signaling),
        ("Mode equivalence", mode_equivalence),
        ("Structural", structural),
        ("Framework incompatibility", compatibility),
        ("Derived optimum", derived_optimum),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

use std::fmt::Write as _;
use std::path::Path;

use anyhow::anyhow;
use chainlogic::counterfactual::{evaluate_sr, locality_report, sr_query, Classification, CounterfactualError, CounterfactualVerdict, LSetting};
use chainlogic::hardy::{
    build_measurement_scenario, maximize_s4, no_signaling_report, parameter_sweep, verify_hardy_predictions, HardyError,
    SymmetricFamily,
};
use chainlogic::histories::{consistency_matrix, xzx_demo};
use chainlogic::{Complex64, HardyScenario};

use crate::config::{family_name, mode_name, Config};
use crate::report::{self, *};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INCONSISTENT: u8 = 2;
pub const EXIT_NOT_HARDY: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_IO: u8 = 66;

/// A command's standard output and exit status.
pub struct Output {
    pub stdout: String,
    pub code: u8,
}

/// An error that ends the run with a specific exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: anyhow::Error) -> Self {
        Self { code: EXIT_USAGE, error }
    }

    pub fn io(error: anyhow::Error) -> Self {
        Self { code: EXIT_IO, error }
    }

    fn from_hardy(e: HardyError) -> Self {
        let code = match &e {
            HardyError::Inconsistent { .. } => EXIT_INCONSISTENT,
            HardyError::NotStrictHardy { .. } | HardyError::Counterfactual(CounterfactualError::NotHardyState) => EXIT_NOT_HARDY,
            HardyError::NotNormalized { .. } | HardyError::InvalidChoice { .. } | HardyError::DegenerateBasis(_) | HardyError::EmptyFamily => {
                EXIT_USAGE
            }
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            error: e.into(),
        }
    }

    fn from_counterfactual(e: CounterfactualError) -> Self {
        let code = match e {
            CounterfactualError::NotHardyState => EXIT_NOT_HARDY,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

type CommandResult = Result<Output, Failure>;

fn p6(x: f64) -> String {
    format!("{x:.6}")
}

fn complex6(z: Complex64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

fn scenario(config: &Config) -> Result<HardyScenario, Failure> {
    build_measurement_scenario(&config.scenario).map_err(Failure::from_hardy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Demo {
    Xzx,
}

pub fn consistency(config: &Config, demo: Option<Demo>, json: bool) -> CommandResult {
    let tol = config.scenario.options.tolerances.consistency;
    let (source, dimension, labels, report) = match demo {
        Some(Demo::Xzx) => {
            let fam = xzx_demo::<f64>();
            let labels: Vec<Vec<String>> = fam
                .histories()
                .iter()
                .map(|h| h.labels().into_iter().map(String::from).collect())
                .collect();
            ("demo:xzx".to_string(), fam.grid().dim(), labels, consistency_matrix(&fam, tol))
        }
        None => {
            let s = scenario(config)?;
            let labels = s.tree().leaves().into_iter().map(|(p, _)| p.labels().to_vec()).collect();
            let name = format!("hardy:{}", mode_name(s.mode()));
            (name, s.tree().grid().dim(), labels, s.consistency().clone())
        }
    };
    let consistent = report.is_consistent();
    let code = if consistent { EXIT_OK } else { EXIT_INCONSISTENT };
    let worst = report.worst_offdiag.map(|w| OffDiagonalJson {
        first: labels[w.g].clone(),
        second: labels[w.k].clone(),
        magnitude: w.magnitude,
    });
    let histories: Vec<WeightedPath> = labels
        .iter()
        .zip(report.diagonal())
        .map(|(l, p)| WeightedPath {
            path: l.clone(),
            probability: p,
        })
        .collect();

    if json {
        let r = Report::Consistency(ConsistencyJson {
            source,
            dimension,
            tolerance: tol,
            consistent,
            worst_offdiagonal: worst,
            histories,
        });
        return Ok(Output {
            stdout: report::to_json(&r) + "\n",
            code,
        });
    }
    let mut out = String::new();
    writeln!(out, "family: {source} ({} histories, dimension {dimension})", histories.len()).unwrap();
    let verdict = if consistent { "CONSISTENT" } else { "INCONSISTENT" };
    writeln!(out, "verdict: {verdict} (tolerance {tol:e})").unwrap();
    match &worst {
        Some(w) => writeln!(
            out,
            "worst off-diagonal: {} between [{}] and [{}]",
            p6(w.magnitude),
            w.first.join(" > "),
            w.second.join(" > ")
        )
        .unwrap(),
        None => writeln!(out, "worst off-diagonal: none (single history)").unwrap(),
    }
    writeln!(out, "weights:").unwrap();
    let width = histories.iter().map(|h| h.path.join(" > ").len()).max().unwrap_or(0);
    for h in &histories {
        writeln!(out, "  {:<width$}  {}", h.path.join(" > "), p6(h.probability)).unwrap();
    }
    if !consistent {
        writeln!(out, "weights are not probabilities: the family violates the consistency condition").unwrap();
    }
    Ok(Output { stdout: out, code })
}

pub fn hardy(config: &Config, json: bool) -> CommandResult {
    let s = scenario(config)?;
    let amps = config.scenario.amplitudes;
    let tol = config.scenario.options.tolerances.consistency;
    let predictions = verify_hardy_predictions(&s, tol);
    let signaling = no_signaling_report(&s);
    let strict = amps.is_strict();
    let hardy_state = strict && predictions.is_hardy();
    let code = if !predictions.zeros_hold() {
        EXIT_FAILURE
    } else if !hardy_state {
        EXIT_NOT_HARDY
    } else {
        EXIT_OK
    };

    if json {
        let r = Report::Hardy(HardyJson {
            amplitudes: amplitudes(&amps),
            mode: mode_name(s.mode()),
            strict,
            predictions: PredictionJson::all(&predictions),
            closed_form_s4: amps.s4_closed_form(),
            no_signaling: (&signaling).into(),
            hardy_state,
        });
        return Ok(Output {
            stdout: report::to_json(&r) + "\n",
            code,
        });
    }
    let mut out = String::new();
    writeln!(
        out,
        "state: a = {}, b = {}, c = {}",
        complex6(amps.a),
        complex6(amps.b),
        complex6(amps.c)
    )
    .unwrap();
    writeln!(out, "mode: {}", mode_name(s.mode())).unwrap();
    for c in predictions.checks() {
        let (sl, sr) = (&c.left[..c.left.len() - 1], &c.right[..c.right.len() - 1]);
        let value = c.value.map_or_else(|| "n/a (setting pair never chosen)".to_string(), p6);
        let expect = if c.name == "S4" { "> 0" } else { "= 0" };
        let status = if c.holds { "ok" } else { "FAIL" };
        writeln!(out, "  {}  P({}, {} | {sl}, {sr}) = {value}  expect {expect}  {status}", c.name, c.left, c.right).unwrap();
    }
    writeln!(out, "  closed form S4 = {}", p6(amps.s4_closed_form())).unwrap();
    writeln!(
        out,
        "no-signaling: max marginal discrepancy = {} ({})",
        p6(signaling.max_discrepancy),
        if signaling.max_discrepancy < tol {
            format!("< {tol:e}")
        } else {
            format!("VIOLATED, >= {tol:e}")
        }
    )
    .unwrap();
    let verdict = match code {
        EXIT_OK => "HARDY STATE".to_string(),
        EXIT_NOT_HARDY if !strict => "NOT A HARDY STATE (an amplitude vanishes)".to_string(),
        EXIT_NOT_HARDY => "NOT A HARDY STATE (S4 does not hold)".to_string(),
        _ => "PREDICTIONS VIOLATED (S1-S3 not all zero)".to_string(),
    };
    writeln!(out, "verdict: {verdict}").unwrap();
    Ok(Output { stdout: out, code })
}

pub fn counterfactual(config: &Config, settings: &[LSetting], both: bool, json: bool) -> CommandResult {
    let s = scenario(config)?;
    if !config.scenario.amplitudes.is_strict() {
        return Err(Failure::from_counterfactual(CounterfactualError::NotHardyState));
    }
    let tol = config.scenario.options.tolerances.consistency;
    let claim = s.settings().mr2.plus_label();
    let mut verdicts = Vec::new();
    for &setting in settings {
        let verdict = evaluate_sr(&s, setting).map_err(Failure::from_counterfactual)?;
        verdicts.push((setting, sr_query(&s, setting), verdict));
    }
    let locality = if both {
        Some(locality_report(&s).map_err(Failure::from_counterfactual)?)
    } else {
        None
    };

    if json {
        let r = Report::Counterfactual(CounterfactualJson {
            verdicts: verdicts
                .iter()
                .map(|(setting, query, v)| VerdictJson::new(setting.label(), query, v))
                .collect(),
            locality: locality.as_ref().map(|l| LocalityJson {
                demonstrated: l.demonstrated,
                no_signaling: (&l.no_signaling).into(),
            }),
        });
        return Ok(Output {
            stdout: report::to_json(&r) + "\n",
            code: EXIT_OK,
        });
    }
    let mut out = String::new();
    for (setting, query, verdict) in &verdicts {
        render_verdict(&mut out, setting.label(), query, verdict, &claim, tol);
    }
    if let Some(l) = &locality {
        let signaling = if l.no_signaling.max_discrepancy < tol {
            format!("no-signaling intact: max marginal discrepancy < {tol:e}")
        } else {
            format!("no-signaling VIOLATED: max marginal discrepancy = {:e}", l.no_signaling.max_discrepancy)
        };
        let headline = if l.demonstrated {
            "NONLOCALITY DEMONSTRATED"
        } else {
            "NONLOCALITY NOT DEMONSTRATED"
        };
        writeln!(out, "{headline} ({signaling})").unwrap();
    }
    Ok(Output {
        stdout: out,
        code: EXIT_OK,
    })
}

fn render_verdict(
    out: &mut String,
    setting: &str,
    query: &chainlogic::counterfactual::CounterfactualQuery,
    verdict: &CounterfactualVerdict<f64>,
    claim: &str,
    tol: f64,
) {
    let premise = match &query.premise {
        chainlogic::counterfactual::Premise::Labels(l) => l.join(", "),
        chainlogic::counterfactual::Premise::Path(p) => p.to_string(),
    };
    writeln!(out, "SR with {setting} in L (premise: {premise}; alternative: {})", query.alternative).unwrap();
    for p in &verdict.pivots {
        writeln!(out, "  pivot {}  P = {}", p.pivot.path, p6(p.pivot.probability)).unwrap();
        for (label, q) in &p.distribution {
            writeln!(out, "    {label}  {}", p6(*q)).unwrap();
        }
    }
    match &verdict.classification {
        Classification::Necessary { outcome, probability } => {
            writeln!(out, "  necessary({outcome}), p = {}", p6(*probability)).unwrap();
        }
        Classification::Impossible { outcome, probability } => {
            writeln!(out, "  impossible({outcome}), p = {}", p6(*probability)).unwrap();
        }
        Classification::Possible(_) => {
            for p in &verdict.pivots {
                let last = p.pivot.path.last().unwrap_or("root");
                for (label, q) in &p.distribution {
                    if label != claim && *q > tol {
                        writeln!(out, "  possible: P({label}|{last} path) = {}", p6(*q)).unwrap();
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepFormat {
    Text,
    Csv,
    Json,
}

pub fn sweep(config: &Config, maximize: bool, format: SweepFormat) -> CommandResult {
    if config.sweep.is_none() && !maximize {
        return Err(Failure::usage(anyhow!("config has no `sweep` section")));
    }
    let options = &config.scenario.options;
    let rows = match &config.sweep {
        Some(sweep) if sweep.parameters.is_empty() => return Err(Failure::usage(anyhow!("empty sweep: no parameter values"))),
        Some(sweep) => {
            let rows = parameter_sweep(&sweep.members(), options).map_err(Failure::from_hardy)?;
            sweep.parameters.iter().zip(&rows).map(|(&p, r)| SweepRowJson::new(p, r)).collect()
        }
        None => Vec::new(),
    };
    let family = config.sweep.as_ref().map(|s| s.family);
    let maximum = if maximize {
        let f = family.unwrap_or(SymmetricFamily::BEqualsC);
        Some(MaximumJson::from(&maximize_s4(f, &options.tolerances).map_err(Failure::from_hardy)?))
    } else {
        None
    };
    let r = SweepJson {
        family: family.map(family_name),
        mode: mode_name(options.mode),
        rows,
        maximum,
    };
    let stdout = match format {
        SweepFormat::Json => report::to_json(&Report::Sweep(r)) + "\n",
        SweepFormat::Csv => sweep_csv(&r),
        SweepFormat::Text => sweep_text(&r),
    };
    Ok(Output { stdout, code: EXIT_OK })
}

fn json_number(x: Option<f64>) -> String {
    x.map(|v| serde_json::to_string(&v).expect("finite")).unwrap_or_default()
}

fn sweep_csv(r: &SweepJson) -> String {
    let mut out = String::from(
        "parameter,a_re,a_im,b_re,b_im,c_re,c_im,s4,p_mr2_plus_given_ml2_plus,sr_ml1,sr_ml2,max_marginal_discrepancy\n",
    );
    for row in &r.rows {
        let mut cells = vec![json_number(Some(row.parameter))];
        cells.extend(row.amplitudes.iter().flatten().map(|&x| json_number(Some(x))));
        cells.push(json_number(row.s4));
        cells.push(json_number(row.p_mr2_plus_given_ml2_plus));
        cells.push(row.sr_ml1.clone().unwrap_or_default());
        cells.push(row.sr_ml2.clone().unwrap_or_default());
        cells.push(json_number(row.max_marginal_discrepancy));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    if let Some(m) = &r.maximum {
        eprintln!(
            "max S4 = {} on family {} at parameter {}",
            json_number(Some(m.s4)),
            m.family,
            json_number(Some(m.parameter))
        );
    }
    out
}

fn sweep_text(r: &SweepJson) -> String {
    let mut out = String::new();
    if let Some(family) = r.family {
        writeln!(out, "family {family}, {} mode", r.mode).unwrap();
        writeln!(
            out,
            "{:>10} {:>10} {:>10} {:>10} {:>10} {:>14}  {:<16} {:<16}",
            "param", "a", "b", "c", "S4", "P(MR2+|ML2+)", "SR(ML1)", "SR(ML2)"
        )
        .unwrap();
        let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), p6);
        for row in &r.rows {
            writeln!(
                out,
                "{:>10} {:>10} {:>10} {:>10} {:>10} {:>14}  {:<16} {:<16}",
                p6(row.parameter),
                p6(row.amplitudes[0][0]),
                p6(row.amplitudes[1][0]),
                p6(row.amplitudes[2][0]),
                opt(row.s4),
                opt(row.p_mr2_plus_given_ml2_plus),
                row.sr_ml1.as_deref().unwrap_or("-"),
                row.sr_ml2.as_deref().unwrap_or("-"),
            )
            .unwrap();
        }
    }
    if let Some(m) = &r.maximum {
        let [a, b, c] = m.amplitudes;
        writeln!(
            out,
            "max S4 = {} on family {} at parameter {} (a = {}, b = {}, c = {})",
            p6(m.s4),
            m.family,
            p6(m.parameter),
            p6(a[0]),
            p6(b[0]),
            p6(c[0])
        )
        .unwrap();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

pub fn export(config: &Config, format: ExportFormat, prune: bool, out: Option<&Path>) -> CommandResult {
    let mut scenario_config = config.scenario.clone();
    scenario_config.options.prune = prune;
    let s = build_measurement_scenario(&scenario_config).map_err(Failure::from_hardy)?;
    let tree = s.tree();
    let body = match format {
        ExportFormat::Dot => tree.to_dot(),
        ExportFormat::Json => tree.to_json() + "\n",
    };
    match out {
        None => Ok(Output {
            stdout: body,
            code: EXIT_OK,
        }),
        Some(path) => {
            std::fs::write(path, &body).map_err(|e| Failure::io(anyhow!("cannot write {}: {e}", path.display())))?;
            eprintln!(
                "wrote {} tree to {} ({} leaves, {} pruned)",
                match format {
                    ExportFormat::Dot => "DOT",
                    ExportFormat::Json => "JSON",
                },
                path.display(),
                tree.leaf_count(),
                tree.total_leaf_count() - tree.leaf_count()
            );
            Ok(Output {
                stdout: String::new(),
                code: EXIT_OK,
            })
        }
    }
}

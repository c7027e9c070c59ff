//! Machine-readable reports. Field order is fixed by declaration order, so
//! identical inputs give byte-identical JSON.

use chainlogic::counterfactual::{Classification, CounterfactualQuery, CounterfactualVerdict, Premise};
use chainlogic::hardy::{HardyReport, NoSignalingReport, S4Optimum, SweepRow};
use chainlogic::{Complex64, HardyAmplitudes};
use serde::Serialize;

use crate::config::family_name;

pub const REPORT_SCHEMA: u32 = 1;

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn amplitudes(a: &HardyAmplitudes) -> [[f64; 2]; 3] {
    [pair(a.a), pair(a.b), pair(a.c)]
}

#[derive(Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Report {
    Consistency(ConsistencyJson),
    Hardy(HardyJson),
    Counterfactual(CounterfactualJson),
    Sweep(SweepJson),
}

#[derive(Serialize)]
pub struct Envelope<'a> {
    pub schema: u32,
    #[serde(flatten)]
    pub report: &'a Report,
}

pub fn to_json(report: &Report) -> String {
    serde_json::to_string_pretty(&Envelope {
        schema: REPORT_SCHEMA,
        report,
    })
    .expect("reports contain only finite numbers and strings")
}

#[derive(Serialize)]
pub struct ConsistencyJson {
    pub source: String,
    pub dimension: usize,
    pub tolerance: f64,
    pub consistent: bool,
    pub worst_offdiagonal: Option<OffDiagonalJson>,
    pub histories: Vec<WeightedPath>,
}

#[derive(Serialize)]
pub struct OffDiagonalJson {
    pub first: Vec<String>,
    pub second: Vec<String>,
    pub magnitude: f64,
}

#[derive(Serialize)]
pub struct WeightedPath {
    pub path: Vec<String>,
    pub probability: f64,
}

#[derive(Serialize)]
pub struct HardyJson {
    pub amplitudes: [[f64; 2]; 3],
    pub mode: &'static str,
    pub strict: bool,
    pub predictions: Vec<PredictionJson>,
    pub closed_form_s4: f64,
    pub no_signaling: NoSignalingJson,
    pub hardy_state: bool,
}

#[derive(Serialize)]
pub struct PredictionJson {
    pub name: &'static str,
    pub left: String,
    pub right: String,
    pub expect: &'static str,
    pub probability: Option<f64>,
    pub holds: bool,
}

impl PredictionJson {
    pub fn all(report: &HardyReport<f64>) -> Vec<Self> {
        report
            .checks()
            .iter()
            .map(|c| Self {
                name: c.name,
                left: c.left.clone(),
                right: c.right.clone(),
                expect: if c.name == "S4" { "positive" } else { "zero" },
                probability: c.value,
                holds: c.holds,
            })
            .collect()
    }
}

#[derive(Serialize)]
pub struct NoSignalingJson {
    pub max_discrepancy: f64,
    pub comparisons: Vec<MarginalJson>,
}

#[derive(Serialize)]
pub struct MarginalJson {
    pub outcome: String,
    pub far_settings: [String; 2],
    pub probabilities: [f64; 2],
    pub discrepancy: f64,
}

impl From<&NoSignalingReport<f64>> for NoSignalingJson {
    fn from(r: &NoSignalingReport<f64>) -> Self {
        Self {
            max_discrepancy: r.max_discrepancy,
            comparisons: r
                .comparisons
                .iter()
                .map(|c| MarginalJson {
                    outcome: c.outcome.clone(),
                    far_settings: c.far_settings.clone(),
                    probabilities: c.values,
                    discrepancy: c.discrepancy,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct CounterfactualJson {
    pub verdicts: Vec<VerdictJson>,
    pub locality: Option<LocalityJson>,
}

#[derive(Serialize)]
pub struct VerdictJson {
    pub setting: &'static str,
    pub premise: Vec<String>,
    pub alternative: String,
    pub classification: ClassificationJson,
    pub pivots: Vec<PivotJson>,
}

impl VerdictJson {
    pub fn new(setting: &'static str, query: &CounterfactualQuery, verdict: &CounterfactualVerdict<f64>) -> Self {
        let premise = match &query.premise {
            Premise::Path(p) => p.labels().to_vec(),
            Premise::Labels(l) => l.clone(),
        };
        Self {
            setting,
            premise,
            alternative: query.alternative.clone(),
            classification: ClassificationJson::from(&verdict.classification),
            pivots: verdict
                .pivots
                .iter()
                .map(|p| PivotJson {
                    path: p.pivot.path.labels().to_vec(),
                    probability: p.pivot.probability,
                    distribution: p
                        .distribution
                        .iter()
                        .map(|(l, q)| OutcomeJson {
                            outcome: l.clone(),
                            probability: *q,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassificationJson {
    Necessary { outcome: String, probability: f64 },
    Impossible { outcome: String, probability: f64 },
    Possible { ranges: Vec<RangeJson> },
}

#[derive(Serialize)]
pub struct RangeJson {
    pub outcome: String,
    pub min: f64,
    pub max: f64,
}

impl From<&Classification<f64>> for ClassificationJson {
    fn from(c: &Classification<f64>) -> Self {
        match c {
            Classification::Necessary { outcome, probability } => Self::Necessary {
                outcome: outcome.clone(),
                probability: *probability,
            },
            Classification::Impossible { outcome, probability } => Self::Impossible {
                outcome: outcome.clone(),
                probability: *probability,
            },
            Classification::Possible(ranges) => Self::Possible {
                ranges: ranges
                    .iter()
                    .map(|r| RangeJson {
                        outcome: r.outcome.clone(),
                        min: r.min,
                        max: r.max,
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Serialize)]
pub struct PivotJson {
    pub path: Vec<String>,
    pub probability: f64,
    pub distribution: Vec<OutcomeJson>,
}

#[derive(Serialize)]
pub struct OutcomeJson {
    pub outcome: String,
    pub probability: f64,
}

#[derive(Serialize)]
pub struct LocalityJson {
    pub demonstrated: bool,
    pub no_signaling: NoSignalingJson,
}

#[derive(Serialize)]
pub struct SweepJson {
    pub family: Option<&'static str>,
    pub mode: &'static str,
    pub rows: Vec<SweepRowJson>,
    pub maximum: Option<MaximumJson>,
}

#[derive(Serialize)]
pub struct SweepRowJson {
    pub parameter: f64,
    pub amplitudes: [[f64; 2]; 3],
    pub s4: Option<f64>,
    pub p_mr2_plus_given_ml2_plus: Option<f64>,
    pub sr_ml1: Option<String>,
    pub sr_ml2: Option<String>,
    pub max_marginal_discrepancy: Option<f64>,
}

impl SweepRowJson {
    pub fn new(parameter: f64, row: &SweepRow<f64>) -> Self {
        let locality = row.locality.as_ref().ok();
        Self {
            parameter,
            amplitudes: amplitudes(&row.amplitudes),
            s4: row.s4(),
            p_mr2_plus_given_ml2_plus: row.mr2_plus_given_ml2_plus(),
            sr_ml1: locality.map(|l| verdict_word(&l.ml1.classification)),
            sr_ml2: locality.map(|l| verdict_word(&l.ml2.classification)),
            max_marginal_discrepancy: locality.map(|l| l.no_signaling.max_discrepancy),
        }
    }
}

/// `necessary(MR2+)`, `impossible(X)` or `possible`.
pub fn verdict_word(c: &Classification<f64>) -> String {
    match c {
        Classification::Necessary { outcome, .. } => format!("necessary({outcome})"),
        Classification::Impossible { outcome, .. } => format!("impossible({outcome})"),
        Classification::Possible(_) => "possible".into(),
    }
}

#[derive(Serialize)]
pub struct MaximumJson {
    pub family: &'static str,
    pub parameter: f64,
    pub amplitudes: [[f64; 2]; 3],
    pub s4: f64,
}

impl From<&S4Optimum<f64>> for MaximumJson {
    fn from(o: &S4Optimum<f64>) -> Self {
        Self {
            family: family_name(o.family),
            parameter: o.parameter,
            amplitudes: amplitudes(&o.amplitudes),
            s4: o.s4,
        }
    }
}

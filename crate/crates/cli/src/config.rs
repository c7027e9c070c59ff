//! Scenario config files (JSON, `"schema": 1`).

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chainlogic::hardy::{choice_from_weights, Completion, Mode, SymmetricFamily, TimeOrder};
use chainlogic::{HardyAmplitudes, ScenarioConfig, ScenarioOptions, Tolerances};
use num_complex::Complex64;
use serde::Deserialize;

pub const CONFIG_SCHEMA: u32 = 1;
pub const TOL_ENV: &str = "CHAINLOGIC_TOL";

/// Amplitudes whose squared norm is off by less than this are rescaled with
/// a warning; anything further off is rejected.
const RENORMALIZE_LIMIT: f64 = 1e-6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    #[serde(default)]
    amplitudes: Option<[[f64; 2]; 3]>,
    #[serde(default)]
    choice_weights: Option<RawChoiceWeights>,
    #[serde(default)]
    mode: Option<RawMode>,
    #[serde(default)]
    order: Option<RawOrder>,
    #[serde(default)]
    completion_angle: Option<f64>,
    #[serde(default)]
    tolerances: Option<RawTolerances>,
    #[serde(default)]
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChoiceWeights {
    #[serde(rename = "L")]
    left: [f64; 2],
    #[serde(rename = "R")]
    right: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawMode {
    Particle,
    Apparatus,
}

#[derive(Debug, Deserialize)]
enum RawOrder {
    #[serde(rename = "left-first")]
    LeftFirst,
    #[serde(rename = "right-first")]
    RightFirst,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    algebra: Option<f64>,
    consistency: Option<f64>,
    prune: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(default = "default_family")]
    family: RawFamily,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    from: Option<f64>,
    #[serde(default)]
    to: Option<f64>,
    #[serde(default)]
    steps: Option<usize>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
enum RawFamily {
    #[serde(rename = "a=c")]
    AEqualsC,
    #[serde(rename = "b=c")]
    BEqualsC,
}

fn default_family() -> RawFamily {
    RawFamily::AEqualsC
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub family: SymmetricFamily,
    pub parameters: Vec<f64>,
}

impl Sweep {
    pub fn members(&self) -> Vec<HardyAmplitudes> {
        self.parameters.iter().map(|&p| self.family.member(p)).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub sweep: Option<Sweep>,
    pub warnings: Vec<String>,
}

pub fn family_name(family: SymmetricFamily) -> &'static str {
    match family {
        SymmetricFamily::AEqualsC => "a=c",
        SymmetricFamily::BEqualsC => "b=c",
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Apparatus => "apparatus",
        Mode::Particle => "particle",
    }
}

/// Error raised while reading the config file itself (exit 66).
#[derive(Debug)]
pub struct ReadError(pub anyhow::Error);

pub fn load(path: &Path) -> std::result::Result<Result<Config>, ReadError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(ReadError)?;
    Ok(parse(&text))
}

pub fn parse(text: &str) -> Result<Config> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            anyhow!("config: {}", e.inner())
        } else {
            anyhow!("config field `{path}`: {}", e.inner())
        }
    })?;
    if raw.schema != CONFIG_SCHEMA {
        bail!("config field `schema`: unsupported version {} (expected {CONFIG_SCHEMA})", raw.schema);
    }
    let mut warnings = Vec::new();

    let amplitudes = match raw.amplitudes {
        None => HardyAmplitudes::equal(),
        Some(pairs) => {
            let [a, b, c] = pairs.map(|[re, im]| Complex64::new(re, im));
            if [a, b, c].iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                bail!("config field `amplitudes`: entries must be finite");
            }
            let norm_sqr = a.norm_sqr() + b.norm_sqr() + c.norm_sqr();
            let off = (norm_sqr - 1.0).abs();
            if off >= RENORMALIZE_LIMIT {
                bail!("config field `amplitudes`: |a|²+|b|²+|c|² = {norm_sqr} is not 1");
            }
            if off > 1e-12 {
                warnings.push(format!("amplitudes renormalized (|a|²+|b|²+|c|² was {norm_sqr})"));
            }
            HardyAmplitudes::normalized(a, b, c).map_err(|e| anyhow!("config field `amplitudes`: {e}"))?
        }
    };

    let mut tolerances = Tolerances::default();
    if let Some(t) = raw.tolerances {
        for (name, value, slot) in [
            ("algebra", t.algebra, &mut tolerances.algebra),
            ("consistency", t.consistency, &mut tolerances.consistency),
            ("prune", t.prune, &mut tolerances.prune),
        ] {
            if let Some(v) = value {
                if !(v > 0.0 && v < 1.0) {
                    bail!("config field `tolerances.{name}`: must lie in (0, 1), got {v}");
                }
                *slot = v;
            }
        }
    }

    let (choice_l, choice_r) = match raw.choice_weights {
        None => (choice_from_weights(0.5, 0.5), choice_from_weights(0.5, 0.5)),
        Some(w) => (checked_weights("L", w.left)?, checked_weights("R", w.right)?),
    };

    let completion = match raw.completion_angle {
        None => Completion::Ordered,
        Some(angle) if angle.is_finite() => Completion::Rotated(angle),
        Some(_) => bail!("config field `completion_angle`: must be finite"),
    };

    let options = ScenarioOptions {
        choice_l,
        choice_r,
        mode: match raw.mode {
            None | Some(RawMode::Apparatus) => Mode::Apparatus,
            Some(RawMode::Particle) => Mode::Particle,
        },
        order: match raw.order {
            None | Some(RawOrder::LeftFirst) => TimeOrder::LeftFirst,
            Some(RawOrder::RightFirst) => TimeOrder::RightFirst,
        },
        completion,
        tolerances,
        prune: true,
    };

    let sweep = raw.sweep.map(sweep_from_raw).transpose()?;
    Ok(Config {
        scenario: ScenarioConfig { amplitudes, options },
        sweep,
        warnings,
    })
}

fn checked_weights(side: &str, w: [f64; 2]) -> Result<[Complex64; 2]> {
    if w.iter().any(|x| !(0.0..=1.0).contains(x)) || ((w[0] + w[1]) - 1.0).abs() > 1e-9 {
        bail!("config field `choice_weights.{side}`: weights must be probabilities summing to 1, got {w:?}");
    }
    Ok(choice_from_weights(w[0], w[1]))
}

fn sweep_from_raw(raw: RawSweep) -> Result<Sweep> {
    let family = match raw.family {
        RawFamily::AEqualsC => SymmetricFamily::AEqualsC,
        RawFamily::BEqualsC => SymmetricFamily::BEqualsC,
    };
    let parameters = match (raw.values, raw.from, raw.to, raw.steps) {
        (Some(values), None, None, None) => values,
        (None, Some(from), Some(to), Some(steps)) => match steps {
            0 => Vec::new(),
            1 => vec![from],
            n => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
        },
        _ => bail!("config field `sweep`: give either `values` or all of `from`, `to`, `steps`"),
    };
    let (lo, hi) = family.domain::<f64>();
    if let Some(bad) = parameters.iter().find(|p| !(**p >= lo && **p < hi)) {
        bail!(
            "config field `sweep`: parameter {bad} outside [{lo}, {hi:.6}) for family {}",
            family_name(family)
        );
    }
    Ok(Sweep { family, parameters })
}

/// Applies `CHAINLOGIC_TOL` to the consistency tolerance.
pub fn apply_env(config: &mut Config, value: Option<String>) -> Result<()> {
    if let Some(raw) = value {
        let tol: f64 = raw
            .trim()
            .parse()
            .map_err(|_| anyhow!("{TOL_ENV}: `{raw}` is not a number"))?;
        if !(tol > 0.0 && tol < 1.0) {
            bail!("{TOL_ENV}: tolerance must lie in (0, 1), got {tol}");
        }
        config.scenario.options.tolerances.consistency = tol;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse(r#"{"schema": 1}"#).unwrap();
        assert_eq!(c.scenario.amplitudes, HardyAmplitudes::equal());
        assert_eq!(c.scenario.options.mode, Mode::Apparatus);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn errors_name_the_field() {
        let err = parse(r#"{"schema": 1, "amplitudes": [[0.5, 0], [0.5, "x"], [0.5, 0]]}"#).unwrap_err();
        assert!(err.to_string().contains("amplitudes[1][1]"), "{err}");
        let err = parse(r#"{"schema": 1, "mode": "classical"}"#).unwrap_err();
        assert!(err.to_string().contains("`mode`"), "{err}");
        let err = parse(r#"{"schema": 2}"#).unwrap_err();
        assert!(err.to_string().contains("schema"), "{err}");
    }

    #[test]
    fn near_normalized_amplitudes_are_rescaled_with_warning() {
        let s = 1.0 / 3f64.sqrt() + 1e-8;
        let c = parse(&format!(r#"{{"schema": 1, "amplitudes": [[{s}, 0], [{s}, 0], [{s}, 0]]}}"#)).unwrap();
        assert_eq!(c.warnings.len(), 1);
        assert!((c.scenario.amplitudes.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(parse(r#"{"schema": 1, "amplitudes": [[1, 0], [1, 0], [0, 0]]}"#).is_err());
    }

    #[test]
    fn sweep_generator() {
        let c = parse(r#"{"schema": 1, "sweep": {"from": 0.1, "to": 0.5, "steps": 5}}"#).unwrap();
        let sweep = c.sweep.unwrap();
        assert_eq!(sweep.parameters.len(), 5);
        assert!((sweep.parameters[4] - 0.5).abs() < 1e-15);
        assert!(parse(r#"{"schema": 1, "sweep": {"family": "b=c", "values": [0.8]}}"#).is_err());
    }

    #[test]
    fn env_override() {
        let mut c = Config::default();
        apply_env(&mut c, Some("1e-8".into())).unwrap();
        assert_eq!(c.scenario.options.tolerances.consistency, 1e-8);
        assert!(apply_env(&mut c, Some("tight".into())).is_err());
    }
}

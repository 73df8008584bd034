//! Experiment description files.
//!
//! Configs are JSON documents with five blocks: `source`, `circuit`,
//! `detectors`, `herald` and `analysis`. See `configs/README.md` for the
//! schema. Parsing validates every reference eagerly and reports the
//! offending key or circuit step.

use std::collections::{BTreeSet, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::detect::{DetectorBank, DetectorModel, HeraldRule};
use crate::error::{Error, Result};
use crate::fock::Beam;
use crate::optics::{Circuit, ModeMap};
use crate::source::SourceSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// Shipped geometry: PBS1, a Hadamard on each arm, an analysis PBS per arm.
pub const FIG3_CFG: &str = include_str!("../../../configs/fig3.cfg");
/// Shipped geometry: PBS1 followed by the recombining PBS0, then Hadamards
/// and analysis PBSs.
pub const FIG4_RECOMBINE_CFG: &str = include_str!("../../../configs/fig4-recombine.cfg");

/// The shipped configs by geometry name.
pub fn shipped() -> [(&'static str, &'static str); 2] {
    [("fig3", FIG3_CFG), ("fig4-recombine", FIG4_RECOMBINE_CFG)]
}

/// One circuit element as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementSpec {
    /// One or two input beams; an absent second input is an open (vacuum)
    /// port.
    Pbs {
        #[serde(rename = "in")]
        inputs: Vec<Beam>,
        out: [Beam; 2],
        #[serde(default)]
        phase_r: f64,
    },
    Hadamard {
        beam: Beam,
    },
    /// `matrix[row][col] = [re, im]`.
    Rotation {
        beam: Beam,
        matrix: [[[f64; 2]; 2]; 2],
    },
    Mirror {
        from: Beam,
        to: Beam,
    },
    Phase {
        beam: Beam,
        phi: f64,
    },
}

impl ElementSpec {
    pub fn build(&self) -> Result<ModeMap> {
        match self {
            ElementSpec::Pbs {
                inputs,
                out,
                phase_r,
            } => match inputs.as_slice() {
                [a] => ModeMap::pbs_with_phase(a.clone(), None, out[0].clone(), out[1].clone(), *phase_r),
                [a, b] => ModeMap::pbs_with_phase(
                    a.clone(),
                    Some(b.clone()),
                    out[0].clone(),
                    out[1].clone(),
                    *phase_r,
                ),
                _ => Err(Error::Config(format!(
                    "pbs takes one or two input beams, got {}",
                    inputs.len()
                ))),
            },
            ElementSpec::Hadamard { beam } => ModeMap::hadamard(beam.clone()),
            ElementSpec::Rotation { beam, matrix } => {
                let c = |[re, im]: [f64; 2]| Complex64::new(re, im);
                let u = [
                    [c(matrix[0][0]), c(matrix[0][1])],
                    [c(matrix[1][0]), c(matrix[1][1])],
                ];
                ModeMap::polarization_rotation(beam.clone(), u)
            }
            ElementSpec::Mirror { from, to } => ModeMap::relabel(from.clone(), to.clone()),
            ElementSpec::Phase { beam, phi } => ModeMap::phase_shift(beam.clone(), *phi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorEntry {
    pub id: String,
    pub beam: Beam,
    /// Overrides the block-level model for this detector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<DetectorModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorsBlock {
    #[serde(default)]
    pub model: DetectorModel,
    pub bank: Vec<DetectorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldBlock {
    pub groups: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    pub target: [Beam; 2],
}

/// A parsed and fully validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub geometry: String,
    pub description: String,
    pub source: SourceSpec,
    pub elements: Vec<ElementSpec>,
    pub circuit: Circuit,
    pub detectors: DetectorsBlock,
    pub bank: DetectorBank,
    pub rule: HeraldRule,
    pub target: (Beam, Beam),
    /// The document as parsed, used by parameter sweeps.
    pub document: Value,
    /// Hex SHA-256 of the canonical (compact) JSON of `document`.
    pub hash: String,
}

fn block<T: for<'de> Deserialize<'de>>(doc: &Value, key: &str) -> Result<T> {
    let v = doc
        .get(key)
        .ok_or_else(|| Error::Config(format!("missing {key} block")))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("{key}: {e}")))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    if text.trim().is_empty() {
        return Err(Error::Config("missing source block".into()));
    }
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    from_document(doc)
}

pub fn from_document(doc: Value) -> Result<ExperimentConfig> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::Config("top level must be an object".into()))?;
    const KNOWN: [&str; 8] = [
        "schema_version",
        "geometry",
        "description",
        "source",
        "circuit",
        "detectors",
        "herald",
        "analysis",
    ];
    if let Some(key) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown key `{key}`")));
    }
    if let Some(v) = obj.get("schema_version") {
        if v.as_u64() != Some(SCHEMA_VERSION as u64) {
            return Err(Error::Config(format!("unsupported schema_version {v}")));
        }
    }

    let source: SourceSpec = block(&doc, "source")?;
    source
        .validate()
        .map_err(|e| Error::Config(format!("source: {e}")))?;

    let raw_elements = doc
        .get("circuit")
        .ok_or_else(|| Error::Config("missing circuit block".into()))?
        .as_array()
        .ok_or_else(|| Error::Config("circuit must be a list".into()))?;
    let mut elements = Vec::with_capacity(raw_elements.len());
    let mut circuit = Circuit::default();
    for (step, raw) in raw_elements.iter().enumerate() {
        let spec: ElementSpec = serde_json::from_value(raw.clone())
            .map_err(|e| Error::Config(format!("circuit step {step}: {e}")))?;
        let map = spec
            .build()
            .map_err(|e| Error::Config(format!("circuit step {step}: {e}")))?;
        elements.push(spec);
        circuit.push(map);
    }
    let initial: BTreeSet<Beam> = source.beams().into_iter().collect();
    let registries = circuit
        .validate(&initial)
        .map_err(|e| Error::Config(e.to_string()))?;
    let terminal = registries.last().unwrap().clone();
    let ever: BTreeSet<&Beam> = registries.iter().flatten().collect();

    let detectors: DetectorsBlock = block(&doc, "detectors")?;
    let mut bank = DetectorBank::new();
    let mut seen = HashSet::new();
    for entry in &detectors.bank {
        if !seen.insert(entry.id.as_str()) {
            return Err(Error::Config(format!("duplicate detector id `{}`", entry.id)));
        }
        if !ever.contains(&entry.beam) {
            return Err(Error::Config(format!(
                "detector `{}`: dangling beam reference `{}`",
                entry.id, entry.beam
            )));
        }
        if !terminal.contains(&entry.beam) {
            return Err(Error::Config(format!(
                "detector `{}`: detector beam not terminal (`{}`)",
                entry.id, entry.beam
            )));
        }
        bank.add(
            entry.id.clone(),
            entry.beam.clone(),
            entry.model.unwrap_or(detectors.model),
        )
        .map_err(|e| Error::Config(format!("detectors: {e}")))?;
    }

    let herald: HeraldBlock = block(&doc, "herald")?;
    let rule = HeraldRule::new(herald.groups).map_err(|e| Error::Config(format!("herald: {e}")))?;
    rule.check_bank(&bank)
        .map_err(|e| Error::Config(format!("herald: {e}")))?;

    let analysis: AnalysisBlock = block(&doc, "analysis")?;
    let [ta, tb] = analysis.target;
    let unmeasured: BTreeSet<Beam> = terminal.difference(&bank.beams()).cloned().collect();
    let target_set: BTreeSet<Beam> = [ta.clone(), tb.clone()].into_iter().collect();
    if target_set.len() != 2 || target_set != unmeasured {
        return Err(Error::Config(format!(
            "analysis: target beams must be exactly the unmeasured terminal beams {:?}",
            unmeasured.iter().map(Beam::as_str).collect::<Vec<_>>()
        )));
    }

    let hash = format!("{:x}", Sha256::digest(doc.to_string().as_bytes()));
    Ok(ExperimentConfig {
        geometry: obj
            .get("geometry")
            .and_then(Value::as_str)
            .unwrap_or("custom")
            .to_owned(),
        description: obj
            .get("description")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_owned(),
        source,
        elements,
        circuit,
        detectors,
        bank,
        rule,
        target: (ta, tb),
        document: doc,
        hash,
    })
}

/// Replaces the numeric leaf at a dotted path (`source.lambda`,
/// `detectors.model.efficiency`, `circuit.0.phase_r`, ...).
pub fn set_numeric(doc: &Value, path: &str, value: f64) -> Result<Value> {
    let mut doc = doc.clone();
    let mut node = &mut doc;
    for key in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::Config(format!("unknown path `{path}`")))?;
    }
    if !node.is_number() {
        return Err(Error::Config(format!("path `{path}` is not a numeric leaf")));
    }
    *node = if value.fract() == 0.0 && path.ends_with("order") {
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| Error::Config(format!("value {value} is not finite")))?
    };
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_parse() {
        for (name, text) in shipped() {
            let cfg = parse_config(text).unwrap();
            assert_eq!(cfg.geometry, name);
            assert_eq!(cfg.bank.len(), 4);
            assert_eq!(cfg.rule.groups().len(), 2);
            assert_eq!(cfg.target, (Beam::from("3"), Beam::from("4")));
        }
    }

    #[test]
    fn empty_file() {
        let err = parse_config("  \n").unwrap_err();
        assert_eq!(err, Error::Config("missing source block".into()));
        let err = parse_config("{}").unwrap_err();
        assert_eq!(err, Error::Config("missing source block".into()));
    }

    fn edit(f: impl FnOnce(&mut Value)) -> Result<ExperimentConfig> {
        let mut doc: Value = serde_json::from_str(FIG3_CFG).unwrap();
        f(&mut doc);
        from_document(doc)
    }

    #[test]
    fn detector_on_consumed_beam() {
        let err = edit(|d| d["detectors"]["bank"][0]["beam"] = "c".into()).unwrap_err();
        assert!(err.to_string().contains("detector beam not terminal"), "{err}");
    }

    #[test]
    fn dangling_detector_beam() {
        let err = edit(|d| d["detectors"]["bank"][0]["beam"] = "nowhere".into()).unwrap_err();
        assert!(err.to_string().contains("dangling beam reference"), "{err}");
    }

    #[test]
    fn duplicate_detector_id() {
        let err = edit(|d| d["detectors"]["bank"][1]["id"] = "D1".into()).unwrap_err();
        assert!(err.to_string().contains("duplicate detector id"), "{err}");
    }

    #[test]
    fn unknown_element_type() {
        let err = edit(|d| d["circuit"][1]["type"] = "waveguide".into()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("circuit step 1") && msg.contains("unknown variant"), "{msg}");
    }

    #[test]
    fn dangling_circuit_beam() {
        let err = edit(|d| d["circuit"][2]["beam"] = "zz".into()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("circuit step 2") && msg.contains("zz"), "{msg}");
    }

    #[test]
    fn set_numeric_paths() {
        let doc: Value = serde_json::from_str(FIG3_CFG).unwrap();
        let d = set_numeric(&doc, "source.lambda", 0.05).unwrap();
        assert_eq!(d["source"]["lambda"], 0.05);
        let d = set_numeric(&doc, "detectors.model.efficiency", 0.5).unwrap();
        assert_eq!(d["detectors"]["model"]["efficiency"], 0.5);
        let d = set_numeric(&doc, "circuit.0.phase_r", 1.0).unwrap();
        assert_eq!(d["circuit"][0]["phase_r"], 1.0);
        assert!(set_numeric(&doc, "source.nope", 1.0).is_err());
        assert!(set_numeric(&doc, "geometry", 1.0).is_err());
    }
}

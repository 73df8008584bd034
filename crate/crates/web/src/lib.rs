//! Browser bindings. Every function takes plain numbers and returns a JSON
//! string; errors come back as a message string.

use herald_core::config::{from_document, parse_config, set_numeric, ExperimentConfig, FIG3_CFG, FIG4_RECOMBINE_CFG};
use herald_core::runner::{run, sweep};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn base(geometry: &str) -> Result<ExperimentConfig, String> {
    let text = match geometry {
        "fig3" => FIG3_CFG,
        "fig4-recombine" => FIG4_RECOMBINE_CFG,
        other => return Err(format!("unknown geometry {other}")),
    };
    parse_config(text).map_err(|e| e.to_string())
}

fn configure(geometry: &str, params: &[(&str, f64)]) -> Result<ExperimentConfig, String> {
    let mut doc = base(geometry)?.document;
    for (path, value) in params {
        doc = set_numeric(&doc, path, *value).map_err(|e| e.to_string())?;
    }
    from_document(doc).map_err(|e| e.to_string())
}

/// Accepted heralding patterns of the full source and of the pair_pair
/// sector, with Bell fidelities and purity.
#[wasm_bindgen]
pub fn herald_table(geometry: &str, lambda: f64, efficiency: f64, dark_rate: f64) -> Result<String, String> {
    let cfg = configure(
        geometry,
        &[
            ("source.lambda", lambda),
            ("detectors.model.efficiency", efficiency),
            ("detectors.model.dark_rate", dark_rate),
        ],
    )?;
    let report = run(&cfg).map_err(|e| e.to_string())?;
    let accepted = |rows: &[herald_core::runner::PatternRow]| -> Vec<Value> {
        rows.iter()
            .filter(|r| r.accepted)
            .map(|r| {
                json!({
                    "pattern": r.pattern,
                    "probability": r.probability,
                    "label": r.bell_label.map(|l| l.to_string()),
                    "table_fidelity": r.table_fidelity,
                    "fidelity": r.fidelity.as_array(),
                    "purity": r.purity,
                })
            })
            .collect()
    };
    Ok(json!({
        "herald_probability": report.full_source.herald_probability,
        "full_source": accepted(&report.full_source.patterns),
        "pair_pair": report.pair_pair.as_ref().map(|s| accepted(&s.patterns)),
        "table_mismatch": report.table_mismatch,
    })
    .to_string())
}

/// Full-source herald probability and worst table fidelity across
/// `points` evenly spaced detector efficiencies in (0, 1].
#[wasm_bindgen]
pub fn efficiency_curve(geometry: &str, lambda: f64, dark_rate: f64, points: u32) -> Result<String, String> {
    let cfg = configure(geometry, &[("source.lambda", lambda), ("detectors.model.dark_rate", dark_rate)])?;
    let n = points.max(2);
    let values: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let reports = sweep(&cfg, "detectors.model.efficiency", &values).map_err(|e| e.to_string())?;
    let curve: Vec<Value> = values
        .iter()
        .zip(&reports)
        .map(|(eta, r)| {
            let min_fidelity = r
                .full_source
                .patterns
                .iter()
                .filter_map(|p| p.table_fidelity)
                .fold(f64::INFINITY, f64::min);
            json!({
                "efficiency": eta,
                "herald_probability": r.full_source.herald_probability,
                "min_fidelity": min_fidelity.is_finite().then_some(min_fidelity),
            })
        })
        .collect();
    Ok(Value::Array(curve).to_string())
}

/// Per-sector false-herald probabilities for the given pump strength.
#[wasm_bindgen]
pub fn sector_exclusion(geometry: &str, lambda: f64) -> Result<String, String> {
    let cfg = configure(geometry, &[("source.lambda", lambda)])?;
    let report = run(&cfg).map_err(|e| e.to_string())?;
    let sectors: Vec<Value> = report
        .sectors
        .iter()
        .map(|s| {
            json!({
                "sector": s.sector.name(),
                "accept_probability": s.accept_probability,
                "absolute_herald_probability": s.absolute_herald_probability,
                "excluded": s.excluded,
            })
        })
        .collect();
    Ok(Value::Array(sectors).to_string())
}

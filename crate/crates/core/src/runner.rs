//! Experiment orchestration: build the source, run the circuit, herald,
//! classify, score, and evaluate every contamination sector.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bell::{bell_fidelities, classify, BellLabel};
use crate::config::{from_document, set_numeric, ExperimentConfig, SCHEMA_VERSION};
use crate::detect::{herald, HeraldReport, Pattern};
use crate::error::Result;
use crate::fock::{Beam, NORM_TOL};
use crate::optics::apply_circuit;
use crate::oracle::{dense_check, DEFAULT_N_MAX};
use crate::source::{full_source, source_term, Sector};

/// Fidelity of a conditional ensemble to each Bell state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fidelities {
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
}

impl Fidelities {
    fn from_array(f: [f64; 4]) -> Self {
        Fidelities {
            phi_plus: f[0],
            phi_minus: f[1],
            psi_plus: f[2],
            psi_minus: f[3],
        }
    }

    pub fn get(&self, label: BellLabel) -> f64 {
        match label {
            BellLabel::PhiPlus => self.phi_plus,
            BellLabel::PhiMinus => self.phi_minus,
            BellLabel::PsiPlus => self.psi_plus,
            BellLabel::PsiMinus => self.psi_minus,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.phi_plus, self.phi_minus, self.psi_plus, self.psi_minus]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub pattern: String,
    pub fired: Vec<String>,
    pub probability: f64,
    pub accepted: bool,
    /// Label from the fixed pattern table, for accepted patterns in it.
    pub bell_label: Option<BellLabel>,
    pub fidelity: Fidelities,
    /// Fidelity to `bell_label`.
    pub table_fidelity: Option<f64>,
    pub purity: f64,
    pub pure: bool,
    /// Set only where the table claim applies (the pair_pair section):
    /// true when an accepted pattern's state disagrees with the table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_mismatch: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldSection {
    pub input_norm_sqr: f64,
    pub herald_probability: f64,
    pub rejected_probability: f64,
    pub patterns: Vec<PatternRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedPattern {
    pub pattern: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub sector: Sector,
    /// Amplitude of the normalized sector inside the unnormalized source.
    pub weight: f64,
    /// Herald probability for the normalized sector alone. For every
    /// sector other than pair_pair this is a false-herald probability.
    pub accept_probability: f64,
    /// `weight^2 * accept_probability`.
    pub absolute_herald_probability: f64,
    pub excluded: bool,
    pub accepted: Vec<AcceptedPattern>,
    pub oracle_accept_probability: f64,
    /// Largest difference of any pattern probability between the sparse
    /// and dense computations.
    pub oracle_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub lambda: f64,
    pub order: u32,
    pub norm_sqr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub geometry: String,
    pub source: SourceSummary,
    pub detectors: crate::config::DetectorsBlock,
    /// Heralding of the normalized full source.
    pub full_source: HeraldSection,
    /// Heralding of the normalized pair_pair sector (order 2 only).
    pub pair_pair: Option<HeraldSection>,
    pub sectors: Vec<SectorReport>,
    pub table_mismatch: bool,
}

const EXCLUDED_TOL: f64 = 1e-12;

fn section(report: &HeraldReport, target: &(Beam, Beam), table_claim: bool) -> Result<HeraldSection> {
    let mut patterns = Vec::with_capacity(report.patterns.len());
    for entry in &report.patterns {
        let fidelity = Fidelities::from_array(bell_fidelities(&entry.ensemble, &target.0, &target.1)?);
        let fired = entry.pattern.fired();
        let bell_label = if entry.accepted {
            classify(&fired).ok()
        } else {
            None
        };
        let table_fidelity = bell_label.map(|l| fidelity.get(l));
        let purity = entry.ensemble.purity();
        let table_mismatch = (table_claim && entry.accepted)
            .then(|| table_fidelity.is_none_or(|f| f < 1.0 - NORM_TOL));
        patterns.push(PatternRow {
            pattern: entry.pattern.to_string(),
            fired: fired.into_iter().collect(),
            probability: entry.probability,
            accepted: entry.accepted,
            bell_label,
            fidelity,
            table_fidelity,
            purity,
            pure: purity >= 1.0 - NORM_TOL,
            table_mismatch,
        });
    }
    Ok(HeraldSection {
        input_norm_sqr: report.input_norm_sqr,
        herald_probability: report.herald_probability,
        rejected_probability: report.rejected_probability,
        patterns,
    })
}

fn max_pattern_deviation(a: &HeraldReport, b: &HeraldReport) -> f64 {
    let patterns: std::collections::BTreeSet<&Pattern> =
        a.patterns.iter().chain(&b.patterns).map(|e| &e.pattern).collect();
    patterns
        .into_iter()
        .map(|p| {
            let pa = a.find(p).map_or(0.0, |e| e.probability);
            let pb = b.find(p).map_or(0.0, |e| e.probability);
            (pa - pb).abs()
        })
        .fold(0.0, f64::max)
}

/// Runs one experiment. Deterministic for a fixed config.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let spec = &config.source;
    let source = full_source(spec)?;
    let evolved = apply_circuit(&source.normalize()?, &config.circuit)?;
    let full = herald(&evolved, &config.bank, &config.rule)?;
    let full_source = section(&full, &config.target, false)?;

    let mut pair_pair = None;
    let mut sectors = Vec::new();
    for sector in Sector::ALL.into_iter().filter(|s| s.order() <= spec.order) {
        let ket = source_term(spec, sector)?;
        let out = apply_circuit(&ket, &config.circuit)?;
        let report = herald(&out, &config.bank, &config.rule)?;
        let oracle = dense_check(&ket, &config.circuit, &config.bank, &config.rule, DEFAULT_N_MAX)?;
        if sector == Sector::PairPair {
            pair_pair = Some(section(&report, &config.target, true)?);
        }
        let weight = sector.weight(spec.lambda);
        sectors.push(SectorReport {
            sector,
            weight,
            accept_probability: report.herald_probability,
            absolute_herald_probability: weight * weight * report.herald_probability,
            excluded: report.herald_probability <= EXCLUDED_TOL,
            accepted: report
                .accepted()
                .map(|e| AcceptedPattern {
                    pattern: e.pattern.to_string(),
                    probability: e.probability,
                })
                .collect(),
            oracle_accept_probability: oracle.herald_probability,
            oracle_deviation: max_pattern_deviation(&report, &oracle),
        });
    }
    let table_mismatch = pair_pair
        .as_ref()
        .map(|s| s.patterns.iter().any(|p| p.table_mismatch == Some(true)))
        .unwrap_or(false);

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config_hash: config.hash.clone(),
        geometry: config.geometry.clone(),
        source: SourceSummary {
            lambda: spec.lambda,
            order: spec.order,
            norm_sqr: source.norm_sqr(),
        },
        detectors: config.detectors.clone(),
        full_source,
        pair_pair,
        sectors,
        table_mismatch,
    })
}

impl RunReport {
    pub fn sector(&self, sector: Sector) -> Option<&SectorReport> {
        self.sectors.iter().find(|s| s.sector == sector)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One report per value, with `param` set to that value. Points are
/// evaluated on separate threads; order follows `values`.
pub fn sweep(config: &ExperimentConfig, param: &str, values: &[f64]) -> Result<Vec<RunReport>> {
    let configs = values
        .iter()
        .map(|&v| from_document(set_numeric(&config.document, param, v)?))
        .collect::<Result<Vec<_>>>()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || run(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

pub const SWEEP_CSV_HEADER: &str =
    "param,pattern,probability,fidelity_phi_plus,fidelity_phi_minus,fidelity_psi_plus,fidelity_psi_minus";

/// Flat CSV of the accepted full-source patterns of every sweep point.
pub fn sweep_csv(values: &[f64], reports: &[RunReport]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for (value, report) in values.iter().zip(reports) {
        for row in report.full_source.patterns.iter().filter(|r| r.accepted) {
            let f = row.fidelity;
            let _ = writeln!(
                out,
                "{value},{},{:e},{},{},{},{}",
                row.pattern, row.probability, f.phi_plus, f.phi_minus, f.psi_plus, f.psi_minus
            );
        }
    }
    out
}

/// Human-readable pattern -> Bell table.
pub fn patterns_table(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "geometry {}  lambda {}  order {}",
        report.geometry, report.source.lambda, report.source.order
    );
    let mut table = |title: &str, section: &HeraldSection| {
        let _ = writeln!(out, "\n{title} (herald probability {:.6e})", section.herald_probability);
        let _ = writeln!(
            out,
            "{:<10} {:>13} {:>6} {:>9} {:>9} {:>9} {:>9} {:>7}",
            "pattern", "probability", "label", "F(Φ+)", "F(Φ−)", "F(Ψ+)", "F(Ψ−)", "purity"
        );
        for row in section.patterns.iter().filter(|r| r.accepted) {
            let f = row.fidelity;
            let label = row.bell_label.map_or("-".to_string(), |l| l.to_string());
            let _ = writeln!(
                out,
                "{:<10} {:>13.6e} {:>6} {:>9.6} {:>9.6} {:>9.6} {:>9.6} {:>7.4}",
                row.pattern, row.probability, label, f.phi_plus, f.phi_minus, f.psi_plus, f.psi_minus, row.purity
            );
        }
    };
    if let Some(pp) = &report.pair_pair {
        table("pair_pair sector", pp);
    }
    table("full source", &report.full_source);
    let _ = writeln!(out, "\nsector exclusion");
    for s in &report.sectors {
        let _ = writeln!(
            out,
            "{:<16} accept {:.6e}  absolute {:.6e}  {}",
            s.sector.name(),
            s.accept_probability,
            s.absolute_herald_probability,
            if s.excluded { "excluded" } else { "" }
        );
    }
    if report.table_mismatch {
        let _ = writeln!(out, "\ntable_mismatch: heralded states disagree with the pattern table");
    }
    out
}

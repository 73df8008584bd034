//! Built-in verification suite. Each check reproduces one claim of the
//! heralding scheme at a pinned tolerance.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bell::{bell_fidelities, bell_state, classify, ensemble_fidelity, exclusion_report, BellLabel};
use crate::config::{parse_config, ExperimentConfig, FIG3_CFG, FIG4_RECOMBINE_CFG};
use crate::detect::{herald, DetectorModel, HeraldReport, Pattern};
use crate::error::Result;
use crate::fock::{fidelity_pure, Beam, Ket, Mode, Occupation};
use crate::optics::{apply, apply_circuit, ModeMap};
use crate::oracle::{dense_check, DEFAULT_N_MAX};
use crate::random::{random_instance, random_ket, random_unitary};
use crate::source::{two_pair, weighted_source_term, source_term, Sector, SourceSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(id: u32, name: &'static str, outcome: Result<(bool, String)>) -> Self {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        CheckResult {
            id,
            name,
            passed,
            detail,
        }
    }
}

pub const EQ_TOL: f64 = 1e-12;
pub const FIDELITY_TOL: f64 = 1e-9;
pub const ORACLE_TOL: f64 = 1e-10;
pub const SCALING_TOL: f64 = 1e-6;
pub const ORACLE_INSTANCES: usize = 200;
pub const UNITARITY_KETS: usize = 100;

fn fig3() -> ExperimentConfig {
    parse_config(FIG3_CFG).expect("shipped fig3 config")
}

fn fig4() -> ExperimentConfig {
    parse_config(FIG4_RECOMBINE_CFG).expect("shipped fig4-recombine config")
}

fn spec() -> SourceSpec {
    SourceSpec::new(0.1, 2)
}

/// `S = a_H(a) b_V(b) - a_V(a) b_H(b)` applied to `ket`.
fn pair_creator(ket: &Ket, a: &str, b: &str) -> Result<Ket> {
    let hv = ket.create(&Mode::v(b))?.create(&Mode::h(a))?;
    let vh = ket.create(&Mode::h(b))?.create(&Mode::v(a))?;
    hv.plus(&vh.scale(-1.0))
}

/// Two-pair term against the normalized square of the pair creator, and
/// against the explicit (+, -, +)/sqrt(3) coefficients.
pub fn check_two_pair(candidate: &Ket) -> Result<(bool, String)> {
    let vac = Ket::vacuum(["1", "4"])?;
    let reference = pair_creator(&pair_creator(&vac, "1", "4")?, "1", "4")?.normalize()?;
    let s = 1.0 / 3f64.sqrt();
    let term = |ah, av, bh, bv| Occupation::beam("1", ah, av).merge(&Occupation::beam("4", bh, bv));
    let explicit = [(term(2, 0, 0, 2), s), (term(1, 1, 1, 1), -s), (term(0, 2, 2, 0), s)];
    let coeff_ok = candidate.len() == 3
        && explicit
            .iter()
            .all(|(occ, c)| (candidate.amplitude(occ) - c).norm() <= EQ_TOL);
    let operator_ok = candidate.approx_eq(&reference, EQ_TOL);
    Ok((
        coeff_ok && operator_ok,
        format!("coefficients {coeff_ok}, pair-creator square {operator_ok}"),
    ))
}

pub fn check_hadamard() -> Result<(bool, String)> {
    let h = ModeMap::hadamard("1")?;
    let s = FRAC_1_SQRT_2;
    let mut worst: f64 = 0.0;
    let mut involution = true;
    for (input, expect_h, expect_v) in [((1, 0), s, s), ((0, 1), s, -s)] {
        let ket = Ket::zero(["1"])?.add_term(Occupation::beam("1", input.0, input.1), 1.0)?;
        let out = apply(&ket, &h)?;
        worst = worst
            .max((out.amplitude(&Occupation::beam("1", 1, 0)) - expect_h).norm())
            .max((out.amplitude(&Occupation::beam("1", 0, 1)) - expect_v).norm());
        involution &= apply(&out, &h)?.approx_eq(&ket, EQ_TOL);
    }
    Ok((
        worst <= EQ_TOL && involution,
        format!("max amplitude error {worst:.2e}, involution {involution}"),
    ))
}

pub fn check_pbs_collapse() -> Result<(bool, String)> {
    let pbs = ModeMap::pbs("1", "2", "c", "d")?;
    let (c, d) = (Beam::from("c"), Beam::from("d"));
    let mut ok = true;
    let mut detail = Vec::new();
    for label in BellLabel::ALL {
        let out = apply(&bell_state(label, "1", "2")?, &pbs)?;
        let p: f64 = out
            .terms()
            .filter(|(o, _)| o.beam_count(&c) == 1 && o.beam_count(&d) == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            + 0.0;
        let expected = match label {
            BellLabel::PhiPlus | BellLabel::PhiMinus => 1.0,
            _ => 0.0,
        };
        ok &= (p - expected).abs() <= EQ_TOL;
        detail.push(format!("{label}:{p:.3}"));
    }
    Ok((ok, detail.join(" ")))
}

fn sector_report(cfg: &ExperimentConfig, sector: Sector) -> Result<HeraldReport> {
    let out = apply_circuit(&source_term(&spec(), sector)?, &cfg.circuit)?;
    herald(&out, &cfg.bank, &cfg.rule)
}

pub fn check_pattern_table() -> Result<(bool, String)> {
    let cfg = fig3();
    let report = sector_report(&cfg, Sector::PairPair)?;
    let accepted: BTreeSet<BTreeSet<String>> = report.accepted().map(|e| e.pattern.fired()).collect();
    let expected: BTreeSet<BTreeSet<String>> = [["D1", "D3"], ["D2", "D4"], ["D1", "D4"], ["D2", "D3"]]
        .iter()
        .map(|p| p.iter().map(|s| s.to_string()).collect())
        .collect();
    let mut ok = accepted == expected;
    let mut worst: f64 = 1.0;
    for entry in report.accepted() {
        let label = classify(&entry.pattern.fired())?;
        let target = bell_state(label, cfg.target.0.clone(), cfg.target.1.clone())?;
        let f = ensemble_fidelity(entry.ensemble.members(), &target)?;
        ok &= entry.ensemble.is_pure() && entry.ensemble.len() == 1;
        worst = worst.min(f);
    }
    ok &= (1.0 - worst).abs() <= FIDELITY_TOL;
    Ok((ok, format!("{} accepted patterns, min fidelity {worst:.12}", accepted.len())))
}

/// The |2H,0V>_1|0H,2V>_4 and |0H,2V>_1|2H,0V>_4 sub-terms of the two-pair
/// state, normalized and padded with vacuum on beams 2 and 3.
pub fn two_pair_subterms() -> Result<[Ket; 2]> {
    let vac = Ket::vacuum(["2", "3"])?;
    let make = |ah, av, bh, bv| -> Result<Ket> {
        Ket::zero(["1", "4"])?
            .add_term(Occupation::beam("1", ah, av).merge(&Occupation::beam("4", bh, bv)), 1.0)?
            .tensor(&vac)
    };
    Ok([make(2, 0, 0, 2)?, make(0, 2, 2, 0)?])
}

pub fn check_same_polarization_exclusion() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for cfg in [fig3(), fig4()] {
        for ket in two_pair_subterms()? {
            let r = exclusion_report(&ket, &cfg.circuit, &cfg.bank, &cfg.rule)?;
            worst = worst.max(r.false_herald_probability);
        }
    }
    Ok((worst <= EQ_TOL, format!("max false-herald probability {worst:.2e}")))
}

pub fn check_double_pair_exclusion() -> Result<(bool, String)> {
    let f4 = fig4();
    let mut worst: f64 = 0.0;
    for sector in [Sector::DoubleLeft, Sector::DoubleRight] {
        let ket = source_term(&spec(), sector)?;
        worst = worst.max(exclusion_report(&ket, &f4.circuit, &f4.bank, &f4.rule)?.false_herald_probability);
    }
    let f3 = fig3();
    let mut fig3_values = Vec::new();
    let mut oracle_dev: f64 = 0.0;
    for sector in [Sector::DoubleLeft, Sector::DoubleRight] {
        let ket = source_term(&spec(), sector)?;
        let sparse = exclusion_report(&ket, &f3.circuit, &f3.bank, &f3.rule)?.false_herald_probability;
        let dense = dense_check(&ket, &f3.circuit, &f3.bank, &f3.rule, DEFAULT_N_MAX)?.herald_probability;
        oracle_dev = oracle_dev.max((sparse - dense).abs());
        fig3_values.push(format!("{}={sparse:.12}", sector.name()));
    }
    Ok((
        worst <= EQ_TOL && oracle_dev <= EQ_TOL,
        format!(
            "fig4-recombine max {worst:.2e}; fig3 {} (oracle deviation {oracle_dev:.1e})",
            fig3_values.join(", ")
        ),
    ))
}

/// Largest disagreement between two herald reports on pattern
/// probabilities and on ensemble fidelities against `target`.
pub fn report_deviation(a: &HeraldReport, b: &HeraldReport, target: Option<&Ket>) -> Result<f64> {
    let patterns: BTreeSet<&Pattern> = a.patterns.iter().chain(&b.patterns).map(|e| &e.pattern).collect();
    let mut worst: f64 = (a.herald_probability - b.herald_probability).abs();
    for p in patterns {
        let (ea, eb) = (a.find(p), b.find(p));
        let pa = ea.map_or(0.0, |e| e.probability);
        let pb = eb.map_or(0.0, |e| e.probability);
        worst = worst.max((pa - pb).abs());
        if let (Some(ea), Some(eb), Some(t)) = (ea, eb, target) {
            let fa = ensemble_fidelity(ea.ensemble.members(), t)?;
            let fb = ensemble_fidelity(eb.ensemble.members(), t)?;
            worst = worst.max((fa - fb).abs());
        }
    }
    Ok(worst)
}

pub fn check_oracle(instances: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let inst = random_instance(&mut rng, DEFAULT_N_MAX);
        let out = apply_circuit(&inst.ket, &inst.circuit)?;
        let sparse = herald(&out, &inst.bank, &inst.rule)?;
        let dense = dense_check(&inst.ket, &inst.circuit, &inst.bank, &inst.rule, DEFAULT_N_MAX)?;
        let rest: Vec<Beam> = inst.unmeasured().into_iter().collect();
        let target = (!rest.is_empty()).then(|| random_ket(&mut rng, &rest, 2, 4));
        worst = worst.max(report_deviation(&sparse, &dense, target.as_ref())?);
    }
    Ok((worst <= ORACLE_TOL, format!("{instances} instances, max deviation {worst:.2e}")))
}

/// Every shipped element kind, with the given PBS reflection phase.
pub fn shipped_elements(phase_r: f64, rng: &mut ChaCha8Rng) -> Result<Vec<ModeMap>> {
    Ok(vec![
        ModeMap::pbs_with_phase("b0", Some(Beam::from("b1")), "t", "r", phase_r)?,
        ModeMap::pbs_with_phase("b2", None, "t", "r", phase_r)?,
        ModeMap::hadamard("b0")?,
        ModeMap::polarization_rotation("b1", random_unitary(rng))?,
        ModeMap::relabel("b2", "m")?,
        ModeMap::phase_shift("b0", 0.7)?,
    ])
}

pub fn check_unitarity(phase_r: f64, kets: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beams: Vec<Beam> = ["b0", "b1", "b2"].into_iter().map(Beam::from).collect();
    let elements = shipped_elements(phase_r, &mut rng)?;
    let mut worst: f64 = 0.0;
    for _ in 0..kets {
        let ket = random_ket(&mut rng, &beams, 4, 6).scale(rng_scale(&mut rng));
        for e in &elements {
            worst = worst.max((apply(&ket, e)?.norm() - ket.norm()).abs());
        }
    }

    // Hadamard on both beams: Φ+ -> Φ+, Ψ- -> -Ψ-, Φ- <-> Ψ+
    let (ha, hb) = (ModeMap::hadamard("a")?, ModeMap::hadamard("b")?);
    let mut cov_ok = true;
    for (from, to) in [
        (BellLabel::PhiPlus, BellLabel::PhiPlus),
        (BellLabel::PsiMinus, BellLabel::PsiMinus),
        (BellLabel::PhiMinus, BellLabel::PsiPlus),
        (BellLabel::PsiPlus, BellLabel::PhiMinus),
    ] {
        let out = apply(&apply(&bell_state(from, "a", "b")?, &ha)?, &hb)?;
        let target = bell_state(to, "a", "b")?;
        cov_ok &= (fidelity_pure(&out, &target)? - 1.0).abs() <= EQ_TOL;
        if from == BellLabel::PsiMinus {
            cov_ok &= out.approx_eq(&target.scale(-1.0), EQ_TOL);
        }
    }
    Ok((
        worst <= EQ_TOL && cov_ok,
        format!("max norm change {worst:.2e}, Bell covariance {cov_ok}"),
    ))
}

fn rng_scale(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.gen_range(0.5..2.0)
}

pub fn check_efficiency() -> Result<(bool, String)> {
    let cfg = fig3();
    let out = apply_circuit(&source_term(&spec(), Sector::PairPair)?, &cfg.circuit)?;
    let mut last = 0.0;
    let mut monotone = true;
    let mut reports = Vec::new();
    for step in 1..=10 {
        let eta = step as f64 / 10.0;
        let bank = cfg.bank.with_model(DetectorModel::threshold(eta, 0.0));
        let r = herald(&out, &bank, &cfg.rule)?;
        monotone &= r.herald_probability >= last;
        last = r.herald_probability;
        reports.push(r);
    }
    let (low, high) = (&reports[0], &reports[9]);
    let mut worst: f64 = 0.0;
    for entry in high.accepted() {
        let other = low
            .find(&entry.pattern)
            .ok_or_else(|| crate::Error::RejectedPattern(entry.pattern.to_string()))?;
        let fa = bell_fidelities(&entry.ensemble, &cfg.target.0, &cfg.target.1)?;
        let fb = bell_fidelities(&other.ensemble, &cfg.target.0, &cfg.target.1)?;
        for (a, b) in fa.iter().zip(&fb) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok((
        monotone && worst <= FIDELITY_TOL,
        format!(
            "P(η=0.1) {:.4e} .. P(η=1) {:.4e}, monotone {monotone}, fidelity shift {worst:.1e}",
            low.herald_probability, high.herald_probability
        ),
    ))
}

pub fn check_scaling() -> Result<(bool, String)> {
    let cfg = fig3();
    let p = |lambda: f64| -> Result<f64> {
        let ket = weighted_source_term(&SourceSpec::new(lambda, 2), Sector::PairPair)?;
        Ok(herald(&apply_circuit(&ket, &cfg.circuit)?, &cfg.bank, &cfg.rule)?.herald_probability)
    };
    let ratio = p(0.02)? / p(0.01)?;
    Ok(((ratio - 16.0).abs() <= SCALING_TOL, format!("P(0.02)/P(0.01) = {ratio:.9}")))
}

/// Runs every check with its default parameters.
pub fn verify() -> Vec<CheckResult> {
    vec![
        CheckResult::new(1, "two-pair term consistency", two_pair("1", "4").and_then(|k| check_two_pair(&k))),
        CheckResult::new(2, "Hadamard table and involution", check_hadamard()),
        CheckResult::new(3, "PBS same-polarization collapse", check_pbs_collapse()),
        CheckResult::new(4, "fig3 pattern table", check_pattern_table()),
        CheckResult::new(5, "|2H>/|2V> exclusion in both geometries", check_same_polarization_exclusion()),
        CheckResult::new(6, "double-pair exclusion", check_double_pair_exclusion()),
        CheckResult::new(7, "sparse/dense oracle equivalence", check_oracle(ORACLE_INSTANCES, 7)),
        CheckResult::new(8, "unitarity and Bell covariance", check_unitarity(0.0, UNITARITY_KETS, 8)),
        CheckResult::new(9, "detector efficiency robustness", check_efficiency()),
        CheckResult::new(10, "lambda^4 scaling of pair_pair heralds", check_scaling()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_two_pair_fails() {
        let good = two_pair("1", "4").unwrap();
        assert!(check_two_pair(&good).unwrap().0);
        let occ = Occupation::beam("1", 1, 1).merge(&Occupation::beam("4", 1, 1));
        let bad = good.add_term(occ, 2.0 / 3f64.sqrt()).unwrap();
        assert!(!check_two_pair(&bad).unwrap().0);
    }

    #[test]
    fn perturbed_pbs_phase_keeps_unitarity() {
        assert!(check_unitarity(0.9, 10, 3).unwrap().0);
    }
}

//! Bell states, the detector-pattern classification table and scoring of
//! heralded ensembles.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::detect::{herald, DetectorBank, DetectorId, Ensemble, HeraldRule, Pattern};
use crate::error::{Error, Result};
use crate::fock::{fidelity_pure, Beam, Ket, Mode, Occupation, Polarization, NORM_TOL};
use crate::optics::{apply_circuit, Circuit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "phi_plus",
            BellLabel::PhiMinus => "phi_minus",
            BellLabel::PsiPlus => "psi_plus",
            BellLabel::PsiMinus => "psi_minus",
        }
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellLabel::PhiPlus => "Φ+",
            BellLabel::PhiMinus => "Φ−",
            BellLabel::PsiPlus => "Ψ+",
            BellLabel::PsiMinus => "Ψ−",
        })
    }
}

/// Two-photon polarization Bell state on beams `a`, `b`.
pub fn bell_state(label: BellLabel, a: impl Into<Beam>, b: impl Into<Beam>) -> Result<Ket> {
    use Polarization::{H, V};
    let (a, b) = (a.into(), b.into());
    if a == b {
        return Err(Error::CoincidentBeams(a));
    }
    let (first, second, sign) = match label {
        BellLabel::PhiPlus => ((H, H), (V, V), 1.0),
        BellLabel::PhiMinus => ((H, H), (V, V), -1.0),
        BellLabel::PsiPlus => ((H, V), (V, H), 1.0),
        BellLabel::PsiMinus => ((H, V), (V, H), -1.0),
    };
    let occ = |(pa, pb): (Polarization, Polarization)| {
        Occupation::from_counts([(Mode::new(a.clone(), pa), 1), (Mode::new(b.clone(), pb), 1)])
    };
    Ket::zero([a.clone(), b.clone()])?
        .add_term(occ(first), FRAC_1_SQRT_2)?
        .add_term(occ(second), sign * FRAC_1_SQRT_2)
}

/// Fixed pattern table: `{D1,D3}`, `{D2,D4}` herald Φ+ and `{D1,D4}`,
/// `{D2,D3}` herald Φ−.
pub const PATTERN_TABLE: [([&str; 2], BellLabel); 4] = [
    (["D1", "D3"], BellLabel::PhiPlus),
    (["D2", "D4"], BellLabel::PhiPlus),
    (["D1", "D4"], BellLabel::PhiMinus),
    (["D2", "D3"], BellLabel::PhiMinus),
];

pub fn classify(fired: &BTreeSet<DetectorId>) -> Result<BellLabel> {
    PATTERN_TABLE
        .iter()
        .find(|(ids, _)| fired.len() == 2 && ids.iter().all(|id| fired.contains(*id)))
        .map(|&(_, label)| label)
        .ok_or_else(|| {
            Error::RejectedPattern(format!(
                "{{{}}}",
                fired.iter().cloned().collect::<Vec<_>>().join(",")
            ))
        })
}

/// `sum_i w_i |<target|k_i>|^2`.
pub fn ensemble_fidelity(members: &[(f64, Ket)], target: &Ket) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let total: f64 = members.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::EnsembleWeights(total));
    }
    members
        .iter()
        .map(|(w, k)| Ok(w * fidelity_pure(target, k)?))
        .sum()
}

/// Fidelity of an ensemble on beams `(a, b)` to each of the four Bell
/// states, in `BellLabel::ALL` order.
pub fn bell_fidelities(ensemble: &Ensemble, a: &Beam, b: &Beam) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, label) in out.iter_mut().zip(BellLabel::ALL) {
        let target = bell_state(label, a.clone(), b.clone())?;
        *slot = ensemble_fidelity(ensemble.members(), &target)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExclusionReport {
    pub false_herald_probability: f64,
    /// Accepted patterns with their probabilities.
    pub accepted: Vec<(Pattern, f64)>,
}

/// Probability that the herald rule accepts when the input is a pure
/// contamination sector.
pub fn exclusion_report(
    sector: &Ket,
    circuit: &Circuit,
    bank: &DetectorBank,
    rule: &HeraldRule,
) -> Result<ExclusionReport> {
    if !sector.is_normalized() {
        return Err(Error::NotNormalized(sector.norm()));
    }
    let out = apply_circuit(sector, circuit)?;
    let report = herald(&out, bank, rule)?;
    Ok(ExclusionReport {
        false_herald_probability: report.herald_probability,
        accepted: report
            .accepted()
            .map(|e| (e.pattern.clone(), e.probability))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::TOL;

    fn fired(s: &[&str]) -> BTreeSet<DetectorId> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn bell_amplitudes() {
        let phi = bell_state(BellLabel::PhiPlus, "3", "4").unwrap();
        for (_, amp) in phi.terms() {
            assert!((amp.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        let psi = bell_state(BellLabel::PsiPlus, "3", "4").unwrap();
        let hv = Occupation::from_counts([(Mode::h("3"), 1), (Mode::v("4"), 1)]);
        let vh = Occupation::from_counts([(Mode::v("3"), 1), (Mode::h("4"), 1)]);
        assert!((psi.amplitude(&hv).re - FRAC_1_SQRT_2).abs() < TOL);
        assert!((psi.amplitude(&vh).re - FRAC_1_SQRT_2).abs() < TOL);
        assert!(bell_state(BellLabel::PhiPlus, "3", "3").is_err());
    }

    #[test]
    fn bell_gram_is_identity() {
        for a in BellLabel::ALL {
            for b in BellLabel::ALL {
                let g = bell_state(a, "1", "2").unwrap().inner(&bell_state(b, "1", "2").unwrap()).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((g.re - expected).abs() < TOL && g.im.abs() < TOL);
            }
        }
    }

    #[test]
    fn classify_table() {
        assert_eq!(classify(&fired(&["D1", "D3"])).unwrap(), BellLabel::PhiPlus);
        assert_eq!(classify(&fired(&["D2", "D4"])).unwrap(), BellLabel::PhiPlus);
        assert_eq!(classify(&fired(&["D2", "D3"])).unwrap(), BellLabel::PhiMinus);
        assert_eq!(classify(&fired(&["D1", "D4"])).unwrap(), BellLabel::PhiMinus);
        assert!(classify(&fired(&["D1", "D2"])).is_err());
        assert!(classify(&fired(&["D1", "D3", "D4"])).is_err());
    }

    #[test]
    fn ensemble_fidelity_cases() {
        let phi_p = bell_state(BellLabel::PhiPlus, "3", "4").unwrap();
        let phi_m = bell_state(BellLabel::PhiMinus, "3", "4").unwrap();
        let f = ensemble_fidelity(&[(1.0, phi_p.clone())], &phi_p).unwrap();
        assert!((f - 1.0).abs() < TOL);
        let f = ensemble_fidelity(&[(0.5, phi_p.clone()), (0.5, phi_m)], &phi_p).unwrap();
        assert!((f - 0.5).abs() < TOL);
        assert_eq!(ensemble_fidelity(&[], &phi_p), Err(Error::EmptyEnsemble));
        assert!(matches!(
            ensemble_fidelity(&[(0.7, phi_p.clone())], &phi_p),
            Err(Error::EnsembleWeights(_))
        ));
    }
}

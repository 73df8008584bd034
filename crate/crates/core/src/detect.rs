//! Photon detectors on terminal beams, detection-pattern statistics and the
//! coincidence (herald) rule.
//!
//! Detectors count photons in both polarizations of their beam. Loss and
//! dark counts act independently per detector, so every measured occupation
//! of the detector beams contributes an incoherent branch: the conditional
//! state of the unmeasured beams is a weighted ensemble of pure kets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Beam, Ket, Occupation, NORM_TOL};

pub type DetectorId = String;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    #[default]
    Threshold,
    NumberResolving,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    #[serde(default)]
    pub kind: DetectorKind,
    #[serde(default = "unit")]
    pub efficiency: f64,
    #[serde(default)]
    pub dark_rate: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            kind: DetectorKind::Threshold,
            efficiency: 1.0,
            dark_rate: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn threshold(efficiency: f64, dark_rate: f64) -> Self {
        DetectorModel {
            kind: DetectorKind::Threshold,
            efficiency,
            dark_rate,
        }
    }

    pub fn number_resolving(efficiency: f64, dark_rate: f64) -> Self {
        DetectorModel {
            kind: DetectorKind::NumberResolving,
            efficiency,
            dark_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidDetector(format!(
                "efficiency {} outside [0, 1]",
                self.efficiency
            )));
        }
        if !(0.0..1.0).contains(&self.dark_rate) {
            return Err(Error::InvalidDetector(format!(
                "dark rate {} outside [0, 1)",
                self.dark_rate
            )));
        }
        Ok(())
    }

    /// Distribution of the reported value for `k` incident photons.
    /// Threshold detectors report 0 or 1; number-resolving detectors report
    /// a binomially thinned count plus at most one dark count.
    pub fn response(&self, k: u32) -> Vec<(u32, f64)> {
        let eta = self.efficiency;
        let d = self.dark_rate;
        match self.kind {
            DetectorKind::Threshold => {
                let silent = (1.0 - eta).powi(k as i32) * (1.0 - d);
                vec![(0, silent), (1, 1.0 - silent)]
            }
            DetectorKind::NumberResolving => {
                let binom: Vec<f64> = (0..=k)
                    .map(|j| {
                        binomial(k, j) * eta.powi(j as i32) * (1.0 - eta).powi((k - j) as i32)
                    })
                    .collect();
                (0..=k + 1)
                    .map(|r| {
                        let detected = binom.get(r as usize).copied().unwrap_or(0.0);
                        let with_dark = if r > 0 { binom[(r - 1) as usize] } else { 0.0 };
                        (r, detected * (1.0 - d) + with_dark * d)
                    })
                    .collect()
            }
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that a detector clicks when `k` photons arrive.
pub fn fire_probability(k: u32, model: &DetectorModel) -> f64 {
    1.0 - (1.0 - model.efficiency).powi(k as i32) * (1.0 - model.dark_rate)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detector {
    pub beam: Beam,
    pub model: DetectorModel,
}

/// Detectors keyed by id, each bound to one beam.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectorBank {
    detectors: BTreeMap<DetectorId, Detector>,
}

impl DetectorBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        id: impl Into<DetectorId>,
        beam: impl Into<Beam>,
        model: DetectorModel,
    ) -> Result<()> {
        let (id, beam) = (id.into(), beam.into());
        model.validate()?;
        if self.detectors.contains_key(&id) {
            return Err(Error::DuplicateDetector(id));
        }
        if self.detectors.values().any(|d| d.beam == beam) {
            return Err(Error::SharedDetectorBeam(beam));
        }
        self.detectors.insert(id, Detector { beam, model });
        Ok(())
    }

    /// Bank with the same model on every detector.
    pub fn uniform<I, S, B>(bindings: I, model: DetectorModel) -> Result<Self>
    where
        I: IntoIterator<Item = (S, B)>,
        S: Into<DetectorId>,
        B: Into<Beam>,
    {
        let mut bank = DetectorBank::new();
        for (id, beam) in bindings {
            bank.add(id, beam, model)?;
        }
        Ok(bank)
    }

    pub fn detectors(&self) -> impl Iterator<Item = (&DetectorId, &Detector)> {
        self.detectors.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Detector> {
        self.detectors.get(id)
    }

    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    pub fn beams(&self) -> BTreeSet<Beam> {
        self.detectors.values().map(|d| d.beam.clone()).collect()
    }

    /// Same bank with every detector's model replaced.
    pub fn with_model(&self, model: DetectorModel) -> Self {
        DetectorBank {
            detectors: self
                .detectors
                .iter()
                .map(|(id, d)| {
                    (
                        id.clone(),
                        Detector {
                            beam: d.beam.clone(),
                            model,
                        },
                    )
                })
                .collect(),
        }
    }

    /// Every detector beam must be present at the end of the circuit.
    pub fn check_terminal(&self, terminal: &BTreeSet<Beam>) -> Result<()> {
        for (id, det) in &self.detectors {
            if !terminal.contains(&det.beam) {
                return Err(Error::DetectorNotTerminal {
                    detector: id.clone(),
                    beam: det.beam.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Coincidence predicate: exactly one detector fires in each group and no
/// detector outside the groups fires.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldRule {
    groups: Vec<BTreeSet<DetectorId>>,
}

impl HeraldRule {
    pub fn new<G, S>(groups: impl IntoIterator<Item = G>) -> Result<Self>
    where
        G: IntoIterator<Item = S>,
        S: Into<DetectorId>,
    {
        let groups: Vec<BTreeSet<DetectorId>> = groups
            .into_iter()
            .map(|g| g.into_iter().map(Into::into).collect())
            .collect();
        let mut seen = BTreeSet::new();
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidRule("empty group".into()));
            }
            for id in g {
                if !seen.insert(id.clone()) {
                    return Err(Error::InvalidRule(format!("`{id}` appears in two groups")));
                }
            }
        }
        Ok(HeraldRule { groups })
    }

    /// The two-group rule `{D1, D2}`, `{D3, D4}`.
    pub fn standard() -> Self {
        HeraldRule::new([["D1", "D2"], ["D3", "D4"]]).unwrap()
    }

    pub fn groups(&self) -> &[BTreeSet<DetectorId>] {
        &self.groups
    }

    pub fn check_bank(&self, bank: &DetectorBank) -> Result<()> {
        for id in self.groups.iter().flatten() {
            if bank.get(id).is_none() {
                return Err(Error::UnknownDetector(id.clone()));
            }
        }
        Ok(())
    }
}

pub fn rule_eval(fired: &BTreeSet<DetectorId>, rule: &HeraldRule) -> bool {
    if fired.is_empty() {
        return false;
    }
    let each_group_once = rule
        .groups
        .iter()
        .all(|g| g.iter().filter(|id| fired.contains(*id)).count() == 1);
    let nothing_outside = fired.iter().all(|id| rule.groups.iter().any(|g| g.contains(id)));
    each_group_once && nothing_outside
}

/// Reported value per detector that clicked. Threshold detectors report 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern(BTreeMap<DetectorId, u32>);

impl Pattern {
    pub fn from_fired<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<DetectorId>,
    {
        Pattern(ids.into_iter().map(|id| (id.into(), 1)).collect())
    }

    pub(crate) fn from_counts(counts: BTreeMap<DetectorId, u32>) -> Self {
        Pattern(counts.into_iter().filter(|(_, n)| *n > 0).collect())
    }

    pub fn fired(&self) -> BTreeSet<DetectorId> {
        self.0.keys().cloned().collect()
    }

    pub fn counts(&self) -> &BTreeMap<DetectorId, u32> {
        &self.0
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("none");
        }
        for (i, (id, &n)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            f.write_str(id)?;
            if n > 1 {
                write!(f, "x{n}")?;
            }
        }
        Ok(())
    }
}

/// One measured occupation and the normalized state left on the other beams.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub measured: Occupation,
    pub probability: f64,
    pub residual: Ket,
}

impl Branch {
    pub fn counts(&self, beams: &BTreeSet<Beam>) -> BTreeMap<Beam, u32> {
        beams.iter().map(|b| (b.clone(), self.measured.beam_count(b))).collect()
    }
}

/// Splits `ket` by its occupation on `measured`. Probabilities are absolute
/// (they sum to the squared norm of `ket`).
pub(crate) fn branches(ket: &Ket, measured: &BTreeSet<Beam>) -> Result<Vec<Branch>> {
    for beam in measured {
        if !ket.registry().contains(beam) {
            return Err(Error::UnregisteredBeam(beam.clone()));
        }
    }
    let rest: BTreeSet<Beam> = ket.registry().difference(measured).cloned().collect();
    let mut grouped: BTreeMap<Occupation, Ket> = BTreeMap::new();
    for (occ, amp) in ket.terms() {
        let (inside, outside) = occ.split(measured);
        grouped
            .entry(inside)
            .or_insert_with(|| Ket::with_registry(rest.clone()))
            .accumulate(outside, amp);
    }
    grouped
        .into_iter()
        .filter(|(_, r)| !r.is_empty())
        .map(|(measured, residual)| {
            let probability = residual.norm_sqr();
            Ok(Branch {
                measured,
                probability,
                residual: residual.normalize()?,
            })
        })
        .collect()
}

/// Born-rule partition of a normalized ket by its occupation on `measured`.
pub fn count_distribution(ket: &Ket, measured: &BTreeSet<Beam>) -> Result<Vec<Branch>> {
    if !ket.is_normalized() {
        return Err(Error::NotNormalized(ket.norm()));
    }
    branches(ket, measured)
}

/// Weighted pure kets; weights sum to one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ensemble {
    members: Vec<(f64, Ket)>,
}

impl Ensemble {
    /// Builds an ensemble from raw weights, normalizing them.
    pub fn from_weighted(members: Vec<(f64, Ket)>) -> Result<Self> {
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        if total <= 0.0 {
            return Err(Error::EnsembleWeights(total));
        }
        Ok(Ensemble {
            members: members.into_iter().map(|(w, k)| (w / total, k)).collect(),
        })
    }

    /// Takes weights as given; they must already sum to one.
    pub fn new(members: Vec<(f64, Ket)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::EnsembleWeights(total));
        }
        Ok(Ensemble { members })
    }

    pub fn pure(ket: Ket) -> Self {
        Ensemble {
            members: vec![(1.0, ket)],
        }
    }

    pub fn members(&self) -> &[(f64, Ket)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for (wi, ki) in &self.members {
            for (wj, kj) in &self.members {
                acc += wi * wj * ki.inner(kj).map(|c| c.norm_sqr()).unwrap_or(0.0);
            }
        }
        acc
    }

    pub fn is_pure(&self) -> bool {
        self.purity() >= 1.0 - NORM_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternOutcome {
    pub probability: f64,
    pub ensemble: Ensemble,
}

/// Probability and conditional ensemble for every pattern with nonzero
/// probability.
pub fn pattern_probabilities(
    ket: &Ket,
    bank: &DetectorBank,
) -> Result<BTreeMap<Pattern, PatternOutcome>> {
    bank.check_terminal(ket.registry())?;
    let measured = bank.beams();
    let detectors: Vec<(&DetectorId, &Detector)> = bank.detectors().collect();

    let mut acc: BTreeMap<Pattern, (f64, Vec<(f64, Ket)>)> = BTreeMap::new();
    for branch in branches(ket, &measured)? {
        // joint response of all detectors, detector by detector
        let mut joint: Vec<(BTreeMap<DetectorId, u32>, f64)> = vec![(BTreeMap::new(), 1.0)];
        for (id, det) in &detectors {
            let k = branch.measured.beam_count(&det.beam);
            let resp = det.model.response(k);
            let mut next = Vec::with_capacity(joint.len() * resp.len());
            for (clicks, p) in &joint {
                for &(r, q) in &resp {
                    if q <= 0.0 {
                        continue;
                    }
                    let mut clicks = clicks.clone();
                    if r > 0 {
                        clicks.insert((*id).clone(), r);
                    }
                    next.push((clicks, p * q));
                }
            }
            joint = next;
        }
        for (clicks, p) in joint {
            let weight = branch.probability * p;
            if weight <= 0.0 {
                continue;
            }
            let entry = acc.entry(Pattern(clicks)).or_insert_with(|| (0.0, Vec::new()));
            entry.0 += weight;
            entry.1.push((weight, branch.residual.clone()));
        }
    }
    acc.into_iter()
        .map(|(pattern, (probability, members))| {
            Ok((
                pattern,
                PatternOutcome {
                    probability,
                    ensemble: Ensemble::from_weighted(members)?,
                },
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatternEntry {
    pub pattern: Pattern,
    pub probability: f64,
    pub accepted: bool,
    pub ensemble: Ensemble,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeraldReport {
    pub patterns: Vec<PatternEntry>,
    pub herald_probability: f64,
    pub rejected_probability: f64,
    pub input_norm_sqr: f64,
}

impl HeraldReport {
    pub fn accepted(&self) -> impl Iterator<Item = &PatternEntry> {
        self.patterns.iter().filter(|e| e.accepted)
    }

    pub fn find(&self, pattern: &Pattern) -> Option<&PatternEntry> {
        self.patterns.iter().find(|e| &e.pattern == pattern)
    }

    pub(crate) fn from_outcomes(
        outcomes: BTreeMap<Pattern, PatternOutcome>,
        rule: &HeraldRule,
        input_norm_sqr: f64,
    ) -> Self {
        let mut herald_probability = 0.0;
        let mut rejected_probability = 0.0;
        let patterns = outcomes
            .into_iter()
            .map(|(pattern, o)| {
                let accepted = rule_eval(&pattern.fired(), rule);
                if accepted {
                    herald_probability += o.probability;
                } else {
                    rejected_probability += o.probability;
                }
                PatternEntry {
                    pattern,
                    probability: o.probability,
                    accepted,
                    ensemble: o.ensemble,
                }
            })
            .collect();
        HeraldReport {
            patterns,
            herald_probability,
            rejected_probability,
            input_norm_sqr,
        }
    }
}

/// Splits pattern statistics into rule-accepted and rejected events.
pub fn herald(ket: &Ket, bank: &DetectorBank, rule: &HeraldRule) -> Result<HeraldReport> {
    rule.check_bank(bank)?;
    let outcomes = pattern_probabilities(ket, bank)?;
    Ok(HeraldReport::from_outcomes(outcomes, rule, ket.norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Mode, TOL};
    use crate::source::single_pair;

    fn ids(s: &[&str]) -> BTreeSet<DetectorId> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn fire_probability_cases() {
        assert_eq!(fire_probability(0, &DetectorModel::threshold(1.0, 0.0)), 0.0);
        assert!((fire_probability(2, &DetectorModel::threshold(0.5, 0.0)) - 0.75).abs() < TOL);
        assert!((fire_probability(0, &DetectorModel::threshold(1.0, 0.01)) - 0.01).abs() < TOL);
    }

    #[test]
    fn responses_are_distributions() {
        for model in [
            DetectorModel::threshold(0.3, 0.05),
            DetectorModel::number_resolving(0.3, 0.05),
            DetectorModel::number_resolving(1.0, 0.0),
        ] {
            for k in 0..5 {
                let total: f64 = model.response(k).iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < TOL);
                let fire: f64 = model.response(k).iter().filter(|(r, _)| *r > 0).map(|(_, p)| p).sum();
                assert!((fire - fire_probability(k, &model)).abs() < TOL);
            }
        }
        let ideal = DetectorModel::number_resolving(1.0, 0.0);
        assert_eq!(ideal.response(3).iter().find(|(_, p)| *p > 0.0).unwrap().0, 3);
    }

    #[test]
    fn rule_eval_cases() {
        let rule = HeraldRule::standard();
        assert!(rule_eval(&ids(&["D1", "D3"]), &rule));
        assert!(!rule_eval(&ids(&["D1", "D2"]), &rule));
        assert!(!rule_eval(&ids(&[]), &rule));
        assert!(!rule_eval(&ids(&["D1", "D3", "D9"]), &rule));
    }

    #[test]
    fn rule_rejects_overlap() {
        assert!(HeraldRule::new([vec!["D1"], vec!["D1", "D2"]]).is_err());
        assert!(HeraldRule::new([Vec::<&str>::new()]).is_err());
    }

    #[test]
    fn count_distribution_singlet() {
        let psi = single_pair("1", "2").unwrap();
        let measured: BTreeSet<Beam> = ["1", "2"].into_iter().map(Beam::from).collect();
        let out = count_distribution(&psi, &measured).unwrap();
        assert_eq!(out.len(), 2);
        for b in &out {
            assert!((b.probability - 0.5).abs() < TOL);
            assert_eq!(b.counts(&measured).values().copied().collect::<Vec<_>>(), vec![1, 1]);
        }
    }

    #[test]
    fn count_distribution_product_of_pairs() {
        let psi = single_pair("1", "4").unwrap().tensor(&single_pair("2", "3").unwrap()).unwrap();
        let measured: BTreeSet<Beam> = ["1", "2"].into_iter().map(Beam::from).collect();
        let out = count_distribution(&psi, &measured).unwrap();
        assert_eq!(out.len(), 4);
        for b in &out {
            assert!((b.probability - 0.25).abs() < TOL);
            assert_eq!(b.residual.len(), 1);
        }
        let vac = Ket::vacuum(["1", "2"]).unwrap();
        let out = count_distribution(&vac, &measured).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0).abs() < TOL);
        assert!(count_distribution(&vac.scale(2.0), &measured).is_err());
    }

    fn two_beam_state(e: u32, f: u32) -> Ket {
        Ket::zero(["e", "f"])
            .unwrap()
            .add_term(Occupation::from_counts([(Mode::h("e"), e), (Mode::h("f"), f)]), 1.0)
            .unwrap()
    }

    #[test]
    fn ideal_and_lossy_patterns() {
        let ket = two_beam_state(1, 1);
        let ideal = DetectorBank::uniform([("De", "e"), ("Df", "f")], DetectorModel::default()).unwrap();
        let out = pattern_probabilities(&ket, &ideal).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[&Pattern::from_fired(["De", "Df"])].probability - 1.0).abs() < TOL);

        let lossy = ideal.with_model(DetectorModel::threshold(0.5, 0.0));
        let out = pattern_probabilities(&ket, &lossy).unwrap();
        assert_eq!(out.len(), 4);
        for o in out.values() {
            assert!((o.probability - 0.25).abs() < TOL);
        }
    }

    #[test]
    fn threshold_cannot_count() {
        let ket = two_beam_state(2, 0);
        let bank = DetectorBank::uniform([("De", "e"), ("Df", "f")], DetectorModel::default()).unwrap();
        let out = pattern_probabilities(&ket, &bank).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[&Pattern::from_fired(["De"])].probability - 1.0).abs() < TOL);
    }

    #[test]
    fn detector_on_missing_beam() {
        let bank = DetectorBank::uniform([("D1", "zz")], DetectorModel::default()).unwrap();
        let err = pattern_probabilities(&Ket::vacuum(["e"]).unwrap(), &bank).unwrap_err();
        assert!(matches!(err, Error::DetectorNotTerminal { .. }));
    }

    #[test]
    fn bank_rejects_duplicates() {
        let mut bank = DetectorBank::new();
        bank.add("D1", "a", DetectorModel::default()).unwrap();
        assert!(matches!(bank.add("D1", "b", DetectorModel::default()), Err(Error::DuplicateDetector(_))));
        assert!(matches!(bank.add("D2", "a", DetectorModel::default()), Err(Error::SharedDetectorBeam(_))));
        assert!(bank.add("D3", "c", DetectorModel::threshold(1.5, 0.0)).is_err());
    }

    #[test]
    fn vacuum_never_heralds() {
        let bank = DetectorBank::uniform(
            [("D1", "a"), ("D2", "b"), ("D3", "c"), ("D4", "d")],
            DetectorModel::default(),
        )
        .unwrap();
        let report = herald(&Ket::vacuum(["a", "b", "c", "d"]).unwrap(), &bank, &HeraldRule::standard()).unwrap();
        assert_eq!(report.herald_probability, 0.0);
        assert!((report.rejected_probability - 1.0).abs() < TOL);
    }

    #[test]
    fn ensemble_purity() {
        let a = single_pair("1", "2").unwrap();
        assert!(Ensemble::pure(a.clone()).is_pure());
        let b = Ket::vacuum(["1", "2"]).unwrap();
        let mix = Ensemble::new(vec![(0.5, a), (0.5, b)]).unwrap();
        assert!((mix.purity() - 0.5).abs() < TOL);
        assert!(Ensemble::new(vec![]).is_err());
    }
}

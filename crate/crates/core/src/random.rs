//! Seeded random kets, circuits and detector banks for cross-checking the
//! sparse path against the dense oracle.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::detect::{DetectorBank, DetectorModel, HeraldRule};
use crate::fock::{Beam, Ket, Mode, Occupation, Polarization};
use crate::optics::{Circuit, Matrix2, ModeMap};

/// Haar-style random 2x2 unitary from Euler angles and a global phase.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Matrix2 {
    let theta: f64 = rng.gen_range(0.0..PI / 2.0);
    let (psi, chi, alpha): (f64, f64, f64) = (
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.0..2.0 * PI),
        rng.gen_range(0.0..2.0 * PI),
    );
    let g = Complex64::from_polar(1.0, alpha);
    [
        [
            g * Complex64::from_polar(theta.cos(), psi),
            g * Complex64::from_polar(theta.sin(), chi),
        ],
        [
            -g * Complex64::from_polar(theta.sin(), -chi),
            g * Complex64::from_polar(theta.cos(), -psi),
        ],
    ]
}

/// Random normalized ket over `beams` with at most `max_photons` photons
/// per term.
pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, beams: &[Beam], max_photons: u32, n_terms: usize) -> Ket {
    let modes: Vec<Mode> = beams
        .iter()
        .flat_map(|b| Polarization::BOTH.map(|p| Mode::new(b.clone(), p)))
        .collect();
    loop {
        let mut ket = Ket::zero(beams.iter().cloned()).expect("non-empty registry");
        for _ in 0..n_terms {
            let n = rng.gen_range(0..=max_photons);
            let occ = Occupation::from_counts((0..n).map(|_| (modes.choose(rng).unwrap().clone(), 1)));
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            ket.push(occ, amp).expect("registered modes");
        }
        if let Ok(k) = ket.normalize() {
            return k;
        }
    }
}

/// A random state, circuit, detector bank and rule.
#[derive(Clone, Debug)]
pub struct Instance {
    pub ket: Ket,
    pub circuit: Circuit,
    pub bank: DetectorBank,
    pub rule: HeraldRule,
}

impl Instance {
    /// Beams left unmeasured after the circuit.
    pub fn unmeasured(&self) -> BTreeSet<Beam> {
        let terminal = self.circuit.terminal_beams(self.ket.registry()).expect("valid circuit");
        terminal.difference(&self.bank.beams()).cloned().collect()
    }
}

/// Random element drawn from every shipped element kind.
pub fn random_element<R: Rng + ?Sized>(
    rng: &mut R,
    registry: &BTreeSet<Beam>,
    fresh: &mut impl FnMut() -> Beam,
    max_beams: usize,
) -> ModeMap {
    let beams: Vec<Beam> = registry.iter().cloned().collect();
    let pick = |rng: &mut R| beams.choose(rng).unwrap().clone();
    loop {
        let kind = rng.gen_range(0..6);
        let map = match kind {
            0 if beams.len() >= 2 => {
                let two: Vec<&Beam> = beams.choose_multiple(rng, 2).collect();
                let phase = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..2.0 * PI) };
                // outputs may reuse the input labels or be fresh
                let (t, r) = if rng.gen_bool(0.5) {
                    (two[0].clone(), two[1].clone())
                } else {
                    (fresh(), fresh())
                };
                ModeMap::pbs_with_phase(two[0].clone(), Some(two[1].clone()), t, r, phase)
            }
            1 if beams.len() < max_beams => {
                ModeMap::pbs_with_phase(pick(rng), None, fresh(), fresh(), 0.0)
            }
            2 => ModeMap::hadamard(pick(rng)),
            3 => ModeMap::polarization_rotation(pick(rng), random_unitary(rng)),
            4 => ModeMap::relabel(pick(rng), fresh()),
            5 => ModeMap::phase_shift(pick(rng), rng.gen_range(0.0..2.0 * PI)),
            _ => continue,
        };
        return map.expect("random element is valid");
    }
}

/// Random instance with at most `max_photons` photons and six beams.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_photons: u32) -> Instance {
    const MAX_BEAMS: usize = 6;
    let n_beams = rng.gen_range(2..=4);
    let initial: Vec<Beam> = (0..n_beams).map(|i| Beam::new(format!("b{i}"))).collect();
    let n_terms = rng.gen_range(1..=6);
    let ket = random_ket(rng, &initial, max_photons, n_terms);

    let mut counter = 0;
    let mut fresh = || {
        counter += 1;
        Beam::new(format!("n{counter}"))
    };
    let mut registry: BTreeSet<Beam> = initial.iter().cloned().collect();
    let mut circuit = Circuit::default();
    for _ in 0..rng.gen_range(1..=6) {
        let element = random_element(rng, &registry, &mut fresh, MAX_BEAMS);
        registry = element.next_registry(&registry).expect("consistent registry");
        circuit.push(element);
    }

    let mut terminal: Vec<Beam> = registry.into_iter().collect();
    terminal.shuffle(rng);
    let n_det = rng.gen_range(1..=terminal.len().min(4));
    let model = match rng.gen_range(0..3) {
        0 => DetectorModel::default(),
        1 => DetectorModel::threshold(rng.gen_range(0.1..1.0), if rng.gen_bool(0.5) { 0.0 } else { 0.02 }),
        _ => DetectorModel::number_resolving(rng.gen_range(0.1..=1.0), if rng.gen_bool(0.5) { 0.0 } else { 0.02 }),
    };
    let ids: Vec<String> = (1..=n_det).map(|i| format!("D{i}")).collect();
    let bank = DetectorBank::uniform(ids.iter().cloned().zip(terminal.into_iter().take(n_det)), model)
        .expect("distinct detectors");
    let split = rng.gen_range(1..=n_det);
    let rule = if split == n_det {
        HeraldRule::new([ids.clone()])
    } else {
        HeraldRule::new([ids[..split].to_vec(), ids[split..].to_vec()])
    }
    .expect("disjoint groups");

    Instance {
        ket,
        circuit,
        bank,
        rule,
    }
}

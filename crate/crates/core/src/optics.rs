//! Passive linear-optical elements acting on kets by creation-operator
//! substitution.
//!
//! A [`ModeMap`] consumes a set of input beams and produces a set of output
//! beams. Each input mode's creation operator is replaced by a linear
//! combination of output creation operators; modes on other beams pass
//! through untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Beam, Ket, Mode, Occupation, Polarization, TOL};

pub type Matrix2 = [[Complex64; 2]; 2];

/// `U_H = [[1, 1], [1, -1]] / sqrt(2)`.
pub fn hadamard_matrix() -> Matrix2 {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeMap {
    label: String,
    inputs: Vec<Beam>,
    outputs: Vec<Beam>,
    mapping: BTreeMap<Mode, Vec<(Mode, Complex64)>>,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn distinct(beams: &[&Beam]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &b in beams {
        if !seen.insert(b) {
            return Err(Error::CoincidentBeams(b.clone()));
        }
    }
    Ok(())
}

impl ModeMap {
    /// General map. Every input beam must have both polarizations mapped,
    /// every target must lie on an output beam and the columns must be
    /// orthonormal.
    pub fn new(
        label: impl Into<String>,
        inputs: Vec<Beam>,
        outputs: Vec<Beam>,
        mapping: BTreeMap<Mode, Vec<(Mode, Complex64)>>,
    ) -> Result<ModeMap> {
        distinct(&inputs.iter().collect::<Vec<_>>())?;
        distinct(&outputs.iter().collect::<Vec<_>>())?;
        let out_set: BTreeSet<&Beam> = outputs.iter().collect();
        for beam in &inputs {
            for pol in Polarization::BOTH {
                if !mapping.contains_key(&Mode::new(beam.clone(), pol)) {
                    return Err(Error::Config(format!("mode {beam}{pol} has no image")));
                }
            }
        }
        for (mode, image) in &mapping {
            if !inputs.contains(&mode.beam) {
                return Err(Error::Config(format!("mode {mode} is not on an input beam")));
            }
            for (target, _) in image {
                if !out_set.contains(&target.beam) {
                    return Err(Error::UnregisteredBeam(target.beam.clone()));
                }
            }
        }
        let map = ModeMap {
            label: label.into(),
            inputs,
            outputs,
            mapping,
        };
        let dev = map.unitarity_deviation();
        if dev > TOL {
            return Err(Error::NonUnitary(dev));
        }
        Ok(map)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn inputs(&self) -> &[Beam] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Beam] {
        &self.outputs
    }

    /// Image of an input mode; `None` for modes the map does not touch.
    pub fn image(&self, mode: &Mode) -> Option<&[(Mode, Complex64)]> {
        self.mapping.get(mode).map(Vec::as_slice)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Mode> {
        self.mapping.keys()
    }

    pub fn codomain(&self) -> BTreeSet<Mode> {
        self.outputs
            .iter()
            .flat_map(|b| Polarization::BOTH.map(|p| Mode::new(b.clone(), p)))
            .collect()
    }

    /// Largest deviation of the column Gram matrix from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let cols: Vec<BTreeMap<&Mode, Complex64>> = self
            .mapping
            .values()
            .map(|img| {
                let mut col = BTreeMap::new();
                for (m, c) in img {
                    *col.entry(m).or_insert_with(Complex64::default) += c;
                }
                col
            })
            .collect();
        let mut worst: f64 = 0.0;
        for (i, a) in cols.iter().enumerate() {
            for (j, b) in cols.iter().enumerate() {
                let dot: Complex64 = a
                    .iter()
                    .filter_map(|(m, x)| b.get(m).map(|y| x.conj() * y))
                    .sum();
                let expected = if i == j { one() } else { Complex64::default() };
                worst = worst.max((dot - expected).norm());
            }
        }
        worst
    }

    /// Polarizing beam splitter with both input ports used.
    ///
    /// H is transmitted (`in_a -> out_t`, `in_b -> out_r`) and V is
    /// reflected (`in_a -> out_r`, `in_b -> out_t`). All coefficients are +1.
    pub fn pbs(
        in_a: impl Into<Beam>,
        in_b: impl Into<Beam>,
        out_t: impl Into<Beam>,
        out_r: impl Into<Beam>,
    ) -> Result<ModeMap> {
        ModeMap::pbs_with_phase(in_a, Some(in_b.into()), out_t, out_r, 0.0)
    }

    /// PBS whose second input port may be empty (vacuum). `phase_r` is the
    /// phase picked up on reflection.
    pub fn pbs_with_phase(
        in_a: impl Into<Beam>,
        in_b: Option<Beam>,
        out_t: impl Into<Beam>,
        out_r: impl Into<Beam>,
        phase_r: f64,
    ) -> Result<ModeMap> {
        let (in_a, out_t, out_r) = (in_a.into(), out_t.into(), out_r.into());
        if let Some(b) = &in_b {
            distinct(&[&in_a, b])?;
        }
        distinct(&[&out_t, &out_r])?;
        let refl = Complex64::from_polar(1.0, phase_r);
        let mut mapping = BTreeMap::new();
        mapping.insert(Mode::h(in_a.clone()), vec![(Mode::h(out_t.clone()), one())]);
        mapping.insert(Mode::v(in_a.clone()), vec![(Mode::v(out_r.clone()), refl)]);
        let mut inputs = vec![in_a];
        if let Some(in_b) = in_b {
            mapping.insert(Mode::h(in_b.clone()), vec![(Mode::h(out_r.clone()), one())]);
            mapping.insert(Mode::v(in_b.clone()), vec![(Mode::v(out_t.clone()), refl)]);
            inputs.push(in_b);
        }
        ModeMap::new("pbs", inputs, vec![out_t, out_r], mapping)
    }

    /// Polarization rotation `u` on one beam, acting on column vectors
    /// `(H, V)`.
    pub fn polarization_rotation(beam: impl Into<Beam>, u: Matrix2) -> Result<ModeMap> {
        let beam = beam.into();
        let mut mapping = BTreeMap::new();
        mapping.insert(
            Mode::h(beam.clone()),
            vec![(Mode::h(beam.clone()), u[0][0]), (Mode::v(beam.clone()), u[1][0])],
        );
        mapping.insert(
            Mode::v(beam.clone()),
            vec![(Mode::h(beam.clone()), u[0][1]), (Mode::v(beam.clone()), u[1][1])],
        );
        ModeMap::new("rotation", vec![beam.clone()], vec![beam], mapping)
    }

    pub fn hadamard(beam: impl Into<Beam>) -> Result<ModeMap> {
        let mut map = ModeMap::polarization_rotation(beam, hadamard_matrix())?;
        map.label = "hadamard".into();
        Ok(map)
    }

    /// Lossless mirror: both polarizations move to a fresh beam label.
    pub fn relabel(beam_in: impl Into<Beam>, beam_out: impl Into<Beam>) -> Result<ModeMap> {
        let (beam_in, beam_out) = (beam_in.into(), beam_out.into());
        let mut mapping = BTreeMap::new();
        for pol in Polarization::BOTH {
            mapping.insert(
                Mode::new(beam_in.clone(), pol),
                vec![(Mode::new(beam_out.clone(), pol), one())],
            );
        }
        ModeMap::new("relabel", vec![beam_in], vec![beam_out], mapping)
    }

    /// Uniform phase `e^{i phi}` on both polarizations of a beam.
    pub fn phase_shift(beam: impl Into<Beam>, phi: f64) -> Result<ModeMap> {
        let beam = beam.into();
        let c = Complex64::from_polar(1.0, phi);
        let mut mapping = BTreeMap::new();
        for pol in Polarization::BOTH {
            let m = Mode::new(beam.clone(), pol);
            mapping.insert(m.clone(), vec![(m, c)]);
        }
        ModeMap::new("phase", vec![beam.clone()], vec![beam], mapping)
    }

    /// Registry after applying this map to `registry`.
    pub fn next_registry(&self, registry: &BTreeSet<Beam>) -> Result<BTreeSet<Beam>> {
        for beam in &self.inputs {
            if !registry.contains(beam) {
                return Err(Error::UnregisteredBeam(beam.clone()));
            }
        }
        let mut rest: BTreeSet<Beam> = registry
            .iter()
            .filter(|b| !self.inputs.contains(b))
            .cloned()
            .collect();
        for beam in &self.outputs {
            if !rest.insert(beam.clone()) {
                return Err(Error::BeamExists(beam.clone()));
            }
        }
        Ok(rest)
    }

    /// `self` followed by `next`, as one map.
    pub fn compose(&self, next: &ModeMap) -> Result<ModeMap> {
        for beam in &next.inputs {
            if self.inputs.contains(beam) && !self.outputs.contains(beam) {
                return Err(Error::UnregisteredBeam(beam.clone()));
            }
        }
        let mut inputs = self.inputs.clone();
        inputs.extend(
            next.inputs
                .iter()
                .filter(|b| !self.outputs.contains(b))
                .cloned(),
        );
        let mut outputs: Vec<Beam> = self
            .outputs
            .iter()
            .filter(|b| !next.inputs.contains(b))
            .cloned()
            .collect();
        for beam in &next.outputs {
            if outputs.contains(beam) {
                return Err(Error::BeamExists(beam.clone()));
            }
            outputs.push(beam.clone());
        }

        let mut mapping = BTreeMap::new();
        for (mode, image) in &self.mapping {
            let mut col: BTreeMap<Mode, Complex64> = BTreeMap::new();
            for (mid, c) in image {
                match next.image(mid) {
                    Some(img2) => {
                        for (out, c2) in img2 {
                            *col.entry(out.clone()).or_default() += c * c2;
                        }
                    }
                    None => *col.entry(mid.clone()).or_default() += c,
                }
            }
            mapping.insert(mode.clone(), col.into_iter().collect());
        }
        for (mode, image) in &next.mapping {
            if !self.outputs.contains(&mode.beam) {
                mapping.insert(mode.clone(), image.clone());
            }
        }
        ModeMap::new(
            format!("{}*{}", self.label, next.label),
            inputs,
            outputs,
            mapping,
        )
    }
}

/// Exact `n!` for the small photon numbers used here.
fn factorial(n: u32) -> u64 {
    assert!(n <= 20, "factorial overflow for n = {n}");
    (1..=n as u64).product()
}

/// All ways to split `n` into `k` ordered non-negative parts.
fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    if k == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in (0..=n).rev() {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Multinomial expansion of `(sum_k c_k b_k†)^n` as a list of monomials
/// (exponents per output mode) with their coefficients.
fn expand_power(image: &[(Mode, Complex64)], n: u32) -> Vec<(Occupation, Complex64)> {
    let n_fact = factorial(n) as f64;
    compositions(n, image.len())
        .into_iter()
        .filter_map(|parts| {
            let mut coeff = Complex64::new(n_fact, 0.0);
            let mut occ = Occupation::new();
            for ((mode, c), &j) in image.iter().zip(&parts) {
                if j > 0 {
                    if c.norm() == 0.0 {
                        return None;
                    }
                    coeff *= c.powu(j) / factorial(j) as f64;
                    occ.raise(mode.clone(), j);
                }
            }
            Some((occ, coeff))
        })
        .collect()
}

/// Applies a mode map to a ket.
pub fn apply(ket: &Ket, map: &ModeMap) -> Result<Ket> {
    let registry = map.next_registry(ket.registry())?;
    let touched: BTreeSet<Beam> = map.inputs.iter().cloned().collect();
    let mut out = Ket::with_registry(registry);
    for (occ, amp) in ket.terms() {
        let (inside, outside) = occ.split(&touched);
        // Product over input modes of their expanded powers, as monomials.
        let mut poly: Vec<(Occupation, Complex64)> =
            vec![(Occupation::new(), Complex64::new(1.0, 0.0))];
        let mut in_norm = 1u64;
        for (mode, n) in inside.iter() {
            in_norm *= factorial(n);
            let image = map.image(mode).expect("input mode without image");
            let factor = expand_power(image, n);
            let mut next = Vec::with_capacity(poly.len() * factor.len());
            for (m1, c1) in &poly {
                for (m2, c2) in &factor {
                    next.push((m1.merge(m2), c1 * c2));
                }
            }
            poly = next;
        }
        for (mono, coeff) in poly {
            let out_norm: u64 = mono.iter().map(|(_, j)| factorial(j)).product();
            let scale = (out_norm as f64).sqrt() / (in_norm as f64).sqrt();
            out.accumulate(mono.merge(&outside), amp * coeff * scale);
        }
    }
    Ok(out)
}

/// An ordered sequence of mode maps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    elements: Vec<ModeMap>,
}

impl Circuit {
    pub fn new(elements: Vec<ModeMap>) -> Circuit {
        Circuit { elements }
    }

    pub fn push(&mut self, element: ModeMap) {
        self.elements.push(element);
    }

    pub fn elements(&self) -> &[ModeMap] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Registries before step 0, after step 0, ..., after the last step.
    /// Fails with the index of the first invalid step.
    pub fn validate(&self, registry: &BTreeSet<Beam>) -> Result<Vec<BTreeSet<Beam>>> {
        let mut registries = vec![registry.clone()];
        for (step, element) in self.elements.iter().enumerate() {
            let next = element
                .next_registry(registries.last().unwrap())
                .map_err(|e| e.at_step(step))?;
            registries.push(next);
        }
        Ok(registries)
    }

    /// Beams present after the last element, given the initial registry.
    pub fn terminal_beams(&self, registry: &BTreeSet<Beam>) -> Result<BTreeSet<Beam>> {
        Ok(self.validate(registry)?.pop().unwrap())
    }
}

/// Validates the whole circuit, then applies each element in order.
pub fn apply_circuit(ket: &Ket, circuit: &Circuit) -> Result<Ket> {
    circuit.validate(ket.registry())?;
    let mut state = ket.clone();
    for (step, element) in circuit.elements.iter().enumerate() {
        state = apply(&state, element).map_err(|e| e.at_step(step))?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn basis(beams: &[&str], occ: Occupation) -> Ket {
        Ket::zero(beams.iter().copied()).unwrap().add_term(occ, c(1.0)).unwrap()
    }

    #[test]
    fn pbs_transmits_h_reflects_v() {
        let pbs = ModeMap::pbs("a", "b", "t", "r").unwrap();
        let out = apply(&basis(&["a", "b"], Occupation::beam("a", 1, 0)), &pbs).unwrap();
        assert_eq!(out, basis(&["t", "r"], Occupation::beam("t", 1, 0)));
        let out = apply(&basis(&["a", "b"], Occupation::beam("a", 0, 1)), &pbs).unwrap();
        assert_eq!(out, basis(&["t", "r"], Occupation::beam("r", 0, 1)));
        let out = apply(&basis(&["a", "b"], Occupation::beam("a", 1, 1)), &pbs).unwrap();
        let split = Occupation::beam("t", 1, 0).merge(&Occupation::beam("r", 0, 1));
        assert_eq!(out, basis(&["t", "r"], split));
    }

    #[test]
    fn pbs_rejects_coincident_ports() {
        assert!(matches!(ModeMap::pbs("a", "a", "t", "r"), Err(Error::CoincidentBeams(_))));
        assert!(matches!(ModeMap::pbs("a", "b", "t", "t"), Err(Error::CoincidentBeams(_))));
    }

    #[test]
    fn hadamard_table() {
        let h = ModeMap::hadamard("1").unwrap();
        let s = FRAC_1_SQRT_2;
        let out = apply(&basis(&["1"], Occupation::beam("1", 1, 0)), &h).unwrap();
        assert!((out.amplitude(&Occupation::beam("1", 1, 0)) - c(s)).norm() < TOL);
        assert!((out.amplitude(&Occupation::beam("1", 0, 1)) - c(s)).norm() < TOL);
        let out = apply(&basis(&["1"], Occupation::beam("1", 0, 1)), &h).unwrap();
        assert!((out.amplitude(&Occupation::beam("1", 1, 0)) - c(s)).norm() < TOL);
        assert!((out.amplitude(&Occupation::beam("1", 0, 1)) - c(-s)).norm() < TOL);
    }

    #[test]
    fn hadamard_on_two_photons() {
        // (H + V)^2 / 2 with bosonic normalization.
        let h = ModeMap::hadamard("1").unwrap();
        let out = apply(&basis(&["1"], Occupation::beam("1", 2, 0)), &h).unwrap();
        let expected = Ket::zero(["1"])
            .unwrap()
            .add_term(Occupation::beam("1", 2, 0), c(0.5))
            .unwrap()
            .add_term(Occupation::beam("1", 1, 1), c(2f64.sqrt() / 2.0))
            .unwrap()
            .add_term(Occupation::beam("1", 0, 2), c(0.5))
            .unwrap();
        assert!(out.approx_eq(&expected, TOL));
    }

    #[test]
    fn identity_rotation_is_noop() {
        let id = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
        let map = ModeMap::polarization_rotation("1", id).unwrap();
        let ket = basis(&["1"], Occupation::beam("1", 1, 2));
        assert!(apply(&ket, &map).unwrap().approx_eq(&ket, TOL));
    }

    #[test]
    fn non_unitary_rotation_rejected() {
        let bad = [[c(1.0), c(1.0)], [c(0.0), c(1.0)]];
        assert!(matches!(
            ModeMap::polarization_rotation("1", bad),
            Err(Error::NonUnitary(_))
        ));
    }

    #[test]
    fn relabel_cases() {
        let m = ModeMap::relabel("c", "c2").unwrap();
        let out = apply(&basis(&["c"], Occupation::beam("c", 0, 1)), &m).unwrap();
        assert_eq!(out, basis(&["c2"], Occupation::beam("c2", 0, 1)));
        let vac = apply(&Ket::vacuum(["c"]).unwrap(), &m).unwrap();
        assert_eq!(vac, Ket::vacuum(["c2"]).unwrap());
        let clash = apply(&Ket::vacuum(["c", "c2"]).unwrap(), &m);
        assert_eq!(clash, Err(Error::BeamExists(Beam::from("c2"))));
    }

    #[test]
    fn apply_to_unregistered_beam_fails() {
        let h = ModeMap::hadamard("9").unwrap();
        assert_eq!(
            apply(&Ket::vacuum(["1"]).unwrap(), &h),
            Err(Error::UnregisteredBeam(Beam::from("9")))
        );
    }

    #[test]
    fn empty_circuit_is_identity() {
        let ket = basis(&["1", "2"], Occupation::beam("1", 1, 1));
        assert_eq!(apply_circuit(&ket, &Circuit::default()).unwrap(), ket);
    }

    #[test]
    fn circuit_error_names_step() {
        let circuit = Circuit::new(vec![
            ModeMap::hadamard("1").unwrap(),
            ModeMap::hadamard("7").unwrap(),
        ]);
        let err = apply_circuit(&Ket::vacuum(["1"]).unwrap(), &circuit).unwrap_err();
        match err {
            Error::Circuit { step, source } => {
                assert_eq!(step, 1);
                assert_eq!(*source, Error::UnregisteredBeam(Beam::from("7")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compose_matches_sequential() {
        let a = ModeMap::pbs("1", "2", "c", "d").unwrap();
        let b = ModeMap::hadamard("c").unwrap();
        let ab = a.compose(&b).unwrap();
        let ket = basis(&["1", "2"], Occupation::beam("1", 1, 1).merge(&Occupation::beam("2", 1, 0)));
        let seq = apply(&apply(&ket, &a).unwrap(), &b).unwrap();
        assert!(apply(&ket, &ab).unwrap().approx_eq(&seq, TOL));
    }

    #[test]
    fn compositions_count() {
        // stars and bars: C(n + k - 1, k - 1)
        assert_eq!(compositions(4, 3).len(), 15);
        assert_eq!(compositions(0, 2), vec![vec![0, 0]]);
    }
}

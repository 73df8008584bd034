//! Brute-force reference over an explicitly enumerated, photon-number
//! truncated Fock basis.
//!
//! Nothing here reuses the sparse expansion code: states are dense vectors,
//! elements are lifted to matrices by repeated multiplication with linear
//! forms in the creation operators, and detection outcomes are enumerated
//! over every basis index. Agreement with the sparse path is evidence.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;

use crate::detect::{DetectorBank, DetectorKind, HeraldReport, HeraldRule, Pattern, PatternOutcome, Ensemble};
use crate::error::{Error, Result};
use crate::fock::{Beam, Ket, Mode, Occupation, Polarization};
use crate::optics::{Circuit, ModeMap};

/// Default photon cutoff: the largest photon number at source order 2.
pub const DEFAULT_N_MAX: u32 = 4;

const FACT: [f64; 13] = [
    1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0, 362880.0, 3628800.0, 39916800.0,
    479001600.0,
];

fn fact(n: u32) -> f64 {
    FACT[n as usize]
}

#[derive(Clone, Debug)]
pub struct DenseBasis {
    beams: BTreeSet<Beam>,
    modes: Vec<Mode>,
    n_max: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl DenseBasis {
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn beams(&self) -> &BTreeSet<Beam> {
        &self.beams
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn index_of(&self, counts: &[u32]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    pub fn occupation(&self, i: usize) -> Occupation {
        Occupation::from_counts(self.modes.iter().cloned().zip(self.states[i].iter().copied()))
    }

    pub fn index_of_occupation(&self, occ: &Occupation) -> Option<usize> {
        let counts: Vec<u32> = self.modes.iter().map(|m| occ.count(m)).collect();
        if counts.iter().sum::<u32>() != occ.total() {
            return None;
        }
        self.index_of(&counts)
    }

    pub fn to_dense(&self, ket: &Ket) -> Result<Vec<Complex64>> {
        if ket.registry() != &self.beams {
            return Err(Error::RegistryMismatch);
        }
        let mut v = vec![Complex64::default(); self.len()];
        for (occ, amp) in ket.terms() {
            let i = self.index_of_occupation(occ).ok_or_else(|| {
                Error::Config(format!("occupation {occ} exceeds oracle cutoff {}", self.n_max))
            })?;
            v[i] += amp;
        }
        Ok(v)
    }

    pub fn to_ket(&self, v: &[Complex64]) -> Ket {
        let mut ket = Ket::with_registry(self.beams.clone());
        for (i, &amp) in v.iter().enumerate() {
            if amp.norm() > 0.0 {
                ket.accumulate(self.occupation(i), amp);
            }
        }
        ket
    }
}

/// All occupations of the modes of `beams` with at most `n_max` photons, in
/// lexicographic order of their count vectors.
pub fn enumerate_basis(beams: &BTreeSet<Beam>, n_max: u32) -> DenseBasis {
    let modes: Vec<Mode> = beams
        .iter()
        .flat_map(|b| [Mode::new(b.clone(), Polarization::H), Mode::new(b.clone(), Polarization::V)])
        .collect();
    let mut states = Vec::new();
    let mut current = vec![0u32; modes.len()];
    fill(&mut states, &mut current, 0, n_max);
    let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    DenseBasis {
        beams: beams.clone(),
        modes,
        n_max,
        states,
        index,
    }
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, budget: u32) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for n in 0..=budget {
        current[pos] = n;
        fill(out, current, pos + 1, budget - n);
    }
    current[pos] = 0;
}

/// Column-stored complex matrix; columns hold their nonzero entries.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    rows: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl DenseMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.cols[c]
            .iter()
            .filter(|(i, _)| *i == r)
            .map(|(_, v)| *v)
            .sum()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols.len());
        let mut out = vec![Complex64::default(); self.rows];
        for (c, col) in self.cols.iter().enumerate() {
            if v[c].norm() == 0.0 {
                continue;
            }
            for &(r, x) in col {
                out[r] += x * v[c];
            }
        }
        out
    }

    /// `self * rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols.len(), rhs.rows);
        let cols = rhs
            .cols
            .iter()
            .map(|col| {
                let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
                for &(k, y) in col {
                    for &(r, x) in &self.cols[k] {
                        *acc.entry(r).or_default() += x * y;
                    }
                }
                acc.into_iter().filter(|(_, v)| v.norm() > 0.0).collect()
            })
            .collect();
        DenseMatrix {
            rows: self.rows,
            cols,
        }
    }

    /// Largest entry of `M†M - I`, checked block by block (columns of
    /// different photon number have disjoint supports).
    pub fn isometry_deviation(&self, basis: &DenseBasis) -> f64 {
        let mut blocks: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for c in 0..self.cols.len() {
            blocks.entry(basis.state(c).iter().sum()).or_default().push(c);
        }
        let mut worst: f64 = 0.0;
        for cols in blocks.values() {
            let dense: Vec<HashMap<usize, Complex64>> = cols
                .iter()
                .map(|&c| {
                    let mut m = HashMap::new();
                    for &(r, x) in &self.cols[c] {
                        *m.entry(r).or_default() += x;
                    }
                    m
                })
                .collect();
            for (i, a) in dense.iter().enumerate() {
                for (j, b) in dense.iter().enumerate().skip(i) {
                    let dot: Complex64 = a
                        .iter()
                        .filter_map(|(r, x)| b.get(r).map(|y| x.conj() * y))
                        .sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((dot - expected).norm());
                }
            }
        }
        worst
    }

    pub fn max_difference(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols()), (other.rows, other.cols()));
        let mut worst: f64 = 0.0;
        for c in 0..self.cols() {
            let mut diff: BTreeMap<usize, Complex64> = BTreeMap::new();
            for &(r, x) in &self.cols[c] {
                *diff.entry(r).or_default() += x;
            }
            for &(r, x) in &other.cols[c] {
                *diff.entry(r).or_default() -= x;
            }
            for v in diff.values() {
                worst = worst.max(v.norm());
            }
        }
        worst
    }
}

/// Lifts a single-photon mode map to the truncated Fock space. Returns the
/// matrix and the basis of the beams present after the element.
pub fn lift_modemap(map: &ModeMap, basis: &DenseBasis) -> Result<(DenseMatrix, DenseBasis)> {
    let out_beams = map.next_registry(basis.beams())?;
    let out_basis = enumerate_basis(&out_beams, basis.n_max());
    let out_pos: HashMap<&Mode, usize> =
        out_basis.modes().iter().enumerate().map(|(i, m)| (m, i)).collect();

    // single-photon images as (output mode index, coefficient)
    let images: Vec<Vec<(usize, Complex64)>> = basis
        .modes()
        .iter()
        .map(|m| match map.image(m) {
            Some(img) => img.iter().map(|(t, c)| (out_pos[t], *c)).collect(),
            None => vec![(out_pos[m], Complex64::new(1.0, 0.0))],
        })
        .collect();

    let mut cols = Vec::with_capacity(basis.len());
    for j in 0..basis.len() {
        let input = basis.state(j);
        // coefficients of monomials prod_k (b_k†)^{o_k}, keyed by o
        let mut poly: HashMap<Vec<u32>, Complex64> = HashMap::new();
        poly.insert(vec![0; out_basis.modes().len()], Complex64::new(1.0, 0.0));
        for (i, &n) in input.iter().enumerate() {
            for _ in 0..n {
                let mut next: HashMap<Vec<u32>, Complex64> = HashMap::new();
                for (mono, c) in &poly {
                    for &(k, coeff) in &images[i] {
                        let mut m = mono.clone();
                        m[k] += 1;
                        *next.entry(m).or_default() += c * coeff;
                    }
                }
                poly = next;
            }
        }
        let in_norm: f64 = input.iter().map(|&n| fact(n)).product();
        let mut col: Vec<(usize, Complex64)> = poly
            .into_iter()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(mono, c)| {
                let out_norm: f64 = mono.iter().map(|&n| fact(n)).product();
                let row = out_basis
                    .index_of(&mono)
                    .expect("passive map cannot raise photon number");
                (row, c * (out_norm / in_norm).sqrt())
            })
            .collect();
        col.sort_by_key(|(r, _)| *r);
        cols.push(col);
    }
    Ok((
        DenseMatrix {
            rows: out_basis.len(),
            cols,
        },
        out_basis,
    ))
}

/// Product of the lifts of every element, and the final basis.
pub fn lift_circuit(circuit: &Circuit, basis: &DenseBasis) -> Result<(DenseMatrix, DenseBasis)> {
    let mut basis = basis.clone();
    let mut total: Option<DenseMatrix> = None;
    for (step, element) in circuit.elements().iter().enumerate() {
        let (m, next) = lift_modemap(element, &basis).map_err(|e| e.at_step(step))?;
        total = Some(match total {
            None => m,
            Some(t) => m.mul(&t),
        });
        basis = next;
    }
    let total = total.unwrap_or_else(|| DenseMatrix {
        rows: basis.len(),
        cols: (0..basis.len()).map(|i| vec![(i, Complex64::new(1.0, 0.0))]).collect(),
    });
    Ok((total, basis))
}

/// Runs a ket through `circuit` with dense matrices.
pub fn dense_evolve(ket: &Ket, circuit: &Circuit, n_max: u32) -> Result<(Vec<Complex64>, DenseBasis)> {
    circuit.validate(ket.registry())?;
    let mut basis = enumerate_basis(ket.registry(), n_max);
    let mut v = basis.to_dense(ket)?;
    for (step, element) in circuit.elements().iter().enumerate() {
        let (m, next) = lift_modemap(element, &basis).map_err(|e| e.at_step(step))?;
        v = m.apply(&v);
        basis = next;
    }
    Ok((v, basis))
}

/// Reported-value distribution of one detector, computed from scratch.
fn detector_outcomes(k: u32, kind: DetectorKind, eta: f64, dark: f64) -> Vec<(u32, f64)> {
    match kind {
        DetectorKind::Threshold => {
            let mut p_silent = 1.0 - dark;
            for _ in 0..k {
                p_silent *= 1.0 - eta;
            }
            vec![(0, p_silent), (1, 1.0 - p_silent)]
        }
        DetectorKind::NumberResolving => {
            let mut out: BTreeMap<u32, f64> = BTreeMap::new();
            for j in 0..=k {
                let p = fact(k) / (fact(j) * fact(k - j))
                    * eta.powi(j as i32)
                    * (1.0 - eta).powi((k - j) as i32);
                *out.entry(j).or_default() += p * (1.0 - dark);
                *out.entry(j + 1).or_default() += p * dark;
            }
            out.into_iter().collect()
        }
    }
}

/// Herald report computed by dense evolution and exhaustive enumeration of
/// outcomes.
pub fn dense_check(
    ket: &Ket,
    circuit: &Circuit,
    bank: &DetectorBank,
    rule: &HeraldRule,
    n_max: u32,
) -> Result<HeraldReport> {
    rule.check_bank(bank)?;
    let (v, basis) = dense_evolve(ket, circuit, n_max)?;
    bank.check_terminal(basis.beams())?;

    let measured = bank.beams();
    let rest: BTreeSet<Beam> = basis.beams().difference(&measured).cloned().collect();
    let rest_basis = enumerate_basis(&rest, n_max);
    let measured_pos: Vec<bool> = basis.modes().iter().map(|m| measured.contains(&m.beam)).collect();

    // group amplitudes by the measured part of the count vector
    let mut groups: BTreeMap<Vec<u32>, Vec<Complex64>> = BTreeMap::new();
    for (i, &amp) in v.iter().enumerate() {
        if amp.norm() == 0.0 {
            continue;
        }
        let state = basis.state(i);
        let (mut meas, mut other) = (Vec::new(), Vec::new());
        for (pos, &n) in state.iter().enumerate() {
            if measured_pos[pos] {
                meas.push(n);
            } else {
                other.push(n);
            }
        }
        let r = rest_basis.index_of(&other).expect("residual within cutoff");
        groups
            .entry(meas)
            .or_insert_with(|| vec![Complex64::default(); rest_basis.len()])[r] += amp;
    }

    let measured_modes: Vec<&Mode> = basis
        .modes()
        .iter()
        .zip(&measured_pos)
        .filter(|(_, &m)| m)
        .map(|(m, _)| m)
        .collect();
    let detectors: Vec<(&String, &crate::detect::Detector)> = bank.detectors().collect();

    let mut acc: BTreeMap<Pattern, (f64, Vec<(f64, Ket)>)> = BTreeMap::new();
    for (meas, residual) in groups {
        let p_branch: f64 = residual.iter().map(|a| a.norm_sqr()).sum();
        if p_branch == 0.0 {
            continue;
        }
        let scale = 1.0 / p_branch.sqrt();
        let normed: Vec<Complex64> = residual.iter().map(|a| a * scale).collect();
        let residual_ket = rest_basis.to_ket(&normed);

        let per_detector: Vec<Vec<(u32, f64)>> = detectors
            .iter()
            .map(|(_, det)| {
                let k: u32 = measured_modes
                    .iter()
                    .zip(&meas)
                    .filter(|(m, _)| m.beam == det.beam)
                    .map(|(_, &n)| n)
                    .sum();
                detector_outcomes(k, det.model.kind, det.model.efficiency, det.model.dark_rate)
            })
            .collect();

        // odometer over every detector's outcome list
        let mut idx = vec![0usize; detectors.len()];
        loop {
            let mut p = p_branch;
            let mut clicks = BTreeMap::new();
            for (d, &i) in idx.iter().enumerate() {
                let (r, q) = per_detector[d][i];
                p *= q;
                if r > 0 {
                    clicks.insert(detectors[d].0.clone(), r);
                }
            }
            if p > 0.0 {
                let e = acc
                    .entry(Pattern::from_counts(clicks))
                    .or_insert_with(|| (0.0, Vec::new()));
                e.0 += p;
                e.1.push((p, residual_ket.clone()));
            }
            let mut d = 0;
            loop {
                if d == idx.len() {
                    break;
                }
                idx[d] += 1;
                if idx[d] < per_detector[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == idx.len() {
                break;
            }
        }
    }

    let outcomes = acc
        .into_iter()
        .map(|(pattern, (probability, members))| {
            Ok((
                pattern,
                PatternOutcome {
                    probability,
                    ensemble: Ensemble::from_weighted(members)?,
                },
            ))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let norm_sqr = v.iter().map(|a| a.norm_sqr()).sum();
    Ok(HeraldReport::from_outcomes(outcomes, rule, norm_sqr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{apply_circuit, hadamard_matrix};

    fn beams(s: &[&str]) -> BTreeSet<Beam> {
        s.iter().map(|b| Beam::from(*b)).collect()
    }

    #[test]
    fn basis_counts() {
        assert_eq!(enumerate_basis(&beams(&["1"]), 1).len(), 3);
        assert_eq!(enumerate_basis(&beams(&["1"]), 2).len(), 6);
        // C(8 + 4, 4) states for four beams up to four photons
        assert_eq!(enumerate_basis(&beams(&["1", "2", "3", "4"]), 4).len(), 495);
    }

    #[test]
    fn basis_round_trip() {
        let b = enumerate_basis(&beams(&["a", "b"]), 3);
        for i in 0..b.len() {
            assert_eq!(b.index_of(b.state(i)), Some(i));
            assert_eq!(b.index_of_occupation(&b.occupation(i)), Some(i));
        }
        let unique: BTreeSet<&Vec<u32>> = b.states.iter().collect();
        assert_eq!(unique.len(), b.len());
    }

    #[test]
    fn identity_lifts_to_identity() {
        let id = [[Complex64::new(1.0, 0.0), Complex64::default()], [Complex64::default(), Complex64::new(1.0, 0.0)]];
        let map = ModeMap::polarization_rotation("1", id).unwrap();
        let b = enumerate_basis(&beams(&["1", "2"]), 3);
        let (m, _) = lift_modemap(&map, &b).unwrap();
        for r in 0..b.len() {
            for c in 0..b.len() {
                let expected = if r == c { 1.0 } else { 0.0 };
                assert!((m.get(r, c) - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hadamard_single_photon_block() {
        let b = enumerate_basis(&beams(&["1"]), 2);
        let (m, out) = lift_modemap(&ModeMap::hadamard("1").unwrap(), &b).unwrap();
        let h = out.index_of(&[1, 0]).unwrap();
        let v = out.index_of(&[0, 1]).unwrap();
        let u = hadamard_matrix();
        for (r, row) in [(h, 0), (v, 1)] {
            for (c, col) in [(h, 0), (v, 1)] {
                assert!((m.get(r, c) - u[row][col]).norm() < 1e-14);
            }
        }
        assert!(m.isometry_deviation(&b) < 1e-10);
    }

    #[test]
    fn pbs_lift_is_permutation() {
        let b = enumerate_basis(&beams(&["1", "2"]), 3);
        let (m, _) = lift_modemap(&ModeMap::pbs("1", "2", "c", "d").unwrap(), &b).unwrap();
        for c in 0..m.cols() {
            assert_eq!(m.cols[c].len(), 1);
            assert!((m.cols[c][0].1 - 1.0).norm() < 1e-14);
        }
        let rows: BTreeSet<usize> = m.cols.iter().map(|c| c[0].0).collect();
        assert_eq!(rows.len(), m.cols());
    }

    #[test]
    fn dense_evolution_matches_sparse_on_small_case() {
        let ket = Ket::zero(["1", "2"])
            .unwrap()
            .add_term(Occupation::beam("1", 2, 0), 0.6)
            .unwrap()
            .add_term(Occupation::beam("1", 1, 0).merge(&Occupation::beam("2", 0, 1)), 0.8)
            .unwrap();
        let circuit = Circuit::new(vec![
            ModeMap::hadamard("1").unwrap(),
            ModeMap::pbs("1", "2", "c", "d").unwrap(),
            ModeMap::hadamard("c").unwrap(),
        ]);
        let (v, basis) = dense_evolve(&ket, &circuit, 4).unwrap();
        let sparse = apply_circuit(&ket, &circuit).unwrap();
        assert!(basis.to_ket(&v).approx_eq(&sparse, 1e-12));
    }
}

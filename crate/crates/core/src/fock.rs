//! Sparse multi-mode bosonic polarization states.
//!
//! A [`Ket`] is a map from canonical [`Occupation`]s to complex amplitudes
//! over a declared registry of beams. Each beam carries two modes (H and V).
//! Everything here is an immutable value; operations return new kets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes below this magnitude are dropped after arithmetic.
pub const PRUNE_EPS: f64 = 1e-15;
/// Default comparison tolerance for amplitudes and norms.
pub const TOL: f64 = 1e-12;
/// Tolerance used when an operation requires a normalized input.
pub const NORM_TOL: f64 = 1e-9;

/// Opaque spatial beam label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Beam(String);

impl Beam {
    pub fn new(label: impl Into<String>) -> Self {
        Beam(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Beam {
    fn from(s: &str) -> Self {
        Beam(s.to_owned())
    }
}

impl From<String> for Beam {
    fn from(s: String) -> Self {
        Beam(s)
    }
}

impl fmt::Display for Beam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => f.write_str("H"),
            Polarization::V => f.write_str("V"),
        }
    }
}

/// A (beam, polarization) pair. Ordered by beam, then H < V.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub beam: Beam,
    pub pol: Polarization,
}

impl Mode {
    pub fn new(beam: impl Into<Beam>, pol: Polarization) -> Self {
        Mode {
            beam: beam.into(),
            pol,
        }
    }

    pub fn h(beam: impl Into<Beam>) -> Self {
        Mode::new(beam, Polarization::H)
    }

    pub fn v(beam: impl Into<Beam>) -> Self {
        Mode::new(beam, Polarization::V)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.beam, self.pol)
    }
}

/// Photon counts per mode. Zero counts are never stored, so equal
/// occupations have equal representations.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(BTreeMap<Mode, u32>);

impl Occupation {
    pub fn new() -> Self {
        Occupation(BTreeMap::new())
    }

    /// Builds an occupation, summing repeated modes and skipping zeros.
    pub fn from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (Mode, u32)>,
    {
        let mut occ = Occupation::new();
        for (mode, n) in counts {
            occ.raise(mode, n);
        }
        occ
    }

    /// Shorthand for `|nH, mV>` on a single beam.
    pub fn beam(beam: impl Into<Beam>, n_h: u32, n_v: u32) -> Self {
        let beam = beam.into();
        Occupation::from_counts([(Mode::h(beam.clone()), n_h), (Mode::v(beam), n_v)])
    }

    pub fn with(mut self, mode: Mode, n: u32) -> Self {
        self.raise(mode, n);
        self
    }

    pub(crate) fn raise(&mut self, mode: Mode, n: u32) {
        if n > 0 {
            *self.0.entry(mode).or_insert(0) += n;
        }
    }

    pub fn count(&self, mode: &Mode) -> u32 {
        self.0.get(mode).copied().unwrap_or(0)
    }

    /// Photons in both polarizations of `beam`.
    pub fn beam_count(&self, beam: &Beam) -> u32 {
        Polarization::BOTH
            .iter()
            .map(|&pol| self.count(&Mode::new(beam.clone(), pol)))
            .sum()
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Mode, u32)> {
        self.0.iter().map(|(m, &n)| (m, n))
    }

    pub fn beams(&self) -> BTreeSet<Beam> {
        self.0.keys().map(|m| m.beam.clone()).collect()
    }

    /// Splits into the part on `beams` and the part elsewhere.
    pub fn split(&self, beams: &BTreeSet<Beam>) -> (Occupation, Occupation) {
        let mut inside = Occupation::new();
        let mut outside = Occupation::new();
        for (mode, n) in self.iter() {
            if beams.contains(&mode.beam) {
                inside.raise(mode.clone(), n);
            } else {
                outside.raise(mode.clone(), n);
            }
        }
        (inside, outside)
    }

    /// Union of two occupations; counts on shared modes add.
    pub fn merge(&self, other: &Occupation) -> Occupation {
        let mut out = self.clone();
        for (mode, n) in other.iter() {
            out.raise(mode.clone(), n);
        }
        out
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_vacuum() {
            return f.write_str("|vac>");
        }
        for beam in self.beams() {
            let h = self.count(&Mode::h(beam.clone()));
            let v = self.count(&Mode::v(beam.clone()));
            write!(f, "|{h}H,{v}V>_{beam}")?;
        }
        Ok(())
    }
}

/// A sparse superposition of occupations over a registry of beams.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    registry: BTreeSet<Beam>,
    terms: BTreeMap<Occupation, Complex64>,
}

impl Ket {
    /// The vacuum over `beams`, amplitude 1.
    pub fn vacuum<I, B>(beams: I) -> Result<Ket>
    where
        I: IntoIterator<Item = B>,
        B: Into<Beam>,
    {
        let mut ket = Ket::zero(beams)?;
        ket.terms.insert(Occupation::new(), Complex64::new(1.0, 0.0));
        Ok(ket)
    }

    /// The zero vector over `beams`.
    pub fn zero<I, B>(beams: I) -> Result<Ket>
    where
        I: IntoIterator<Item = B>,
        B: Into<Beam>,
    {
        let mut registry = BTreeSet::new();
        for beam in beams {
            let beam = beam.into();
            if !registry.insert(beam.clone()) {
                return Err(Error::DuplicateBeam(beam));
            }
        }
        if registry.is_empty() {
            return Err(Error::NoBeams);
        }
        Ok(Ket {
            registry,
            terms: BTreeMap::new(),
        })
    }

    /// Ket over an arbitrary (possibly empty) registry. An empty registry
    /// holds a scalar, which is what remains after every beam is measured.
    pub(crate) fn with_registry(registry: BTreeSet<Beam>) -> Ket {
        Ket {
            registry,
            terms: BTreeMap::new(),
        }
    }

    pub fn registry(&self) -> &BTreeSet<Beam> {
        &self.registry
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, Complex64)> {
        self.terms.iter().map(|(o, &a)| (o, a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or_default()
    }

    fn check_registered(&self, occ: &Occupation) -> Result<()> {
        for (mode, _) in occ.iter() {
            if !self.registry.contains(&mode.beam) {
                return Err(Error::UnregisteredBeam(mode.beam.clone()));
            }
        }
        Ok(())
    }

    /// Adds `amp` to the amplitude at `occ` in place.
    pub fn push(&mut self, occ: Occupation, amp: Complex64) -> Result<()> {
        self.check_registered(&occ)?;
        self.accumulate(occ, amp);
        Ok(())
    }

    pub(crate) fn accumulate(&mut self, occ: Occupation, amp: Complex64) {
        let entry = self.terms.entry(occ);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = *e.get() + amp;
                if sum.norm() < PRUNE_EPS {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                if amp.norm() >= PRUNE_EPS {
                    e.insert(amp);
                }
            }
        }
    }

    pub fn add_term(mut self, occ: Occupation, amp: impl Into<Complex64>) -> Result<Ket> {
        self.push(occ, amp.into())?;
        Ok(self)
    }

    /// Sum of two kets over the same registry.
    pub fn plus(&self, other: &Ket) -> Result<Ket> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch);
        }
        let mut out = self.clone();
        for (occ, amp) in other.terms() {
            out.accumulate(occ.clone(), amp);
        }
        Ok(out)
    }

    pub fn scale(&self, factor: impl Into<Complex64>) -> Ket {
        let factor = factor.into();
        let mut out = Ket::with_registry(self.registry.clone());
        for (occ, amp) in self.terms() {
            out.accumulate(occ.clone(), amp * factor);
        }
        out
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> Result<Complex64> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch);
        }
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (occ, a) in small.terms() {
            if let Some(&b) = large.terms.get(occ) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalize(&self) -> Result<Ket> {
        let norm = self.norm();
        if norm <= 1e-12 {
            return Err(Error::NullState(norm));
        }
        Ok(self.scale(1.0 / norm))
    }

    /// Product state over the union of two disjoint registries.
    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        if let Some(shared) = self.registry.intersection(&other.registry).next() {
            return Err(Error::OverlappingRegistries(shared.clone()));
        }
        let registry = self.registry.union(&other.registry).cloned().collect();
        let mut out = Ket::with_registry(registry);
        for (oa, a) in self.terms() {
            for (ob, b) in other.terms() {
                out.accumulate(oa.merge(ob), a * b);
            }
        }
        Ok(out)
    }

    /// Drops every term with more than `n_max` photons; no renormalization.
    pub fn truncate(&self, n_max: u32) -> Ket {
        Ket {
            registry: self.registry.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(occ, _)| occ.total() <= n_max)
                .map(|(o, &a)| (o.clone(), a))
                .collect(),
        }
    }

    /// Keeps only terms whose photon number equals `n`.
    pub fn photon_sector(&self, n: u32) -> Ket {
        Ket {
            registry: self.registry.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(occ, _)| occ.total() == n)
                .map(|(o, &a)| (o.clone(), a))
                .collect(),
        }
    }

    pub fn max_photons(&self) -> u32 {
        self.terms.keys().map(Occupation::total).max().unwrap_or(0)
    }

    /// Applies the creation operator of `mode`: `a†|n> = sqrt(n+1)|n+1>`.
    pub fn create(&self, mode: &Mode) -> Result<Ket> {
        if !self.registry.contains(&mode.beam) {
            return Err(Error::UnregisteredBeam(mode.beam.clone()));
        }
        let mut out = Ket::with_registry(self.registry.clone());
        for (occ, amp) in self.terms() {
            let n = occ.count(mode);
            let raised = occ.clone().with(mode.clone(), 1);
            out.accumulate(raised, amp * ((n + 1) as f64).sqrt());
        }
        Ok(out)
    }

    /// Term-by-term comparison within `tol`.
    pub fn approx_eq(&self, other: &Ket, tol: f64) -> bool {
        if self.registry != other.registry {
            return false;
        }
        let occs: BTreeSet<&Occupation> = self.terms.keys().chain(other.terms.keys()).collect();
        occs.into_iter()
            .all(|occ| (self.amplitude(occ) - other.amplitude(occ)).norm() <= tol)
    }

    /// Multiplies every amplitude by `e^{i phi}`.
    pub fn with_phase(&self, phi: f64) -> Ket {
        self.scale(Complex64::from_polar(1.0, phi))
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (occ, amp)) in self.terms().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if amp.im.abs() < 1e-12 {
                write!(f, "{:+.5}{}", amp.re, occ)?;
            } else {
                write!(f, "({:.5}{:+.5}i){}", amp.re, amp.im, occ)?;
            }
        }
        Ok(())
    }
}

/// `|<a|b>|^2` for normalized kets.
pub fn fidelity_pure(a: &Ket, b: &Ket) -> Result<f64> {
    for k in [a, b] {
        if !k.is_normalized() {
            return Err(Error::NotNormalized(k.norm()));
        }
    }
    Ok(a.inner(b)?.norm_sqr())
}

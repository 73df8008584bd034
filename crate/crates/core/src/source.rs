//! Four-beam type-II downconversion source to second perturbative order.
//!
//! Each side of the crystal emits `exp(lambda * S)|0>` with the antisymmetric
//! pair creator `S = a_H b_V - a_V b_H`, which expands to
//! `|0> + sqrt(2) lambda |Psi-> + sqrt(3) lambda^2 |two pairs> + ...`.
//! The two sides are independent, so the full source is their product.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Beam, Ket, Mode, Occupation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub lambda: f64,
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default = "default_left")]
    pub left: (Beam, Beam),
    #[serde(default = "default_right")]
    pub right: (Beam, Beam),
}

fn default_order() -> u32 {
    2
}

fn default_left() -> (Beam, Beam) {
    (Beam::from("1"), Beam::from("4"))
}

fn default_right() -> (Beam, Beam) {
    (Beam::from("2"), Beam::from("3"))
}

impl SourceSpec {
    pub fn new(lambda: f64, order: u32) -> SourceSpec {
        SourceSpec {
            lambda,
            order,
            left: default_left(),
            right: default_right(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) || !self.lambda.is_finite() {
            return Err(Error::InvalidSource(format!(
                "lambda must lie in [0, 1), got {}",
                self.lambda
            )));
        }
        if self.order > 2 {
            return Err(Error::InvalidSource(format!(
                "order must be 0, 1 or 2, got {}",
                self.order
            )));
        }
        let beams = [&self.left.0, &self.left.1, &self.right.0, &self.right.1];
        for (i, a) in beams.iter().enumerate() {
            if beams[i + 1..].contains(a) {
                return Err(Error::CoincidentBeams((*a).clone()));
            }
        }
        Ok(())
    }

    pub fn beams(&self) -> [Beam; 4] {
        [
            self.left.0.clone(),
            self.left.1.clone(),
            self.right.0.clone(),
            self.right.1.clone(),
        ]
    }

    fn side_beams(&self, side: Side) -> (&Beam, &Beam) {
        match side {
            Side::Left => (&self.left.0, &self.left.1),
            Side::Right => (&self.right.0, &self.right.1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn check_pair(a: &Beam, b: &Beam) -> Result<()> {
    if a == b {
        Err(Error::CoincidentBeams(a.clone()))
    } else {
        Ok(())
    }
}

/// `(|1H>_a |1V>_b - |1V>_a |1H>_b) / sqrt(2)`.
pub fn single_pair(a: impl Into<Beam>, b: impl Into<Beam>) -> Result<Ket> {
    let (a, b) = (a.into(), b.into());
    check_pair(&a, &b)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ket::zero([a.clone(), b.clone()])?
        .add_term(
            Occupation::from_counts([(Mode::h(a.clone()), 1), (Mode::v(b.clone()), 1)]),
            s,
        )?
        .add_term(Occupation::from_counts([(Mode::v(a), 1), (Mode::h(b), 1)]), -s)
}

/// Two pairs from one side of the crystal:
/// `(|2H,0V>_a|0H,2V>_b - |1H,1V>_a|1H,1V>_b + |0H,2V>_a|2H,0V>_b) / sqrt(3)`.
pub fn two_pair(a: impl Into<Beam>, b: impl Into<Beam>) -> Result<Ket> {
    let (a, b) = (a.into(), b.into());
    check_pair(&a, &b)?;
    let s = 1.0 / 3f64.sqrt();
    let term = |ah, av, bh, bv| Occupation::beam(a.clone(), ah, av).merge(&Occupation::beam(b.clone(), bh, bv));
    Ket::zero([a.clone(), b.clone()])?
        .add_term(term(2, 0, 0, 2), s)?
        .add_term(term(1, 1, 1, 1), -s)?
        .add_term(term(0, 2, 2, 0), s)
}

/// Unnormalized single-side state truncated at `spec.order` pairs.
pub fn side_state(spec: &SourceSpec, side: Side) -> Result<Ket> {
    spec.validate()?;
    let (a, b) = spec.side_beams(side);
    let mut ket = Ket::vacuum([a.clone(), b.clone()])?;
    if spec.order >= 1 {
        ket = ket.plus(&single_pair(a.clone(), b.clone())?.scale(2f64.sqrt() * spec.lambda))?;
    }
    if spec.order >= 2 {
        let w = 3f64.sqrt() * spec.lambda * spec.lambda;
        ket = ket.plus(&two_pair(a.clone(), b.clone())?.scale(w))?;
    }
    Ok(ket)
}

/// Unnormalized four-beam source, truncated at `2 * order` photons.
pub fn full_source(spec: &SourceSpec) -> Result<Ket> {
    let left = side_state(spec, Side::Left)?;
    let right = side_state(spec, Side::Right)?;
    Ok(left.tensor(&right)?.truncate(2 * spec.order))
}

/// Perturbative components of the full source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Vacuum,
    PairLeftOnly,
    PairRightOnly,
    PairPair,
    DoubleLeft,
    DoubleRight,
}

impl Sector {
    pub const ALL: [Sector; 6] = [
        Sector::Vacuum,
        Sector::PairLeftOnly,
        Sector::PairRightOnly,
        Sector::PairPair,
        Sector::DoubleLeft,
        Sector::DoubleRight,
    ];

    /// Power of lambda carried by this sector.
    pub fn order(self) -> u32 {
        match self {
            Sector::Vacuum => 0,
            Sector::PairLeftOnly | Sector::PairRightOnly => 1,
            Sector::PairPair | Sector::DoubleLeft | Sector::DoubleRight => 2,
        }
    }

    /// Amplitude of the normalized component inside `full_source`.
    pub fn weight(self, lambda: f64) -> f64 {
        match self {
            Sector::Vacuum => 1.0,
            Sector::PairLeftOnly | Sector::PairRightOnly => 2f64.sqrt() * lambda,
            Sector::PairPair => 2.0 * lambda * lambda,
            Sector::DoubleLeft | Sector::DoubleRight => 3f64.sqrt() * lambda * lambda,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sector::Vacuum => "vacuum",
            Sector::PairLeftOnly => "pair_left_only",
            Sector::PairRightOnly => "pair_right_only",
            Sector::PairPair => "pair_pair",
            Sector::DoubleLeft => "double_left",
            Sector::DoubleRight => "double_right",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Sector> {
        Sector::ALL
            .into_iter()
            .find(|sec| sec.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sector `{s}`")))
    }
}

/// Normalized component ket of one sector over all four beams.
pub fn source_term(spec: &SourceSpec, sector: Sector) -> Result<Ket> {
    spec.validate()?;
    if sector.order() > spec.order {
        return Err(Error::SectorBeyondCutoff(sector.name().into()));
    }
    let (l1, l2) = (spec.left.0.clone(), spec.left.1.clone());
    let (r1, r2) = (spec.right.0.clone(), spec.right.1.clone());
    let vac_l = || Ket::vacuum([l1.clone(), l2.clone()]);
    let vac_r = || Ket::vacuum([r1.clone(), r2.clone()]);
    match sector {
        Sector::Vacuum => vac_l()?.tensor(&vac_r()?),
        Sector::PairLeftOnly => single_pair(l1.clone(), l2.clone())?.tensor(&vac_r()?),
        Sector::PairRightOnly => vac_l()?.tensor(&single_pair(r1.clone(), r2.clone())?),
        Sector::PairPair => single_pair(l1.clone(), l2.clone())?.tensor(&single_pair(r1.clone(), r2.clone())?),
        Sector::DoubleLeft => two_pair(l1.clone(), l2.clone())?.tensor(&vac_r()?),
        Sector::DoubleRight => vac_l()?.tensor(&two_pair(r1.clone(), r2.clone())?),
    }
}

/// `source_term` scaled by its weight in `full_source`.
pub fn weighted_source_term(spec: &SourceSpec, sector: Sector) -> Result<Ket> {
    Ok(source_term(spec, sector)?.scale(Complex64::new(sector.weight(spec.lambda), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{fidelity_pure, TOL};

    /// `S = a_H b_V - a_V b_H` applied to `ket`.
    fn pair_creator(ket: &Ket, a: &str, b: &str) -> Ket {
        let hv = ket.create(&Mode::v(b)).unwrap().create(&Mode::h(a)).unwrap();
        let vh = ket.create(&Mode::h(b)).unwrap().create(&Mode::v(a)).unwrap();
        hv.plus(&vh.scale(-1.0)).unwrap()
    }

    #[test]
    fn single_pair_amplitudes() {
        let psi = single_pair("1", "4").unwrap();
        let hv = Occupation::from_counts([(Mode::h("1"), 1), (Mode::v("4"), 1)]);
        let vh = Occupation::from_counts([(Mode::v("1"), 1), (Mode::h("4"), 1)]);
        assert!((psi.amplitude(&hv).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((psi.amplitude(&vh).re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((psi.norm() - 1.0).abs() < TOL);
        assert!(matches!(single_pair("1", "1"), Err(Error::CoincidentBeams(_))));
    }

    #[test]
    fn two_pair_matches_squared_pair_creator() {
        let vac = Ket::vacuum(["1", "4"]).unwrap();
        let squared = pair_creator(&pair_creator(&vac, "1", "4"), "1", "4");
        let expected = squared.normalize().unwrap();
        let got = two_pair("1", "4").unwrap();
        assert!(got.approx_eq(&expected, TOL));
        assert!((got.norm() - 1.0).abs() < TOL);
        let signs: Vec<f64> = got.terms().map(|(_, a)| a.re.signum()).collect();
        assert_eq!(signs.iter().filter(|&&s| s < 0.0).count(), 1);
    }

    #[test]
    fn side_state_weights() {
        let spec0 = SourceSpec::new(0.1, 0);
        assert_eq!(side_state(&spec0, Side::Left).unwrap(), Ket::vacuum(["1", "4"]).unwrap());

        let spec1 = SourceSpec::new(0.1, 1);
        let s = side_state(&spec1, Side::Left).unwrap();
        assert!((s.photon_sector(0).norm() - 1.0).abs() < TOL);
        assert!((s.photon_sector(2).norm() - 2f64.sqrt() * 0.1).abs() < TOL);

        let spec2 = SourceSpec::new(0.1, 2);
        let s = side_state(&spec2, Side::Left).unwrap();
        assert!((s.photon_sector(4).norm() - 3f64.sqrt() * 0.01).abs() < TOL);
    }

    #[test]
    fn side_state_matches_exponential_series() {
        let lambda = 0.3;
        let vac = Ket::vacuum(["1", "4"]).unwrap();
        let s1 = pair_creator(&vac, "1", "4");
        let s2 = pair_creator(&s1, "1", "4");
        let series = vac
            .plus(&s1.scale(lambda))
            .unwrap()
            .plus(&s2.scale(lambda * lambda / 2.0))
            .unwrap();
        let got = side_state(&SourceSpec::new(lambda, 2), Side::Left).unwrap();
        assert!(got.approx_eq(&series, TOL));
    }

    #[test]
    fn full_source_sectors() {
        let spec = SourceSpec::new(0.0, 2);
        let src = full_source(&spec).unwrap();
        assert_eq!(src, Ket::vacuum(["1", "2", "3", "4"]).unwrap());

        let spec = SourceSpec::new(0.1, 2);
        let src = full_source(&spec).unwrap();
        assert!(src.max_photons() <= 4);
        let order2 = src.photon_sector(4);
        for (sector, w) in [
            (Sector::PairPair, 2.0 * 0.01),
            (Sector::DoubleLeft, 3f64.sqrt() * 0.01),
            (Sector::DoubleRight, 3f64.sqrt() * 0.01),
        ] {
            let comp = source_term(&spec, sector).unwrap();
            assert!((comp.inner(&order2).unwrap().re - w).abs() < TOL);
        }
        // the three components exhaust the four-photon sector
        let total: f64 = 4.0 * 1e-4 + 2.0 * 3.0 * 1e-4;
        assert!((order2.norm_sqr() - total).abs() < TOL);
    }

    #[test]
    fn source_term_cases() {
        let spec = SourceSpec::new(0.1, 2);
        let dl = source_term(&spec, Sector::DoubleLeft).unwrap();
        let expected = two_pair("1", "4").unwrap().tensor(&Ket::vacuum(["2", "3"]).unwrap()).unwrap();
        assert_eq!(dl, expected);
        let pp = source_term(&spec, Sector::PairPair).unwrap();
        assert!((pp.norm() - 1.0).abs() < TOL);
        let vac = source_term(&spec, Sector::Vacuum).unwrap();
        assert!((fidelity_pure(&vac, &Ket::vacuum(["1", "2", "3", "4"]).unwrap()).unwrap() - 1.0).abs() < TOL);

        let low = SourceSpec::new(0.1, 1);
        assert!(matches!(source_term(&low, Sector::PairPair), Err(Error::SectorBeyondCutoff(_))));
    }

    #[test]
    fn invalid_specs() {
        assert!(SourceSpec::new(1.0, 2).validate().is_err());
        assert!(SourceSpec::new(0.1, 3).validate().is_err());
        let mut spec = SourceSpec::new(0.1, 2);
        spec.right.0 = Beam::from("1");
        assert!(spec.validate().is_err());
    }
}

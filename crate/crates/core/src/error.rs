use thiserror::Error;

use crate::fock::Beam;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no beams")]
    NoBeams,
    #[error("duplicate beam label `{0}`")]
    DuplicateBeam(Beam),
    #[error("beam `{0}` is not registered")]
    UnregisteredBeam(Beam),
    #[error("beam registries differ")]
    RegistryMismatch,
    #[error("beam registries overlap on `{0}`")]
    OverlappingRegistries(Beam),
    #[error("null state (norm {0:e})")]
    NullState(f64),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("coincident beams `{0}`")]
    CoincidentBeams(Beam),
    #[error("matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),
    #[error("beam `{0}` already exists")]
    BeamExists(Beam),
    #[error("circuit step {step}: {source}")]
    Circuit {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("detector `{detector}`: detector beam not terminal (`{beam}`)")]
    DetectorNotTerminal { detector: String, beam: Beam },
    #[error("duplicate detector id `{0}`")]
    DuplicateDetector(String),
    #[error("beam `{0}` is bound to more than one detector")]
    SharedDetectorBeam(Beam),
    #[error("unknown detector `{0}`")]
    UnknownDetector(String),
    #[error("invalid herald rule: {0}")]
    InvalidRule(String),
    #[error("invalid detector model: {0}")]
    InvalidDetector(String),
    #[error("pattern {0} is not an accepted pattern")]
    RejectedPattern(String),
    #[error("ensemble weights sum to {0}, expected 1")]
    EnsembleWeights(f64),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("sector `{0}` lies beyond the source order cutoff")]
    SectorBeyondCutoff(String),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Circuit {
            step,
            source: Box::new(self),
        }
    }
}

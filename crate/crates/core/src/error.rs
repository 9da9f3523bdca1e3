use thiserror::Error;

/// Errors raised while building or evaluating the construction.
///
/// Verification failures (negative margins, lost transversality) are not
/// errors: they are recorded in reports. Variants here mean an object could
/// not be built, or an input was outside its domain.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unimodular: |det| = {0}")]
    NotUnimodular(f64),
    #[error("eigenvalue moduli violate the requested stable/center/unstable pattern: {0}")]
    NotHyperbolicPattern(String),
    #[error("stable eigenvalue {0} is negative, orientation of the stable direction is reversed")]
    OrientationReversed(f64),
    #[error("constants out of order: {0}")]
    ConstantsOutOfOrder(String),
    #[error("blend is not monotone: h'({z}) = {slope}")]
    BlendNotMonotone { z: f64, slope: f64 },
    #[error("branch overlap: c = {c} is not below h^3(a) = {h3a}")]
    BranchOverlap { c: f64, h3a: f64 },
    #[error("argument {0} outside of the domain [0, 1]")]
    OutOfDomain(f64),
    #[error("raw cocycle norm overflowed at step {0}")]
    Overflow(usize),
    #[error("stable bundle does not split into the requested oriented subbundles: {0}")]
    SplittingUnavailable(String),
    #[error("cone aperture too wide: inclusion `{name}` has margin {margin}")]
    ApertureTooWide { name: String, margin: f64 },
    #[error("vector field is not transverse to the strong-stable plus center-unstable bundle")]
    NotTransverse,
    #[error("no power n <= {0} separates the cones from the strong-stable bundle")]
    NoPowerFound(usize),
    #[error("cannot rescale the vector field: margin floor {floor} unreachable")]
    CannotRescale { floor: f64 },
    #[error("seed plane is degenerate")]
    DegenerateSeed,
    #[error("bundle estimate did not converge: residual {0}")]
    NotConverged(f64),
    #[error("transversality lost: principal angle {0}")]
    TransversalityLost(f64),
    #[error("integration step {0} rejected: tangent kept turning after the allowed halvings")]
    StepRejected(usize),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

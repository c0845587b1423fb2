use core::fmt;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    Domain(&'static str),
    /// Point coordinates do not fit the geometry.
    InvalidCoordinates(&'static str),
    /// Two interaction centers coincide.
    CoincidentCenters {
        /// First index.
        i: usize,
        /// Second index.
        j: usize,
    },
    /// A resolvent or wave function was requested on an interaction center.
    AtCenter,
    /// Adaptive quadrature exhausted its subdivision budget.
    Quadrature {
        /// Best estimate reached.
        value: f64,
        /// Its error estimate.
        error: f64,
    },
    /// An assembled entry failed; `(i, j)` locates it.
    Entry {
        /// Row.
        i: usize,
        /// Column.
        j: usize,
        /// Underlying failure.
        source: alloc::boxed::Box<Error>,
    },
    /// An iterative method did not converge.
    Convergence(&'static str),
    /// Eigenvalue branch `k` is degenerate with a neighbour.
    Degenerate {
        /// Branch index.
        k: usize,
    },
    /// A sign change was not found within the expanded bracket.
    NoBracket {
        /// Branch index.
        k: usize,
    },
    /// Diagonal dominance never holds on the search range.
    NoCertificate,
    /// The requested operation is undefined for this geometry.
    Unsupported(&'static str),
    /// A closed form breaks down for these parameters.
    DegenerateFormula(&'static str),
    /// The coupling flow crosses a pole.
    LandauPole {
        /// Scale ratio at which the denominator vanishes.
        gamma_pole: f64,
    },
    /// Input sampling does not cover the required range.
    InsufficientRange,
}

/// Crate result alias.
pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn at(self, i: usize, j: usize) -> Error {
        Error::Entry { i, j, source: alloc::boxed::Box::new(self) }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::InvalidCoordinates(what) => write!(f, "invalid coordinates: {what}"),
            Error::CoincidentCenters { i, j } => write!(f, "centers {i} and {j} coincide"),
            Error::AtCenter => write!(f, "evaluation point coincides with a center"),
            Error::Quadrature { value, error } => {
                write!(f, "quadrature did not converge (value {value:e}, error {error:e})")
            }
            Error::Entry { i, j, source } => write!(f, "entry ({i}, {j}): {source}"),
            Error::Convergence(what) => write!(f, "no convergence: {what}"),
            Error::Degenerate { k } => write!(f, "branch {k} is degenerate"),
            Error::NoBracket { k } => write!(f, "no bound state on branch {k}"),
            Error::NoCertificate => write!(f, "diagonal dominance fails on the whole bracket"),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
            Error::DegenerateFormula(what) => write!(f, "degenerate formula: {what}"),
            Error::LandauPole { gamma_pole } => {
                write!(f, "coupling flow hits a pole at gamma = {gamma_pole}")
            }
            Error::InsufficientRange => write!(f, "samples do not span the required range"),
        }
    }
}

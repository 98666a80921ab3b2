use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {re}+{im}i lies outside the analyticity sector")]
    DomainViolation { re: f64, im: f64 },

    #[error("degenerate zero near t={t}: |V'|={slope:e} below threshold")]
    DegenerateZero { t: f64, slope: f64 },

    #[error("no zeros found in the search window [{lo}, {hi}]")]
    NoZeros { lo: f64, hi: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("turning point for crossing {k} left its Newton basin")]
    EscapedBasin { k: usize },

    #[error("epsilon={epsilon} too large for isolated turning points (limit {limit})")]
    BasinGuard { epsilon: f64, limit: f64 },

    #[error("square-root branch could not be continued along the contour near {re}+{im}i")]
    BranchAmbiguity { re: f64, im: f64 },

    #[error("tail decays too slowly (fitted exponent {0})")]
    SlowDecay(f64),

    #[error("asymptotic guard violated: {0}")]
    GuardViolation(String),

    #[error("step size underflow at t={t}")]
    StepUnderflow { t: f64 },

    #[error("scattering matrix depends on the truncation time (drift {drift:e} > {threshold:e})")]
    TDependence { drift: f64, threshold: f64 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("parameters outside the {regime} regime: {detail}")]
    Regime { regime: &'static str, detail: String },

    #[error("log-gamma pole at {0}")]
    Pole(f64),

    #[error("path is not canonical for the requested sign at node {node}")]
    NonCanonicalPath { node: usize },

    #[error("point {re}+{im}i is within the exclusion radius of a turning point")]
    TurningPointProximity { re: f64, im: f64 },

    #[error("offset {offset} outside the annulus ({inner}, {outer})")]
    OutOfAnnulus { offset: f64, inner: f64, outer: f64 },

    #[error("no zero of the prefactor for h in [{lo}, {hi}] (lower bound {floor})")]
    NoRoots { lo: f64, hi: f64, floor: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

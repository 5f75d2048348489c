use thiserror::Error;

pub type Result<T> = std::result::Result<T, PricingError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    /// Model or contract parameters outside their admissible region.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} model has no standalone Levy characteristic function; use cf_dagger")]
    UnsupportedModel(&'static str),
    #[error("non-finite value while evaluating {what} at z = {z_re} + {z_im}i")]
    NumericOverflow { what: &'static str, z_re: f64, z_im: f64 },
    #[error("smooth offset requires a positive maturity (got T = {0})")]
    DegenerateMaturity(f64),
    #[error("quadrature produced a negative normalized price {price} with B = {b}, N = {n}")]
    QuadratureDiagnostic { price: f64, b: f64, n: usize },
    #[error("FFT grid too coarse: N = {n} violates the coverage inequality, need N >= {min_n}")]
    GridTooCoarse { n: usize, min_n: usize },
    #[error("benchmark price for case {case} is not strictly positive ({value})")]
    DivisionGuard { case: String, value: f64 },
    #[error("no grid configuration reached the threshold; best mean error {best_bps} bps at B = {best_b}, N = {best_n}")]
    ExhaustedGrid { best_bps: f64, best_b: f64, best_n: usize },
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl PricingError {
    /// Numeric failures (as opposed to bad input) map to a distinct CLI exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            PricingError::NumericOverflow { .. }
                | PricingError::QuadratureDiagnostic { .. }
                | PricingError::ExhaustedGrid { .. }
        )
    }
}

impl From<std::io::Error> for PricingError {
    fn from(e: std::io::Error) -> Self {
        PricingError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for PricingError {
    fn from(e: serde_json::Error) -> Self {
        PricingError::Parse(e.to_string())
    }
}

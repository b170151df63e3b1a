use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// An error together with the module that raised it.
#[derive(Debug, Error)]
#[error("[{module}] {kind}")]
pub struct Error {
    pub module: &'static str,
    pub kind: ErrorKind,
}

#[derive(Debug, Error)]
pub enum ErrorKind {
    #[error("range error: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular parameter: {0}")]
    SingularParameter(String),
    #[error("singular node at (mu, nu) = ({mu}, {nu}): the quadrature observable degenerates")]
    SingularNode { mu: f64, nu: f64 },
    #[error("convention violation: {0}")]
    ConventionViolation(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("kernel series does not decay at alpha = {}{:+}i: {detail}", alpha.re, alpha.im)]
    Divergence { alpha: Complex64, detail: String },
    #[error("aliasing: {n_harm} harmonics need at least {} theta samples, got {theta_count}", 2 * n_harm + 1)]
    Aliasing { n_harm: usize, theta_count: usize },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("format version mismatch: expected {expected}, found {found}")]
    Version { expected: i64, found: i64 },
    #[error("kind mismatch: expected {expected}, found {found}")]
    Kind { expected: String, found: String },
    #[error("conventions mismatch: expected {expected:?}, found {found:?}")]
    Conventions { expected: String, found: String },
    #[error("malformed container: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn new(module: &'static str, kind: ErrorKind) -> Self {
        Error { module, kind }
    }

    /// Stable short code, distinct per error kind.
    pub fn code(&self) -> &'static str {
        match self.kind {
            ErrorKind::Range(_) => "E_RANGE",
            ErrorKind::Domain(_) => "E_DOMAIN",
            ErrorKind::SingularParameter(_) => "E_SINGULAR_PARAMETER",
            ErrorKind::SingularNode { .. } => "E_SINGULAR_NODE",
            ErrorKind::ConventionViolation(_) => "E_CONVENTION_VIOLATION",
            ErrorKind::Coverage(_) => "E_COVERAGE",
            ErrorKind::Conditioning(_) => "E_CONDITIONING",
            ErrorKind::Divergence { .. } => "E_DIVERGENCE",
            ErrorKind::Aliasing { .. } => "E_ALIASING",
            ErrorKind::Numeric(_) => "E_NUMERIC",
            ErrorKind::Version { .. } => "E_VERSION",
            ErrorKind::Kind { .. } => "E_KIND",
            ErrorKind::Conventions { .. } => "E_CONVENTIONS",
            ErrorKind::Malformed(_) => "E_MALFORMED",
            ErrorKind::Io(_) => "E_IO",
        }
    }

    /// Process exit status used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Version { .. }
            | ErrorKind::Kind { .. }
            | ErrorKind::Conventions { .. }
            | ErrorKind::Malformed(_)
            | ErrorKind::Io(_) => 2,
            _ => 3,
        }
    }
}

macro_rules! bail {
    ($module:expr, $kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::new(
            $module,
            $crate::error::ErrorKind::$kind(format!($($arg)*)),
        ))
    };
}
pub(crate) use bail;

//! Error types shared by every pipeline stage.

use std::fmt;
use std::path::PathBuf;

/// Toolkit-wide error type.
#[derive(Debug)]
pub enum Error {
    /// Malformed file structure: bad header, ragged rows, empty data section.
    Format(String),
    /// A cell failed to parse; `row` is the 1-based data-row index.
    Parse { row: usize, msg: String },
    /// A domain invariant was violated (non-finite sample, bad threshold order, ...).
    Invariant(String),
    /// A design or call parameter is out of its valid range.
    Parameter(String),
    /// Input shorter than the operation requires.
    Length {
        what: String,
        needed: usize,
        got: usize,
    },
    /// Index outside the valid range.
    Bounds(String),
    /// Column/row count mismatch between related structures.
    Dimension {
        what: String,
        expected: usize,
        got: usize,
    },
    /// Configuration validation failures; every violated constraint is listed.
    Config(Vec<String>),
    /// Iterative solver failed to reach its tolerance.
    Convergence { residual: f64, iterations: usize },
    /// Training produced a non-finite loss.
    Divergence(String),
    /// I/O failure with the offending path.
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Parse { row, msg } => write!(f, "parse error at data row {row}: {msg}"),
            Error::Invariant(msg) => write!(f, "invariant violation: {msg}"),
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Length { what, needed, got } => {
                write!(f, "{what} too short: need at least {needed} samples, got {got}")
            }
            Error::Bounds(msg) => write!(f, "out of bounds: {msg}"),
            Error::Dimension { what, expected, got } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, got {got}")
            }
            Error::Config(violations) => {
                writeln!(f, "configuration invalid ({} constraint(s) violated):", violations.len())?;
                for v in violations {
                    writeln!(f, "  - {v}")?;
                }
                Ok(())
            }
            Error::Convergence { residual, iterations } => write!(
                f,
                "solver did not converge after {iterations} iterations (KKT residual {residual:.3e})"
            ),
            Error::Divergence(msg) => {
                write!(f, "training diverged: {msg}; try a lower learning rate")
            }
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Whether the error stems from invalid user input rather than a runtime failure.
    /// The CLI maps this to exit code 1 vs 2.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Convergence { .. } | Error::Divergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

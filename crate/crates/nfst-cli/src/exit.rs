//! Exit codes and the error-to-code mapping. Documented in `--help`.

use nfst::overlay::{CompileError, ImageFormatError};
use nfst::sim::StreamError;

pub const USAGE: i32 = 2;
pub const IO: i32 = 3;
pub const PARSE: i32 = 4;
pub const VALIDATE: i32 = 5;
pub const NOT_LENGTH_PRESERVING: i32 = 6;
pub const EPSILON_PRESENT: i32 = 7;
pub const CAPACITY_EXCEEDED: i32 = 8;
pub const ADJACENCY_UNSATISFIABLE: i32 = 9;
pub const IMAGE_FORMAT: i32 = 10;
pub const ENGINE: i32 = 11;
pub const VERIFY_FAILED: i32 = 12;

pub const EXIT_CODE_HELP: &str = "\
EXIT CODES:
   0  success
   2  usage error
   3  file I/O error
   4  ruleset parse error
   5  machine validation failed
   6  machine is not length-preserving
   7  machine has epsilon transitions that cannot be eliminated
   8  grid capacity exceeded
   9  adjacency unsatisfiable (congestion / replication budget)
  10  image format error (magic, version, checksum, truncation)
  11  engine error (activation vector or FIFO overflow)
  12  verification found a counterexample";

/// A failure the process exits with: code plus a message for stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> CliError {
        CliError { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> CliError {
        CliError::new(USAGE, message)
    }

    pub fn io(context: &str, err: std::io::Error) -> CliError {
        CliError::new(IO, format!("{context}: {err}"))
    }
}

impl From<&CompileError> for CliError {
    fn from(e: &CompileError) -> CliError {
        let code = match e {
            CompileError::InvalidFst(_) => VALIDATE,
            CompileError::NotLengthPreserving => NOT_LENGTH_PRESERVING,
            CompileError::EpsilonPresent => EPSILON_PRESENT,
            CompileError::CapacityExceeded { .. } => CAPACITY_EXCEEDED,
            CompileError::AdjacencyUnsatisfiable { .. } => ADJACENCY_UNSATISFIABLE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<ImageFormatError> for CliError {
    fn from(e: ImageFormatError) -> CliError {
        CliError::new(IMAGE_FORMAT, e.to_string())
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> CliError {
        CliError::new(ENGINE, e.to_string())
    }
}

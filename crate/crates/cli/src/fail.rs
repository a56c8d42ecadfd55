use std::fmt;
use std::process::ExitCode;

/// Reasons a run ends with a nonzero exit code.
#[derive(Debug)]
pub enum Failure {
    /// A check ran and did not give the required verdict.
    Check(String),
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Check(_) => ExitCode::from(1),
            Failure::Usage(_) => ExitCode::from(2),
            Failure::Io(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<crosscurve::Error> for Failure {
    fn from(e: crosscurve::Error) -> Self {
        Failure::Check(e.to_string())
    }
}

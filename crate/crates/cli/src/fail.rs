use microchi::Error;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, files or documents (exit 2).
    Usage(String),
    /// The computation itself failed (exit 1).
    Compute(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter(_)
            | Error::Parse { .. }
            | Error::Document { .. }
            | Error::MissingTarget(_)
            | Error::InconsistentTargets(_)
            | Error::InfeasibleConfig(_)
            | Error::IndexOutOfRange { .. }
            | Error::NotNormalized(_)
            | Error::NotHermitian { .. }
            | Error::NonFinite { .. } => Failure::Usage(msg),
            _ => Failure::Compute(msg),
        }
    }
}

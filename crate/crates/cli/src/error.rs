use std::fmt;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<advlex::Error> for CliError {
    fn from(e: advlex::Error) -> Self {
        use advlex::Error as E;
        fn root(e: &E) -> &E {
            match e {
                E::Fold { source, .. } | E::Medium { source, .. } => root(source),
                other => other,
            }
        }
        let msg = e.to_string();
        if e.is_data_error() {
            CliError::Data(msg)
        } else {
            match root(&e) {
                E::InvalidArgument(_) | E::NotLinear => CliError::Usage(msg),
                _ => CliError::Internal(msg),
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

//! Process exit-code policy: 2 for anything wrong with the requested run
//! (config syntax, missing files, parameter preconditions), 3 for failures
//! that arise while executing a valid request (numerics, output I/O).

use std::fmt;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        CliError { code: 2, message }
    }

    pub fn runtime(message: String) -> Self {
        CliError { code: 3, message }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<tradetherm::Error> for CliError {
    fn from(e: tradetherm::Error) -> Self {
        let code = match &e {
            tradetherm::Error::NumericalFailure(_)
            | tradetherm::Error::QuadratureNonConvergence { .. }
            | tradetherm::Error::Io(_) => 3,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

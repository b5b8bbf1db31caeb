//! Mapping from library errors to process exit codes.

use nsdicke_quantum::QuantumError;

pub const OK: i32 = 0;
pub const GENERAL: i32 = 1;
pub const USAGE: i32 = 2;
pub const NUMERICAL: i32 = 3;
pub const RESOURCE: i32 = 4;

/// Error raised by the command layer itself, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    CliError { code: USAGE, message: message.into() }.into()
}

fn core_code(e: &nsdicke::Error) -> i32 {
    use nsdicke::Error::*;
    match e {
        InvalidParameter { .. } | Unsupported(_) | Domain(_) => USAGE,
        EigenNonConvergence { .. } | StepUnderflow { .. } | StepBudget { .. } | NormDrift { .. } | NonFinite(_) => NUMERICAL,
    }
}

fn quantum_code(e: &QuantumError) -> i32 {
    match e {
        QuantumError::Resource { .. } => RESOURCE,
        QuantumError::InvalidParameter { .. } => USAGE,
        QuantumError::Accuracy { .. } | QuantumError::Truncation { .. } | QuantumError::NonFinite(_) => NUMERICAL,
        QuantumError::Model(m) => core_code(m),
    }
}

/// Exit code for an error chain: the first recognised cause decides.
pub fn code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return e.code;
        }
        if let Some(e) = cause.downcast_ref::<nsdicke::Error>() {
            return core_code(e);
        }
        if let Some(e) = cause.downcast_ref::<QuantumError>() {
            return quantum_code(e);
        }
        if cause.downcast_ref::<clap::Error>().is_some() {
            return USAGE;
        }
    }
    GENERAL
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        let e: anyhow::Error = nsdicke::Error::Unsupported("x".into()).into();
        assert_eq!(code_for(&e), USAGE);
        let e: anyhow::Error = nsdicke::Error::NonFinite(1.0).into();
        assert_eq!(code_for(&e.context("while integrating")), NUMERICAL);
        let e: anyhow::Error = QuantumError::Resource { dim: 10, budget: 5 }.into();
        assert_eq!(code_for(&e), RESOURCE);
        let e: anyhow::Error = QuantumError::Model(nsdicke::Error::InvalidParameter { name: "kappa", reason: "r".into() }).into();
        assert_eq!(code_for(&e), USAGE);
        assert_eq!(code_for(&usage("bad")), USAGE);
        assert_eq!(code_for(&anyhow::anyhow!("io")), GENERAL);
    }
}

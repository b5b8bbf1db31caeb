use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum QuantumError {
    #[error("Hilbert-space dimension {dim} exceeds the budget of {budget}")]
    Resource { dim: usize, budget: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("trace drift {drift:e} exceeds {limit:e} at t = {t}; reduce dt (currently {dt})")]
    Accuracy { drift: f64, limit: f64, t: f64, dt: f64 },

    #[error("photon cutoff saturated: population {population:e} in level n_max exceeds {limit:e}; raise n_max")]
    Truncation { population: f64, limit: f64 },

    #[error("non-finite density matrix at t = {0}")]
    NonFinite(f64),

    #[error(transparent)]
    Model(#[from] nsdicke::Error),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

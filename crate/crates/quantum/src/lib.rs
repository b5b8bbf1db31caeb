//! Open-system quantum solver for the two-ensemble Dicke model on
//! Fock ⊗ collective-spin ⊗ collective-spin space, with Husimi Q readout.

pub mod error;
pub mod husimi;
pub mod master;
pub mod space;
pub mod state;

pub use error::{QuantumError, Result};
pub use husimi::{count_q_lobes, husimi_q, AlphaGrid, Lobe, LobeReport, QGrid};
pub use master::{evolve_master, hamiltonian, lindblad_rhs, EvolveOptions, Evolution, Lindbladian, ObservableSample, TruncationPolicy};
pub use space::{build_operators, CMatrix, HilbertSpec, OperatorSet, SparseOp};
pub use state::{coherent_spin_state, partial_trace_field, FieldState, InitialState, ProductState, SpinAngles};

//! Mean-field toolkit for the two-ensemble ("non-standard") Dicke model: closed-form
//! fixed points, linear stability, semiclassical dynamics and parameter sweeps.

pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod model;
pub mod ode;
pub mod stability;
pub mod steadystate;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{eom_rhs, energy, parity_transform, scale_transform, DerivedObservables, MeanFieldState, ModelParams};
pub use steadystate::{
    all_fixed_points, critical_couplings, fixed_point, fixed_point_table, normal_fixed_points,
    superradiant_fixed_points, CriticalCouplings, FixedPointRecord, PhaseLabel,
};

//! Numeric stability checks: local macro-element nullspaces, the analytic
//! spurious pressures, and the discrete inf-sup constant.

mod eigen;
mod global;
mod local;

pub use eigen::{infsup_constant, smallest_eigenvalues, InfSupOptions, InfSupResult, SchurOperator};
pub use global::global_counterexample;
pub use local::{
    analytic_singular_pressure, local_nullspace, nullspace_of, quad_counterexample, LocalNullspace, LocalOperator,
    NULL_TOL,
};

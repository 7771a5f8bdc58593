//! Penalized mixed Stokes discretization.

mod assemble;
mod problems;
mod solve;

pub(crate) use assemble::Table;
pub use assemble::{assemble, StokesSystem};
pub use problems::{
    cavity_problem, convergence_study, measure_errors, ErrorReport, ErrorRow, ExactSolution, LidVariant, TrigVortex,
};
pub use solve::{solve_penalized, SolveMethod, SolveOptions, Solution};

//! Macro-element inf-sup analysis for mixed Stokes elements whose velocity
//! components may live in different finite element spaces.

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fespace;
pub mod infsup;
pub mod linalg;
pub mod macroelement;
pub mod mesh;
pub mod stokes;
pub mod unstructure;

pub use error::{FeError, MacroError, MeshError, SolveError};

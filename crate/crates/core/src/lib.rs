//! Certified Burer-Monteiro solver for block-structured semidefinite programs.

pub mod apps;
pub mod certification;
pub mod error;
pub mod factorization;
pub mod linalg;
pub mod local_solver;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};

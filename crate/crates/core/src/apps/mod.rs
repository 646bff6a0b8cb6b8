//! Problem builders for the worked applications and seeded generators for
//! test corpora.

mod adversarial;
mod iqm;
mod random;
mod sensing;
mod soc;

pub use adversarial::{adversarial_instance, build_adversarial_cost, AdversarialFixture};
pub use iqm::{build_integer_quadratic, iqm_cost, IntegerQuadratic};
pub use random::{generate_random, random_psd, random_symmetric};
pub use sensing::{
    build_sensing_psd, build_sensing_symmetric, random_measurements, recover_symmetric, sensing_psd_instance,
    sensing_symmetric_instance, nuclear_norm, SensingFixture,
};
pub use soc::{
    arrow_matrix, arrow_to_cone, build_soc_embedding, cone_margin, soc_instance, SocConstraint, SocProblem,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Dense matrix in row-major order, for sidecar fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for DenseJson {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect(),
        }
    }
}

/// Metadata written next to a generated problem file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sidecar {
    pub builder: String,
    pub seed: Option<u64>,
    pub parameters: Vec<(String, f64)>,
    /// Planted matrices (sensing target, adversarial factor), one per block.
    pub planted: Vec<DenseJson>,
    pub planted_objective: Option<f64>,
    pub oracle_objective: Option<f64>,
}

#[cfg(test)]
mod tests;

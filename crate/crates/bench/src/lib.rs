//! Shared inputs for the benchmarks.

use blockade_core::dynamics::build_liouvillian;
use blockade_core::model::{build_model, CoupledKerr};
use blockade_core::{HilbertDims, Liouvillian, Model, Operator};

pub const GAMMA: f64 = 1.0 / 3.0;
pub const N_TH: f64 = 0.01;

pub fn hamiltonian(model: Model, d1: usize, d2: usize) -> Operator {
    let dims = HilbertDims::pair(d1, d2).expect("valid cutoffs");
    build_model(model, &CoupledKerr::symmetric(10.0, 1.0, 1.0), &dims).expect("valid model")
}

pub fn liouvillian(model: Model, d1: usize, d2: usize) -> Liouvillian {
    build_liouvillian(&hamiltonian(model, d1, d2), &[GAMMA; 2], &[N_TH; 2]).expect("valid rates")
}

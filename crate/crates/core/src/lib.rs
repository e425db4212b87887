//! Simulation of multiphonon blockade in two coupled, driven Kerr resonators:
//! Fock-space primitives, effective Hamiltonians, open and closed dynamics,
//! phase-space distributions and entanglement measures.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod measures;
pub mod model;
pub mod phasespace;
pub mod sparse;

pub use faer::Mat;
pub use num_complex::Complex64 as C64;

pub use dynamics::{Liouvillian, Trajectory};
pub use error::{Error, Result};
pub use fock::{DensityMatrix, HilbertDims, Operator, StateVector, Tolerances};
pub use measures::{MeasureReport, NegativityConvention};
pub use model::{CoupledKerr, EffectiveParams, MicroscopicParams, Model};
pub use phasespace::{PhaseGrid, QpdGrid};

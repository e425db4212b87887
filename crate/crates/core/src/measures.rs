//! Purity, Fock populations and negativity-based entanglement measures.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, HilbertDims, Operator, StateVector};

/// How the negativity is normalized from the partial-transpose trace norm.
///
/// `Halved` gives `(||rho^T||_1 - 1) / 2`, which is 1/2 for a two-qubit Bell
/// state. `Full` drops the factor 1/2. Cost, dimensionality and potential
/// are always derived from whichever negativity is selected, so
/// `D_ent = 2N + 1` and `E_cost = log2(N + 1)` hold under both.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativityConvention {
    #[default]
    Halved,
    Full,
}

impl NegativityConvention {
    pub fn from_trace_norm(self, trace_norm: f64) -> f64 {
        let excess = (trace_norm - 1.0).max(0.0);
        match self {
            NegativityConvention::Halved => excess / 2.0,
            NegativityConvention::Full => excess,
        }
    }
}

/// `Tr rho^2`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.operator().matrix();
    let n = rho.dim();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc
}

fn require_two_modes(dims: &HilbertDims) -> Result<()> {
    if dims.num_modes() != 2 {
        return Err(Error::InvalidDimension(format!("expected a two-mode state, got {dims}")));
    }
    Ok(())
}

/// Negativity family derived from one partial-transpose trace norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entanglement {
    pub convention: NegativityConvention,
    pub trace_norm: f64,
    pub negativity: f64,
    #[serde(rename = "E_cost")]
    pub e_cost: f64,
    #[serde(rename = "D_ent")]
    pub d_ent: f64,
}

impl Entanglement {
    pub fn from_trace_norm(trace_norm: f64, convention: NegativityConvention) -> Self {
        let negativity = convention.from_trace_norm(trace_norm);
        Self {
            convention,
            trace_norm,
            negativity,
            e_cost: (negativity + 1.0).log2(),
            d_ent: 2.0 * negativity + 1.0,
        }
    }
}

/// Trace norm of the partial transpose over the second mode.
pub fn partial_transpose_norm(rho: &DensityMatrix) -> Result<f64> {
    require_two_modes(rho.dims())?;
    fock::trace_norm(&fock::partial_transpose(rho, 1)?)
}

pub fn entanglement(rho: &DensityMatrix, convention: NegativityConvention) -> Result<Entanglement> {
    Ok(Entanglement::from_trace_norm(partial_transpose_norm(rho)?, convention))
}

pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    negativity_with(rho, NegativityConvention::default())
}

pub fn negativity_with(rho: &DensityMatrix, convention: NegativityConvention) -> Result<f64> {
    Ok(entanglement(rho, convention)?.negativity)
}

/// PPT entanglement cost `log2(N + 1)`.
pub fn entanglement_cost(rho: &DensityMatrix) -> Result<f64> {
    entanglement_cost_with(rho, NegativityConvention::default())
}

pub fn entanglement_cost_with(rho: &DensityMatrix, convention: NegativityConvention) -> Result<f64> {
    Ok(entanglement(rho, convention)?.e_cost)
}

/// Entanglement dimensionality `2N + 1`.
pub fn entanglement_dimensionality(rho: &DensityMatrix) -> Result<f64> {
    entanglement_dimensionality_with(rho, NegativityConvention::default())
}

pub fn entanglement_dimensionality_with(
    rho: &DensityMatrix,
    convention: NegativityConvention,
) -> Result<f64> {
    Ok(entanglement(rho, convention)?.d_ent)
}

/// Output of a balanced beam splitter fed with `rho` and vacuum. The ancilla
/// keeps the input cutoff; the splitter conserves total excitation, so
/// nothing leaks past it.
pub fn beam_splitter_output(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dims().num_modes() != 1 {
        return Err(Error::InvalidDimension(format!(
            "expected a single-mode state, got {}",
            rho.dims()
        )));
    }
    let d = rho.dim();
    let a = fock::destroy(d)?;
    let id = fock::identity(d)?;
    let a1 = fock::tensor(&a, &id)?;
    let a2 = fock::tensor(&id, &a)?;
    let hop = &a1.adjoint() * &a2;
    let h = (&hop + &hop.adjoint()).scale_real(0.5);
    let u = fock::hermitian_eig(&h)?.propagator(FRAC_PI_2);

    let vac = StateVector::vacuum(HilbertDims::single(d)?).to_density();
    let input = fock::tensor(rho.operator(), vac.operator())?;
    let out = &(&u * input.matrix()) * u.adjoint();
    DensityMatrix::from_hermitized(&Operator::new(h.dims().clone(), out)?)
}

/// Entanglement potential `log2(N + 1)` of the beam-splitter output.
pub fn entanglement_potential(rho: &DensityMatrix) -> Result<f64> {
    entanglement_potential_with(rho, NegativityConvention::default())
}

pub fn entanglement_potential_with(rho: &DensityMatrix, convention: NegativityConvention) -> Result<f64> {
    entanglement_cost_with(&beam_splitter_output(rho)?, convention)
}

/// Fock populations of a two-mode state relative to a blockade box
/// `m1 <= bounds.0`, `m2 <= bounds.1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockProbabilities {
    pub bounds: (usize, usize),
    /// `joint[m1][m2]` over the full cutoffs.
    pub joint: Vec<Vec<f64>>,
    /// `1 - sum` over the box.
    pub residual: f64,
    pub reduced: [Vec<f64>; 2],
    /// Reduced populations above each bound.
    pub reduced_tails: [f64; 2],
}

/// Largest negative population accepted as rounding.
pub const POPULATION_TOL: f64 = 1e-10;

pub fn fock_probabilities(rho: &DensityMatrix, bounds: (usize, usize)) -> Result<FockProbabilities> {
    let dims = rho.dims();
    require_two_modes(dims)?;
    let (d1, d2) = (dims.modes()[0], dims.modes()[1]);
    if bounds.0 >= d1 || bounds.1 >= d2 {
        return Err(Error::InvalidDimension(format!(
            "blockade bounds ({}, {}) exceed cutoffs {dims}",
            bounds.0, bounds.1
        )));
    }
    let diag = rho.diagonal();
    if let Some(p) = diag.iter().find(|p| **p < -POPULATION_TOL) {
        return Err(Error::NumericalInconsistency(format!("negative population {p:.3e}")));
    }
    let joint: Vec<Vec<f64>> =
        (0..d1).map(|m1| (0..d2).map(|m2| diag[dims.index2(m1, m2)]).collect()).collect();
    let inside: f64 =
        (0..=bounds.0).flat_map(|m1| (0..=bounds.1).map(move |m2| (m1, m2))).map(|(a, b)| joint[a][b]).sum();
    let r1: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let r2: Vec<f64> = (0..d2).map(|m2| joint.iter().map(|row| row[m2]).sum()).collect();
    let tails = [r1[bounds.0 + 1..].iter().sum(), r2[bounds.1 + 1..].iter().sum()];
    Ok(FockProbabilities { bounds, joint, residual: 1.0 - inside, reduced: [r1, r2], reduced_tails: tails })
}

/// All measures of a two-mode state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub purity: f64,
    pub purity_modes: [f64; 2],
    #[serde(flatten)]
    pub entanglement: Entanglement,
    #[serde(rename = "EP")]
    pub ep: [f64; 2],
    pub probabilities: FockProbabilities,
}

pub fn measure_report(
    rho: &DensityMatrix,
    bounds: (usize, usize),
    convention: NegativityConvention,
) -> Result<MeasureReport> {
    require_two_modes(rho.dims())?;
    let r1 = fock::partial_trace(rho, 0)?;
    let r2 = fock::partial_trace(rho, 1)?;
    Ok(MeasureReport {
        purity: purity(rho),
        purity_modes: [purity(&r1), purity(&r2)],
        entanglement: entanglement(rho, convention)?,
        ep: [
            entanglement_potential_with(&r1, convention)?,
            entanglement_potential_with(&r2, convention)?,
        ],
        probabilities: fock_probabilities(rho, bounds)?,
    })
}

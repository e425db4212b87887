use faer::prelude::*;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::liouvillian::{unvectorize, Liouvillian};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, HilbertDims, Tolerances};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyStateOptions {
    /// The iteration factors `L - shift I`.
    pub shift: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Hilbert-space dimension up to which a failed sparse factorization
    /// falls back to dense LU.
    pub dense_fallback_max_dim: usize,
    /// A second generalized eigenvalue of `L` below this (scaled by
    /// `max(1, ||L||_max)`) is reported as a degenerate null space.
    pub degeneracy_tolerance: f64,
    /// Required `||L rho||_max / ||L||_max`.
    pub residual_tolerance: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            shift: 1e-8,
            tolerance: 1e-12,
            max_iterations: 200,
            dense_fallback_max_dim: 60,
            degeneracy_tolerance: 1e-8,
            residual_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyStateMethod {
    SparseLu,
    DenseLu,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub last_change: f64,
    /// `||L rho||_max / ||L||_max`.
    pub residual: f64,
    /// Magnitude of the slowest nonzero decay found alongside the null vector.
    pub second_eigenvalue: f64,
    pub method: SteadyStateMethod,
}

enum Factor {
    Sparse(faer::sparse::linalg::solvers::Lu<usize, C64>),
    Dense(faer::linalg::solvers::PartialPivLu<C64>),
}

impl Factor {
    fn solve(&self, v: &mut [C64]) {
        let mut b = Mat::from_fn(v.len(), 1, |i, _| v[i]);
        match self {
            Factor::Sparse(lu) => lu.solve_in_place(b.as_mut()),
            Factor::Dense(lu) => lu.solve_in_place(b.as_mut()),
        }
        for (i, x) in v.iter_mut().enumerate() {
            *x = b[(i, 0)];
        }
    }
}

fn factor(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<(Factor, SteadyStateMethod)> {
    let shift = C64::new(-opts.shift, 0.0);
    let sparse = l.matrix().to_faer_shifted(shift).and_then(|a| {
        a.sp_lu().map_err(|e| Error::LinearAlgebra(format!("sparse LU failed: {e:?}")))
    });
    match sparse {
        Ok(lu) => Ok((Factor::Sparse(lu), SteadyStateMethod::SparseLu)),
        Err(_) if l.hilbert_dim() <= opts.dense_fallback_max_dim => {
            let mut a = l.matrix().to_dense();
            for i in 0..a.nrows() {
                a[(i, i)] += shift;
            }
            Ok((Factor::Dense(a.partial_piv_lu()), SteadyStateMethod::DenseLu))
        }
        Err(err) => Err(err),
    }
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Sum of the diagonal entries of a row-major vectorized `D x D` matrix.
fn vec_trace(v: &[C64], d: usize) -> C64 {
    (0..d).map(|i| v[i * d + i]).sum()
}

pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    steady_state_with(l, &SteadyStateOptions::default())
}

/// Null vector of `L` by shifted inverse iteration. A second vector, kept
/// orthogonal to the first, is iterated alongside to detect a degenerate
/// null space.
pub fn steady_state_with(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<SteadyState> {
    let d = l.hilbert_dim();
    let n = d * d;
    let (lu, method) = factor(l, opts)?;

    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in 0..d {
        x[i * d + i] = C64::new(1.0 / d as f64, 0.0);
    }
    // Deterministic, non-symmetric start for the companion vector.
    let mut y: Vec<C64> = (0..n)
        .map(|k| C64::new(((k * 7 + 3) % 11) as f64 - 5.0, ((k * 5 + 1) % 13) as f64 - 6.0))
        .collect();

    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut next = x.clone();
        lu.solve(&mut next);
        let tr = vec_trace(&next, d);
        let scale = if tr.norm() > 1e-12 * norm2(&next) { tr } else { C64::new(norm2(&next), 0.0) };
        if !scale.norm().is_finite() || scale.norm() == 0.0 {
            return Err(Error::LinearAlgebra("inverse iteration produced a null vector".into()));
        }
        next.iter_mut().for_each(|v| *v /= scale);
        let peak = next.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        change = next.iter().zip(&x).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / peak;
        x = next;

        lu.solve(&mut y);
        orthonormalize(&mut y, &x);

        if change < opts.tolerance {
            break;
        }
    }
    if !(change < opts.tolerance) {
        return Err(Error::NonConvergence { iterations, change });
    }
    // A few more companion sweeps so it settles into the slowest decaying mode.
    for _ in 0..8 {
        lu.solve(&mut y);
        orthonormalize(&mut y, &x);
    }

    let l_norm = l.matrix().max_abs().max(f64::MIN_POSITIVE);
    let second = norm2(&l.apply_vec(&y));
    if second < opts.degeneracy_tolerance * l_norm.max(1.0) {
        return Err(Error::DegenerateSteadyState { second });
    }

    let rho = DensityMatrix::from_hermitized(&unvectorize(l.dims(), &x))?;
    let lr = l.apply_vec(&super::vectorize(rho.operator()));
    let residual = lr.iter().fold(0.0f64, |m, v| m.max(v.norm())) / l_norm;
    if residual > opts.residual_tolerance {
        return Err(Error::NumericalInconsistency(format!(
            "steady-state residual {residual:.3e} exceeds {:.1e}",
            opts.residual_tolerance
        )));
    }
    let rho = DensityMatrix::new_with(rho.into_operator(), &Tolerances::default()).map_err(|e| {
        Error::NumericalInconsistency(format!("steady state is not a valid density matrix: {e}"))
    })?;
    Ok(SteadyState { rho, iterations, last_change: change, residual, second_eigenvalue: second, method })
}

fn orthonormalize(y: &mut [C64], x: &[C64]) {
    let xn = norm2(x);
    let proj = dot(x, y) / (xn * xn);
    for (a, b) in y.iter_mut().zip(x) {
        *a -= proj * b;
    }
    let yn = norm2(y);
    if yn > 0.0 {
        y.iter_mut().for_each(|v| *v /= yn);
    }
}

/// One cutoff setting in a [`converge_cutoffs`] sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRound {
    pub dims: Vec<usize>,
    pub observables: Vec<f64>,
    /// Largest absolute observable change from the previous round.
    pub change: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CutoffSweep<T> {
    pub rounds: Vec<SweepRound>,
    pub converged: bool,
    /// Output of the last (largest) cutoff evaluated.
    pub result: T,
    pub dims: HilbertDims,
}

/// Raise every cutoff by `step` until the observables returned by `eval`
/// move by less than `tol`, or `max_rounds` evaluations have been made.
pub fn converge_cutoffs<T, F>(
    start: &HilbertDims,
    step: usize,
    tol: f64,
    max_rounds: usize,
    mut eval: F,
) -> Result<CutoffSweep<T>>
where
    F: FnMut(&HilbertDims) -> Result<(T, Vec<f64>)>,
{
    if max_rounds < 2 || step == 0 {
        return Err(Error::Domain("a cutoff sweep needs a positive step and at least two rounds".into()));
    }
    let mut dims = start.clone();
    let (mut result, mut prev) = eval(&dims)?;
    let mut rounds = vec![SweepRound { dims: dims.modes().to_vec(), observables: prev.clone(), change: None }];
    let mut converged = false;
    while rounds.len() < max_rounds {
        let next_dims =
            HilbertDims::new(&dims.modes().iter().map(|d| d + step).collect::<Vec<_>>())?;
        let (r, obs) = eval(&next_dims)?;
        if obs.len() != prev.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} observables", prev.len()),
                found: format!("{}", obs.len()),
            });
        }
        let change = obs.iter().zip(&prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        rounds.push(SweepRound { dims: next_dims.modes().to_vec(), observables: obs.clone(), change: Some(change) });
        dims = next_dims;
        result = r;
        prev = obs;
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(CutoffSweep { rounds, converged, result, dims })
}

//! Closed and open time evolution, Liouvillian assembly and steady states.

mod integrate;
mod liouvillian;
mod steady;

pub use integrate::{integrate, IntegratorOptions, IntegratorStats};
pub use liouvillian::{build_liouvillian, unvectorize, vectorize, Liouvillian};
pub use steady::{
    converge_cutoffs, steady_state, steady_state_with, CutoffSweep, SteadyState,
    SteadyStateMethod, SteadyStateOptions, SweepRound,
};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, HilbertDims, Operator, StateVector};
use crate::C64;

/// Norm drift tolerated by [`evolve_closed`].
pub const CLOSED_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum Snapshots {
    Pure(Vec<StateVector>),
    Mixed(Vec<DensityMatrix>),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Snapshots,
    /// Present for master-equation runs.
    pub stats: Option<IntegratorStats>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dims(&self) -> Option<&HilbertDims> {
        match &self.snapshots {
            Snapshots::Pure(v) => v.first().map(|s| s.dims()),
            Snapshots::Mixed(v) => v.first().map(|s| s.dims()),
        }
    }

    /// Fock-basis populations of snapshot `k`.
    pub fn populations(&self, k: usize) -> Vec<f64> {
        match &self.snapshots {
            Snapshots::Pure(v) => v[k].probabilities(),
            Snapshots::Mixed(v) => v[k].diagonal(),
        }
    }

    /// `P(m1, m2)` series for each requested pair.
    pub fn probability_series(&self, pairs: &[(usize, usize)]) -> Result<Vec<Vec<f64>>> {
        let Some(dims) = self.dims() else {
            return Ok(vec![Vec::new(); pairs.len()]);
        };
        let idx = pair_indices(dims, pairs)?;
        Ok(idx
            .iter()
            .map(|&i| (0..self.len()).map(|k| self.populations(k)[i]).collect())
            .collect())
    }
}

fn pair_indices(dims: &HilbertDims, pairs: &[(usize, usize)]) -> Result<Vec<usize>> {
    if dims.num_modes() != 2 {
        return Err(Error::InvalidDimension(format!("expected two modes, got {dims}")));
    }
    let (d1, d2) = (dims.modes()[0], dims.modes()[1]);
    pairs
        .iter()
        .map(|&(m1, m2)| {
            if m1 >= d1 || m2 >= d2 {
                Err(Error::InvalidDimension(format!("pair ({m1},{m2}) outside cutoffs {dims}")))
            } else {
                Ok(dims.index2(m1, m2))
            }
        })
        .collect()
}

/// `n_points` evenly spaced times on `[0, t_max]`.
pub fn time_grid(t_max: f64, n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n_points).map(|i| t_max * i as f64 / (n_points - 1) as f64).collect(),
    }
}

/// Exact propagation `V exp(-i E t) V^dagger psi0` from one eigendecomposition.
pub fn evolve_closed(h: &Operator, psi0: &StateVector, times: &[f64]) -> Result<Trajectory> {
    if h.dims() != psi0.dims() {
        return Err(Error::DimensionMismatch {
            expected: h.dims().to_string(),
            found: psi0.dims().to_string(),
        });
    }
    let eig = crate::fock::hermitian_eig(h)?;
    let n = h.dim();
    let v = &eig.vectors;
    let amps0 = psi0.amplitudes();
    let coeffs: Vec<C64> =
        (0..n).map(|j| (0..n).map(|i| v[(i, j)].conj() * amps0[i]).sum()).collect();
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let rotated: Vec<C64> = coeffs
            .iter()
            .zip(&eig.values)
            .map(|(c, e)| c * C64::from_polar(1.0, -e * t))
            .collect();
        let amps: Vec<C64> =
            (0..n).map(|i| (0..n).map(|j| v[(i, j)] * rotated[j]).sum()).collect();
        let state = StateVector::from_raw(h.dims().clone(), amps);
        let drift = (state.norm() - 1.0).abs();
        if drift > CLOSED_NORM_TOL {
            return Err(Error::NumericalInconsistency(format!(
                "norm drifted by {drift:.3e} at t = {t}"
            )));
        }
        states.push(state);
    }
    Ok(Trajectory { times: times.to_vec(), snapshots: Snapshots::Pure(states), stats: None })
}

/// Closed-form amplitudes `(c00, c01, c10, c11)` of the resonantly driven
/// two-qubit model started in vacuum.
pub fn model1_amplitudes_analytic(f: f64, j: f64, t: f64) -> [C64; 4] {
    let e = |phase: f64| C64::from_polar(1.0, phase);
    let c00 = e(-(2.0 * f + j) * t) * (1.0 + e(4.0 * f * t) + e(2.0 * (f + j) * t) * 2.0) * 0.25;
    let c01 = e(-j * t) * (2.0 * f * t).sin() * C64::new(0.0, -0.5);
    let c11 = c00 - e(j * t);
    [c00, c01, c01, c11]
}

/// Integrate the master equation, storing every snapshot.
pub fn evolve_master(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(times.len());
    let stats = evolve_master_with(l, rho0, times, opts, |_, _, rho| {
        states.push(rho.clone());
        Ok(())
    })?;
    Ok(Trajectory { times: times.to_vec(), snapshots: Snapshots::Mixed(states), stats: Some(stats) })
}

/// Streaming variant of [`evolve_master`]: `observe(index, t, rho)` sees each
/// snapshot without the whole trajectory being kept.
pub fn evolve_master_with<O>(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &IntegratorOptions,
    mut observe: O,
) -> Result<IntegratorStats>
where
    O: FnMut(usize, f64, &DensityMatrix) -> Result<()>,
{
    if rho0.dims() != l.dims() {
        return Err(Error::DimensionMismatch {
            expected: l.dims().to_string(),
            found: rho0.dims().to_string(),
        });
    }
    let dims = l.dims().clone();
    let y0 = vectorize(rho0.operator());
    integrate(
        |y, dy| l.matrix().matvec_into(y, dy),
        &y0,
        times,
        opts,
        |k, t, y| observe(k, t, &liouvillian::unvectorize_density(&dims, y)),
    )
}

/// Bose-Einstein occupation `1 / (exp(omega / kT) - 1)`; zero temperature gives 0.
pub fn thermal_occupation(omega: f64, kt: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    if !(kt.is_finite() && kt >= 0.0) {
        return Err(Error::Domain(format!("temperature must be non-negative, got {kt}")));
    }
    if kt == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / kt).exp_m1())
}

/// Population inside `subspace` for every snapshot.
pub fn truncation_fidelity(traj: &Trajectory, subspace: &[(usize, usize)]) -> Result<Vec<f64>> {
    let Some(dims) = traj.dims() else {
        return Ok(Vec::new());
    };
    let idx = pair_indices(dims, subspace)?;
    Ok((0..traj.len())
        .map(|k| {
            let p = traj.populations(k);
            idx.iter().map(|&i| p[i]).sum::<f64>().clamp(0.0, 1.0)
        })
        .collect())
}

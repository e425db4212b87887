//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use blockade_core::dynamics::{
    build_liouvillian, converge_cutoffs, evolve_closed, evolve_master_with, model1_amplitudes_analytic,
    steady_state, time_grid, truncation_fidelity, CutoffSweep, IntegratorOptions, Snapshots,
};
use blockade_core::fock::{self, DensityMatrix, HilbertDims, Operator, StateVector};
use blockade_core::measures::{self, Entanglement, NegativityConvention};
use blockade_core::model::{build_model, build_model1, build_model2, CoupledKerr, Model};
use blockade_core::phasespace::{gaussian_smooth, qpd_grid, PhaseGrid};
use blockade_core::{Result, C64};

const KERR: f64 = 10.0;
const DRIVE: f64 = 1.0;
const COUPLING: f64 = 1.0;
const GAMMA: f64 = 1.0 / 3.0;
const NBAR: f64 = 0.01;

/// Reduced populations above the model-2 blockade (m1 > 2, m2 > 3). The
/// converged (10, 11) run gives 2.359e-3 and 9.230e-4; the limits sit about
/// 10% above those values.
const BLOCKADE_TAIL_LIMIT: [f64; 2] = [2.6e-3, 1.0e-3];

struct Gate {
    failures: usize,
}

impl Gate {
    fn report(&mut self, id: u32, name: &str, budget: Duration, run: impl FnOnce() -> Result<(bool, String)>) {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = elapsed <= budget;
        let pass = ok && in_time;
        if !pass {
            self.failures += 1;
        }
        let timing = if in_time {
            format!("{:.2}s", elapsed.as_secs_f64())
        } else {
            format!("{:.2}s, budget {}s exceeded", elapsed.as_secs_f64(), budget.as_secs())
        };
        println!("{} [{id}] {name}: {detail} ({timing})", if pass { "PASS" } else { "FAIL" });
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn params() -> CoupledKerr {
    CoupledKerr::symmetric(KERR, DRIVE, COUPLING)
}

fn steady(model: Model, dims: &HilbertDims) -> Result<DensityMatrix> {
    let h = build_model(model, &params(), dims)?;
    let l = build_liouvillian(&h, &[GAMMA; 2], &[NBAR; 2])?;
    Ok(steady_state(&l)?.rho)
}

fn sweep_observables(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let mut obs = vec![measures::purity(rho)];
    for keep in 0..2 {
        let r = fock::partial_trace(rho, keep)?;
        obs.push(measures::purity(&r));
        obs.extend(r.diagonal().into_iter().take(5));
    }
    Ok(obs)
}

fn converged_steady(model: Model, start: &HilbertDims) -> Result<CutoffSweep<DensityMatrix>> {
    converge_cutoffs(start, 2, 1e-3, 3, |dims| {
        let rho = steady(model, dims)?;
        let obs = sweep_observables(&rho)?;
        Ok((rho, obs))
    })
}

fn literal_matrix(rows: [[f64; 9]; 9]) -> Operator {
    Operator::from_fn(HilbertDims::pair(3, 3).unwrap(), |i, j| C64::new(rows[i][j], 0.0))
}

fn reference_model1() -> Operator {
    let r = SQRT_2;
    literal_matrix([
        [0., 1., 0., 1., 1., 0., 0., 0., 0.],
        [1., 0., r, 1., 1., r, 0., 0., 0.],
        [0., r, 20., 0., r, 1., 0., 0., 0.],
        [1., 1., 0., 0., 1., 0., r, r, 0.],
        [1., 1., r, 1., 0., r, r, r, 2.],
        [0., r, 1., 0., r, 20., 0., 2., r],
        [0., 0., 0., r, r, 0., 20., 1., 0.],
        [0., 0., 0., r, r, 2., 1., 20., r],
        [0., 0., 0., 0., 2., r, 0., r, 40.],
    ])
}

fn reference_model2() -> Operator {
    let r = SQRT_2;
    literal_matrix([
        [20., 1., 0., 1., 1., 0., 0., 0., 0.],
        [1., 0., r, 1., 1., r, 0., 0., 0.],
        [0., r, 0., 0., r, 1., 0., 0., 0.],
        [1., 1., 0., 20., 1., 0., r, r, 0.],
        [1., 1., r, 1., 0., r, r, r, 2.],
        [0., r, 1., 0., r, 0., 0., 2., r],
        [0., 0., 0., r, r, 0., 40., 1., 0.],
        [0., 0., 0., r, r, 2., 1., 20., r],
        [0., 0., 0., 0., 2., r, 0., r, 20.],
    ])
}

fn criterion_matrices() -> Result<(bool, String)> {
    let dims = HilbertDims::pair(3, 3)?;
    let e1 = build_model1(&params(), &dims)?.max_abs_diff(&reference_model1());
    let e2 = build_model2(&params(), &dims)?.max_abs_diff(&reference_model2());
    Ok((e1 <= 1e-12 && e2 <= 1e-12, format!("max entry error {e1:.1e} (model 1), {e2:.1e} (model 2)")))
}

fn criterion_analytic() -> Result<(bool, String)> {
    let dims = HilbertDims::pair(2, 2)?;
    let h = build_model1(&params(), &dims)?;
    let times = time_grid(20.0, 2001);
    let traj = evolve_closed(&h, &StateVector::vacuum(dims), &times)?;
    let Snapshots::Pure(states) = &traj.snapshots else { unreachable!() };
    let mut worst = 0.0f64;
    for (t, psi) in times.iter().zip(states) {
        let want = model1_amplitudes_analytic(DRIVE, COUPLING, *t);
        for (a, b) in psi.amplitudes().iter().zip(want) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok((worst <= 1e-10, format!("max amplitude error {worst:.2e} over 2001 times")))
}

fn min_fidelity(model: Model, dims: HilbertDims) -> Result<f64> {
    let h = build_model(model, &params(), &dims)?;
    let traj = evolve_closed(&h, &StateVector::vacuum(dims), &time_grid(20.0, 2001))?;
    let f = truncation_fidelity(&traj, &model.blockade_subspace())?;
    Ok(f.into_iter().fold(1.0, f64::min))
}

fn criterion_fidelity() -> Result<(bool, String)> {
    let f1 = min_fidelity(Model::Model1, HilbertDims::pair(6, 6)?)?;
    let f2 = min_fidelity(Model::Model2, HilbertDims::pair(8, 9)?)?;
    Ok((
        within(f1, 0.977, 0.003) && within(f2, 0.9643, 0.003),
        format!("min fidelity {f1:.5} (model 1, target 0.977), {f2:.5} (model 2, target 0.9643)"),
    ))
}

struct SteadyMeasures {
    purity: f64,
    reduced: [f64; 2],
    ent: Entanglement,
    ep: [f64; 2],
    dims: HilbertDims,
    converged: bool,
}

fn steady_measures(sweep: &CutoffSweep<DensityMatrix>) -> Result<SteadyMeasures> {
    let rho = &sweep.result;
    let conv = NegativityConvention::Full;
    let r1 = fock::partial_trace(rho, 0)?;
    let r2 = fock::partial_trace(rho, 1)?;
    Ok(SteadyMeasures {
        purity: measures::purity(rho),
        reduced: [measures::purity(&r1), measures::purity(&r2)],
        ent: measures::entanglement(rho, conv)?,
        ep: [
            measures::entanglement_potential_with(&r1, conv)?,
            measures::entanglement_potential_with(&r2, conv)?,
        ],
        dims: sweep.dims.clone(),
        converged: sweep.converged,
    })
}

fn describe(m: &SteadyMeasures) -> String {
    format!(
        "cutoffs {} (converged: {}), purity {:.4}, reduced {:.4}/{:.4}, E_cost {:.4}, D_ent {:.4}, EP {:.4}/{:.4}",
        m.dims, m.converged, m.purity, m.reduced[0], m.reduced[1], m.ent.e_cost, m.ent.d_ent, m.ep[0], m.ep[1]
    )
}

fn criterion_model1(sweep: &Result<CutoffSweep<DensityMatrix>>) -> Result<(bool, String)> {
    let sweep = sweep.as_ref().map_err(|e| blockade_core::Error::NumericalInconsistency(e.to_string()))?;
    let m = steady_measures(sweep)?;
    let ok = m.converged
        && within(m.purity, 0.4212, 0.005)
        && within(m.reduced[0], 0.5670, 0.005)
        && within(m.reduced[1], 0.5670, 0.005)
        && (m.reduced[0] - m.reduced[1]).abs() <= 1e-6
        && within(m.ent.e_cost, 0.1413, 0.005)
        && within(m.ent.d_ent, 1.2058, 0.01)
        && within(m.ep[0], 0.1126, 0.005)
        && within(m.ep[1], 0.1126, 0.005);
    Ok((ok, describe(&m)))
}

fn criterion_model2(sweep: &Result<CutoffSweep<DensityMatrix>>) -> Result<(bool, String)> {
    let sweep = sweep.as_ref().map_err(|e| blockade_core::Error::NumericalInconsistency(e.to_string()))?;
    let m = steady_measures(sweep)?;
    let ok = m.converged
        && within(m.purity, 0.1471, 0.005)
        && within(m.reduced[0], 0.3920, 0.005)
        && within(m.reduced[1], 0.3212, 0.005)
        && within(m.ent.e_cost, 0.0494, 0.005)
        && within(m.ent.d_ent, 1.0696, 0.01)
        && within(m.ep[0], 0.1354, 0.005)
        && within(m.ep[1], 0.1770, 0.005);
    Ok((ok, describe(&m)))
}

fn identity_defect(rho: &DensityMatrix) -> Result<f64> {
    let mut worst = 0.0f64;
    for conv in [NegativityConvention::Halved, NegativityConvention::Full] {
        let e = measures::entanglement(rho, conv)?;
        worst = worst.max((e.d_ent - (2.0 * e.negativity + 1.0)).abs());
        worst = worst.max((e.e_cost - (e.negativity + 1.0).log2()).abs());
        let n = measures::negativity_with(rho, conv)?;
        worst = worst.max((measures::entanglement_dimensionality_with(rho, conv)? - (2.0 * n + 1.0)).abs());
        worst = worst.max((measures::entanglement_cost_with(rho, conv)? - (n + 1.0).log2()).abs());
    }
    Ok(worst)
}

#[derive(Default)]
struct TrajectoryDefects {
    trace: f64,
    hermiticity: f64,
    min_eigenvalue: f64,
    snapshots: usize,
}

fn master_defects(model: Model, dims: HilbertDims, acc: &mut TrajectoryDefects) -> Result<()> {
    let h = build_model(model, &params(), &dims)?;
    let l = build_liouvillian(&h, &[GAMMA; 2], &[NBAR; 2])?;
    let rho0 = StateVector::vacuum(dims).to_density();
    evolve_master_with(&l, &rho0, &time_grid(20.0, 2001), &IntegratorOptions::default(), |_, _, rho| {
        acc.trace = acc.trace.max((rho.operator().trace() - 1.0).norm());
        acc.hermiticity = acc.hermiticity.max(rho.operator().hermiticity_defect());
        acc.min_eigenvalue = acc.min_eigenvalue.min(rho.min_eigenvalue()?);
        acc.snapshots += 1;
        Ok(())
    })?;
    Ok(())
}

fn criterion_identities(states: &[DensityMatrix]) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for rho in states {
        worst = worst.max(identity_defect(rho)?);
    }
    let mut d = TrajectoryDefects::default();
    master_defects(Model::Model1, HilbertDims::pair(6, 6)?, &mut d)?;
    master_defects(Model::Model2, HilbertDims::pair(8, 9)?, &mut d)?;
    let ok = worst <= 1e-12 && d.trace <= 1e-8 && d.hermiticity <= 1e-9 && d.min_eigenvalue >= -1e-7;
    Ok((
        ok,
        format!(
            "identity defect {worst:.1e} on {} states; {} snapshots: trace {:.1e}, hermiticity {:.1e}, min eigenvalue {:.1e}",
            states.len(),
            d.snapshots,
            d.trace,
            d.hermiticity,
            d.min_eigenvalue
        ),
    ))
}

fn criterion_thermal() -> Result<(bool, String)> {
    let mut worst_mean = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for nbar in [0.01, 0.2] {
        let dims = HilbertDims::single(20)?;
        let l = build_liouvillian(&Operator::zeros(dims), &[0.5], &[nbar])?;
        let p = steady_state(&l)?.rho.diagonal();
        let mean: f64 = p.iter().enumerate().map(|(m, q)| m as f64 * q).sum();
        worst_mean = worst_mean.max((mean - nbar).abs());
        let q = nbar / (nbar + 1.0);
        for (m, pm) in p.iter().enumerate().take(6) {
            let want = (1.0 - q) * q.powi(m as i32);
            worst_ratio = worst_ratio.max((pm - want).abs());
        }
    }
    Ok((
        worst_mean <= 1e-6 && worst_ratio <= 1e-6,
        format!("mean occupation error {worst_mean:.1e}, population error {worst_ratio:.1e}"),
    ))
}

fn criterion_phasespace(model1: &Result<CutoffSweep<DensityMatrix>>) -> Result<(bool, String)> {
    let vac = StateVector::vacuum(HilbertDims::single(4)?).to_density();
    let wigner_grid = PhaseGrid::square(3.0, 0.05, 0.0)?;
    let norm = qpd_grid(&vac, &wigner_grid)?.normalization;

    let sweep = model1.as_ref().map_err(|e| blockade_core::Error::NumericalInconsistency(e.to_string()))?;
    let reduced = fock::partial_trace(&sweep.result, 0)?;
    let one = StateVector::fock(HilbertDims::single(4)?, &[1])?.to_density();
    let mut husimi_min = f64::INFINITY;
    for rho in [&vac, &one, &reduced] {
        husimi_min = husimi_min.min(qpd_grid(rho, &wigner_grid.with_s(-1.0)?)?.min());
    }

    let half = qpd_grid(&reduced, &wigner_grid.with_s(0.5)?)?;
    let direct = qpd_grid(&reduced, &wigner_grid)?;
    let smoothed = gaussian_smooth(&half, 0.0)?;
    let smooth_err = smoothed
        .qpd
        .values
        .iter()
        .zip(&direct.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let ok = within(norm, 1.0, 1e-4)
        && husimi_min >= -1e-10
        && smooth_err <= 1e-3
        && smoothed.warning.is_none()
        && half.min() < 0.0
        && direct.min() >= -1e-6;
    Ok((
        ok,
        format!(
            "vacuum norm {norm:.6}, Husimi min {husimi_min:.1e}, smoothing error {smooth_err:.1e}, \
             min W(s=1/2) {:.4}, min W(s=0) {:.1e}",
            half.min(),
            direct.min()
        ),
    ))
}

fn criterion_blockade(model2: &Result<CutoffSweep<DensityMatrix>>) -> Result<(bool, String)> {
    let sweep = model2.as_ref().map_err(|e| blockade_core::Error::NumericalInconsistency(e.to_string()))?;
    let p = measures::fock_probabilities(&sweep.result, Model::Model2.blockade_bounds())?;
    let [t1, t2] = p.reduced_tails;
    Ok((
        t1 < BLOCKADE_TAIL_LIMIT[0] && t2 < BLOCKADE_TAIL_LIMIT[1],
        format!(
            "P1(m>2) = {t1:.3e} (limit {:.2e}), P2(m>3) = {t2:.3e} (limit {:.2e}), residual {:.3e}",
            BLOCKADE_TAIL_LIMIT[0], BLOCKADE_TAIL_LIMIT[1], p.residual
        ),
    ))
}

fn bell() -> DensityMatrix {
    let z = C64::new(0.0, 0.0);
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    StateVector::new(HilbertDims::pair(2, 2).unwrap(), vec![s, z, z, s]).unwrap().to_density()
}

fn main() -> ExitCode {
    let mut gate = Gate { failures: 0 };
    let secs = Duration::from_secs;

    gate.report(1, "closed-form Hamiltonian matrices", secs(1), criterion_matrices);
    gate.report(2, "analytic two-qubit amplitudes", secs(1), criterion_analytic);
    gate.report(3, "truncation fidelity", secs(30), criterion_fidelity);

    let mut model1 = None;
    gate.report(4, "model-1 steady state", secs(60), || {
        let sweep = converged_steady(Model::Model1, &HilbertDims::pair(6, 6)?);
        let out = criterion_model1(&sweep);
        model1 = Some(sweep);
        out
    });
    let mut model2 = None;
    gate.report(5, "model-2 steady state", secs(300), || {
        let sweep = converged_steady(Model::Model2, &HilbertDims::pair(8, 9)?);
        let out = criterion_model2(&sweep);
        model2 = Some(sweep);
        out
    });
    let model1 = model1.expect("criterion 4 ran");
    let model2 = model2.expect("criterion 5 ran");

    gate.report(6, "identity suite", secs(120), || {
        let mut states = vec![bell(), StateVector::vacuum(HilbertDims::pair(3, 3)?).to_density()];
        for sweep in [&model1, &model2].into_iter().flatten() {
            states.push(sweep.result.clone());
            for keep in 0..2 {
                states.push(measures::beam_splitter_output(&fock::partial_trace(&sweep.result, keep)?)?);
            }
        }
        criterion_identities(&states)
    });
    gate.report(7, "thermal steady state", secs(10), criterion_thermal);
    gate.report(8, "phase-space suite", secs(60), || criterion_phasespace(&model1));
    gate.report(9, "model-2 blockade signature", secs(1), || criterion_blockade(&model2));

    if gate.failures == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 9 criteria failed", gate.failures);
        ExitCode::FAILURE
    }
}

//! Scenario execution and file emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use blockade_core::dynamics::{
    self, build_liouvillian, converge_cutoffs, steady_state_with, IntegratorStats, SteadyState, SteadyStateMethod,
    SweepRound,
};
use blockade_core::measures::{self, MeasureReport};
use blockade_core::model::HierarchyReport;
use blockade_core::phasespace::{qpd_grid, qpd_two_mode_grid};
use blockade_core::{fock, DensityMatrix, HilbertDims, Operator, PhaseGrid, StateVector};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{OutputKind, QpdSource, Resolved, ScenarioConfig, Source};
use crate::error::{CliError, CliResult};
use crate::format::{csv_row, fmt_g, to_json};

pub const TOOL_NAME: &str = "blockade";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Software {
    fn current() -> Self {
        Self { name: TOOL_NAME.into(), version: VERSION.into() }
    }
}

/// One emitted file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryDiagnostics {
    /// `closed-eigendecomposition` or `master-equation`.
    pub method: String,
    pub cutoffs: Vec<usize>,
    pub points: usize,
    pub fidelity_subspace: Vec<[usize; 2]>,
    pub fidelity_min: f64,
    /// Largest `|Tr rho - 1|` (or norm drift) over the snapshots.
    pub trace_error_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepDiagnostics {
    pub converged: bool,
    pub step: usize,
    pub tolerance: f64,
    pub observables: Vec<String>,
    pub rounds: Vec<SweepRound>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyDiagnostics {
    pub cutoffs: Vec<usize>,
    pub method: SteadyStateMethod,
    pub iterations: usize,
    pub last_change: f64,
    pub residual: f64,
    pub second_eigenvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepDiagnostics>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpdDiagnostics {
    pub file: String,
    /// 1-based mode, absent for two-mode grids.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<usize>,
    pub s: f64,
    pub min: f64,
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<HierarchyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_state: Option<SteadyDiagnostics>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub qpd: Vec<QpdDiagnostics>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: Software,
    pub config: ScenarioConfig,
    pub diagnostics: Diagnostics,
    pub outputs: Vec<OutputFile>,
}

/// Index written above the per-scenario directories of a batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchManifest {
    pub software: Software,
    pub scenarios: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

struct OutDir {
    root: PathBuf,
    files: Vec<OutputFile>,
}

impl OutDir {
    fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    fn put(&self, name: &str, contents: &[u8]) -> CliResult<OutputFile> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(OutputFile { path: name.into(), bytes: contents.len() as u64, sha256: sha256_hex(contents) })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> CliResult<()> {
        let f = self.put(name, contents)?;
        self.files.push(f);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = to_json(value).map_err(|e| CliError::Config(format!("{name}: serialization failed: {e}")))?;
        self.write(name, text.as_bytes())
    }
}

/// Context prefix for errors of one scenario.
fn label(r: &Resolved) -> String {
    match &r.config.name {
        Some(n) => format!("scenario `{n}`"),
        None => "scenario".into(),
    }
}

fn fail(r: &Resolved, stage: &str) -> impl Fn(blockade_core::Error) -> CliError {
    let ctx = format!("{} ({stage})", label(r));
    move |e| CliError::from_core(ctx.clone(), e)
}

fn pair_name(prefix: &str, (a, b): (usize, usize)) -> String {
    if a < 10 && b < 10 {
        format!("{prefix}{a}{b}")
    } else {
        format!("{prefix}{a}_{b}")
    }
}

/// Operator entries as `m1,m2,n1,n2,re,im` rows, `<m1 m2| op |n1 n2>`.
fn operator_csv(op: &Operator) -> String {
    let dims = op.dims();
    let mut s = String::from("m1,m2,n1,n2,re,im\n");
    for i in 0..op.dim() {
        let (m1, m2) = dims.split2(i);
        for j in 0..op.dim() {
            let (n1, n2) = dims.split2(j);
            let v = op.get(i, j);
            let _ = writeln!(s, "{m1},{m2},{n1},{n2},{},{}", fmt_g(v.re), fmt_g(v.im));
        }
    }
    s
}

fn parameters_json(r: &Resolved) -> serde_json::Value {
    let c = &r.config;
    let common = json!({
        "selector": c.model,
        "units": c.units,
        "gamma": r.gamma,
        "n_th": r.n_th,
    });
    let specific = match &r.source {
        Source::Kerr(model, p) => json!({ "model": model, "kerr": p.kerr, "drive": p.drive, "coupling": p.coupling }),
        Source::Effective { params, omega_drv } => json!({ "effective": params, "omega_drv": omega_drv }),
        Source::Derived { dressed, hierarchy, params, omega_drv } => json!({
            "dressed": dressed,
            "hierarchy": hierarchy,
            "effective": params,
            "omega_drv": omega_drv,
        }),
    };
    let mut v = common;
    if let (Some(a), serde_json::Value::Object(b)) = (v.as_object_mut(), specific) {
        a.extend(b);
    }
    v
}

struct TrajectoryRun {
    csv: String,
    diagnostics: TrajectoryDiagnostics,
    last: DensityMatrix,
}

fn run_trajectory(r: &Resolved) -> CliResult<TrajectoryRun> {
    let dims = &r.dims;
    let times = dynamics::time_grid(r.config.time.t_max, r.config.time.points);
    let h = r.source.hamiltonian(dims).map_err(fail(r, "Hamiltonian"))?;
    let tracked: Vec<usize> = r.tracked.iter().map(|&(a, b)| dims.index2(a, b)).collect();
    let subspace: Vec<usize> = r.subspace.iter().map(|&(a, b)| dims.index2(a, b)).collect();

    let mut csv = String::from("t");
    for &p in &r.tracked {
        csv.push(',');
        csv.push_str(&pair_name("P", p));
    }
    csv.push_str(",fidelity\n");
    let mut fidelity_min = f64::INFINITY;
    let mut trace_error_max = 0.0f64;
    let mut row = |t: f64, pops: &[f64], trace: f64| {
        let mut vals = Vec::with_capacity(tracked.len() + 2);
        vals.push(t);
        vals.extend(tracked.iter().map(|&i| pops[i]));
        let f = subspace.iter().map(|&i| pops[i]).sum::<f64>().clamp(0.0, 1.0);
        fidelity_min = fidelity_min.min(f);
        trace_error_max = trace_error_max.max((trace - 1.0).abs());
        vals.push(f);
        csv.push_str(&csv_row(&vals));
    };

    let psi0 = StateVector::fock(dims.clone(), &r.config.initial_state).map_err(fail(r, "initial state"))?;
    let (method, integrator, last) = if r.is_closed() {
        let traj = dynamics::evolve_closed(&h, &psi0, &times).map_err(fail(r, "closed evolution"))?;
        let dynamics::Snapshots::Pure(states) = &traj.snapshots else {
            unreachable!("closed evolution yields pure states")
        };
        for (t, psi) in times.iter().zip(states) {
            let p = psi.probabilities();
            row(*t, &p, p.iter().sum());
        }
        let last = states.last().expect("at least two time points").to_density();
        ("closed-eigendecomposition", None, last)
    } else {
        let l = build_liouvillian(&h, &r.gamma, &r.n_th).map_err(fail(r, "Liouvillian"))?;
        let mut last = None;
        let stats = dynamics::evolve_master_with(
            &l,
            &psi0.to_density(),
            &times,
            &r.config.tolerances.integrator,
            |_, t, rho| {
                let p = rho.diagonal();
                row(t, &p, rho.operator().trace().re);
                last = Some(rho.clone());
                Ok(())
            },
        )
        .map_err(fail(r, "master equation"))?;
        ("master-equation", Some(stats), last.expect("at least two time points"))
    };
    Ok(TrajectoryRun {
        csv,
        diagnostics: TrajectoryDiagnostics {
            method: method.into(),
            cutoffs: dims.modes().to_vec(),
            points: times.len(),
            fidelity_subspace: r.subspace.iter().map(|&(a, b)| [a, b]).collect(),
            fidelity_min,
            trace_error_max,
            integrator,
        },
        last,
    })
}

/// Observables compared between sweep rounds.
pub const SWEEP_OBSERVABLES: [&str; 13] = [
    "purity",
    "purity_mode1",
    "p1(0)",
    "p1(1)",
    "p1(2)",
    "p1(3)",
    "p1(4)",
    "purity_mode2",
    "p2(0)",
    "p2(1)",
    "p2(2)",
    "p2(3)",
    "p2(4)",
];

fn sweep_observables(rho: &DensityMatrix) -> blockade_core::Result<Vec<f64>> {
    let mut obs = vec![measures::purity(rho)];
    for keep in 0..2 {
        let red = fock::partial_trace(rho, keep)?;
        obs.push(measures::purity(&red));
        let mut p = red.diagonal();
        p.resize(5, 0.0);
        obs.extend(p);
    }
    Ok(obs)
}

fn solve_steady(r: &Resolved, dims: &HilbertDims) -> blockade_core::Result<SteadyState> {
    let h = r.source.hamiltonian(dims)?;
    let l = build_liouvillian(&h, &r.gamma, &r.n_th)?;
    steady_state_with(&l, &r.config.tolerances.steady_state)
}

fn run_steady(r: &Resolved, warnings: &mut Vec<String>) -> CliResult<(SteadyState, SteadyDiagnostics)> {
    let conv = &r.config.convergence;
    let (ss, sweep) = if conv.enabled {
        let sweep = converge_cutoffs(&r.dims, conv.step, conv.tolerance, conv.max_rounds, |d| {
            let ss = solve_steady(r, d)?;
            let obs = sweep_observables(&ss.rho)?;
            Ok((ss, obs))
        })
        .map_err(fail(r, "steady-state cutoff sweep"))?;
        if !sweep.converged {
            let msg = format!(
                "cutoff sweep did not settle within {} rounds (last change {:.3e}, tolerance {:.1e})",
                conv.max_rounds,
                sweep.rounds.last().and_then(|x| x.change).unwrap_or(f64::NAN),
                conv.tolerance
            );
            if conv.require {
                return Err(CliError::Numerical {
                    context: format!("{} (steady-state cutoff sweep)", label(r)),
                    source: blockade_core::Error::NumericalInconsistency(msg),
                });
            }
            warnings.push(msg);
        }
        let diag = SweepDiagnostics {
            converged: sweep.converged,
            step: conv.step,
            tolerance: conv.tolerance,
            observables: SWEEP_OBSERVABLES.iter().map(|s| s.to_string()).collect(),
            rounds: sweep.rounds,
        };
        (sweep.result, Some(diag))
    } else {
        (solve_steady(r, &r.dims).map_err(fail(r, "steady state"))?, None)
    };
    let diag = SteadyDiagnostics {
        cutoffs: ss.rho.dims().modes().to_vec(),
        method: ss.method,
        iterations: ss.iterations,
        last_change: ss.last_change,
        residual: ss.residual,
        second_eigenvalue: ss.second_eigenvalue,
        sweep,
    };
    Ok((ss, diag))
}

fn qpd_outputs(
    r: &Resolved,
    rho: &DensityMatrix,
    out: &mut OutDir,
    diags: &mut Vec<QpdDiagnostics>,
    warnings: &mut Vec<String>,
) -> CliResult<()> {
    let q = &r.config.qpd;
    for &mode in &q.modes {
        let reduced = fock::partial_trace(rho, mode - 1).map_err(fail(r, "reduced state"))?;
        for &s in &q.s {
            let grid = PhaseGrid::new((q.re[0], q.re[1]), (q.im[0], q.im[1]), q.step, s)
                .map_err(fail(r, "phase-space grid"))?;
            let g = qpd_grid(&reduced, &grid).map_err(fail(r, "quasiprobability grid"))?;
            let name = format!("qpd_mode{mode}_s{}.csv", fmt_g(s));
            let mut csv = String::from("re,im,value\n");
            for (node, v) in grid.nodes().iter().zip(&g.values) {
                csv.push_str(&csv_row(&[node.re, node.im, *v]));
            }
            out.write(&name, csv.as_bytes())?;
            if (g.normalization - 1.0).abs() > g.quadrature_tolerance.max(1e-4) {
                warnings.push(format!(
                    "{name}: grid integrates to {:.6} (window too small or step too coarse)",
                    g.normalization
                ));
            }
            diags.push(QpdDiagnostics {
                file: name,
                mode: Some(mode),
                s,
                min: g.min(),
                max: g.max(),
                normalization: Some(g.normalization),
                quadrature_tolerance: Some(g.quadrature_tolerance),
            });
        }
    }
    if let Some(tm) = &q.two_mode {
        for &s in &q.s {
            let grid = PhaseGrid::new((tm.re[0], tm.re[1]), (tm.im[0], tm.im[1]), tm.step, s)
                .map_err(fail(r, "phase-space grid"))?;
            let g = qpd_two_mode_grid(rho, &grid, &grid).map_err(fail(r, "two-mode quasiprobability grid"))?;
            let nodes = grid.nodes();
            let name = format!("qpd_two_mode_s{}.csv", fmt_g(s));
            let mut csv = String::from("re1,im1,re2,im2,value\n");
            let mut values = g.values.iter();
            for a in &nodes {
                for b in &nodes {
                    let v = *values.next().expect("one value per node pair");
                    csv.push_str(&csv_row(&[a.re, a.im, b.re, b.im, v]));
                }
            }
            out.write(&name, csv.as_bytes())?;
            let (min, max) = g.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
            diags.push(QpdDiagnostics {
                file: name,
                mode: None,
                s,
                min,
                max,
                normalization: None,
                quadrature_tolerance: None,
            });
        }
    }
    Ok(())
}

/// Run one scenario, writing its files and `manifest.json` into `out`.
pub fn run_scenario(r: &Resolved, out: &Path) -> CliResult<RunManifest> {
    let mut dir = OutDir::create(out)?;
    let mut diag = Diagnostics { warnings: r.warnings.clone(), ..Default::default() };
    if let Source::Derived { hierarchy, .. } = &r.source {
        diag.hierarchy = Some(hierarchy.clone());
    }

    if r.wants(OutputKind::Parameters) || matches!(r.source, Source::Derived { .. }) {
        dir.write_json("parameters.json", &parameters_json(r))?;
    }
    if r.wants(OutputKind::Hamiltonian) {
        let h = r.source.hamiltonian(&r.dims).map_err(fail(r, "Hamiltonian"))?;
        dir.write("hamiltonian.csv", operator_csv(&h).as_bytes())?;
    }

    let mut traj_end = None;
    if r.wants(OutputKind::Trajectory) {
        let t = run_trajectory(r)?;
        dir.write("trajectory.csv", t.csv.as_bytes())?;
        diag.trajectory = Some(t.diagnostics);
        traj_end = Some(t.last);
    }

    let mut steady = None;
    if r.needs_steady_state() {
        let (ss, sd) = run_steady(r, &mut diag.warnings)?;
        if r.wants(OutputKind::SteadyState) {
            let probs = measures::fock_probabilities(&ss.rho, r.family.blockade_bounds())
                .map_err(fail(r, "steady-state populations"))?;
            dir.write_json(
                "steady_state.json",
                &json!({
                    "cutoffs": sd.cutoffs,
                    "purity": measures::purity(&ss.rho),
                    "residual": ss.residual,
                    "probabilities": probs,
                }),
            )?;
            dir.write("rho_ss.csv", operator_csv(ss.rho.operator()).as_bytes())?;
        }
        diag.steady_state = Some(sd);
        steady = Some(ss.rho);
    }

    if r.wants(OutputKind::Measures) {
        let rho = steady.as_ref().expect("measures imply a steady state");
        let report: MeasureReport = measures::measure_report(rho, r.family.blockade_bounds(), r.config.negativity)
            .map_err(fail(r, "measures"))?;
        dir.write_json("measures.json", &report)?;
    }

    if r.wants(OutputKind::Qpd) {
        let rho = match r.config.qpd.source {
            QpdSource::SteadyState => steady.as_ref(),
            QpdSource::TrajectoryEnd => traj_end.as_ref(),
        }
        .expect("validated qpd source");
        qpd_outputs(r, rho, &mut dir, &mut diag.qpd, &mut diag.warnings)?;
    }

    let manifest = RunManifest {
        software: Software::current(),
        config: r.config.clone(),
        diagnostics: diag,
        outputs: dir.files.clone(),
    };
    let text = to_json(&manifest).map_err(|e| CliError::Config(format!("manifest: serialization failed: {e}")))?;
    dir.put(MANIFEST_FILE, text.as_bytes())?;
    Ok(manifest)
}

/// Run a single scenario into `out`, or each scenario of a batch into
/// `out/<name>` with an index manifest at the top.
pub fn run_all(scenarios: &[Resolved], out: &Path) -> CliResult<Vec<RunManifest>> {
    if let [single] = scenarios {
        if single.config.name.is_none() {
            return Ok(vec![run_scenario(single, out)?]);
        }
    }
    let top = OutDir::create(out)?;
    let mut manifests = Vec::with_capacity(scenarios.len());
    let mut index = Vec::with_capacity(scenarios.len());
    for r in scenarios {
        let name = r.config.name.as_deref().expect("batch scenarios are named");
        let sub = out.join(name);
        manifests.push(run_scenario(r, &sub)?);
        let rel = format!("{name}/{MANIFEST_FILE}");
        let path = out.join(&rel);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        index.push(OutputFile { path: rel, bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
    }
    let batch = BatchManifest { software: Software::current(), scenarios: index };
    let text = to_json(&batch).map_err(|e| CliError::Config(format!("manifest: serialization failed: {e}")))?;
    top.put(MANIFEST_FILE, text.as_bytes())?;
    Ok(manifests)
}

/// Recompute every checksum listed in a manifest.
pub fn verify_manifest(dir: &Path) -> CliResult<Vec<String>> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let files = v.get("outputs").or_else(|| v.get("scenarios")).cloned().unwrap_or_default();
    let files: Vec<OutputFile> =
        serde_json::from_value(files).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut bad = Vec::new();
    for f in files {
        let p = dir.join(&f.path);
        let bytes = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
        if sha256_hex(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes {
            bad.push(f.path);
        }
    }
    Ok(bad)
}

//! Declarative scenario configs: schema, defaults and validation.

use blockade_core::dynamics::{IntegratorOptions, SteadyStateOptions};
use blockade_core::model::{
    self, CoupledKerr, DressedParams, EffectiveMode, EffectiveParams, HierarchyReport, MicroscopicParams,
    DEFAULT_HIERARCHY_MARGIN,
};
use blockade_core::{HilbertDims, Model, NegativityConvention, Operator};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SELECTORS: [&str; 4] = ["model1", "model2", "general-heff", "microscopic-derive"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selector {
    Model1,
    Model2,
    GeneralHeff,
    MicroscopicDerive,
}

/// A per-mode value: one number for both modes or `[mode1, mode2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerMode {
    Both(f64),
    Each([f64; 2]),
}

impl PerMode {
    pub fn pair(self) -> [f64; 2] {
        match self {
            PerMode::Both(x) => [x, x],
            PerMode::Each(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    Trajectory,
    SteadyState,
    Qpd,
    Measures,
    Hamiltonian,
    Parameters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    pub t_max: f64,
    pub points: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { t_max: 20.0, points: 2001 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QpdSource {
    #[default]
    SteadyState,
    /// Last trajectory snapshot.
    TrajectoryEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModeSpec {
    #[serde(default = "default_window")]
    pub re: [f64; 2],
    #[serde(default = "default_window")]
    pub im: [f64; 2],
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpdSpec {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub step: f64,
    pub s: Vec<f64>,
    /// 1-based modes whose reduced state is sampled.
    pub modes: Vec<usize>,
    pub source: QpdSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_mode: Option<TwoModeSpec>,
}

fn default_window() -> [f64; 2] {
    [-3.0, 3.0]
}

impl Default for QpdSpec {
    fn default() -> Self {
        Self {
            re: default_window(),
            im: default_window(),
            step: 0.05,
            s: vec![0.5, 0.0],
            modes: vec![1, 2],
            source: QpdSource::default(),
            two_mode: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub enabled: bool,
    pub step: usize,
    pub tolerance: f64,
    pub max_rounds: usize,
    /// Fail instead of warn when the sweep ends unconverged.
    pub require: bool,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self { enabled: true, step: 2, tolerance: 1e-3, max_rounds: 3, require: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSpec {
    pub integrator: IntegratorOptions,
    pub steady_state: SteadyStateOptions,
    pub hierarchy_margin: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::default(),
            steady_state: SteadyStateOptions::default(),
            hierarchy_margin: DEFAULT_HIERARCHY_MARGIN,
        }
    }
}

fn default_outputs() -> Vec<OutputKind> {
    vec![OutputKind::Trajectory]
}

/// One scenario. Parameters are flat: which ones are required depends on
/// `model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Subdirectory name inside a batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub model: Option<Selector>,
    #[serde(default)]
    pub units: Option<String>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub kerr: Option<PerMode>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<PerMode>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<PerMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_drv: Option<PerMode>,
    #[serde(alias = "γ", default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<PerMode>,
    #[serde(alias = "n̄", alias = "nbar", default, skip_serializing_if = "Option::is_none")]
    pub n_th: Option<PerMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub microscopic: Option<MicroscopicParams>,
    pub cutoffs: [usize; 2],
    #[serde(default)]
    pub initial_state: [usize; 2],
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
    /// Blockade family for the fidelity subspace and population bounds of
    /// the general selectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blockade: Option<Model>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracked_pairs: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    pub negativity: NegativityConvention,
    #[serde(default)]
    pub qpd: QpdSpec,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

/// Where the Hamiltonian comes from once the selector is resolved.
#[derive(Debug, Clone)]
pub enum Source {
    Kerr(Model, CoupledKerr),
    Effective { params: EffectiveParams, omega_drv: [f64; 2] },
    Derived {
        dressed: DressedParams,
        hierarchy: HierarchyReport,
        params: EffectiveParams,
        omega_drv: [f64; 2],
    },
}

impl Source {
    pub fn hamiltonian(&self, dims: &HilbertDims) -> blockade_core::Result<Operator> {
        match self {
            Source::Kerr(m, p) => model::build_model(*m, p, dims),
            Source::Effective { params, omega_drv } | Source::Derived { params, omega_drv, .. } => {
                model::build_heff(params, *omega_drv, dims)
            }
        }
    }
}

/// A validated scenario with every default applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ScenarioConfig,
    pub selector: Selector,
    pub source: Source,
    pub gamma: [f64; 2],
    pub n_th: [f64; 2],
    pub dims: HilbertDims,
    pub family: Model,
    pub subspace: Vec<(usize, usize)>,
    pub tracked: Vec<(usize, usize)>,
    pub warnings: Vec<String>,
}

impl Resolved {
    pub fn wants(&self, kind: OutputKind) -> bool {
        self.config.outputs.contains(&kind)
    }

    pub fn is_closed(&self) -> bool {
        self.gamma.iter().all(|g| *g == 0.0)
    }

    pub fn needs_steady_state(&self) -> bool {
        self.wants(OutputKind::SteadyState)
            || self.wants(OutputKind::Measures)
            || (self.wants(OutputKind::Qpd) && self.config.qpd.source == QpdSource::SteadyState)
    }
}

fn schema<T: serde::de::DeserializeOwned>(value: Value, prefix: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = match (prefix.is_empty(), path.as_str()) {
            (true, _) => path,
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        CliError::Config(format!("{path}: {}", e.into_inner()))
    })
}

fn parse_json(text: &str) -> CliResult<Value> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed JSON: {e}")))
}

/// Parse and validate one scenario object.
pub fn parse_config(text: &str) -> CliResult<Resolved> {
    let cfg: ScenarioConfig = schema(parse_json(text)?, "")?;
    resolve(cfg)
}

/// Parse either one scenario object or an array of named scenarios.
pub fn parse_scenarios(text: &str) -> CliResult<Vec<Resolved>> {
    match parse_json(text)? {
        Value::Array(items) => {
            if items.is_empty() {
                return Err(CliError::Config("scenario list is empty".into()));
            }
            let mut out: Vec<Resolved> = Vec::with_capacity(items.len());
            for (i, item) in items.into_iter().enumerate() {
                let cfg: ScenarioConfig = schema(item, &format!("[{i}]"))?;
                let r = resolve(cfg).map_err(|e| CliError::Config(format!("[{i}]: {e}")))?;
                let name = r.config.name.as_deref().unwrap_or_default();
                if name.is_empty() {
                    return Err(CliError::Config(format!("[{i}].name: every scenario in a list needs a name")));
                }
                if out.iter().any(|o| o.config.name.as_deref() == Some(name)) {
                    return Err(CliError::Config(format!("[{i}].name: duplicate scenario name `{name}`")));
                }
                out.push(r);
            }
            Ok(out)
        }
        v => Ok(vec![resolve(schema(v, "")?)?]),
    }
}

fn missing(field: &str, selector: &str) -> CliError {
    CliError::Config(format!("{field}: required by the `{selector}` selector"))
}

fn forbidden(field: &str, selector: &str) -> CliError {
    CliError::Config(format!("{field}: not accepted by the `{selector}` selector"))
}

fn finite(field: &str, values: &[f64]) -> CliResult<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("{field}: values must be finite")));
    }
    Ok(())
}

fn non_negative(field: &str, values: [f64; 2]) -> CliResult<[f64; 2]> {
    finite(field, &values)?;
    if values.iter().any(|v| *v < 0.0) {
        return Err(CliError::Config(format!("{field}: values must be non-negative")));
    }
    Ok(values)
}

fn core(field: &str) -> impl Fn(blockade_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{field}: {e}"))
}

/// Check invariants the schema alone cannot express and fill defaults.
pub fn resolve(mut cfg: ScenarioConfig) -> CliResult<Resolved> {
    let selector = cfg.model.ok_or_else(|| {
        CliError::Config(format!("model: missing selector; valid selectors are {}", SELECTORS.join(", ")))
    })?;
    let name = match selector {
        Selector::Model1 => "model1",
        Selector::Model2 => "model2",
        Selector::GeneralHeff => "general-heff",
        Selector::MicroscopicDerive => "microscopic-derive",
    };
    let mut warnings = Vec::new();

    match (selector, cfg.units.as_deref()) {
        (Selector::MicroscopicDerive, None) => {
            return Err(CliError::Config(
                "units: microscopic rates need a declared unit (for example \"rad/us\")".into(),
            ))
        }
        (Selector::MicroscopicDerive, Some(u)) if u.trim().is_empty() => {
            return Err(CliError::Config("units: must not be empty".into()))
        }
        (Selector::MicroscopicDerive, Some(_)) => {}
        (_, None) => cfg.units = Some("J".into()),
        (_, Some("J")) => {}
        (_, Some(u)) => {
            return Err(CliError::Config(format!(
                "units: effective parameters are given in units of J, got \"{u}\""
            )))
        }
    }

    let (source, gamma, n_th) = match selector {
        Selector::Model1 | Selector::Model2 | Selector::GeneralHeff => {
            if cfg.microscopic.is_some() {
                return Err(forbidden("microscopic", name));
            }
            let kerr = cfg.kerr.ok_or_else(|| missing("K", name))?.pair();
            let drive = cfg.drive.ok_or_else(|| missing("F", name))?.pair();
            let coupling = cfg.coupling.ok_or_else(|| missing("J", name))?;
            finite("K", &kerr)?;
            finite("F", &drive)?;
            finite("J", &[coupling])?;
            let gamma = non_negative("gamma", cfg.gamma.map_or([0.0; 2], PerMode::pair))?;
            let n_th = non_negative("n_th", cfg.n_th.map_or([0.0; 2], PerMode::pair))?;
            cfg.gamma = Some(PerMode::Each(gamma));
            cfg.n_th = Some(PerMode::Each(n_th));
            let source = if selector == Selector::GeneralHeff {
                let energy = cfg.energy.ok_or_else(|| missing("energy", name))?.pair();
                let omega_drv = cfg.omega_drv.ok_or_else(|| missing("omega_drv", name))?.pair();
                finite("energy", &energy)?;
                finite("omega_drv", &omega_drv)?;
                let mode = |n: usize| EffectiveMode {
                    kerr: kerr[n],
                    energy: energy[n],
                    drive: drive[n],
                    chi: 0.0,
                    shift: energy[n] - omega_drv[n],
                    constant: 0.0,
                    lambda: 0.0,
                };
                Source::Effective { params: EffectiveParams { modes: [mode(0), mode(1)], coupling }, omega_drv }
            } else {
                for field in ["energy", "omega_drv"] {
                    let given = if field == "energy" { cfg.energy.is_some() } else { cfg.omega_drv.is_some() };
                    if given {
                        return Err(forbidden(field, name));
                    }
                }
                let m = if selector == Selector::Model1 { Model::Model1 } else { Model::Model2 };
                if cfg.blockade.is_some_and(|b| b != m) {
                    return Err(CliError::Config(format!("blockade: `{name}` fixes its own blockade family")));
                }
                Source::Kerr(m, CoupledKerr { kerr, drive, coupling })
            };
            (source, gamma, n_th)
        }
        Selector::MicroscopicDerive => {
            for (field, given) in [
                ("K", cfg.kerr.is_some()),
                ("F", cfg.drive.is_some()),
                ("J", cfg.coupling.is_some()),
                ("energy", cfg.energy.is_some()),
                ("omega_drv", cfg.omega_drv.is_some()),
                ("gamma", cfg.gamma.is_some()),
                ("n_th", cfg.n_th.is_some()),
            ] {
                if given {
                    return Err(forbidden(field, name));
                }
            }
            let micro = cfg.microscopic.ok_or_else(|| missing("microscopic", name))?;
            micro.validate().map_err(core("microscopic"))?;
            let dressed = model::derive_dressed(&micro).map_err(core("microscopic"))?;
            let margin = cfg.tolerances.hierarchy_margin;
            if !(margin.is_finite() && margin > 0.0) {
                return Err(CliError::Config("tolerances.hierarchy_margin: must be positive".into()));
            }
            let hierarchy = model::validate_hierarchy(&dressed, margin);
            if !hierarchy.pass {
                warnings.push(format!("dispersive hierarchy not satisfied at margin {margin}"));
            }
            let params = model::derive_effective(&dressed, &micro).map_err(core("microscopic"))?;
            for m in params.weak_expansion_modes() {
                warnings.push(format!(
                    "mode {m}: |lambda| = {:.3} exceeds {}; third-order expansion is unreliable",
                    params.modes[m - 1].lambda.abs(),
                    model::LAMBDA_WARN
                ));
            }
            let gamma = [micro.modes[0].gamma, micro.modes[1].gamma];
            let n_th = [micro.modes[0].n_th, micro.modes[1].n_th];
            let omega_drv = [micro.modes[0].omega_drv, micro.modes[1].omega_drv];
            (Source::Derived { dressed, hierarchy, params, omega_drv }, gamma, n_th)
        }
    };

    let dims = HilbertDims::pair(cfg.cutoffs[0], cfg.cutoffs[1]).map_err(core("cutoffs"))?;
    let family = match &source {
        Source::Kerr(m, _) => *m,
        _ => cfg.blockade.unwrap_or(Model::Model1),
    };
    let subspace = family.blockade_subspace();
    let (b1, b2) = family.blockade_bounds();
    let uses_populations = cfg.outputs.iter().any(|o| {
        matches!(o, OutputKind::Trajectory | OutputKind::SteadyState | OutputKind::Measures)
    });
    if uses_populations && (b1 >= cfg.cutoffs[0] || b2 >= cfg.cutoffs[1]) {
        return Err(CliError::Config(format!(
            "cutoffs: the {} blockade needs cutoffs above ({b1}, {b2})",
            serde_json::to_value(family).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        )));
    }
    let tracked: Vec<(usize, usize)> = match &cfg.tracked_pairs {
        Some(p) => p.iter().map(|[a, b]| (*a, *b)).collect(),
        None => subspace.clone(),
    };
    if cfg.outputs.contains(&OutputKind::Trajectory) && tracked.is_empty() {
        return Err(CliError::Config("tracked_pairs: must not be empty".into()));
    }
    let outside = |(a, b): &(usize, usize)| *a >= cfg.cutoffs[0] || *b >= cfg.cutoffs[1];
    if let Some(i) = tracked.iter().position(outside).filter(|_| cfg.outputs.contains(&OutputKind::Trajectory)) {
        return Err(CliError::Config(format!("tracked_pairs[{i}]: Fock pair outside the cutoffs")));
    }
    if cfg.initial_state[0] >= cfg.cutoffs[0] || cfg.initial_state[1] >= cfg.cutoffs[1] {
        return Err(CliError::Config("initial_state: Fock occupation outside the cutoffs".into()));
    }

    let t = &cfg.time;
    if !(t.t_max.is_finite() && t.t_max > 0.0) {
        return Err(CliError::Config("time.t_max: must be positive".into()));
    }
    if t.points < 2 {
        return Err(CliError::Config("time.points: at least two points are needed".into()));
    }
    if cfg.outputs.is_empty() {
        return Err(CliError::Config("outputs: request at least one output".into()));
    }
    let q = &cfg.qpd;
    if cfg.outputs.contains(&OutputKind::Qpd) {
        let grid = |re: [f64; 2], im: [f64; 2], step: f64, field: &str| {
            blockade_core::PhaseGrid::new((re[0], re[1]), (im[0], im[1]), step, 0.0).map_err(core(field)).map(|_| ())
        };
        grid(q.re, q.im, q.step, "qpd")?;
        if q.s.is_empty() {
            return Err(CliError::Config("qpd.s: request at least one ordering".into()));
        }
        if let Some(i) = q.s.iter().position(|s| !(s.is_finite() && *s >= -1.0 && *s < 1.0)) {
            return Err(CliError::Config(format!("qpd.s[{i}]: s must lie in [-1, 1)")));
        }
        if let Some(i) = q.modes.iter().position(|m| !(1..=2).contains(m)) {
            return Err(CliError::Config(format!("qpd.modes[{i}]: modes are numbered 1 and 2")));
        }
        if q.modes.is_empty() && q.two_mode.is_none() {
            return Err(CliError::Config("qpd.modes: no single-mode or two-mode grid requested".into()));
        }
        if let Some(tm) = &q.two_mode {
            grid(tm.re, tm.im, tm.step, "qpd.two_mode")?;
        }
        if q.source == QpdSource::TrajectoryEnd && !cfg.outputs.contains(&OutputKind::Trajectory) {
            return Err(CliError::Config(
                "qpd.source: `trajectory-end` needs `trajectory` among the outputs".into(),
            ));
        }
    }
    let c = &cfg.convergence;
    if c.enabled && (c.step == 0 || c.max_rounds < 2 || !(c.tolerance > 0.0)) {
        return Err(CliError::Config(
            "convergence: an enabled sweep needs step >= 1, max_rounds >= 2 and a positive tolerance".into(),
        ));
    }

    let resolved = Resolved {
        config: cfg,
        selector,
        source,
        gamma,
        n_th,
        dims,
        family,
        subspace,
        tracked,
        warnings,
    };
    if resolved.needs_steady_state() && resolved.is_closed() {
        return Err(CliError::Config(
            "gamma: steady-state outputs need a nonzero damping rate on at least one mode".into(),
        ));
    }
    Ok(resolved)
}

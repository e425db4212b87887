//! Parameter derivation and Hamiltonian builders.
//!
//! The microscopic system (two driven resonators, each dispersively coupled
//! to a driven two-level system) is reduced analytically to a pair of
//! driven Kerr oscillators with a quadrature-quadrature coupling
//! `J (a1 + a1^dagger)(a2 + a2^dagger)`. Only the closed-form endpoints of
//! that reduction live here; the builders then assemble the effective
//! Hamiltonians on a truncated Fock space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, HilbertDims, Operator};

/// Raw rates for one resonator and its ancilla two-level system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroscopicMode {
    /// Resonator frequency.
    pub omega_res: f64,
    /// Two-level system frequency.
    pub omega_q: f64,
    /// Resonator drive frequency.
    pub omega_drv: f64,
    /// Qubit drive frequency.
    pub omega_drv_qubit: f64,
    /// Resonator-qubit coupling.
    pub g: f64,
    /// Qubit drive strength.
    pub rabi: f64,
    /// Resonator drive strength.
    pub f: f64,
    /// Resonator decay rate.
    #[serde(default)]
    pub gamma: f64,
    /// Mean thermal phonon number of the bath.
    #[serde(default)]
    pub n_th: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroscopicParams {
    pub modes: [MicroscopicMode; 2],
    /// Direct resonator-resonator coupling.
    pub j12: f64,
}

impl MicroscopicParams {
    pub fn validate(&self) -> Result<()> {
        for (n, m) in self.modes.iter().enumerate() {
            let all = [m.omega_res, m.omega_q, m.omega_drv, m.omega_drv_qubit, m.g, m.rabi, m.f];
            if all.iter().chain([&m.gamma, &m.n_th, &self.j12]).any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("mode {}: non-finite rate", n + 1)));
            }
            if m.gamma < 0.0 || m.n_th < 0.0 {
                return Err(Error::Domain(format!(
                    "mode {}: decay rate and thermal occupation must be non-negative",
                    n + 1
                )));
            }
        }
        Ok(())
    }
}

/// Dressed-qubit quantities for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedMode {
    /// Resonator-drive detuning `omega_res - omega_drv`.
    pub detuning: f64,
    /// Resonator-qubit detuning `omega_res - omega_q`.
    pub res_qubit_detuning: f64,
    /// Half mixing angle `x = atan(rabi / detuning) / 2`.
    pub mixing_angle: f64,
    pub cos2_mixing: f64,
    /// `sqrt(detuning^2 + rabi^2)`.
    pub dressed_splitting: f64,
    /// Dressed coupling `g cos^2 x`.
    pub g_dressed: f64,
    /// `dressed_splitting - detuning`.
    pub dispersive_detuning: f64,
    /// `g_dressed / dispersive_detuning`; `None` when the latter vanishes.
    pub lambda: Option<f64>,
    /// `rabi / detuning`.
    pub rabi_ratio: f64,
    pub rabi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedParams {
    pub modes: [DressedMode; 2],
}

/// Relative tolerance on the two expressions for the resonator-qubit detuning.
pub const FRAME_CONSISTENCY_TOL: f64 = 1e-9;

pub fn derive_dressed(p: &MicroscopicParams) -> Result<DressedParams> {
    p.validate()?;
    let mut out = Vec::with_capacity(2);
    for (n, m) in p.modes.iter().enumerate() {
        let mode = n + 1;
        let detuning = m.omega_res - m.omega_drv;
        if detuning == 0.0 {
            return Err(Error::SingularDetuning { mode });
        }
        let rq = m.omega_res - m.omega_q;
        let rq_drive = m.omega_drv - m.omega_drv_qubit;
        let scale = rq.abs().max(rq_drive.abs()).max(f64::MIN_POSITIVE);
        if (rq - rq_drive).abs() > FRAME_CONSISTENCY_TOL * scale {
            return Err(Error::InconsistentFrame {
                mode,
                detail: format!(
                    "omega_res - omega_q = {rq} but omega_drv - omega_drv_qubit = {rq_drive}"
                ),
            });
        }
        let ratio = m.rabi / detuning;
        let mixing_angle = 0.5 * ratio.atan();
        let cos2 = mixing_angle.cos().powi(2);
        let splitting = detuning.hypot(m.rabi);
        // Rationalized form avoids cancellation when rabi << detuning.
        let dispersive = if detuning > 0.0 {
            m.rabi * m.rabi / (splitting + detuning)
        } else {
            splitting - detuning
        };
        let g_dressed = m.g * cos2;
        let lambda = (dispersive != 0.0).then(|| g_dressed / dispersive);
        out.push(DressedMode {
            detuning,
            res_qubit_detuning: rq,
            mixing_angle,
            cos2_mixing: cos2,
            dressed_splitting: splitting,
            g_dressed,
            dispersive_detuning: dispersive,
            lambda,
            rabi_ratio: ratio,
            rabi: m.rabi,
        });
    }
    Ok(DressedParams { modes: [out[0], out[1]] })
}

/// One `a >> b` comparison, reported as the ratio `a / b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub label: String,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub margin: f64,
    /// Checks per mode: `|detuning| >> |rabi|`, `|rabi| >> |g'|`,
    /// `rabi^2 >> 2 |g' detuning|`.
    pub modes: [Vec<RatioCheck>; 2],
    pub pass: bool,
}

/// Default factor read as "much greater than".
pub const DEFAULT_HIERARCHY_MARGIN: f64 = 10.0;

/// Advisory check of the dispersive-regime hierarchy.
pub fn validate_hierarchy(d: &DressedParams, margin: f64) -> HierarchyReport {
    let check = |label: &str, num: f64, den: f64| {
        let ratio = if den == 0.0 { f64::INFINITY } else { num.abs() / den.abs() };
        RatioCheck { label: label.to_string(), ratio, pass: ratio >= margin }
    };
    let per_mode = |m: &DressedMode| {
        vec![
            check("detuning/rabi", m.detuning, m.rabi),
            check("rabi/g_dressed", m.rabi, m.g_dressed),
            check("rabi^2/(2 g_dressed detuning)", m.rabi * m.rabi, 2.0 * m.g_dressed * m.detuning),
        ]
    };
    let modes = [per_mode(&d.modes[0]), per_mode(&d.modes[1])];
    let pass = modes.iter().flatten().all(|c| c.pass);
    HierarchyReport { margin, modes, pass }
}

/// Effective Kerr-oscillator parameters for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveMode {
    /// Kerr strength `K`.
    pub kerr: f64,
    /// Effective resonator energy.
    pub energy: f64,
    /// Effective drive `F`.
    pub drive: f64,
    #[serde(default)]
    pub chi: f64,
    /// `energy - omega_drv`.
    #[serde(default)]
    pub shift: f64,
    /// Dropped constant `chi / 2`.
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveParams {
    pub modes: [EffectiveMode; 2],
    /// Effective resonator-resonator coupling `J`.
    pub coupling: f64,
}

/// `|lambda|` above which the third-order expansion is considered shaky.
pub const LAMBDA_WARN: f64 = 0.3;

impl EffectiveParams {
    /// Modes (1-based) whose expansion parameter exceeds [`LAMBDA_WARN`].
    pub fn weak_expansion_modes(&self) -> Vec<usize> {
        (0..2).filter(|&n| self.modes[n].lambda.abs() > LAMBDA_WARN).map(|n| n + 1).collect()
    }
}

/// Closed-form effective parameters to third order in `lambda`.
pub fn derive_effective(d: &DressedParams, p: &MicroscopicParams) -> Result<EffectiveParams> {
    let mut modes = Vec::with_capacity(2);
    let mut lambdas = [0.0; 2];
    for (n, (dm, mm)) in d.modes.iter().zip(&p.modes).enumerate() {
        let mode = n + 1;
        let lambda = dm.lambda.ok_or(Error::DispersiveSingularity { mode })?;
        if !lambda.is_finite() || lambda.abs() >= 1.0 {
            return Err(Error::PerturbativeBreakdown { mode, lambda });
        }
        lambdas[n] = lambda;
        let g = dm.g_dressed;
        let kerr = -g * lambda.powi(3);
        let chi = g * lambda * (1.0 - lambda * lambda);
        modes.push(EffectiveMode {
            kerr,
            energy: mm.omega_res + 2.0 * kerr + chi,
            drive: mm.f * (1.0 + 0.5 * lambda * lambda),
            chi,
            shift: dm.detuning + 2.0 * kerr + chi,
            constant: 0.5 * chi,
            lambda,
        });
    }
    let coupling =
        p.j12 * (1.0 + 0.5 * lambdas[0].powi(2)) * (1.0 + 0.5 * lambdas[1].powi(2));
    Ok(EffectiveParams { modes: [modes[0], modes[1]], coupling })
}

/// `E + (k + l - 1) K`, the energy coefficient of the shifted Kerr form.
pub fn shifted_energy(k: u32, l: u32, kerr: f64, energy: f64) -> f64 {
    energy + (k as f64 + l as f64 - 1.0) * kerr
}

/// Single-mode Kerr Hamiltonian `K (n - k)(n - l) + E_kl n - C_kl`, where
/// `E_kl = energy + (k + l - 1) K` and `C_kl = k l K`.
///
/// With `include_constant` the result equals the `(0, 1)` form
/// `K n (n - 1) + energy n` for every `(k, l)`.
pub fn kerr_hamiltonian(
    k: u32,
    l: u32,
    kerr: f64,
    energy: f64,
    d: usize,
    include_constant: bool,
) -> Result<Operator> {
    let dims = HilbertDims::single(d)?;
    let e_kl = shifted_energy(k, l, kerr, energy);
    let c_kl = if include_constant { (k * l) as f64 * kerr } else { 0.0 };
    Ok(Operator::diagonal(dims, |m| {
        let m = m as f64;
        kerr * (m - k as f64) * (m - l as f64) + e_kl * m - c_kl
    }))
}

/// Kerr strengths, drives and coupling of the two-mode effective models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledKerr {
    pub kerr: [f64; 2],
    pub drive: [f64; 2],
    pub coupling: f64,
}

impl CoupledKerr {
    /// Equal Kerr strengths and drives on both modes.
    pub fn symmetric(kerr: f64, drive: f64, coupling: f64) -> Self {
        Self { kerr: [kerr, kerr], drive: [drive, drive], coupling }
    }
}

/// Which effective resonance condition to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Both drives resonant with `|0> <-> |1>`: an effective two-qubit system.
    Model1,
    /// Second drive resonant with `|1> <-> |2>`: an effective qutrit-quartit system.
    Model2,
}

impl Model {
    /// Fock pairs spanning the blockaded subspace.
    pub fn blockade_subspace(self) -> Vec<(usize, usize)> {
        match self {
            Model::Model1 => vec![(0, 0), (0, 1), (1, 0), (1, 1)],
            Model::Model2 => vec![(0, 0), (0, 3), (1, 0), (1, 3), (2, 1), (2, 2)],
        }
    }

    /// Largest occupations `(m1, m2)` inside the blockade.
    pub fn blockade_bounds(self) -> (usize, usize) {
        match self {
            Model::Model1 => (1, 1),
            Model::Model2 => (2, 3),
        }
    }
}

/// Drive and coupling terms shared by every two-mode builder.
fn drive_and_coupling(p: &CoupledKerr, dims: &HilbertDims) -> Result<Operator> {
    let (d1, d2) = (dims.mode(0)?, dims.mode(1)?);
    let x1 = fock::quadrature(d1)?;
    let x2 = fock::quadrature(d2)?;
    let drive1 = fock::on_mode(&x1.scale_real(p.drive[0]), 0, dims)?;
    let drive2 = fock::on_mode(&x2.scale_real(p.drive[1]), 1, dims)?;
    let coupling = fock::tensor(&x1.scale_real(p.coupling), &x2)?;
    Ok(&(&drive1 + &drive2) + &coupling)
}

fn two_mode_dims(dims: &HilbertDims) -> Result<()> {
    if dims.num_modes() != 2 {
        return Err(Error::InvalidDimension(format!("two-mode cutoffs required, got {dims}")));
    }
    Ok(())
}

/// `sum_n K_n n(n-1) + sum_n F_n (a_n + a_n^dagger) + J x1 x2`.
pub fn build_model1(p: &CoupledKerr, dims: &HilbertDims) -> Result<Operator> {
    two_mode_dims(dims)?;
    let d2 = dims.modes()[1];
    let kerr = Operator::diagonal(dims.clone(), |i| {
        let (m1, m2) = ((i / d2) as f64, (i % d2) as f64);
        p.kerr[0] * m1 * (m1 - 1.0) + p.kerr[1] * m2 * (m2 - 1.0)
    });
    Ok(&kerr + &drive_and_coupling(p, dims)?)
}

/// `K_1 n1(n1-1) + K_2 (n2-1)(n2-2)` plus the same drives and coupling as
/// model 1; constant terms are dropped.
pub fn build_model2(p: &CoupledKerr, dims: &HilbertDims) -> Result<Operator> {
    two_mode_dims(dims)?;
    let d2 = dims.modes()[1];
    let kerr = Operator::diagonal(dims.clone(), |i| {
        let (m1, m2) = ((i / d2) as f64, (i % d2) as f64);
        p.kerr[0] * m1 * (m1 - 1.0) + p.kerr[1] * (m2 - 1.0) * (m2 - 2.0)
    });
    Ok(&kerr + &drive_and_coupling(p, dims)?)
}

pub fn build_model(model: Model, p: &CoupledKerr, dims: &HilbertDims) -> Result<Operator> {
    match model {
        Model::Model1 => build_model1(p, dims),
        Model::Model2 => build_model2(p, dims),
    }
}

/// General effective Hamiltonian in the frame rotating at the drive
/// frequencies: `sum_n [K_n n(n-1) + (E_n - w_n) n + F_n x_n] + J x1 x2`.
pub fn build_heff(e: &EffectiveParams, omega_drv: [f64; 2], dims: &HilbertDims) -> Result<Operator> {
    two_mode_dims(dims)?;
    let d2 = dims.modes()[1];
    let [m1p, m2p] = e.modes;
    let diag = Operator::diagonal(dims.clone(), |i| {
        let (m1, m2) = ((i / d2) as f64, (i % d2) as f64);
        m1p.kerr * m1 * (m1 - 1.0)
            + (m1p.energy - omega_drv[0]) * m1
            + m2p.kerr * m2 * (m2 - 1.0)
            + (m2p.energy - omega_drv[1]) * m2
    });
    let p = CoupledKerr {
        kerr: [m1p.kerr, m2p.kerr],
        drive: [m1p.drive, m2p.drive],
        coupling: e.coupling,
    };
    Ok(&diag + &drive_and_coupling(&p, dims)?)
}

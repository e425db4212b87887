//! Truncated Fock-space operator algebra.
//!
//! Two-mode objects use the basis `|m1, m2>` with `m1` varying slowest:
//! the flat index of `|m1, m2>` is `m1 * d2 + m2`. Every other module
//! inherits this ordering.

use std::ops::{Add, Mul, Neg, Sub};

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Largest composite dimension [`tensor`] builds unless told otherwise.
pub const DEFAULT_MAX_COMPOSITE_DIM: usize = 4096;

/// Numerical tolerances for state validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max entrywise deviation from Hermiticity allowed in a density matrix.
    pub hermiticity: f64,
    /// Allowed deviation of the trace from one.
    pub trace: f64,
    /// Most negative eigenvalue tolerated in a density matrix.
    pub positivity: f64,
    /// Max relative Hermiticity defect accepted by the eigensolver.
    pub eig_hermiticity: f64,
    /// Unit-norm tolerance for state vectors.
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            trace: 1e-10,
            positivity: 1e-9,
            eig_hermiticity: 1e-10,
            norm: 1e-12,
        }
    }
}

/// Per-mode Fock cutoffs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertDims {
    modes: Vec<usize>,
}

impl HilbertDims {
    pub fn new(modes: &[usize]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidDimension("at least one mode is required".into()));
        }
        if let Some(&d) = modes.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(format!("cutoff {d} is below 2")));
        }
        Ok(Self { modes: modes.to_vec() })
    }

    pub fn single(d: usize) -> Result<Self> {
        Self::new(&[d])
    }

    pub fn pair(d1: usize, d2: usize) -> Result<Self> {
        Self::new(&[d1, d2])
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, index: usize) -> Result<usize> {
        self.modes.get(index).copied().ok_or(Error::InvalidMode {
            index,
            modes: self.modes.len(),
        })
    }

    /// Composite dimension.
    pub fn total(&self) -> usize {
        self.modes.iter().product()
    }

    /// Flat index of `|m1, m2>`.
    pub fn index2(&self, m1: usize, m2: usize) -> usize {
        debug_assert_eq!(self.modes.len(), 2);
        m1 * self.modes[1] + m2
    }

    /// Inverse of [`HilbertDims::index2`].
    pub fn split2(&self, index: usize) -> (usize, usize) {
        (index / self.modes[1], index % self.modes[1])
    }

    fn require_modes(&self, n: usize) -> Result<()> {
        if self.modes.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}-mode space"),
                found: format!("{:?}", self.modes),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for HilbertDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.modes.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join("x"))
    }
}

/// A dense complex matrix acting on a truncated Fock space.
#[derive(Debug, Clone)]
pub struct Operator {
    dims: HilbertDims,
    mat: Mat<C64>,
}

impl Operator {
    pub fn new(dims: HilbertDims, mat: Mat<C64>) -> Result<Self> {
        let n = dims.total();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n} matrix for dims {dims}"),
                found: format!("{}x{}", mat.nrows(), mat.ncols()),
            });
        }
        Ok(Self { dims, mat })
    }

    pub fn from_fn(dims: HilbertDims, f: impl FnMut(usize, usize) -> C64) -> Self {
        let n = dims.total();
        Self { dims, mat: Mat::from_fn(n, n, f) }
    }

    pub fn zeros(dims: HilbertDims) -> Self {
        let n = dims.total();
        Self { dims, mat: Mat::zeros(n, n) }
    }

    pub fn identity(dims: HilbertDims) -> Self {
        let n = dims.total();
        Self { dims, mat: Mat::identity(n, n) }
    }

    /// Diagonal operator with real entries `f(i)`.
    pub fn diagonal(dims: HilbertDims, mut f: impl FnMut(usize) -> f64) -> Self {
        Self::from_fn(dims, |i, j| if i == j { C64::new(f(i), 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn dims(&self) -> &HilbertDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self { dims: self.dims.clone(), mat: self.mat.adjoint().to_owned() }
    }

    pub fn transpose(&self) -> Self {
        Self { dims: self.dims.clone(), mat: self.mat.transpose().to_owned() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::from_fn(self.dims.clone(), |i, j| self.mat[(i, j)] * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max(self.mat[(i, j)].norm());
            }
        }
        m
    }

    /// Max entrywise `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                m = m.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Max entrywise distance to another operator on the same space.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dims, other.dims, "operator dims differ");
        let n = self.dim();
        let mut m = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                m = m.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        m
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn nonzeros(&self) -> Vec<(usize, usize, C64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.mat[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dims.clone(), |i, j| {
            if i == j {
                C64::new(self.mat[(i, i)].re, 0.0)
            } else {
                (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5
            }
        })
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim());
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let vj = v[j];
            if vj == C64::new(0.0, 0.0) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.mat[(i, j)] * vj;
            }
        }
        out
    }

    /// `<u|A|v>`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let av = self.apply(v);
        v.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        Operator { dims: self.dims.clone(), mat: &self.mat + &rhs.mat }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        Operator { dims: self.dims.clone(), mat: &self.mat - &rhs.mat }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dims, rhs.dims, "operator dims differ");
        Operator { dims: self.dims.clone(), mat: &self.mat * &rhs.mat }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Annihilation operator: `<m-1|a|m> = sqrt(m)`.
pub fn destroy(d: usize) -> Result<Operator> {
    let dims = HilbertDims::single(d)?;
    Ok(Operator::from_fn(dims, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) }))
}

/// Creation operator, the exact adjoint of [`destroy`].
pub fn create(d: usize) -> Result<Operator> {
    let dims = HilbertDims::single(d)?;
    Ok(Operator::from_fn(dims, |i, j| if i == j + 1 { c((i as f64).sqrt()) } else { c(0.0) }))
}

/// Number operator `diag(0, 1, ..., d-1)`.
pub fn number(d: usize) -> Result<Operator> {
    let dims = HilbertDims::single(d)?;
    Ok(Operator::diagonal(dims, |m| m as f64))
}

/// Position-like quadrature `a + a^dagger`.
pub fn quadrature(d: usize) -> Result<Operator> {
    let dims = HilbertDims::single(d)?;
    Ok(Operator::from_fn(dims, |i, j| {
        if j == i + 1 {
            c((j as f64).sqrt())
        } else if i == j + 1 {
            c((i as f64).sqrt())
        } else {
            c(0.0)
        }
    }))
}

pub fn identity(d: usize) -> Result<Operator> {
    Ok(Operator::identity(HilbertDims::single(d)?))
}

/// Kronecker product of two single-mode operators, first argument slowest.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    tensor_with_limit(a, b, DEFAULT_MAX_COMPOSITE_DIM)
}

pub fn tensor_with_limit(a: &Operator, b: &Operator, limit: usize) -> Result<Operator> {
    a.dims.require_modes(1)?;
    b.dims.require_modes(1)?;
    let (d1, d2) = (a.dim(), b.dim());
    let total = d1 * d2;
    if total > limit {
        return Err(Error::DimensionOverflow { dim: total, limit });
    }
    let dims = HilbertDims::pair(d1, d2)?;
    Ok(Operator::from_fn(dims, |r, col| {
        let (m1, m2) = (r / d2, r % d2);
        let (n1, n2) = (col / d2, col % d2);
        a.mat[(m1, n1)] * b.mat[(m2, n2)]
    }))
}

/// Lift a single-mode operator onto `mode` of a two-mode space.
pub fn on_mode(op: &Operator, mode: usize, dims: &HilbertDims) -> Result<Operator> {
    dims.require_modes(2)?;
    let d = dims.mode(mode)?;
    if op.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("single-mode operator of size {d}"),
            found: format!("{}", op.dim()),
        });
    }
    match mode {
        0 => tensor(op, &identity(dims.modes()[1])?),
        _ => tensor(&identity(dims.modes()[0])?, op),
    }
}

/// Normalized pure state.
#[derive(Debug, Clone)]
pub struct StateVector {
    dims: HilbertDims,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(dims: HilbertDims, amps: Vec<C64>) -> Result<Self> {
        Self::new_with(dims, amps, Tolerances::default().norm)
    }

    pub fn new_with(dims: HilbertDims, amps: Vec<C64>, tol: f64) -> Result<Self> {
        if amps.len() != dims.total() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} amplitudes", dims.total()),
                found: format!("{}", amps.len()),
            });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { dims, amps })
    }

    /// Fock state `|m_1, ..., m_k>`.
    pub fn fock(dims: HilbertDims, occupations: &[usize]) -> Result<Self> {
        if occupations.len() != dims.num_modes() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} occupations", dims.num_modes()),
                found: format!("{}", occupations.len()),
            });
        }
        let mut index = 0;
        for (&m, &d) in occupations.iter().zip(dims.modes()) {
            if m >= d {
                return Err(Error::InvalidDimension(format!("occupation {m} exceeds cutoff {d}")));
            }
            index = index * d + m;
        }
        let mut amps = vec![c(0.0); dims.total()];
        amps[index] = c(1.0);
        Ok(Self { dims, amps })
    }

    pub fn vacuum(dims: HilbertDims) -> Self {
        let mut amps = vec![c(0.0); dims.total()];
        amps[0] = c(1.0);
        Self { dims, amps }
    }

    pub(crate) fn from_raw(dims: HilbertDims, amps: Vec<C64>) -> Self {
        Self { dims, amps }
    }

    pub fn dims(&self) -> &HilbertDims {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let op = Operator::from_fn(self.dims.clone(), |i, j| self.amps[i] * self.amps[j].conj());
        DensityMatrix { op }
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub fn new(op: Operator) -> Result<Self> {
        Self::new_with(op, &Tolerances::default())
    }

    pub fn new_with(op: Operator, tol: &Tolerances) -> Result<Self> {
        let herm = op.hermiticity_defect();
        if herm > tol.hermiticity {
            return Err(Error::InvalidState(format!("Hermiticity defect {herm:.3e}")));
        }
        let tr = op.trace();
        if (tr - c(1.0)).norm() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = min_eigenvalue(&op)?;
        if min < -tol.positivity {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { op })
    }

    /// Hermitize and renormalize an operator that is a density matrix up to
    /// roundoff. Positivity is not checked.
    pub fn from_hermitized(op: &Operator) -> Result<Self> {
        let h = op.hermitian_part();
        let tr = h.trace().re;
        if !(tr.is_finite() && tr.abs() > 0.0) {
            return Err(Error::InvalidState(format!("cannot normalize trace {tr}")));
        }
        Ok(Self { op: h.scale_real(1.0 / tr) })
    }

    pub(crate) fn from_trusted(op: Operator) -> Self {
        Self { op }
    }

    pub fn maximally_mixed(dims: HilbertDims) -> Self {
        let n = dims.total() as f64;
        Self { op: Operator::diagonal(dims, |_| 1.0 / n) }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn dims(&self) -> &HilbertDims {
        self.op.dims()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Populations `<i|rho|i>`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.op.get(i, i).re).collect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(&self.op)
    }
}

impl AsRef<Operator> for DensityMatrix {
    fn as_ref(&self) -> &Operator {
        &self.op
    }
}

impl AsRef<Operator> for Operator {
    fn as_ref(&self) -> &Operator {
        self
    }
}

fn min_eigenvalue(op: &Operator) -> Result<f64> {
    let eig = hermitian_eig_with(op, f64::INFINITY)?;
    Ok(eig.values.first().copied().unwrap_or(0.0))
}

fn require_two_mode(dims: &HilbertDims, mode: usize) -> Result<(usize, usize)> {
    dims.require_modes(2)?;
    if mode > 1 {
        return Err(Error::InvalidMode { index: mode, modes: 2 });
    }
    Ok((dims.modes()[0], dims.modes()[1]))
}

/// Reduced state of mode `keep` (0 or 1).
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    let (d1, d2) = require_two_mode(rho.dims(), keep)?;
    let m = rho.op.matrix();
    let (dk, dt) = if keep == 0 { (d1, d2) } else { (d2, d1) };
    let mut out = Mat::<C64>::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = c(0.0);
            for t in 0..dt {
                let (r, col) = if keep == 0 {
                    (i * d2 + t, j * d2 + t)
                } else {
                    (t * d2 + i, t * d2 + j)
                };
                acc += m[(r, col)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix::from_trusted(Operator::new(HilbertDims::single(dk)?, out)?))
}

/// Transpose with respect to one mode: `<m1 m2|X^T2|n1 n2> = <m1 n2|X|n1 m2>`.
pub fn partial_transpose(rho: &impl AsRef<Operator>, mode: usize) -> Result<Operator> {
    let op = rho.as_ref();
    let (_, d2) = require_two_mode(op.dims(), mode)?;
    let m = op.matrix();
    Ok(Operator::from_fn(op.dims().clone(), |r, col| {
        let (m1, m2) = (r / d2, r % d2);
        let (n1, n2) = (col / d2, col % d2);
        if mode == 0 {
            m[(n1 * d2 + m2, m1 * d2 + n2)]
        } else {
            m[(m1 * d2 + n2, n1 * d2 + m2)]
        }
    }))
}

/// Sum of singular values. Hermitian input goes through the eigensolver.
pub fn trace_norm(op: &Operator) -> Result<f64> {
    let scale = op.max_abs().max(1.0);
    if op.hermiticity_defect() <= 1e-12 * scale {
        let eig = hermitian_eig_with(op, f64::INFINITY)?;
        return Ok(eig.values.iter().map(|v| v.abs()).sum());
    }
    let sv = op
        .matrix()
        .singular_values()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    Ok(sv.iter().sum())
}

/// Eigendecomposition `H = V diag(E) V^dagger`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> Mat<C64> {
        let n = self.values.len();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        &scaled * self.vectors.adjoint()
    }

    /// `V diag(exp(-i E t)) V^dagger`.
    pub fn propagator(&self, t: f64) -> Mat<C64> {
        let n = self.values.len();
        let scaled = Mat::from_fn(n, n, |i, j| {
            self.vectors[(i, j)] * C64::from_polar(1.0, -self.values[j] * t)
        });
        &scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(op: &Operator) -> Result<HermitianEigen> {
    hermitian_eig_with(op, Tolerances::default().eig_hermiticity)
}

/// Like [`hermitian_eig`] with an explicit relative Hermiticity tolerance.
pub fn hermitian_eig_with(op: &Operator, rel_tol: f64) -> Result<HermitianEigen> {
    let defect = op.hermiticity_defect();
    if defect > rel_tol * op.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let eig = op
        .matrix()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("eigensolver failed: {e:?}")))?;
    let values = eig.S().column_vector().iter().map(|v| v.re).collect();
    Ok(HermitianEigen { values, vectors: eig.U().to_owned() })
}

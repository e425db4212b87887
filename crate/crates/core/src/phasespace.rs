//! s-parametrized (Cahill-Glauber) quasiprobability distributions in the Fock basis.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, Operator};
use crate::C64;

/// Largest imaginary part tolerated in a sampled distribution.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;
/// Truncation bound above which [`gaussian_smooth`] attaches a warning.
pub const SMOOTHING_WARN_BOUND: f64 = 1e-6;

/// Rectangular lattice in the complex plane, `alpha = re + i im`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub step: f64,
    pub s: f64,
}

impl PhaseGrid {
    pub fn new(re: (f64, f64), im: (f64, f64), step: f64, s: f64) -> Result<Self> {
        let g = Self { re_min: re.0, re_max: re.1, im_min: im.0, im_max: im.1, step, s };
        g.validate()?;
        Ok(g)
    }

    /// `[-half_width, half_width]^2`.
    pub fn square(half_width: f64, step: f64, s: f64) -> Result<Self> {
        Self::new((-half_width, half_width), (-half_width, half_width), step, s)
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = [self.re_min, self.re_max, self.im_min, self.im_max];
        if bounds.iter().any(|b| !b.is_finite()) || self.re_max < self.re_min || self.im_max < self.im_min {
            return Err(Error::Domain("phase-space window must be finite and ordered".into()));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Domain(format!("grid step must be positive, got {}", self.step)));
        }
        check_s(self.s)
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        let g = Self { s, ..self.clone() };
        g.validate()?;
        Ok(g)
    }

    fn axis(min: f64, max: f64, step: f64) -> Vec<f64> {
        let n = ((max - min) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| min + i as f64 * step).collect()
    }

    pub fn re_axis(&self) -> Vec<f64> {
        Self::axis(self.re_min, self.re_max, self.step)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        Self::axis(self.im_min, self.im_max, self.step)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.re_axis().len(), self.im_axis().len())
    }

    /// Nodes with the real part varying slowest.
    pub fn nodes(&self) -> Vec<C64> {
        let im = self.im_axis();
        self.re_axis().into_iter().flat_map(|r| im.iter().map(move |&i| C64::new(r, i))).collect()
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s.is_finite() && (-1.0..1.0).contains(&s)) {
        return Err(Error::Domain(format!("ordering parameter s must lie in [-1, 1), got {s}")));
    }
    Ok(())
}

/// Sampled single-mode distribution; `values[i_re * n_im + i_im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpdGrid {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
    /// Riemann sum `step^2 * sum(values)`.
    pub normalization: f64,
    /// Declared accuracy of `normalization`: the squared step plus the
    /// boundary magnitude times the window perimeter.
    pub quadrature_tolerance: f64,
}

impl QpdGrid {
    fn from_values(grid: PhaseGrid, values: Vec<f64>) -> Self {
        let (nr, ni) = grid.shape();
        let normalization = values.iter().sum::<f64>() * grid.step * grid.step;
        let boundary = boundary_max(&values, nr, ni);
        let perimeter = 2.0 * ((grid.re_max - grid.re_min) + (grid.im_max - grid.im_min));
        let quadrature_tolerance = grid.step * grid.step + boundary * perimeter;
        Self { grid, values, normalization, quadrature_tolerance }
    }

    pub fn get(&self, i_re: usize, i_im: usize) -> f64 {
        self.values[i_re * self.grid.shape().1 + i_im]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest magnitude on the outermost ring of nodes.
    pub fn boundary_max(&self) -> f64 {
        let (nr, ni) = self.grid.shape();
        boundary_max(&self.values, nr, ni)
    }
}

fn boundary_max(values: &[f64], nr: usize, ni: usize) -> f64 {
    let mut m = 0.0f64;
    for i in 0..nr {
        for j in 0..ni {
            if i == 0 || j == 0 || i + 1 == nr || j + 1 == ni {
                m = m.max(values[i * ni + j].abs());
            }
        }
    }
    m
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `z^n L_n^a(x)` from the Laguerre recurrence rewritten in `z` and `u = z x`.
/// Stays finite as `z -> 0` with `x -> infinity` (the Husimi limit), where
/// the product tends to `(-u)^n / n!`.
fn scaled_laguerre(n: usize, a: usize, z: f64, u: f64) -> f64 {
    let a = a as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = (1.0 + a) * z - u;
    for k in 1..n {
        let k = k as f64;
        let next = (((2.0 * k + 1.0 + a) * z - u) * cur - (k + a) * z * z * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Constants shared by every kernel element at one `(alpha, s)`.
struct Kernel {
    ln_c: f64,
    ln_y: f64,
    z: f64,
    /// `z * x` with `x = 4|alpha|^2 / (1 - s^2)`.
    u: f64,
    alpha_conj: C64,
}

impl Kernel {
    fn new(alpha: C64, s: f64) -> Self {
        let a2 = alpha.norm_sqr();
        Self {
            ln_c: -2.0 * a2 / (1.0 - s) - PI.ln(),
            ln_y: (2.0 / (1.0 - s)).ln(),
            z: (s + 1.0) / (s - 1.0),
            u: -4.0 * a2 / ((1.0 - s) * (1.0 - s)),
            alpha_conj: alpha.conj(),
        }
    }

    /// `<l|T|k>` for `k >= l`.
    fn upper(&self, l: usize, k: usize) -> C64 {
        let m = k - l;
        let alpha_pow = if m == 0 {
            C64::new(1.0, 0.0)
        } else if self.alpha_conj.norm() == 0.0 {
            return C64::new(0.0, 0.0);
        } else {
            C64::from_polar(1.0, m as f64 * self.alpha_conj.arg())
        };
        let mut ln_mag = self.ln_c + 0.5 * (ln_factorial(l) - ln_factorial(k)) + (m + 1) as f64 * self.ln_y;
        if m > 0 {
            ln_mag += m as f64 * self.alpha_conj.norm().ln();
        }
        alpha_pow * (ln_mag.exp() * scaled_laguerre(l, m, self.z, self.u))
    }

    fn element(&self, l: usize, k: usize) -> C64 {
        if k >= l {
            self.upper(l, k)
        } else {
            self.upper(k, l).conj()
        }
    }

    /// Full `d x d` table `t[l * d + k] = <l|T|k>`.
    fn table(&self, d: usize) -> Vec<C64> {
        let mut t = vec![C64::new(0.0, 0.0); d * d];
        for l in 0..d {
            for k in l..d {
                let v = self.upper(l, k);
                t[l * d + k] = v;
                t[k * d + l] = v.conj();
            }
        }
        t
    }
}

/// Fock matrix element `<l|T^(s)(alpha)|k>` of the s-ordered kernel.
pub fn qpd_matrix_element(l: usize, k: usize, alpha: C64, s: f64) -> Result<C64> {
    check_s(s)?;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::Domain("phase-space point must be finite".into()));
    }
    Ok(Kernel::new(alpha, s).element(l, k))
}

fn single_mode_dim(rho: &Operator) -> Result<usize> {
    if rho.dims().num_modes() != 1 {
        return Err(Error::InvalidDimension(format!(
            "expected a single-mode state, got {}",
            rho.dims()
        )));
    }
    Ok(rho.dim())
}

fn real_part(w: C64) -> Result<f64> {
    if w.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::NumericalInconsistency(format!(
            "quasiprobability has imaginary part {:.3e}",
            w.im
        )));
    }
    Ok(w.re)
}

fn point_value(rho: &Operator, d: usize, alpha: C64, s: f64) -> Result<f64> {
    let t = Kernel::new(alpha, s).table(d);
    let m = rho.matrix();
    let mut w = C64::new(0.0, 0.0);
    for k in 0..d {
        for l in 0..d {
            w += m[(k, l)] * t[l * d + k];
        }
    }
    real_part(w)
}

/// `W^(s)(alpha) = sum_{k,l} <k|rho|l> <l|T^(s)(alpha)|k>`.
pub fn qpd_point(rho: &DensityMatrix, alpha: C64, s: f64) -> Result<f64> {
    check_s(s)?;
    let d = single_mode_dim(rho.operator())?;
    point_value(rho.operator(), d, alpha, s)
}

/// Sample every node of `grid` (rows in parallel; the result does not
/// depend on the thread count).
pub fn qpd_grid(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<QpdGrid> {
    grid.validate()?;
    let op = rho.operator();
    let d = single_mode_dim(op)?;
    let im = grid.im_axis();
    let rows: Vec<Result<Vec<f64>>> = grid
        .re_axis()
        .into_par_iter()
        .map(|r| im.iter().map(|&i| point_value(op, d, C64::new(r, i), grid.s)).collect())
        .collect();
    let mut values = Vec::with_capacity(grid.shape().0 * im.len());
    for row in rows {
        values.extend(row?);
    }
    Ok(QpdGrid::from_values(grid.clone(), values))
}

fn two_mode_dims(rho: &Operator) -> Result<(usize, usize)> {
    let dims = rho.dims();
    if dims.num_modes() != 2 {
        return Err(Error::InvalidDimension(format!("expected a two-mode state, got {dims}")));
    }
    Ok((dims.modes()[0], dims.modes()[1]))
}

fn two_mode_value(rho: &Operator, t1: &[C64], t2: &[C64], d1: usize, d2: usize) -> Result<f64> {
    let m = rho.matrix();
    let mut w = C64::new(0.0, 0.0);
    for k1 in 0..d1 {
        for k2 in 0..d2 {
            let row = k1 * d2 + k2;
            for l1 in 0..d1 {
                let a = t1[l1 * d1 + k1];
                for l2 in 0..d2 {
                    w += m[(row, l1 * d2 + l2)] * a * t2[l2 * d2 + k2];
                }
            }
        }
    }
    real_part(w)
}

/// Two-mode distribution at `(alpha1, alpha2)` with a common ordering `s`.
pub fn qpd_two_mode(rho: &DensityMatrix, alpha1: C64, alpha2: C64, s: f64) -> Result<f64> {
    check_s(s)?;
    let op = rho.operator();
    let (d1, d2) = two_mode_dims(op)?;
    let t1 = Kernel::new(alpha1, s).table(d1);
    let t2 = Kernel::new(alpha2, s).table(d2);
    two_mode_value(op, &t1, &t2, d1, d2)
}

/// Two-mode samples over the product of two lattices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoModeQpdGrid {
    pub grid1: PhaseGrid,
    pub grid2: PhaseGrid,
    /// `values[node1 * n2 + node2]`, nodes ordered as [`PhaseGrid::nodes`].
    pub values: Vec<f64>,
}

/// Sample the two-mode distribution on `grid1 x grid2`; both grids must share `s`.
pub fn qpd_two_mode_grid(rho: &DensityMatrix, grid1: &PhaseGrid, grid2: &PhaseGrid) -> Result<TwoModeQpdGrid> {
    grid1.validate()?;
    grid2.validate()?;
    if grid1.s != grid2.s {
        return Err(Error::Domain("both mode grids must use the same s".into()));
    }
    let op = rho.operator();
    let (d1, d2) = two_mode_dims(op)?;
    let tables2: Vec<Vec<C64>> =
        grid2.nodes().iter().map(|&a| Kernel::new(a, grid2.s).table(d2)).collect();
    let blocks: Vec<Result<Vec<f64>>> = grid1
        .nodes()
        .into_par_iter()
        .map(|a1| {
            let t1 = Kernel::new(a1, grid1.s).table(d1);
            tables2.iter().map(|t2| two_mode_value(op, &t1, t2, d1, d2)).collect()
        })
        .collect();
    let mut values = Vec::new();
    for b in blocks {
        values.extend(b?);
    }
    Ok(TwoModeQpdGrid { grid1: grid1.clone(), grid2: grid2.clone(), values })
}

/// Result of [`gaussian_smooth`].
#[derive(Debug, Clone)]
pub struct Smoothed {
    pub qpd: QpdGrid,
    /// Largest source magnitude on the window boundary, a bound on the
    /// contribution lost by truncating the convolution to the window.
    pub truncation_bound: f64,
    pub warning: Option<String>,
}

/// Lower the ordering of a sampled distribution from `src.grid.s` to
/// `target_s` by convolution with `2/(pi w) exp(-2|a-b|^2 / w)`, `w = s0 - s`.
pub fn gaussian_smooth(src: &QpdGrid, target_s: f64) -> Result<Smoothed> {
    check_s(target_s)?;
    let s0 = src.grid.s;
    if target_s >= s0 {
        return Err(Error::Domain(format!("target s = {target_s} must be below the source s = {s0}")));
    }
    let w = s0 - target_s;
    let h = src.grid.step;
    let re = src.grid.re_axis();
    let im = src.grid.im_axis();
    let (nr, ni) = (re.len(), im.len());
    let norm1 = (2.0 / (PI * w)).sqrt() * h;
    let kernel = |dx: f64| norm1 * (-2.0 * dx * dx / w).exp();

    // convolve along im, then along re
    let mut tmp = vec![0.0; nr * ni];
    for i in 0..nr {
        for j in 0..ni {
            tmp[i * ni + j] = (0..ni).map(|jj| kernel(im[j] - im[jj]) * src.values[i * ni + jj]).sum();
        }
    }
    let mut out = vec![0.0; nr * ni];
    for i in 0..nr {
        for j in 0..ni {
            out[i * ni + j] = (0..nr).map(|ii| kernel(re[i] - re[ii]) * tmp[ii * ni + j]).sum();
        }
    }

    let truncation_bound = src.boundary_max();
    let warning = (truncation_bound > SMOOTHING_WARN_BOUND).then(|| {
        format!(
            "source grid does not decay at its boundary (max |W| = {truncation_bound:.2e}); \
             smoothed values near the edges are unreliable, widen the window"
        )
    });
    Ok(Smoothed {
        qpd: QpdGrid::from_values(src.grid.with_s(target_s)?, out),
        truncation_bound,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{HilbertDims, StateVector};

    fn fock1(d: usize, n: usize) -> DensityMatrix {
        StateVector::fock(HilbertDims::single(d).unwrap(), &[n]).unwrap().to_density()
    }

    #[test]
    fn kernel_values_at_origin() {
        let o = C64::new(0.0, 0.0);
        assert!((qpd_matrix_element(0, 0, o, 0.0).unwrap().re - 2.0 / PI).abs() < 1e-15);
        assert!((qpd_matrix_element(0, 0, o, -1.0).unwrap().re - 1.0 / PI).abs() < 1e-15);
        assert!((qpd_matrix_element(1, 1, o, 0.0).unwrap().re + 2.0 / PI).abs() < 1e-15);
        assert_eq!(qpd_matrix_element(0, 2, o, 0.0).unwrap(), C64::new(0.0, 0.0));
        assert!(qpd_matrix_element(0, 0, o, 1.0).is_err());
    }

    #[test]
    fn scaled_laguerre_matches_explicit_polynomials() {
        let (x, z) = (0.7, -0.4);
        let u = z * x;
        assert_eq!(scaled_laguerre(0, 3, z, u), 1.0);
        assert!((scaled_laguerre(1, 2, z, u) - z * (3.0 - x)).abs() < 1e-15);
        // L_2^1(x) = (x^2 - 6x + 6) / 2
        assert!((scaled_laguerre(2, 1, z, u) - z * z * (x * x - 6.0 * x + 6.0) / 2.0).abs() < 1e-15);
        // z = 0: (-u)^n / n!
        assert!((scaled_laguerre(3, 1, 0.0, -2.0) - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn husimi_is_coherent_state_overlap() {
        // Q(alpha) = |<alpha|psi>|^2 / pi for |psi> = (|0> + |2>) / sqrt 2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let psi = StateVector::new(HilbertDims::single(3).unwrap(), vec![C64::new(s, 0.0), z, C64::new(s, 0.0)])
            .unwrap();
        for alpha in [C64::new(0.4, -0.9), C64::new(-1.2, 0.3)] {
            let ac = alpha.conj();
            let overlap = (-alpha.norm_sqr() / 2.0).exp() * s * (1.0 + ac * ac / 2f64.sqrt());
            let want = overlap.norm_sqr() / PI;
            let got = qpd_point(&psi.to_density(), alpha, -1.0).unwrap();
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn vacuum_and_one_phonon_wigner() {
        let vac = fock1(4, 0);
        for a in [C64::new(0.3, -0.2), C64::new(1.1, 0.4)] {
            let w = qpd_point(&vac, a, 0.0).unwrap();
            assert!((w - 2.0 / PI * (-2.0 * a.norm_sqr()).exp()).abs() < 1e-14);
        }
        let w1 = qpd_point(&fock1(4, 1), C64::new(0.0, 0.0), 0.0).unwrap();
        assert!((w1 + 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn vacuum_grid_normalizes() {
        let g = qpd_grid(&fock1(3, 0), &PhaseGrid::square(3.0, 0.05, 0.0).unwrap()).unwrap();
        assert_eq!(g.grid.shape(), (121, 121));
        assert!((g.normalization - 1.0).abs() < 1e-4);
    }

    #[test]
    fn smoothing_vacuum_to_husimi() {
        let src = qpd_grid(&fock1(3, 0), &PhaseGrid::square(4.0, 0.05, 0.0).unwrap()).unwrap();
        let q = gaussian_smooth(&src, -1.0).unwrap();
        assert!(q.warning.is_none());
        let im = q.qpd.grid.im_axis();
        for (i, r) in q.qpd.grid.re_axis().iter().enumerate().step_by(9) {
            for (j, y) in im.iter().enumerate().step_by(9) {
                let want = (-(r * r + y * y)).exp() / PI;
                assert!((q.qpd.get(i, j) - want).abs() < 1e-3);
            }
        }
        assert!(gaussian_smooth(&src, 0.2).is_err());
    }

    #[test]
    fn two_mode_vacuum_origin() {
        let v = StateVector::vacuum(HilbertDims::pair(3, 3).unwrap()).to_density();
        let o = C64::new(0.0, 0.0);
        let w = qpd_two_mode(&v, o, o, 0.0).unwrap();
        assert!((w - 4.0 / (PI * PI)).abs() < 1e-14);
        assert!(qpd_point(&v, o, 0.0).is_err());
    }
}

use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, HilbertDims, Operator};
use crate::sparse::CsrMatrix;
use crate::C64;

/// Thermal Lindblad generator acting on row-major vectorized density
/// matrices: entry `(i, j)` of `rho` sits at `i * D + j`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dims: HilbertDims,
    matrix: CsrMatrix,
    rates: Vec<f64>,
    occupations: Vec<f64>,
}

impl Liouvillian {
    pub fn dims(&self) -> &HilbertDims {
        &self.dims
    }

    /// Side of the Hilbert-space matrices (`D`); the superoperator is `D^2`.
    pub fn hilbert_dim(&self) -> usize {
        self.dims.total()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn apply_vec(&self, rho: &[C64]) -> Vec<C64> {
        self.matrix.matvec(rho)
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        assert_eq!(rho.dims(), &self.dims);
        unvectorize(&self.dims, &self.matrix.matvec(&vectorize(rho)))
    }
}

/// Row-major flattening of an operator.
pub fn vectorize(op: &Operator) -> Vec<C64> {
    let n = op.dim();
    let m = op.matrix();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(dims: &HilbertDims, v: &[C64]) -> Operator {
    let n = dims.total();
    assert_eq!(v.len(), n * n);
    Operator::from_fn(dims.clone(), |i, j| v[i * n + j])
}

pub(crate) fn unvectorize_density(dims: &HilbertDims, v: &[C64]) -> DensityMatrix {
    DensityMatrix::from_trusted(unvectorize(dims, v))
}

/// Assemble `-i[H, rho] + sum_n gamma_n (n_n + 1) D[a_n] + gamma_n n_n D[a_n^dagger]`
/// with `D[c] rho = c rho c^dagger - {c^dagger c, rho} / 2`.
pub fn build_liouvillian(h: &Operator, gamma: &[f64], n_th: &[f64]) -> Result<Liouvillian> {
    let dims = h.dims().clone();
    let modes = dims.num_modes();
    if gamma.len() != modes || n_th.len() != modes {
        return Err(Error::DimensionMismatch {
            expected: format!("{modes} decay rates and occupations"),
            found: format!("{} rates, {} occupations", gamma.len(), n_th.len()),
        });
    }
    if let Some(bad) = gamma.iter().chain(n_th).find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!("rates and occupations must be non-negative, got {bad}")));
    }
    let defect = h.hermiticity_defect();
    if defect > 1e-10 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: defect });
    }

    let mut jumps: Vec<Operator> = Vec::new();
    for n in 0..modes {
        let d = dims.modes()[n];
        let lift = |op: Operator| -> Result<Operator> {
            if modes == 1 {
                Ok(op)
            } else {
                fock::on_mode(&op, n, &dims)
            }
        };
        let down = gamma[n] * (n_th[n] + 1.0);
        let up = gamma[n] * n_th[n];
        if down > 0.0 {
            jumps.push(lift(fock::destroy(d)?.scale_real(down.sqrt()))?);
        }
        if up > 0.0 {
            jumps.push(lift(fock::create(d)?.scale_real(up.sqrt()))?);
        }
    }

    // H_nh = H - (i/2) sum c^dagger c
    let mut h_nh = h.clone();
    for c in &jumps {
        let cdc = &c.adjoint() * c;
        h_nh = &h_nh - &cdc.scale(C64::new(0.0, 0.5));
    }

    let dim = dims.total();
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);
    let h_nz = h_nh.nonzeros();
    let mut triplets = Vec::with_capacity(2 * dim * h_nz.len());
    for &(i, k, v) in &h_nz {
        // -i H_nh rho: row (i, j), column (k, j)
        for j in 0..dim {
            triplets.push((i * dim + j, k * dim + j, minus_i * v));
        }
        // +i rho H_nh^dagger, (H_nh^dagger)_{k' j'} = conj(H_nh)_{j' k'}
        // with j' = i, k' = k: row (r, i), column (r, k)
        for r in 0..dim {
            triplets.push((r * dim + i, r * dim + k, plus_i * v.conj()));
        }
    }
    for c in &jumps {
        let nz = c.nonzeros();
        for &(i, k, cik) in &nz {
            for &(j, l, cjl) in &nz {
                triplets.push((i * dim + j, k * dim + l, cik * cjl.conj()));
            }
        }
    }
    Ok(Liouvillian {
        dims,
        matrix: CsrMatrix::from_triplets(dim * dim, triplets),
        rates: gamma.to_vec(),
        occupations: n_th.to_vec(),
    })
}

//! Dormand-Prince 5(4) with local-extrapolation and exact landing on output times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen from the derivative scale when absent.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// Steps below `min_step_rel * max(1, |t|)` abort as stiff.
    pub min_step_rel: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: None,
            max_steps: 5_000_000,
            min_step_rel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub smallest_step: f64,
    pub largest_step: f64,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

fn rms(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    (v.map(|x| x * x).sum::<f64>() / n as f64).sqrt()
}

/// Integrate `y' = f(y)` (autonomous) through the ascending `times`, calling
/// `observe(index, t, y)` at each of them. `times[0]` is the start time.
pub fn integrate<F, O>(
    mut f: F,
    y0: &[C64],
    times: &[f64],
    opts: &IntegratorOptions,
    mut observe: O,
) -> Result<IntegratorStats>
where
    F: FnMut(&[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    if times.is_empty() {
        return Ok(IntegratorStats::default());
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("time grid must be finite and ascending".into()));
    }
    if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
        return Err(Error::Domain("integrator tolerances must be positive".into()));
    }
    let n = y0.len();
    let zero = C64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![zero; n]);
    let mut stage = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut stats = IntegratorStats { smallest_step: f64::INFINITY, ..Default::default() };

    let mut t = times[0];
    observe(0, t, &y)?;
    f(&y, &mut k[0]);
    stats.rhs_evals += 1;

    let mut h = match opts.initial_step {
        Some(h) if h > 0.0 => h,
        _ => {
            let weight = |v: &C64, yi: &C64| v.norm() / (opts.atol + opts.rtol * yi.norm());
            let d0 = rms(y.iter().map(|v| weight(v, v)), n);
            let d1 = rms(k[0].iter().zip(&y).map(|(v, yi)| weight(v, yi)), n);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        }
    };

    for (idx, &target) in times.iter().enumerate().skip(1) {
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::NonConvergence { iterations: opts.max_steps, change: h });
            }
            let remaining = target - t;
            let landing = h >= remaining;
            let step = if landing { remaining } else { h };
            if step < opts.min_step_rel * t.abs().max(1.0) && !landing {
                return Err(Error::StepSizeUnderflow { t, step });
            }

            let (k0, rest) = k.split_at_mut(1);
            let k0 = &k0[0];
            axpy_into(&mut stage, &y, step, &[(A21, k0)]);
            f(&stage, &mut rest[0]);
            axpy_into(&mut stage, &y, step, &[(A31, k0), (A32, &rest[0])]);
            f(&stage, &mut rest[1]);
            axpy_into(&mut stage, &y, step, &[(A41, k0), (A42, &rest[0]), (A43, &rest[1])]);
            f(&stage, &mut rest[2]);
            axpy_into(
                &mut stage,
                &y,
                step,
                &[(A51, k0), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])],
            );
            f(&stage, &mut rest[3]);
            axpy_into(
                &mut stage,
                &y,
                step,
                &[(A61, k0), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])],
            );
            f(&stage, &mut rest[4]);
            axpy_into(
                &mut y_new,
                &y,
                step,
                &[(B1, k0), (B3, &rest[1]), (B4, &rest[2]), (B5, &rest[3]), (B6, &rest[4])],
            );
            f(&y_new, &mut rest[5]);
            stats.rhs_evals += 6;

            let err = rms(
                (0..n).map(|i| {
                    let e = (k0[i] * E1
                        + rest[1][i] * E3
                        + rest[2][i] * E4
                        + rest[3][i] * E5
                        + rest[4][i] * E6
                        + rest[5][i] * E7)
                        * step;
                    e.norm() / (opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm()))
                }),
                n,
            );
            if !err.is_finite() {
                return Err(Error::StepSizeUnderflow { t, step });
            }

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if landing { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                stats.accepted += 1;
                stats.smallest_step = stats.smallest_step.min(step);
                stats.largest_step = stats.largest_step.max(step);
                // A clipped landing step says nothing about the natural step size.
                if !landing || step >= h {
                    h = step * factor;
                } else {
                    h = h.max(step * factor);
                }
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
            }
        }
        observe(idx, t, &y)?;
    }
    if stats.accepted == 0 {
        stats.smallest_step = 0.0;
    }
    Ok(stats)
}

//! Deterministic 1-D root finding and box-constrained least squares used by
//! the calibration routines.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::solve_real;

/// Finds `x` in `[lo, hi]` with `f(x) = 0` by bisection. `f(lo)` and `f(hi)`
/// must bracket the root (a zero at either end is accepted).
pub(crate) fn bisect<E>(mut f: impl FnMut(f64) -> Result<f64, E>, mut lo: f64, mut hi: f64) -> Result<Option<f64>, E> {
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(Some(lo));
    }
    let f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(Some(hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(Some(mid));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

pub(crate) struct LeastSquaresFit {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl LeastSquaresFit {
    pub fn cost(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Levenberg-Marquardt with forward-difference Jacobian and projection onto
/// the box `[lo, hi]`. Parameters sitting on a bound with the gradient
/// pushing outward are frozen for the step.
pub(crate) fn least_squares_box<E>(
    mut residuals: impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> Result<LeastSquaresFit, E> {
    let n = x0.len();
    let mut x = x0.to_vec();
    clamp_into(&mut x, lo, hi);
    let mut r = residuals(&x)?;
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;

    for _ in 0..500 {
        let m = r.len();
        let mut jac = vec![0.0; m * n];
        for k in 0..n {
            let h = 1e-7 * x[k].abs().max(1e-3);
            let mut xp = x.clone();
            // step inward when on the upper bound
            let step = if xp[k] + h > hi[k] { -h } else { h };
            xp[k] += step;
            let rp = residuals(&xp)?;
            for i in 0..m {
                jac[i * n + k] = (rp[i] - r[i]) / step;
            }
        }
        let mut grad = vec![0.0; n];
        let mut jtj = vec![0.0; n * n];
        for i in 0..m {
            for a in 0..n {
                grad[a] += jac[i * n + a] * r[i];
                for b in 0..n {
                    jtj[a * n + b] += jac[i * n + a] * jac[i * n + b];
                }
            }
        }
        let free: Vec<bool> =
            (0..n).map(|k| !((x[k] <= lo[k] && grad[k] > 0.0) || (x[k] >= hi[k] && grad[k] < 0.0))).collect();
        let grad_norm: f64 = (0..n).filter(|&k| free[k]).map(|k| grad[k] * grad[k]).sum();
        if crate::math::sqrt(grad_norm) < 1e-18 {
            break;
        }

        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            let mut b: Vec<f64> = grad.iter().map(|g| -g).collect();
            for k in 0..n {
                if free[k] {
                    a[k * n + k] += lambda * (jtj[k * n + k].max(1e-12));
                } else {
                    for j in 0..n {
                        a[k * n + j] = 0.0;
                        a[j * n + k] = 0.0;
                    }
                    a[k * n + k] = 1.0;
                    b[k] = 0.0;
                }
            }
            let Some(delta) = solve_real(&a, &b) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v + d).collect();
            clamp_into(&mut trial, lo, hi);
            let r_trial = residuals(&trial)?;
            let c_trial: f64 = r_trial.iter().map(|v| v * v).sum();
            if c_trial < cost {
                let moved = trial.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                x = trial;
                r = r_trial;
                let old = cost;
                cost = c_trial;
                lambda = (lambda / 10.0).max(1e-15);
                improved = true;
                if moved < 1e-15 || old - cost <= 1e-30 {
                    return Ok(LeastSquaresFit { x, residuals: r });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(LeastSquaresFit { x, residuals: r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt_two() {
        let root = bisect(|x| Ok::<_, ()>(x * x - 2.0), 0.0, 2.0).unwrap().unwrap();
        assert!((root - core::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(bisect(|x| Ok::<_, ()>(x * x + 1.0), 0.0, 2.0).unwrap(), None);
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let fit = least_squares_box(
            |p| Ok::<_, ()>(xs.iter().map(|x| p[0] + p[1] * x - (1.5 - 0.25 * x)).collect()),
            &[0.0, 0.0],
            &[-10.0, -10.0],
            &[10.0, 10.0],
        )
        .unwrap();
        assert!((fit.x[0] - 1.5).abs() < 1e-9);
        assert!((fit.x[1] + 0.25).abs() < 1e-9);
    }

    #[test]
    fn least_squares_respects_bounds() {
        // Unconstrained optimum at p = -1; bound at 0.
        let fit = least_squares_box(|p| Ok::<_, ()>(vec![p[0] + 1.0]), &[0.5], &[0.0], &[1.0]).unwrap();
        assert_eq!(fit.x[0], 0.0);
    }
}

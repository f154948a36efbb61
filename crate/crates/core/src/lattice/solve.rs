use num_complex::Complex64;

use super::field::{axpy, dot, norm};
use super::LinearMap;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iters: 5000 }
    }
}

/// Outcome of a converged solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `(map + z) g = f` by preconditioned conjugate gradients.
///
/// `map + z` must be self-adjoint positive definite; a non-positive search
/// curvature is reported as [`Error::Indefinite`]. The preconditioner, when
/// given, must be self-adjoint positive definite too.
pub fn solve_shifted(
    map: &dyn LinearMap,
    z: f64,
    f: &[Complex64],
    tol: f64,
    preconditioner: Option<&dyn LinearMap>,
    opts: SolveOptions,
) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(crate::error::invalid("tol", "must be positive"));
    }
    let fnorm = norm(f);
    if fnorm == 0.0 {
        return Ok(SolveReport {
            solution: vec![Complex64::default(); f.len()],
            iterations: 0,
            residual: 0.0,
        });
    }
    let shifted = |x: &[Complex64]| {
        let mut y = map.apply(x);
        axpy(Complex64::new(z, 0.0), x, &mut y);
        y
    };
    let precondition = |r: &[Complex64]| match preconditioner {
        Some(p) => p.apply(r),
        None => r.to_vec(),
    };

    let mut x = vec![Complex64::default(); f.len()];
    let mut r = f.to_vec();
    let mut s = precondition(&r);
    let mut p = s.clone();
    let mut rs = dot(&r, &s).re;
    let mut residual = 1.0;
    let mut last_true = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let ap = shifted(&p);
        let curvature = dot(&p, &ap).re;
        if !(curvature > 0.0) {
            return Err(Error::Indefinite {
                curvature: curvature / norm(&p).powi(2).max(f64::MIN_POSITIVE),
            });
        }
        let alpha = rs / curvature;
        axpy(Complex64::new(alpha, 0.0), &p, &mut x);
        axpy(Complex64::new(-alpha, 0.0), &ap, &mut r);
        residual = norm(&r) / fnorm;
        if residual <= tol {
            // confirm against the true residual to absorb recurrence drift
            let mut true_r = shifted(&x);
            true_r.iter_mut().zip(f).for_each(|(a, b)| *a = b - *a);
            let true_res = norm(&true_r) / fnorm;
            if true_res <= tol {
                return Ok(SolveReport {
                    solution: x,
                    iterations: it,
                    residual: true_res,
                });
            }
            // restart from the current iterate; give up once restarts stop paying off
            if true_res > 0.5 * last_true {
                return Err(Error::NonConvergence {
                    iterations: it,
                    residual: true_res,
                });
            }
            last_true = true_res;
            r = true_r;
            residual = true_res;
            s = precondition(&r);
            p = s.clone();
            rs = dot(&r, &s).re;
            continue;
        }
        s = precondition(&r);
        let rs_new = dot(&r, &s).re;
        if !(rs_new > 0.0) {
            return Err(Error::Indefinite { curvature: rs_new });
        }
        let beta = rs_new / rs;
        rs = rs_new;
        p.iter_mut().zip(&s).for_each(|(pi, si)| *pi = si + *pi * beta);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iters,
        residual,
    })
}

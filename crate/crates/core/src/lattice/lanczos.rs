use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::field::{axpy, dot, norm, random_vector};
use super::LinearMap;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Smallest,
    Largest,
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub max_iters: usize,
    /// Convergence threshold on successive Ritz-value increments.
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
    /// stop only once the Ritz residual estimate is below `residual_factor · tol · ‖T‖`
    pub residual_factor: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iters: 300,
            tol: 1e-10,
            seed: 0x1a2c,
            restarts: 3,
            residual_factor: 1e4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<Complex64>,
    pub iterations: usize,
    /// `‖map v − θ v‖` for the unit Ritz vector.
    pub residual: f64,
}

/// Extreme eigenpair of a self-adjoint map by Lanczos with full reorthogonalization.
///
/// `projector`, when present, must commute with `map`; the start vector and
/// every Krylov vector are re-projected so the search stays in its range.
pub fn lanczos_extreme(
    map: &dyn LinearMap,
    which: Extreme,
    projector: Option<&dyn LinearMap>,
    opts: LanczosOptions,
) -> Result<RitzPair> {
    for restart in 0..=opts.restarts {
        let seed = opts.seed.wrapping_add(0x51_7cc1 * restart as u64);
        if let Some(pair) = lanczos_run(map, which, projector, &opts, seed)? {
            return Ok(pair);
        }
    }
    Err(Error::LanczosBreakdown {
        restarts: opts.restarts,
    })
}

fn project(projector: Option<&dyn LinearMap>, v: Vec<Complex64>) -> Vec<Complex64> {
    match projector {
        Some(p) => p.apply(&v),
        None => v,
    }
}

fn lanczos_run(
    map: &dyn LinearMap,
    which: Extreme,
    projector: Option<&dyn LinearMap>,
    opts: &LanczosOptions,
    seed: u64,
) -> Result<Option<RitzPair>> {
    let dim = map.dim_in();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = project(projector, random_vector(dim, &mut rng));
    let qn = norm(&q);
    if qn == 0.0 {
        return Ok(None);
    }
    q.iter_mut().for_each(|v| *v /= qn);

    let mut basis: Vec<Vec<Complex64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_theta = f64::NAN;
    let max_iters = opts.max_iters.min(dim);

    for k in 0..max_iters {
        let mut w = project(projector, map.apply(&basis[k]));
        let alpha = dot(&basis[k], &w).re;
        alphas.push(alpha);
        // two passes of classical Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                axpy(-c, b, &mut w);
            }
        }
        let beta = norm(&w);

        let (theta, coeffs) = tridiagonal_extreme(&alphas, &betas, which);
        let scale = alphas.iter().map(|a| a.abs()).fold(beta, f64::max).max(1e-300);
        let breakdown = beta <= 1e-13 * scale;
        let residual_estimate = beta * coeffs.last().copied().unwrap_or(0.0).abs();
        let settled = (theta - last_theta).abs() <= opts.tol * theta.abs().max(1e-300)
            && residual_estimate <= opts.residual_factor * opts.tol * scale;
        if settled || breakdown || k + 1 == max_iters {
            let vector = ritz_vector(&basis, &coeffs);
            let mut r = project(projector, map.apply(&vector));
            axpy(Complex64::new(-theta, 0.0), &vector, &mut r);
            return Ok(Some(RitzPair {
                value: theta,
                residual: norm(&r),
                vector,
                iterations: k + 1,
            }));
        }
        last_theta = theta;
        betas.push(beta);
        w.iter_mut().for_each(|v| *v /= beta);
        basis.push(w);
    }
    Ok(None)
}

fn tridiagonal_extreme(alphas: &[f64], betas: &[f64], which: Extreme) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut best = 0;
    for i in 1..m {
        let better = match which {
            Extreme::Smallest => eig.eigenvalues[i] < eig.eigenvalues[best],
            Extreme::Largest => eig.eigenvalues[i] > eig.eigenvalues[best],
        };
        if better {
            best = i;
        }
    }
    let coeffs = eig.eigenvectors.column(best).iter().copied().collect();
    (eig.eigenvalues[best], coeffs)
}

fn ritz_vector(basis: &[Vec<Complex64>], coeffs: &[f64]) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); basis[0].len()];
    for (b, &c) in basis.iter().zip(coeffs) {
        axpy(Complex64::new(c, 0.0), b, &mut v);
    }
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_laplacian, Grid, Multiplication};

    #[test]
    fn diagonal_extremes() {
        let w: Vec<f64> = (0..400).map(|i| ((i as f64) * 0.77).cos() + i as f64 * 1e-3).collect();
        let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m = Multiplication::new(w, "w");
        let opts = LanczosOptions {
            max_iters: 400,
            ..Default::default()
        };
        let lo = lanczos_extreme(&m, Extreme::Smallest, None, opts).unwrap();
        let hi = lanczos_extreme(&m, Extreme::Largest, None, opts).unwrap();
        assert!((lo.value - min).abs() < 1e-8, "{} vs {}", lo.value, min);
        assert!((hi.value - max).abs() < 1e-8);
    }

    #[test]
    fn laplacian_ground_state_is_constant() {
        let g = Grid::relative(1, 4.0, 32).unwrap();
        let lap = build_laplacian(&g, 2.0);
        let pair = lanczos_extreme(&lap, Extreme::Smallest, None, LanczosOptions::default()).unwrap();
        assert!(pair.value.abs() < 1e-9);
        let first = pair.vector[0];
        assert!(pair.vector.iter().all(|v| (v - first).norm() < 1e-5));
    }
}

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::field::{norm, random_vector};
use super::LinearMap;

#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Treat the map as self-adjoint positive semidefinite and iterate it
    /// directly instead of `map* map`.
    pub positive_semidefinite: bool,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 500,
            restarts: 3,
            seed: 0x5eed,
            positive_semidefinite: false,
        }
    }
}

impl NormOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn psd(mut self) -> Self {
        self.positive_semidefinite = true;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip)]
    pub vector: Vec<Complex64>,
}

/// Largest singular value by power iteration on `map* ∘ map`.
///
/// Runs `restarts` independent random starts and keeps the largest estimate.
/// Hitting the iteration cap returns the best estimate with `converged = false`.
/// A tight cluster of top singular values slows convergence; the estimate then
/// lies inside the cluster.
pub fn operator_norm(map: &dyn LinearMap, opts: NormOptions) -> NormEstimate {
    let mut best: Option<NormEstimate> = None;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(0x9e37_79b9 * restart as u64));
        let est = power_run(map, &opts, &mut rng);
        best = match best {
            Some(b) if b.value >= est.value => Some(NormEstimate {
                converged: b.converged && est.converged,
                ..b
            }),
            Some(b) => Some(NormEstimate {
                converged: b.converged && est.converged,
                ..est
            }),
            None => Some(est),
        };
    }
    best.unwrap()
}

fn power_run(map: &dyn LinearMap, opts: &NormOptions, rng: &mut ChaCha8Rng) -> NormEstimate {
    let mut x = random_vector(map.dim_in(), rng);
    let mut n = norm(&x);
    x.iter_mut().for_each(|v| *v /= n);
    let mut prev = 0.0;
    for it in 1..=opts.max_iters {
        let estimate;
        let next;
        if opts.positive_semidefinite {
            let y = map.apply(&x);
            estimate = norm(&y);
            next = y;
        } else {
            let y = map.apply(&x);
            estimate = norm(&y);
            next = map.apply_adjoint(&y);
        }
        n = norm(&next);
        if n == 0.0 || estimate == 0.0 {
            return NormEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
                vector: x,
            };
        }
        x = next;
        x.iter_mut().for_each(|v| *v /= n);
        if it > 1 && (estimate - prev).abs() <= opts.tol * estimate {
            return NormEstimate {
                value: estimate,
                converged: true,
                iterations: it,
                vector: x,
            };
        }
        prev = estimate;
    }
    NormEstimate {
        value: prev,
        converged: false,
        iterations: opts.max_iters,
        vector: x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_laplacian, Grid, Multiplication, ZeroMap};

    #[test]
    fn zero_map() {
        let est = operator_norm(&ZeroMap(32), NormOptions::default());
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
    }

    #[test]
    fn diagonal_map_gives_max_entry() {
        let mut w: Vec<f64> = (0..200).map(|i| ((i as f64) * 0.1).sin() * 3.0).collect();
        w[37] = -4.5;
        let max = w.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let est = operator_norm(&Multiplication::new(w, "w"), NormOptions::default().with_tol(1e-10));
        assert!((est.value - max).abs() <= 1e-4 * max, "{} vs {}", est.value, max);
    }

    #[test]
    fn free_resolvent_has_norm_one() {
        for grid in [
            Grid::relative(1, 5.0, 64).unwrap(),
            Grid::relative(2, 3.0, 16).unwrap(),
            Grid::new(1, 2, 2.0, 8, 0.5).unwrap(),
        ] {
            let r = build_laplacian(&grid, 1.0).resolvent(1.0).unwrap();
            let est = operator_norm(&r, NormOptions::default().with_tol(1e-9));
            assert!((est.value - 1.0).abs() < 1e-6, "{}", est.value);
        }
    }
}
